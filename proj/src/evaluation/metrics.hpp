#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "imagecore/frame.hpp"

namespace cseg::eval {

struct ConfusionCounts {
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
    std::uint64_t total() const { return tp + fp + tn + fn; }
};

/// Counts over pixels whose ground truth is not Ignore; a non-FG prediction
/// counts as background. Dimensions must agree.
ConfusionCounts accumulate(const img::LabelMask& pred, const img::LabelMask& gt);

// Each metric is absent when its denominator is zero; absent values are
// excluded from every average.
struct MetricSet {
    std::optional<double> re, sp, fpr, fnr, pwc, fm, pr;
};

MetricSet metrics(const ConfusionCounts& c);

struct VideoScore {
    std::string video_id;
    std::string category;
    MetricSet m;
};

struct CategoryScore {
    std::string category;
    int videos = 0;
    MetricSet m;
};

struct Aggregate {
    std::vector<CategoryScore> categories;
    MetricSet overall;
};

/// Category metric = mean of its videos' defined values; overall = mean of
/// category means. Categories keep their first-appearance order.
Aggregate aggregate(const std::vector<VideoScore>& scores);

/// One row per category plus Overall; columns Re Sp FPR FNR PWC FM Pr with
/// four decimals; undefined cells print "-".
std::string report_text(const Aggregate& a);

/// Same content as structured JSON (per-category and overall objects).
std::string report_json(const Aggregate& a);

}  // namespace cseg::eval
