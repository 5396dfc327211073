#include "evaluation/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "common/error.hpp"
#include <json.hpp>

namespace cseg::eval {

ConfusionCounts accumulate(const img::LabelMask& pred, const img::LabelMask& gt) {
    if (pred.labels.size() != gt.labels.size())
        throw_invalid("prediction and ground truth have different pixel counts (" +
                      std::to_string(pred.labels.size()) + " vs " +
                      std::to_string(gt.labels.size()) + ")");
    ConfusionCounts c;
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        const img::Label g = gt.labels[i];
        if (g == img::Label::Ignore) continue;
        const bool pred_fg = pred.labels[i] == img::Label::Foreground;
        const bool gt_fg = g == img::Label::Foreground;
        if (gt_fg)
            pred_fg ? ++c.tp : ++c.fn;
        else
            pred_fg ? ++c.fp : ++c.tn;
    }
    return c;
}

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricSet metrics(const ConfusionCounts& c) {
    MetricSet m;
    m.re = ratio(c.tp, c.tp + c.fn);
    m.sp = ratio(c.tn, c.tn + c.fp);
    m.fpr = ratio(c.fp, c.fp + c.tn);
    m.fnr = ratio(c.fn, c.tp + c.fn);
    if (c.total() > 0)
        m.pwc = 100.0 * static_cast<double>(c.fn + c.fp) / static_cast<double>(c.total());
    m.pr = ratio(c.tp, c.tp + c.fp);
    if (m.pr && m.re && (*m.pr + *m.re) > 0.0)
        m.fm = 2.0 * (*m.pr) * (*m.re) / (*m.pr + *m.re);
    return m;
}

namespace {

using Field = std::optional<double> MetricSet::*;

constexpr Field kFields[] = {&MetricSet::re,  &MetricSet::sp, &MetricSet::fpr,
                             &MetricSet::fnr, &MetricSet::pwc, &MetricSet::fm,
                             &MetricSet::pr};

// Per-field mean over the entries where the field is defined.
MetricSet mean_of(const std::vector<const MetricSet*>& sets) {
    MetricSet out;
    for (Field f : kFields) {
        double sum = 0.0;
        int n = 0;
        for (const MetricSet* s : sets) {
            if (s->*f) {
                sum += *(s->*f);
                ++n;
            }
        }
        if (n > 0) out.*f = sum / n;
    }
    return out;
}

}  // namespace

Aggregate aggregate(const std::vector<VideoScore>& scores) {
    Aggregate a;
    std::vector<std::string> order;
    std::map<std::string, std::vector<const MetricSet*>> by_cat;
    for (const VideoScore& v : scores) {
        auto [it, inserted] = by_cat.try_emplace(v.category);
        if (inserted) order.push_back(v.category);
        it->second.push_back(&v.m);
    }
    std::vector<const MetricSet*> cat_means;
    a.categories.reserve(order.size());
    for (const std::string& cat : order) {
        const auto& members = by_cat[cat];
        CategoryScore cs;
        cs.category = cat;
        cs.videos = static_cast<int>(members.size());
        cs.m = mean_of(members);
        a.categories.push_back(std::move(cs));
    }
    for (const CategoryScore& cs : a.categories) cat_means.push_back(&cs.m);
    a.overall = mean_of(cat_means);
    return a;
}

namespace {

std::string cell(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return buf;
}

void append_row(std::ostringstream& os, const std::string& name, const MetricSet& m) {
    os << name;
    for (std::size_t pad = name.size(); pad < 16; ++pad) os << ' ';
    for (Field f : kFields) {
        const std::string c = cell(m.*f);
        for (std::size_t pad = c.size(); pad < 8; ++pad) os << ' ';
        os << c;
    }
    os << '\n';
}

}  // namespace

std::string report_text(const Aggregate& a) {
    std::ostringstream os;
    os << "category        ";
    for (const char* h : {"Re", "Sp", "FPR", "FNR", "PWC", "FM", "Pr"}) {
        std::string s(h);
        for (std::size_t pad = s.size(); pad < 8; ++pad) os << ' ';
        os << s;
    }
    os << '\n';
    for (const CategoryScore& cs : a.categories) append_row(os, cs.category, cs.m);
    append_row(os, "Overall", a.overall);
    return os.str();
}

namespace {

nlohmann::json metric_json(const MetricSet& m) {
    nlohmann::json j = nlohmann::json::object();
    const char* names[] = {"Re", "Sp", "FPR", "FNR", "PWC", "FM", "Pr"};
    for (std::size_t i = 0; i < std::size(kFields); ++i) {
        const auto& v = m.*kFields[i];
        if (v)
            j[names[i]] = *v;
        else
            j[names[i]] = nullptr;
    }
    return j;
}

}  // namespace

std::string report_json(const Aggregate& a) {
    nlohmann::json j;
    j["categories"] = nlohmann::json::array();
    for (const CategoryScore& cs : a.categories) {
        nlohmann::json c;
        c["name"] = cs.category;
        c["videos"] = cs.videos;
        c["metrics"] = metric_json(cs.m);
        j["categories"].push_back(std::move(c));
    }
    j["overall"] = metric_json(a.overall);
    return j.dump(2) + "\n";
}

}  // namespace cseg::eval
