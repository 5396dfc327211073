#include "imagecore/filters.hpp"

#include <algorithm>
#include <vector>

namespace cseg::img {

ScoreMap median_filter(const ScoreMap& m, int kernel) {
    if (kernel < 1 || kernel % 2 == 0) throw_invalid("median_filter: kernel must be odd and positive");
    if (kernel == 1 || m.height == 0 || m.width == 0) return m;

    const int r = kernel / 2;
    ScoreMap out(m.height, m.width);
    std::vector<float> window(static_cast<std::size_t>(kernel) * kernel);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            std::size_t n = 0;
            for (int dy = -r; dy <= r; ++dy) {
                const int sy = std::clamp(y + dy, 0, m.height - 1);
                const float* row = m.scores.data() + static_cast<std::size_t>(sy) * m.width;
                for (int dx = -r; dx <= r; ++dx)
                    window[n++] = row[std::clamp(x + dx, 0, m.width - 1)];
            }
            const std::size_t mid = n / 2;
            std::nth_element(window.begin(), window.begin() + mid, window.begin() + n);
            out.at(y, x) = window[mid];
        }
    }
    return out;
}

LabelMask threshold_map(const ScoreMap& m, float threshold) {
    if (threshold < 0.0f || threshold > 1.0f)
        throw_invalid("threshold_map: threshold must lie in [0,1]");
    LabelMask out(m.height, m.width);
    const std::size_t n = m.scores.size();
    for (std::size_t i = 0; i < n; ++i)
        out.labels[i] = m.scores[i] > threshold ? Label::Foreground : Label::Background;
    return out;
}

LabelMask dilate(const LabelMask& m, int radius) {
    if (radius < 0) throw_invalid("dilate: radius must be nonnegative");
    if (radius == 0 || m.height == 0 || m.width == 0) return m;

    // Separable running maximum over the foreground indicator.
    const int h = m.height;
    const int w = m.width;
    std::vector<std::uint8_t> fg(static_cast<std::size_t>(h) * w);
    for (std::size_t i = 0; i < fg.size(); ++i) fg[i] = m.labels[i] == Label::Foreground;

    std::vector<std::uint8_t> horiz(fg.size(), 0);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = fg.data() + static_cast<std::size_t>(y) * w;
        std::uint8_t* dst = horiz.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            const int lo = std::max(0, x - radius);
            const int hi = std::min(w - 1, x + radius);
            std::uint8_t v = 0;
            for (int i = lo; i <= hi && !v; ++i) v = src[i];
            dst[x] = v;
        }
    }

    LabelMask out = m;
    for (int y = 0; y < h; ++y) {
        const int lo = std::max(0, y - radius);
        const int hi = std::min(h - 1, y + radius);
        for (int x = 0; x < w; ++x) {
            if (out.at(y, x) != Label::Background) continue;
            for (int i = lo; i <= hi; ++i) {
                if (horiz[static_cast<std::size_t>(i) * w + x]) {
                    out.at(y, x) = Label::Foreground;
                    break;
                }
            }
        }
    }
    return out;
}

}  // namespace cseg::img
