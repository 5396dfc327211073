#pragma once

#include "imagecore/frame.hpp"

namespace cseg::img {

/// Exact spatial median over a kernel x kernel window per pixel; borders read
/// edge-replicated samples. kernel must be odd.
ScoreMap median_filter(const ScoreMap& m, int kernel);

/// Foreground where score > threshold (strict), background otherwise.
LabelMask threshold_map(const ScoreMap& m, float threshold);

/// Grows foreground by a square structuring element of side 2*radius+1.
/// Background pixels inside the grown region flip to foreground; Ignore
/// pixels are left untouched.
LabelMask dilate(const LabelMask& m, int radius);

}  // namespace cseg::img
