#pragma once

#include <string>

#include "pipeline/dataset.hpp"

namespace cseg::eval {

/// Walks a change-detection tree laid out as
/// root/<category>/<video>/{input/in*.jpg|png, groundtruth/gt*.png,
/// temporalROI.txt, optional ROI.bmp|ROI.png} and returns one entry per
/// video. temporalROI.txt holds the 1-based first and last evaluated frame.
pipe::DatasetManifest load_cdnet(const std::string& root);

}  // namespace cseg::eval
