#pragma once

#include <optional>
#include <string>

#include "tabnet/types.hpp"

namespace tabnet::eval {

/// RGB contour colour of a foreground label (1..3 cycle for larger K).
struct Rgb {
  unsigned char r, g, b;
};
Rgb palette(int label);

/// Writes the min-max scaled slice with class contours drawn on top. With
/// gt the panel is doubled: prediction left, ground truth right. When no
/// foreground contour exists anywhere the file is a plain 8-bit grayscale
/// PNG. Same inputs give the same bytes.
void render_overlay(const Image& image, const HardLabelMap& pred, const std::optional<HardLabelMap>& gt,
                    const std::string& out_path);

}  // namespace tabnet::eval
