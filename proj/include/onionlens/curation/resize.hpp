#pragma once

#include <span>
#include <vector>

namespace onionlens::curation {

/// Bilinear resampling of a single-channel plane with half-pixel centers:
/// a destination pixel d samples source coordinate (d + 0.5) * in / out - 0.5,
/// clamped to [0, in - 1]. Equal sizes reproduce the input exactly.
std::vector<double> resize_bilinear(std::span<const double> plane, int in_width, int in_height,
                                    int out_width, int out_height);

}  // namespace onionlens::curation
