#pragma once

#include <bit>
#include <cstdint>
#include <vector>

#include "onionlens/curation/image.hpp"

namespace onionlens::curation {

/// BT.601 luma (0.299 R + 0.587 G + 0.114 B) per pixel; gray images pass through.
std::vector<double> luma_plane(const DecodedImage& img);

/// 64-bit difference hash: luma, bilinear resize to 9 wide x 8 tall, then
/// bit (r * 8 + c) is set iff pixel(r, c) > pixel(r, c + 1).
std::uint64_t dhash64(const DecodedImage& img);

constexpr int hamming(std::uint64_t a, std::uint64_t b) noexcept { return std::popcount(a ^ b); }

}  // namespace onionlens::curation
