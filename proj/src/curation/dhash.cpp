#include "onionlens/curation/dhash.hpp"

#include "onionlens/curation/resize.hpp"

namespace onionlens::curation {

std::vector<double> luma_plane(const DecodedImage& img) {
  const auto n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  std::vector<double> plane(n);
  if (img.channels == 1) {
    for (std::size_t i = 0; i < n; ++i) plane[i] = img.pixels[i];
    return plane;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto* p = &img.pixels[i * static_cast<std::size_t>(img.channels)];
    plane[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
  }
  return plane;
}

std::uint64_t dhash64(const DecodedImage& img) {
  constexpr int kCols = 9;
  constexpr int kRows = 8;
  const auto small = resize_bilinear(luma_plane(img), img.width, img.height, kCols, kRows);
  std::uint64_t hash = 0;
  for (int r = 0; r < kRows; ++r) {
    for (int c = 0; c < kCols - 1; ++c) {
      if (small[static_cast<std::size_t>(r * kCols + c)] > small[static_cast<std::size_t>(r * kCols + c + 1)]) {
        hash |= std::uint64_t{1} << (r * 8 + c);
      }
    }
  }
  return hash;
}

}  // namespace onionlens::curation
