#include "onionlens/curation/resize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace onionlens::curation {
namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> taps(int in, int out) {
  std::vector<Tap> t(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int d = 0; d < out; ++d) {
    double s = (d + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(s));
    t[static_cast<std::size_t>(d)] = {lo, std::min(lo + 1, in - 1), s - lo};
  }
  return t;
}

}  // namespace

std::vector<double> resize_bilinear(std::span<const double> plane, int in_width, int in_height,
                                    int out_width, int out_height) {
  if (in_width <= 0 || in_height <= 0 || out_width <= 0 || out_height <= 0 ||
      plane.size() != static_cast<std::size_t>(in_width) * static_cast<std::size_t>(in_height)) {
    throw std::invalid_argument("resize_bilinear: bad dimensions");
  }
  const auto xs = taps(in_width, out_width);
  const auto ys = taps(in_height, out_height);
  std::vector<double> out(static_cast<std::size_t>(out_width) * static_cast<std::size_t>(out_height));
  for (int y = 0; y < out_height; ++y) {
    const auto& ty = ys[static_cast<std::size_t>(y)];
    const double* row0 = plane.data() + static_cast<std::size_t>(ty.lo) * in_width;
    const double* row1 = plane.data() + static_cast<std::size_t>(ty.hi) * in_width;
    for (int x = 0; x < out_width; ++x) {
      const auto& tx = xs[static_cast<std::size_t>(x)];
      const double top = row0[tx.lo] + (row0[tx.hi] - row0[tx.lo]) * tx.frac;
      const double bottom = row1[tx.lo] + (row1[tx.hi] - row1[tx.lo]) * tx.frac;
      out[static_cast<std::size_t>(y) * out_width + x] = top + (bottom - top) * ty.frac;
    }
  }
  return out;
}

}  // namespace onionlens::curation
