#include "onionlens/infer/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "onionlens/infer/errors.hpp"
#include "parallel.hpp"

namespace onionlens::infer {
namespace {

std::atomic<int> g_threads{static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))};

[[noreturn]] void mismatch(const std::string& detail) { throw ShapeMismatch("", detail); }

void expect_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank)
    mismatch(std::string(what) + " must have rank " + std::to_string(rank) + ", got " + shape_string(t.shape()));
}

void expect_vector(const Tensor* t, std::int64_t n, const char* what) {
  if (t == nullptr) return;
  if (static_cast<std::int64_t>(t->size()) != n)
    mismatch(std::string(what) + " must have " + std::to_string(n) + " elements, got " +
             shape_string(t->shape()));
}

int normalize_axis(int axis, std::size_t rank, bool allow_end) {
  const int r = static_cast<int>(rank);
  const int hi = allow_end ? r : r - 1;
  if (axis < -r || axis > hi) mismatch("axis " + std::to_string(axis) + " out of range for rank " + std::to_string(r));
  return axis < 0 ? axis + r : axis;
}

}  // namespace

void set_kernel_threads(int threads) { g_threads.store(std::max(1, threads)); }
int kernel_threads() noexcept { return g_threads.load(); }

std::int64_t window_output(std::int64_t in, int kernel, int stride, int dilation, int pad_begin, int pad_end,
                           bool ceil_mode) {
  if (kernel < 1 || stride < 1 || dilation < 1 || pad_begin < 0 || pad_end < 0)
    mismatch("window parameters must be positive");
  const std::int64_t span = static_cast<std::int64_t>(kernel - 1) * dilation + 1;
  const std::int64_t numer = in + pad_begin + pad_end - span;
  if (numer < 0)
    mismatch("window of extent " + std::to_string(span) + " does not fit input of size " + std::to_string(in));
  if (!ceil_mode) return numer / stride + 1;
  std::int64_t out = (numer + stride - 1) / stride + 1;
  // The last window has to start inside the input or the leading pad.
  if ((out - 1) * stride >= in + pad_begin) --out;
  return out;
}

void resolve_padding(Window2d& w, PaddingMode mode, std::int64_t in_h, std::int64_t in_w) {
  if (mode == PaddingMode::explicit_pads) return;
  if (mode == PaddingMode::valid) {
    w.pad_top = w.pad_left = w.pad_bottom = w.pad_right = 0;
    return;
  }
  auto split = [mode](std::int64_t in, int k, int s, int d, int& begin, int& end) {
    const std::int64_t out = (in + s - 1) / s;
    const std::int64_t total = std::max<std::int64_t>(0, (out - 1) * s + static_cast<std::int64_t>(k - 1) * d + 1 - in);
    const std::int64_t small = total / 2;
    begin = static_cast<int>(mode == PaddingMode::same_upper ? small : total - small);
    end = static_cast<int>(total - begin);
  };
  split(in_h, w.kernel_h, w.stride_h, w.dilation_h, w.pad_top, w.pad_bottom);
  split(in_w, w.kernel_w, w.stride_w, w.dilation_w, w.pad_left, w.pad_right);
}

void gemm(const float* a, const float* b, float* c, std::int64_t m, std::int64_t n, std::int64_t k) {
  constexpr std::int64_t kBlockK = 256;
  constexpr std::int64_t kBlockN = 512;
  std::fill(c, c + m * n, 0.0f);
  detail::parallel_for(m, 4, [&](std::int64_t r0, std::int64_t r1) {
    for (std::int64_t k0 = 0; k0 < k; k0 += kBlockK) {
      const std::int64_t k1 = std::min(k, k0 + kBlockK);
      for (std::int64_t j0 = 0; j0 < n; j0 += kBlockN) {
        const std::int64_t j1 = std::min(n, j0 + kBlockN);
        for (std::int64_t i = r0; i < r1; ++i) {
          float* crow = c + i * n;
          const float* arow = a + i * k;
          for (std::int64_t kk = k0; kk < k1; ++kk) {
            const float av = arow[kk];
            const float* brow = b + kk * n;
            for (std::int64_t j = j0; j < j1; ++j) crow[j] += av * brow[j];
          }
        }
      }
    }
  });
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias, Window2d w, int groups) {
  expect_rank(input, 4, "conv input");
  expect_rank(weight, 4, "conv weight");
  if (groups < 1) mismatch("conv group count must be positive");
  const std::int64_t batch = input.dim(0), channels = input.dim(1), in_h = input.dim(2), in_w = input.dim(3);
  const std::int64_t out_c = weight.dim(0), group_c = weight.dim(1);
  if (channels % groups != 0 || out_c % groups != 0 || channels / groups != group_c)
    mismatch("conv weight " + shape_string(weight.shape()) + " incompatible with input " +
             shape_string(input.shape()) + " and " + std::to_string(groups) + " groups");
  expect_vector(bias, out_c, "conv bias");
  w.kernel_h = static_cast<int>(weight.dim(2));
  w.kernel_w = static_cast<int>(weight.dim(3));
  const std::int64_t out_h =
      window_output(in_h, w.kernel_h, w.stride_h, w.dilation_h, w.pad_top, w.pad_bottom);
  const std::int64_t out_w =
      window_output(in_w, w.kernel_w, w.stride_w, w.dilation_w, w.pad_left, w.pad_right);

  Tensor out({batch, out_c, out_h, out_w});
  const std::int64_t plane = out_h * out_w;
  const std::int64_t depth = group_c * w.kernel_h * w.kernel_w;
  const std::int64_t group_out = out_c / groups;
  const bool pointwise = w.kernel_h == 1 && w.kernel_w == 1 && w.stride_h == 1 && w.stride_w == 1 &&
                         w.pad_top == 0 && w.pad_left == 0 && w.pad_bottom == 0 && w.pad_right == 0;
  std::vector<float> col(pointwise ? 0 : static_cast<std::size_t>(depth * plane));

  for (std::int64_t n = 0; n < batch; ++n) {
    for (int g = 0; g < groups; ++g) {
      const float* src = input.data() + (n * channels + g * group_c) * in_h * in_w;
      const float* cols = src;
      if (!pointwise) {
        detail::parallel_for(depth, 8, [&](std::int64_t r0, std::int64_t r1) {
          for (std::int64_t row = r0; row < r1; ++row) {
            const std::int64_t kx = row % w.kernel_w;
            const std::int64_t ky = (row / w.kernel_w) % w.kernel_h;
            const std::int64_t c = row / (w.kernel_w * w.kernel_h);
            const float* chan = src + c * in_h * in_w;
            float* dst = col.data() + row * plane;
            for (std::int64_t oy = 0; oy < out_h; ++oy) {
              const std::int64_t iy = oy * w.stride_h - w.pad_top + ky * w.dilation_h;
              float* drow = dst + oy * out_w;
              if (iy < 0 || iy >= in_h) {
                std::fill(drow, drow + out_w, 0.0f);
                continue;
              }
              for (std::int64_t ox = 0; ox < out_w; ++ox) {
                const std::int64_t ix = ox * w.stride_w - w.pad_left + kx * w.dilation_w;
                drow[ox] = (ix < 0 || ix >= in_w) ? 0.0f : chan[iy * in_w + ix];
              }
            }
          }
        });
        cols = col.data();
      }
      const float* wg = weight.data() + g * group_out * depth;
      float* dst = out.data() + (n * out_c + g * group_out) * plane;
      gemm(wg, cols, dst, group_out, plane, depth);
    }
    if (bias != nullptr) {
      for (std::int64_t m = 0; m < out_c; ++m) {
        float* dst = out.data() + (n * out_c + m) * plane;
        const float b = (*bias)[static_cast<std::size_t>(m)];
        for (std::int64_t p = 0; p < plane; ++p) dst[p] += b;
      }
    }
  }
  return out;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias, int stride, PaddingMode padding) {
  expect_rank(input, 4, "conv input");
  expect_rank(weight, 4, "conv weight");
  Window2d w;
  w.kernel_h = static_cast<int>(weight.dim(2));
  w.kernel_w = static_cast<int>(weight.dim(3));
  w.stride_h = w.stride_w = stride;
  resolve_padding(w, padding, input.dim(2), input.dim(3));
  return conv2d(input, weight, bias, w, 1);
}

Tensor batch_norm(const Tensor& input, const Tensor& scale, const Tensor& bias, const Tensor& mean,
                  const Tensor& variance, float epsilon) {
  if (input.rank() < 2) mismatch("batch norm input must have rank >= 2");
  const std::int64_t batch = input.dim(0), channels = input.dim(1);
  for (const Tensor* t : {&scale, &bias, &mean, &variance}) expect_vector(t, channels, "batch norm parameter");
  const std::int64_t inner = channels == 0 ? 0 : static_cast<std::int64_t>(input.size()) / (batch * channels);
  Tensor out = input;
  for (std::int64_t c = 0; c < channels; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    const float inv = 1.0f / std::sqrt(variance[ci] + epsilon);
    const float gain = scale[ci] * inv;
    const float mu = mean[ci];
    const float beta = bias[ci];
    for (std::int64_t n = 0; n < batch; ++n) {
      float* p = out.data() + (n * channels + c) * inner;
      for (std::int64_t i = 0; i < inner; ++i) p[i] = (p[i] - mu) * gain + beta;
    }
  }
  return out;
}

Tensor relu(Tensor input) {
  for (float& v : input.values()) v = v > 0.0f ? v : 0.0f;
  return input;
}

Tensor max_pool2d(const Tensor& input, const Window2d& w, bool ceil_mode) {
  expect_rank(input, 4, "max pool input");
  const std::int64_t batch = input.dim(0), channels = input.dim(1), in_h = input.dim(2), in_w = input.dim(3);
  const std::int64_t out_h =
      window_output(in_h, w.kernel_h, w.stride_h, w.dilation_h, w.pad_top, w.pad_bottom, ceil_mode);
  const std::int64_t out_w =
      window_output(in_w, w.kernel_w, w.stride_w, w.dilation_w, w.pad_left, w.pad_right, ceil_mode);
  Tensor out({batch, channels, out_h, out_w});
  detail::parallel_for(batch * channels, 4, [&](std::int64_t p0, std::int64_t p1) {
    for (std::int64_t p = p0; p < p1; ++p) {
      const float* src = input.data() + p * in_h * in_w;
      float* dst = out.data() + p * out_h * out_w;
      for (std::int64_t oy = 0; oy < out_h; ++oy) {
        for (std::int64_t ox = 0; ox < out_w; ++ox) {
          float best = -std::numeric_limits<float>::infinity();
          for (int ky = 0; ky < w.kernel_h; ++ky) {
            const std::int64_t iy = oy * w.stride_h - w.pad_top + static_cast<std::int64_t>(ky) * w.dilation_h;
            if (iy < 0 || iy >= in_h) continue;
            for (int kx = 0; kx < w.kernel_w; ++kx) {
              const std::int64_t ix = ox * w.stride_w - w.pad_left + static_cast<std::int64_t>(kx) * w.dilation_w;
              if (ix < 0 || ix >= in_w) continue;
              best = std::max(best, src[iy * in_w + ix]);
            }
          }
          dst[oy * out_w + ox] = best;
        }
      }
    }
  });
  return out;
}

Tensor global_average_pool(const Tensor& input) {
  expect_rank(input, 4, "global average pool input");
  const std::int64_t batch = input.dim(0), channels = input.dim(1);
  const std::int64_t area = input.dim(2) * input.dim(3);
  if (area == 0) mismatch("global average pool over empty plane");
  Tensor out({batch, channels, 1, 1});
  for (std::int64_t p = 0; p < batch * channels; ++p) {
    const float* src = input.data() + p * area;
    float sum = 0.0f;
    for (std::int64_t i = 0; i < area; ++i) sum += src[i];
    out[static_cast<std::size_t>(p)] = sum / static_cast<float>(area);
  }
  return out;
}

Tensor flatten(const Tensor& input, int axis) {
  const int a = normalize_axis(axis, input.rank(), true);
  std::int64_t outer = 1;
  for (int i = 0; i < a; ++i) outer *= input.dim(static_cast<std::size_t>(i));
  const std::int64_t inner = outer == 0 ? 0 : static_cast<std::int64_t>(input.size()) / outer;
  return input.reshaped({outer, inner});
}

Tensor dense(const Tensor& a, const Tensor& b, const Tensor* c, const GemmOptions& opt) {
  expect_rank(a, 2, "gemm A");
  expect_rank(b, 2, "gemm B");
  const std::int64_t m = opt.trans_a ? a.dim(1) : a.dim(0);
  const std::int64_t k = opt.trans_a ? a.dim(0) : a.dim(1);
  const std::int64_t kb = opt.trans_b ? b.dim(1) : b.dim(0);
  const std::int64_t n = opt.trans_b ? b.dim(0) : b.dim(1);
  if (k != kb)
    mismatch("gemm inner dimensions differ: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));

  std::vector<float> at;
  const float* ap = a.data();
  if (opt.trans_a) {
    at.resize(static_cast<std::size_t>(m * k));
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = 0; j < k; ++j) at[static_cast<std::size_t>(i * k + j)] = a.data()[j * m + i];
    ap = at.data();
  }

  Tensor out({m, n});
  if (opt.trans_b) {
    // B is N x K: each output is a dot product of two contiguous rows.
    detail::parallel_for(m * n, 64, [&](std::int64_t e0, std::int64_t e1) {
      for (std::int64_t e = e0; e < e1; ++e) {
        const float* arow = ap + (e / n) * k;
        const float* brow = b.data() + (e % n) * k;
        float acc = 0.0f;
        for (std::int64_t j = 0; j < k; ++j) acc += arow[j] * brow[j];
        out.data()[e] = acc;
      }
    });
  } else {
    gemm(ap, b.data(), out.data(), m, n, k);
  }

  const bool scale = opt.alpha != 1.0f;
  if (scale)
    for (float& v : out.values()) v *= opt.alpha;
  if (c != nullptr && opt.beta != 0.0f) {
    const Shape target{m, n};
    if (broadcast_shapes(c->shape(), target) != target)
      mismatch("gemm C " + shape_string(c->shape()) + " does not broadcast to " + shape_string(target));
    Shape cs = c->shape();
    while (cs.size() < 2) cs.insert(cs.begin(), 1);
    const std::int64_t rs = cs[0] == 1 ? 0 : cs[1];
    const std::int64_t ks = cs[1] == 1 ? 0 : 1;
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = 0; j < n; ++j) out.data()[i * n + j] += opt.beta * c->data()[i * rs + j * ks];
  }
  return out;
}

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::int64_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::int64_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da == db || db == 1) {
      out[i] = da;
    } else if (da == 1) {
      out[i] = db;
    } else if (da < 0 || db < 0) {
      out[i] = std::max(da, db);  // one side is the dynamic batch
    } else {
      mismatch("cannot broadcast " + shape_string(a) + " with " + shape_string(b));
    }
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) {
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
  }
  const Shape shape = broadcast_shapes(a.shape(), b.shape());
  const std::size_t rank = shape.size();
  auto strides_for = [&](const Shape& s) {
    std::vector<std::int64_t> strides(rank, 0);
    std::int64_t stride = 1;
    for (std::size_t i = s.size(); i-- > 0;) {
      const std::size_t o = i + (rank - s.size());
      strides[o] = s[i] == 1 ? 0 : stride;
      stride *= s[i];
    }
    return strides;
  };
  const auto sa = strides_for(a.shape());
  const auto sb = strides_for(b.shape());
  Tensor out(shape);
  std::vector<std::int64_t> idx(rank, 0);
  std::int64_t ia = 0, ib = 0;
  for (std::size_t e = 0; e < out.size(); ++e) {
    out[e] = a.data()[ia] + b.data()[ib];
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      ia += sa[d];
      ib += sb[d];
      if (idx[d] < shape[d]) break;
      ia -= sa[d] * idx[d];
      ib -= sb[d] * idx[d];
      idx[d] = 0;
    }
  }
  return out;
}

Tensor softmax(const Tensor& input, int axis, bool coerce_2d) {
  if (input.rank() == 0) mismatch("softmax input must have rank >= 1");
  const int a = normalize_axis(axis, input.rank(), false);
  std::int64_t outer = 1, len = 1, inner = 1;
  for (int i = 0; i < static_cast<int>(input.rank()); ++i) {
    const std::int64_t d = input.dim(static_cast<std::size_t>(i));
    if (i < a) outer *= d;
    else if (i == a || coerce_2d) len *= d;
    else inner *= d;
  }
  Tensor out = input;
  float* p = out.data();
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t r = 0; r < inner; ++r) {
      float* base = p + o * len * inner + r;
      float hi = -std::numeric_limits<float>::infinity();
      for (std::int64_t i = 0; i < len; ++i) hi = std::max(hi, base[i * inner]);
      float sum = 0.0f;
      for (std::int64_t i = 0; i < len; ++i) {
        base[i * inner] = std::exp(base[i * inner] - hi);
        sum += base[i * inner];
      }
      for (std::int64_t i = 0; i < len; ++i) base[i * inner] /= sum;
    }
  }
  return out;
}

}  // namespace onionlens::infer
