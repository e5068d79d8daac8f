#pragma once

#include <cstdint>
#include <optional>

#include "onionlens/infer/tensor.hpp"

namespace onionlens::infer {

/// Worker threads used by the heavier kernels. Kernels split work by output
/// rows only, so results are bit-identical for any thread count.
void set_kernel_threads(int threads);
int kernel_threads() noexcept;

enum class PaddingMode {
  explicit_pads,
  valid,       // no padding
  same_upper,  // output = ceil(input / stride); odd padding goes to the end
  same_lower,  // as same_upper, odd padding goes to the start
};

struct Window2d {
  int kernel_h = 1;
  int kernel_w = 1;
  int stride_h = 1;
  int stride_w = 1;
  int dilation_h = 1;
  int dilation_w = 1;
  int pad_top = 0;
  int pad_left = 0;
  int pad_bottom = 0;
  int pad_right = 0;
};

/// Fills the pads of `w` for the given mode and input size.
void resolve_padding(Window2d& w, PaddingMode mode, std::int64_t in_h, std::int64_t in_w);

/// Output spatial size; throws std::invalid_argument when the window does
/// not fit.
std::int64_t window_output(std::int64_t in, int kernel, int stride, int dilation, int pad_begin,
                           int pad_end, bool ceil_mode = false);

/// C[M x N] = A[M x K] * B[K x N], row-major, accumulated in ascending k.
void gemm(const float* a, const float* b, float* c, std::int64_t m, std::int64_t n, std::int64_t k);

/// Cross-correlation. input N x C x H x W, weight M x (C / groups) x kH x kW,
/// optional bias of length M.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias, Window2d window,
              int groups = 1);

/// Convenience overload taking a padding mode instead of explicit pads.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias, int stride, PaddingMode padding);

/// Inference-mode batch normalization over axis 1.
Tensor batch_norm(const Tensor& input, const Tensor& scale, const Tensor& bias, const Tensor& mean,
                  const Tensor& variance, float epsilon);

Tensor relu(Tensor input);

/// Padded cells never win (they act as -infinity).
Tensor max_pool2d(const Tensor& input, const Window2d& window, bool ceil_mode = false);

/// N x C x H x W -> N x C x 1 x 1.
Tensor global_average_pool(const Tensor& input);

/// Collapses dims [0, axis) and [axis, rank) into a 2-D tensor.
Tensor flatten(const Tensor& input, int axis = 1);

struct GemmOptions {
  float alpha = 1.0f;
  float beta = 1.0f;
  bool trans_a = false;
  bool trans_b = false;
};

/// Y = alpha * A' * B' + beta * C with C broadcast to the output.
Tensor dense(const Tensor& a, const Tensor& b, const Tensor* c, const GemmOptions& options = {});

/// Elementwise sum with numpy-style broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Shape broadcast_shapes(const Shape& a, const Shape& b);

/// Softmax along `axis`. With coerce_2d the tensor is viewed as
/// [prod(dims < axis), prod(dims >= axis)] first (pre-opset-13 semantics).
Tensor softmax(const Tensor& input, int axis = -1, bool coerce_2d = false);

}  // namespace onionlens::infer
