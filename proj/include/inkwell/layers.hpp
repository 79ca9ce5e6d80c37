#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "inkwell/tensor.hpp"

namespace inkwell {

// Each layer has a forward function and a backward function that maps the
// upstream gradient dL/dy to gradients for its inputs and parameters. The
// `_accumulate` variants add into caller-owned buffers so a training step can
// sum over samples and iterations without reallocating.

/// Cross-correlation with zero padding. kernel: (Cout, Cin, K, K).
Tensor conv2d(const Tensor& x, const Tensor& kernel, std::span<const double> bias, int pad);

struct ConvGrads {
    Tensor dx;
    Tensor dkernel;
    std::vector<double> dbias;
};

ConvGrads conv2d_backward(const Tensor& x, const Tensor& kernel, const Tensor& dy, int pad);

/// Adds kernel/bias gradients into the given buffers; writes dx if non-null.
void conv2d_backward_accumulate(const Tensor& x, const Tensor& kernel, const Tensor& dy, int pad, Tensor* dx,
                                std::span<double> dkernel, std::span<double> dbias);

/// max(x, slope*x) elementwise.
Tensor leaky_relu(const Tensor& x, double slope);
/// Derivative is 1 for x > 0 and `slope` for x <= 0 (x == 0 takes the slope).
Tensor leaky_relu_backward(const Tensor& x, const Tensor& dy, double slope);

struct PoolResult {
    Tensor y;
    /// flat input index of the winner of each output cell
    std::vector<std::uint32_t> argmax;
};

/// 2x2 max pool, stride 2. Ties go to the first cell in row-major order.
PoolResult maxpool2(const Tensor& x);
Tensor maxpool2_backward(const Shape& input_shape, const std::vector<std::uint32_t>& argmax, const Tensor& dy);

/// 2x2 transposed convolution, stride 2. kernel: (Cin, Cout, 2, 2).
Tensor transpose_conv2(const Tensor& x, const Tensor& kernel, std::span<const double> bias);
ConvGrads transpose_conv2_backward(const Tensor& x, const Tensor& kernel, const Tensor& dy);
void transpose_conv2_backward_accumulate(const Tensor& x, const Tensor& kernel, const Tensor& dy, Tensor* dx,
                                         std::span<double> dkernel, std::span<double> dbias);

/// Channel concatenation, `a` first.
Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Inverse of concat_channels for a gradient: first `channels_a` channels, then the rest.
std::pair<Tensor, Tensor> split_channels(const Tensor& d, int channels_a);

struct LossResult {
    double loss = 0.0;
    Tensor grad;
};

/// Mean absolute error over all elements; grad = sign(pred - target)/n, sign(0) = 0.
LossResult l1_loss(const Tensor& pred, const Tensor& target);

}  // namespace inkwell
