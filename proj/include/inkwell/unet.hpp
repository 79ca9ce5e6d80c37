#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "inkwell/tensor.hpp"

namespace inkwell {

/// Structure of one encoder-decoder network.
///
/// Level l of the contracting path is a 3x3 conv + leaky-ReLU with widths[l]
/// channels, followed by 2x2 max pooling for every level but the deepest.
/// Each expansive level upsamples with a 2x2 stride-2 transposed conv,
/// concatenates the matching contracting activation (skip first) and applies
/// one 3x3 conv + leaky-ReLU. A final linear 3x3 conv projects to
/// out_channels, so the residual may be negative.
struct UNetConfig {
    int depth = 3;
    std::vector<int> widths = {8, 16, 32};
    int kernel = 3;
    double leaky_slope = 0.25;
    int in_channels = 1;
    int out_channels = 1;

    void validate() const;
    /// Throws ShapeError unless H and W are divisible by 2^(depth-1).
    void check_input(int height, int width) const;
    int divisor() const { return 1 << (depth - 1); }
    bool operator==(const UNetConfig&) const = default;
};

/// Topology of the full-size network: five levels of [16,32,64,128,256].
UNetConfig full_scale_config();

struct ParamBlock {
    std::string name;
    Tensor value;
};

/// Parameter blocks in a fixed order:
///   enc{l}.w, enc{l}.b                       for l = 0..depth-1
///   up{l}.w, up{l}.b, dec{l}.w, dec{l}.b     for l = depth-2..0
///   out.w, out.b
/// Biases are stored as (C,1,1,1) tensors.
struct UNetParams {
    std::vector<ParamBlock> blocks;

    std::size_t parameter_count() const;
    bool operator==(const UNetParams&) const;
};

using ParamGrads = std::vector<Tensor>;

UNetParams zero_params(const UNetConfig& cfg);
/// Fan-in scaled uniform (He) init for the hidden layers, biases zero. The
/// output projection is scaled down by 10 so an untrained network starts
/// close to the identity enhancement.
UNetParams init_params(const UNetConfig& cfg, std::uint64_t seed);
ParamGrads zero_grads(const UNetParams& p);

/// Activations kept by the forward pass for the backward pass.
struct UNetCache {
    Tensor input;
    std::vector<Tensor> enc_pre;    // conv outputs before activation
    std::vector<Tensor> enc_act;    // activations, also the skip tensors
    std::vector<Tensor> pooled;     // input of level l+1
    std::vector<std::vector<std::uint32_t>> pool_argmax;
    std::vector<Tensor> dec_in;     // concat(skip, upsampled), indexed by level
    std::vector<Tensor> dec_pre;
    std::vector<Tensor> dec_act;
};

/// Residual prediction; same shape as x.
Tensor unet_forward(const UNetParams& p, const UNetConfig& cfg, const Tensor& x, UNetCache* cache = nullptr);

/// Adds dL/dtheta into `grads` and returns dL/dx for upstream gradient dL/dresidual.
Tensor unet_backward(const UNetParams& p, const UNetConfig& cfg, const UNetCache& cache, const Tensor& dresidual,
                     ParamGrads& grads);

/// Gradient of l1_loss(x + net(x), target) with respect to every parameter.
using GradientFn =
    std::function<ParamGrads(const UNetParams&, const UNetConfig&, const Tensor& x, const Tensor& target)>;

ParamGrads enhancement_gradients(const UNetParams& p, const UNetConfig& cfg, const Tensor& x, const Tensor& target);
double enhancement_loss(const UNetParams& p, const UNetConfig& cfg, const Tensor& x, const Tensor& target);

/// Worst relative error |a - n| / max(|a|, |n|, 1e-6) between `gradient` and
/// central differences (L(t+eps) - L(t-eps)) / 2eps over every parameter.
double grad_check(const UNetParams& p, const UNetConfig& cfg, const Tensor& x, const Tensor& target, double epsilon,
                  const GradientFn& gradient = enhancement_gradients);

}  // namespace inkwell
