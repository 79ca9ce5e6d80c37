#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "inkwell/config.hpp"
#include "inkwell/image.hpp"
#include "inkwell/synth.hpp"
#include "inkwell/threshold.hpp"
#include "inkwell/unet.hpp"

namespace inkwell {

/// m iterations of residual enhancement. Recurrent mode reuses nets[0] at
/// every step; stacked mode runs nets[i-1] at step i.
struct RefineChain {
    ChainMode mode = ChainMode::Stacked;
    int m = 1;
    UNetConfig cfg;
    std::vector<UNetParams> nets;

    void validate() const;
    /// Network for 1-based iterate i.
    const UNetParams& net_for(int i) const;
    std::size_t net_index(int i) const { return mode == ChainMode::Recurrent ? 0 : static_cast<std::size_t>(i - 1); }
    static std::size_t net_count(ChainMode mode, int m) { return mode == ChainMode::Recurrent ? 1 : static_cast<std::size_t>(m); }
    bool operator==(const RefineChain&) const;
};

RefineChain zero_chain(ChainMode mode, int m, const UNetConfig& cfg);
/// Net k is initialized from derive_seed(seed, k).
RefineChain init_chain(ChainMode mode, int m, const UNetConfig& cfg, std::uint64_t seed);

/// x + net(x), clamped to [0,1] when `clamp` is set.
Tensor enhance_once(const UNetParams& net, const UNetConfig& cfg, const Tensor& x, bool clamp = true);

/// Iterates x^1..x^m, each clamped.
std::vector<Tensor> chain_enhance(const RefineChain& chain, const Tensor& x);

struct TrainConfig {
    double learning_rate = 1e-4;
    int batch_size = 5;
    int steps = 2000;
    int m = 3;
    std::uint64_t seed = 1;
    bool clamp_between_iterations = false;
    /// 0 backpropagates through the whole chain; k > 0 cuts the gradient at
    /// the input of iterations k+1, 2k+1, ...
    int truncate = 0;
    bool augment = true;

    void validate() const;
};

struct ChainLoss {
    double total = 0.0;                // mean of per_iteration
    std::vector<double> per_iteration; // L^1..L^m
};

struct ChainGradients {
    ChainLoss loss;
    std::vector<ParamGrads> grads; // one per net
};

/// Loss and gradient of mean_i l1(x^i, target) for a batch stacked along N.
/// Iterates are left unclamped unless tc.clamp_between_iterations is set.
ChainGradients chain_loss_and_gradients(const RefineChain& chain, const Tensor& x, const Tensor& target,
                                        const TrainConfig& tc);
ChainLoss chain_loss(const RefineChain& chain, const Tensor& x, const Tensor& target, const TrainConfig& tc);

struct StepReport {
    int step = 0; // 1-based
    ChainLoss loss;
};

using StepCallback = std::function<void(const StepReport&)>;

/// Joint Adam training from init_chain(mode, tc.m, cfg, tc.seed). Batches are
/// drawn with replacement from a generator seeded by tc.seed; with augment on,
/// each sample gets one of the five augment_variant views.
RefineChain train_chain(const TrainingSet& corpus, ChainMode mode, const UNetConfig& cfg, const TrainConfig& tc,
                        const StepCallback& on_step = {});
/// Continues training an existing chain.
void train_chain_inplace(RefineChain& chain, const TrainingSet& corpus, const TrainConfig& tc,
                         const StepCallback& on_step = {});

/// Pixelwise mean of equally sized images.
GrayImage fuse_iterations(const std::vector<GrayImage>& iterates);

struct EnhanceOptions {
    bool fusion = false;
    bool multiscale = false;
    bool uniform = false;
    std::vector<double> scales = {1.0, 0.75, 1.25, 1.5};
    /// 0 means patch_size / 2.
    int stride = 0;
    int patch_size = 64;
    SauvolaParams sauvola;
    double ink_fraction = 0.005;
    int threads = 1;
};

struct EnhanceResult {
    GrayImage image;
    /// Whole-image iterates 1..m before fusion and uniform rescaling.
    std::vector<GrayImage> iterates;
    std::vector<std::string> warnings;
};

/// Patchwise chain enhancement at one scale: windows of round(scale * P)
/// are resized to P, enhanced, and the per-iterate change is resized back
/// and added to the window. Returns the stitched iterates 1..m.
std::vector<GrayImage> enhance_at_scale(const RefineChain& chain, const GrayImage& img, double scale, int patch_size,
                                        int stride, int threads);

/// Mean over scales of enhance_at_scale, final iterate only. Scales whose
/// window exceeds the image are skipped and reported in `warnings`.
GrayImage multiscale_enhance(const RefineChain& chain, const GrayImage& img, const std::vector<double>& scales,
                             int patch_size, std::vector<std::string>* warnings = nullptr, int threads = 1);

/// Per patch: if the Sauvola ink fraction reaches ink_fraction, stretch to
/// [0,1] (flat patches are left alone); otherwise set to 1.0.
PatchSet local_uniform(const PatchSet& patches, const SauvolaParams& sauvola, double ink_fraction);

/// Enhance, optionally fuse iterates, average scales, then rescale locally.
/// Images smaller than the patch are reflect-padded and cropped back.
EnhanceResult enhance_document(const RefineChain& chain, const GrayImage& img, const EnhanceOptions& opt);

}  // namespace inkwell
