#include <algorithm>
#include <cmath>
#include <sstream>

#include "inkwell/error.hpp"
#include "inkwell/layers.hpp"
#include "inkwell/optim.hpp"
#include "inkwell/refine.hpp"
#include "inkwell/rng.hpp"

namespace inkwell {

void TrainConfig::validate() const
{
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("learning rate must be positive");
    if (batch_size < 1) throw ArgumentError("batch size must be >= 1");
    if (steps < 1) throw ArgumentError("steps must be >= 1");
    if (m < 1) throw ArgumentError("iteration count must be >= 1");
    if (truncate < 0) throw ArgumentError("truncate must be >= 0");
}

namespace {

struct Unrolled {
    std::vector<UNetCache> caches;
    std::vector<Tensor> iterates;              // x^1..x^m as used by the loss
    std::vector<std::vector<std::uint8_t>> pass; // clamp masks, empty when not clamping
};

Unrolled unroll(const RefineChain& chain, const Tensor& x, bool clamp, bool keep_caches)
{
    Unrolled u;
    u.caches.resize(keep_caches ? static_cast<std::size_t>(chain.m) : 0);
    const Tensor* prev = &x;
    for (int i = 1; i <= chain.m; ++i) {
        UNetCache* cache = keep_caches ? &u.caches[static_cast<std::size_t>(i - 1)] : nullptr;
        Tensor next = unet_forward(chain.net_for(i), chain.cfg, *prev, cache);
        next += *prev;
        if (clamp) {
            std::vector<std::uint8_t> mask(next.size());
            auto d = next.data();
            for (std::size_t k = 0; k < d.size(); ++k) {
                mask[k] = d[k] >= 0.0 && d[k] <= 1.0;
                d[k] = std::clamp(d[k], 0.0, 1.0);
            }
            u.pass.push_back(std::move(mask));
        }
        u.iterates.push_back(std::move(next));
        prev = &u.iterates.back();
    }
    return u;
}

void check_batch(const RefineChain& chain, const Tensor& x, const Tensor& target)
{
    chain.validate();
    if (x.shape() != target.shape()) {
        throw ShapeError("chain loss: input " + x.shape().str() + " and target " + target.shape().str() + " differ");
    }
    chain.cfg.check_input(x.h(), x.w());
}

}  // namespace

ChainLoss chain_loss(const RefineChain& chain, const Tensor& x, const Tensor& target, const TrainConfig& tc)
{
    check_batch(chain, x, target);
    const Unrolled u = unroll(chain, x, tc.clamp_between_iterations, false);
    ChainLoss loss;
    for (const auto& it : u.iterates) loss.per_iteration.push_back(l1_loss(it, target).loss);
    double sum = 0.0;
    for (double l : loss.per_iteration) sum += l;
    loss.total = sum / chain.m;
    return loss;
}

ChainGradients chain_loss_and_gradients(const RefineChain& chain, const Tensor& x, const Tensor& target,
                                        const TrainConfig& tc)
{
    check_batch(chain, x, target);
    const Unrolled u = unroll(chain, x, tc.clamp_between_iterations, true);

    ChainGradients out;
    for (const auto& net : chain.nets) out.grads.push_back(zero_grads(net));

    std::vector<LossResult> losses;
    for (const auto& it : u.iterates) losses.push_back(l1_loss(it, target));
    double sum = 0.0;
    for (const auto& l : losses) {
        out.loss.per_iteration.push_back(l.loss);
        sum += l.loss;
    }
    out.loss.total = sum / chain.m;

    const double weight = 1.0 / chain.m;
    Tensor g(x.shape());
    for (int i = chain.m; i >= 1; --i) {
        const auto idx = static_cast<std::size_t>(i - 1);
        auto gd = g.data();
        const auto ld = losses[idx].grad.data();
        for (std::size_t k = 0; k < gd.size(); ++k) gd[k] += weight * ld[k];
        if (tc.clamp_between_iterations) {
            const auto& mask = u.pass[idx];
            for (std::size_t k = 0; k < gd.size(); ++k) {
                if (!mask[k]) gd[k] = 0.0;
            }
        }
        // x^i = x^{i-1} + net(x^{i-1})
        Tensor dx = unet_backward(chain.net_for(i), chain.cfg, u.caches[idx], g, out.grads[chain.net_index(i)]);
        if (i == 1) break;
        dx += g;
        g = std::move(dx);
        if (tc.truncate > 0 && (i - 1) % tc.truncate == 0) g.fill(0.0);
    }
    return out;
}

namespace {

struct Batch {
    Tensor x;
    Tensor target;
};

void copy_into(Tensor& t, int n, const GrayImage& img)
{
    auto plane = t.plane(n, 0);
    std::copy(img.data().begin(), img.data().end(), plane.begin());
}

Batch draw_batch(const TrainingSet& corpus, int batch_size, bool augment, Rng& rng)
{
    const int size = corpus.inputs.front().width();
    Batch b{Tensor({batch_size, 1, size, size}), Tensor({batch_size, 1, size, size})};
    for (int n = 0; n < batch_size; ++n) {
        const auto idx = static_cast<std::size_t>(rng.below(corpus.size()));
        const int variant = augment ? static_cast<int>(rng.below(5)) : 0;
        if (variant == 0) {
            copy_into(b.x, n, corpus.inputs[idx]);
            copy_into(b.target, n, corpus.targets[idx]);
        } else {
            const auto [in, gt] = augment_variant(corpus.inputs[idx], corpus.targets[idx], variant);
            copy_into(b.x, n, in);
            copy_into(b.target, n, gt);
        }
    }
    return b;
}

void check_corpus(const TrainingSet& corpus, const UNetConfig& cfg)
{
    if (corpus.size() == 0) throw ArgumentError("training corpus is empty");
    if (corpus.targets.size() != corpus.inputs.size()) throw ArgumentError("training corpus has unpaired items");
    const int size = corpus.inputs.front().width();
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        for (const GrayImage* img : {&corpus.inputs[i], &corpus.targets[i]}) {
            if (img->width() != size || img->height() != size) {
                throw ShapeError("training item " + std::to_string(i) + " is " + std::to_string(img->width()) + "x" +
                                 std::to_string(img->height()) + ", expected " + std::to_string(size) + "x" +
                                 std::to_string(size));
            }
        }
    }
    cfg.check_input(size, size);
}

}  // namespace

void train_chain_inplace(RefineChain& chain, const TrainingSet& corpus, const TrainConfig& tc,
                         const StepCallback& on_step)
{
    tc.validate();
    chain.validate();
    if (tc.m != chain.m) {
        throw ArgumentError("train config m=" + std::to_string(tc.m) + " does not match chain m=" +
                            std::to_string(chain.m));
    }
    check_corpus(corpus, chain.cfg);

    std::vector<OptimState> states;
    for (const auto& net : chain.nets) states.push_back(OptimState::for_params(net));
    Rng rng(derive_seed(tc.seed, 0x5eedba7c4ULL));

    for (int step = 1; step <= tc.steps; ++step) {
        const Batch batch = draw_batch(corpus, tc.batch_size, tc.augment, rng);
        ChainGradients cg = chain_loss_and_gradients(chain, batch.x, batch.target, tc);
        if (!std::isfinite(cg.loss.total)) {
            throw TrainingError("non-finite loss at step " + std::to_string(step));
        }
        try {
            for (std::size_t k = 0; k < chain.nets.size(); ++k) {
                adam_step(chain.nets[k], cg.grads[k], states[k], tc.learning_rate);
            }
        } catch (const TrainingError& e) {
            throw TrainingError("step " + std::to_string(step) + ": " + e.what());
        }
        if (on_step) on_step(StepReport{step, std::move(cg.loss)});
    }
}

RefineChain train_chain(const TrainingSet& corpus, ChainMode mode, const UNetConfig& cfg, const TrainConfig& tc,
                        const StepCallback& on_step)
{
    tc.validate();
    check_corpus(corpus, cfg);
    RefineChain chain = init_chain(mode, tc.m, cfg, tc.seed);
    train_chain_inplace(chain, corpus, tc, on_step);
    return chain;
}

}  // namespace inkwell
