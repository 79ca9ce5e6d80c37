#include "inkwell/unet.hpp"

#include <algorithm>
#include <cmath>

#include "inkwell/error.hpp"
#include "inkwell/layers.hpp"
#include "inkwell/rng.hpp"

namespace inkwell {

namespace {

struct Layout {
    int depth;

    std::size_t enc_w(int l) const { return static_cast<std::size_t>(2 * l); }
    std::size_t enc_b(int l) const { return enc_w(l) + 1; }
    std::size_t up_w(int l) const { return static_cast<std::size_t>(2 * depth + 4 * (depth - 2 - l)); }
    std::size_t up_b(int l) const { return up_w(l) + 1; }
    std::size_t dec_w(int l) const { return up_w(l) + 2; }
    std::size_t dec_b(int l) const { return up_w(l) + 3; }
    std::size_t out_w() const { return static_cast<std::size_t>(2 * depth + 4 * (depth - 1)); }
    std::size_t out_b() const { return out_w() + 1; }
    std::size_t count() const { return out_b() + 1; }
};

std::span<const double> bias_of(const UNetParams& p, std::size_t i) { return p.blocks[i].value.data(); }

void check_params(const UNetParams& p, const UNetConfig& cfg)
{
    if (p.blocks.size() != Layout{cfg.depth}.count()) {
        throw ShapeError("parameter block count " + std::to_string(p.blocks.size()) + " does not match depth " +
                         std::to_string(cfg.depth));
    }
}

}  // namespace

void UNetConfig::validate() const
{
    if (depth < 1 || depth > 12) throw ArgumentError("depth must be in [1,12]");
    if (static_cast<int>(widths.size()) != depth) throw ArgumentError("widths must have depth entries");
    for (int w : widths) {
        if (w < 1) throw ArgumentError("widths must be positive");
    }
    if (kernel != 3) throw ArgumentError("kernel must be 3");
    if (in_channels < 1 || out_channels < 1) throw ArgumentError("channel counts must be positive");
    if (!std::isfinite(leaky_slope)) throw ArgumentError("leaky_slope must be finite");
}

void UNetConfig::check_input(int height, int width) const
{
    if (height % divisor() != 0 || width % divisor() != 0) {
        throw ShapeError("input " + std::to_string(height) + "x" + std::to_string(width) +
                         " is not divisible by " + std::to_string(divisor()));
    }
}

UNetConfig full_scale_config()
{
    UNetConfig cfg;
    cfg.depth = 5;
    cfg.widths = {16, 32, 64, 128, 256};
    return cfg;
}

std::size_t UNetParams::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.value.size();
    return n;
}

bool UNetParams::operator==(const UNetParams& other) const
{
    if (blocks.size() != other.blocks.size()) return false;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].name != other.blocks[i].name || !(blocks[i].value == other.blocks[i].value)) return false;
    }
    return true;
}

UNetParams zero_params(const UNetConfig& cfg)
{
    cfg.validate();
    const int d = cfg.depth;
    const int k = cfg.kernel;
    UNetParams p;
    p.blocks.resize(Layout{d}.count());
    const Layout lay{d};
    auto set = [&](std::size_t i, std::string name, Shape s) { p.blocks[i] = {std::move(name), Tensor(s)}; };
    for (int l = 0; l < d; ++l) {
        const int cin = l == 0 ? cfg.in_channels : cfg.widths[static_cast<std::size_t>(l - 1)];
        const int w = cfg.widths[static_cast<std::size_t>(l)];
        set(lay.enc_w(l), "enc" + std::to_string(l) + ".w", {w, cin, k, k});
        set(lay.enc_b(l), "enc" + std::to_string(l) + ".b", {w, 1, 1, 1});
    }
    for (int l = d - 2; l >= 0; --l) {
        const int w = cfg.widths[static_cast<std::size_t>(l)];
        const int below = cfg.widths[static_cast<std::size_t>(l + 1)];
        set(lay.up_w(l), "up" + std::to_string(l) + ".w", {below, w, 2, 2});
        set(lay.up_b(l), "up" + std::to_string(l) + ".b", {w, 1, 1, 1});
        set(lay.dec_w(l), "dec" + std::to_string(l) + ".w", {w, 2 * w, k, k});
        set(lay.dec_b(l), "dec" + std::to_string(l) + ".b", {w, 1, 1, 1});
    }
    set(lay.out_w(), "out.w", {cfg.out_channels, cfg.widths[0], k, k});
    set(lay.out_b(), "out.b", {cfg.out_channels, 1, 1, 1});
    return p;
}

UNetParams init_params(const UNetConfig& cfg, std::uint64_t seed)
{
    UNetParams p = zero_params(cfg);
    const Layout lay{cfg.depth};
    Rng rng(seed);
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        Tensor& t = p.blocks[i].value;
        if (t.h() == 1 && t.w() == 1 && t.c() == 1) continue;  // bias
        const bool transposed = t.h() == 2;
        const int fan_in = transposed ? t.n() : t.c() * t.h() * t.w();
        double bound = std::sqrt(6.0 / fan_in);
        if (i == lay.out_w()) bound *= 0.1;
        for (double& v : t.values()) v = rng.uniform(-bound, bound);
    }
    return p;
}

ParamGrads zero_grads(const UNetParams& p)
{
    ParamGrads g;
    g.reserve(p.blocks.size());
    for (const auto& b : p.blocks) g.emplace_back(b.value.shape());
    return g;
}

Tensor unet_forward(const UNetParams& p, const UNetConfig& cfg, const Tensor& x, UNetCache* cache)
{
    check_params(p, cfg);
    if (x.c() != cfg.in_channels) throw ShapeError("unet_forward: input channel count " + std::to_string(x.c()));
    cfg.check_input(x.h(), x.w());

    const int d = cfg.depth;
    const Layout lay{d};
    const double slope = cfg.leaky_slope;

    UNetCache local;
    UNetCache& c = cache ? *cache : local;
    c = UNetCache{};
    c.input = x;
    c.enc_pre.resize(static_cast<std::size_t>(d));
    c.enc_act.resize(static_cast<std::size_t>(d));
    c.pooled.resize(static_cast<std::size_t>(std::max(0, d - 1)));
    c.pool_argmax.resize(static_cast<std::size_t>(std::max(0, d - 1)));
    c.dec_in.resize(static_cast<std::size_t>(std::max(0, d - 1)));
    c.dec_pre.resize(static_cast<std::size_t>(std::max(0, d - 1)));
    c.dec_act.resize(static_cast<std::size_t>(std::max(0, d - 1)));

    for (int l = 0; l < d; ++l) {
        const auto li = static_cast<std::size_t>(l);
        const Tensor& in = l == 0 ? c.input : c.pooled[li - 1];
        c.enc_pre[li] = conv2d(in, p.blocks[lay.enc_w(l)].value, bias_of(p, lay.enc_b(l)), 1);
        c.enc_act[li] = leaky_relu(c.enc_pre[li], slope);
        if (l < d - 1) {
            PoolResult pr = maxpool2(c.enc_act[li]);
            c.pooled[li] = std::move(pr.y);
            c.pool_argmax[li] = std::move(pr.argmax);
        }
    }

    for (int l = d - 2; l >= 0; --l) {
        const auto li = static_cast<std::size_t>(l);
        const Tensor& below = l == d - 2 ? c.enc_act[li + 1] : c.dec_act[li + 1];
        const Tensor up = transpose_conv2(below, p.blocks[lay.up_w(l)].value, bias_of(p, lay.up_b(l)));
        c.dec_in[li] = concat_channels(c.enc_act[li], up);
        c.dec_pre[li] = conv2d(c.dec_in[li], p.blocks[lay.dec_w(l)].value, bias_of(p, lay.dec_b(l)), 1);
        c.dec_act[li] = leaky_relu(c.dec_pre[li], slope);
    }

    const Tensor& top = d == 1 ? c.enc_act[0] : c.dec_act[0];
    return conv2d(top, p.blocks[lay.out_w()].value, bias_of(p, lay.out_b()), 1);
}

Tensor unet_backward(const UNetParams& p, const UNetConfig& cfg, const UNetCache& c, const Tensor& dresidual,
                     ParamGrads& g)
{
    check_params(p, cfg);
    if (g.size() != p.blocks.size()) throw ShapeError("unet_backward: gradient buffer count");
    const int d = cfg.depth;
    const Layout lay{d};
    const double slope = cfg.leaky_slope;

    const Tensor& top = d == 1 ? c.enc_act[0] : c.dec_act[0];
    Tensor dtop(top.shape());
    conv2d_backward_accumulate(top, p.blocks[lay.out_w()].value, dresidual, 1, &dtop, g[lay.out_w()].data(),
                               g[lay.out_b()].data());

    // expansive path, in reverse of the forward order
    std::vector<Tensor> dskip(static_cast<std::size_t>(std::max(0, d - 1)));
    Tensor dact = std::move(dtop);
    for (int l = 0; l <= d - 2; ++l) {
        const auto li = static_cast<std::size_t>(l);
        const Tensor dz = leaky_relu_backward(c.dec_pre[li], dact, slope);
        Tensor din(c.dec_in[li].shape());
        conv2d_backward_accumulate(c.dec_in[li], p.blocks[lay.dec_w(l)].value, dz, 1, &din, g[lay.dec_w(l)].data(),
                                   g[lay.dec_b(l)].data());
        auto [ds, dup] = split_channels(din, cfg.widths[li]);
        dskip[li] = std::move(ds);
        const Tensor& below = l == d - 2 ? c.enc_act[li + 1] : c.dec_act[li + 1];
        Tensor dbelow(below.shape());
        transpose_conv2_backward_accumulate(below, p.blocks[lay.up_w(l)].value, dup, &dbelow, g[lay.up_w(l)].data(),
                                            g[lay.up_b(l)].data());
        dact = std::move(dbelow);
    }

    // contracting path; dact now holds dL/d(enc_act[depth-1])
    for (int l = d - 1; l >= 0; --l) {
        const auto li = static_cast<std::size_t>(l);
        if (l < d - 1) {
            dact = maxpool2_backward(c.enc_act[li].shape(), c.pool_argmax[li], dact);
            dact += dskip[li];
        }
        const Tensor dz = leaky_relu_backward(c.enc_pre[li], dact, slope);
        const Tensor& in = l == 0 ? c.input : c.pooled[li - 1];
        Tensor din(in.shape());
        conv2d_backward_accumulate(in, p.blocks[lay.enc_w(l)].value, dz, 1, &din, g[lay.enc_w(l)].data(),
                                   g[lay.enc_b(l)].data());
        dact = std::move(din);
    }
    return dact;
}

namespace {

Tensor enhanced(const Tensor& x, const Tensor& residual)
{
    Tensor out = residual;
    out += x;
    return out;
}

}  // namespace

double enhancement_loss(const UNetParams& p, const UNetConfig& cfg, const Tensor& x, const Tensor& target)
{
    return l1_loss(enhanced(x, unet_forward(p, cfg, x)), target).loss;
}

ParamGrads enhancement_gradients(const UNetParams& p, const UNetConfig& cfg, const Tensor& x, const Tensor& target)
{
    UNetCache cache;
    const Tensor residual = unet_forward(p, cfg, x, &cache);
    const LossResult loss = l1_loss(enhanced(x, residual), target);
    ParamGrads g = zero_grads(p);
    unet_backward(p, cfg, cache, loss.grad, g);
    return g;
}

double grad_check(const UNetParams& p, const UNetConfig& cfg, const Tensor& x, const Tensor& target, double epsilon,
                  const GradientFn& gradient)
{
    const ParamGrads analytic = gradient(p, cfg, x, target);
    if (analytic.size() != p.blocks.size()) throw ShapeError("grad_check: gradient block count mismatch");
    UNetParams probe = p;
    double worst = 0.0;
    for (std::size_t b = 0; b < probe.blocks.size(); ++b) {
        auto values = probe.blocks[b].value.data();
        const auto a = analytic[b].data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + epsilon;
            const double up = enhancement_loss(probe, cfg, x, target);
            values[i] = saved - epsilon;
            const double down = enhancement_loss(probe, cfg, x, target);
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * epsilon);
            const double denom = std::max({std::abs(a[i]), std::abs(numeric), 1e-6});
            worst = std::max(worst, std::abs(a[i] - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace inkwell
