#include <doctest.h>

#include <cmath>
#include <functional>

#include "inkwell/error.hpp"
#include "inkwell/layers.hpp"
#include "inkwell/optim.hpp"
#include "inkwell/rng.hpp"
#include "inkwell/unet.hpp"

using namespace inkwell;

namespace {

Tensor random_tensor(Rng& rng, Shape s, double lo = -1.0, double hi = 1.0)
{
    Tensor t(s);
    for (double& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

double dot(const Tensor& a, const Tensor& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

// Worst relative error of `analytic` against central differences of f over `probe`.
double fd_error(std::span<double> probe, std::span<const double> analytic, const std::function<double()>& f)
{
    const double eps = 1e-6;
    double worst = 0.0;
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + eps;
        const double up = f();
        probe[i] = saved - eps;
        const double down = f();
        probe[i] = saved;
        const double num = (up - down) / (2 * eps);
        worst = std::max(worst, std::abs(num - analytic[i]) / std::max({std::abs(num), std::abs(analytic[i]), 1e-6}));
    }
    return worst;
}

UNetConfig micro_config()
{
    UNetConfig cfg;
    cfg.depth = 2;
    cfg.widths = {4, 8};
    return cfg;
}

}  // namespace

TEST_CASE("conv2d with a centre tap is the identity")
{
    Rng rng(1);
    const Tensor x = random_tensor(rng, {1, 1, 3, 3});
    Tensor k({1, 1, 3, 3});
    k.at(0, 0, 1, 1) = 1.0;
    const std::vector<double> bias{0.0};
    CHECK(conv2d(x, k, bias, 1) == x);
}

TEST_CASE("conv2d zero-pads the border")
{
    const Tensor x({1, 1, 3, 3}, 1.0);
    const Tensor k({1, 1, 3, 3}, 1.0);
    const std::vector<double> bias{0.0};
    const Tensor y = conv2d(x, k, bias, 1);
    CHECK(y.at(0, 0, 1, 1) == 9.0);
    CHECK(y.at(0, 0, 0, 0) == 4.0);
    CHECK(y.at(0, 0, 0, 1) == 6.0);
    CHECK_THROWS_AS(conv2d(Tensor({1, 2, 3, 3}), k, bias, 1), ShapeError);
}

TEST_CASE("conv2d backward matches finite differences")
{
    Rng rng(2);
    Tensor x = random_tensor(rng, {1, 2, 4, 4});
    Tensor k = random_tensor(rng, {3, 2, 3, 3});
    std::vector<double> bias{0.1, -0.2, 0.3};
    const Tensor dy = random_tensor(rng, {1, 3, 4, 4});
    const ConvGrads g = conv2d_backward(x, k, dy, 1);
    auto loss = [&] { return dot(conv2d(x, k, bias, 1), dy); };
    CHECK(fd_error(x.data(), g.dx.data(), loss) <= 1e-6);
    CHECK(fd_error(k.data(), g.dkernel.data(), loss) <= 1e-6);
    CHECK(fd_error(bias, g.dbias, loss) <= 1e-6);
}

TEST_CASE("leaky_relu uses the given slope")
{
    const Tensor x({1, 1, 1, 3}, std::vector<double>{-4.0, 3.0, 0.0});
    const Tensor y = leaky_relu(x, 0.25);
    CHECK(y.at(0, 0, 0, 0) == -1.0);
    CHECK(y.at(0, 0, 0, 1) == 3.0);
    CHECK(leaky_relu(x, 1.0) == x);
    const Tensor d = leaky_relu_backward(x, Tensor(x.shape(), 1.0), 0.25);
    CHECK(d.at(0, 0, 0, 0) == 0.25);
    CHECK(d.at(0, 0, 0, 1) == 1.0);
    CHECK(d.at(0, 0, 0, 2) == 0.25);
}

TEST_CASE("maxpool2 routes gradients to the argmax")
{
    const Tensor x({1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
    const PoolResult p = maxpool2(x);
    CHECK(p.y.at(0, 0, 0, 0) == 4.0);
    const Tensor dx = maxpool2_backward(x.shape(), p.argmax, Tensor({1, 1, 1, 1}, 1.0));
    CHECK(dx == Tensor({1, 1, 2, 2}, std::vector<double>{0, 0, 0, 1}));

    const Tensor c({1, 1, 2, 2}, 0.5);
    const PoolResult pc = maxpool2(c);
    CHECK(pc.y.at(0, 0, 0, 0) == 0.5);
    CHECK(pc.argmax[0] == 0);
    CHECK_THROWS_AS(maxpool2(Tensor({1, 1, 3, 2})), ShapeError);
}

TEST_CASE("transpose_conv2 doubles the spatial size")
{
    const Tensor x({1, 1, 1, 1}, 2.0);
    const Tensor k({1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
    const std::vector<double> zero{0.0};
    CHECK(transpose_conv2(x, k, zero) == Tensor({1, 1, 2, 2}, std::vector<double>{2, 4, 6, 8}));
    const std::vector<double> bias{0.7};
    CHECK(transpose_conv2(Tensor({1, 1, 2, 3}), k, bias) == Tensor({1, 1, 4, 6}, 0.7));

    Rng rng(4);
    Tensor xi = random_tensor(rng, {2, 3, 2, 3});
    Tensor ki = random_tensor(rng, {3, 2, 2, 2});
    std::vector<double> bi{0.2, -0.1};
    const Tensor dy = random_tensor(rng, {2, 2, 4, 6});
    const ConvGrads g = transpose_conv2_backward(xi, ki, dy);
    auto loss = [&] { return dot(transpose_conv2(xi, ki, bi), dy); };
    CHECK(fd_error(xi.data(), g.dx.data(), loss) <= 1e-6);
    CHECK(fd_error(ki.data(), g.dkernel.data(), loss) <= 1e-6);
    CHECK(fd_error(bi, g.dbias, loss) <= 1e-6);
}

TEST_CASE("concat and split are inverse")
{
    Rng rng(6);
    const Tensor a = random_tensor(rng, {1, 1, 2, 2});
    const Tensor b = random_tensor(rng, {1, 2, 2, 2});
    const Tensor c = concat_channels(a, b);
    CHECK(c.c() == 3);
    CHECK(c.at(0, 0, 1, 1) == a.at(0, 0, 1, 1));
    CHECK(c.at(0, 2, 0, 1) == b.at(0, 1, 0, 1));
    const auto [ga, gb] = split_channels(c, 1);
    CHECK(ga == a);
    CHECK(gb == b);
    CHECK_THROWS_AS(concat_channels(a, Tensor({1, 1, 3, 2})), ShapeError);
}

TEST_CASE("l1 loss and its subgradient")
{
    const Tensor p({1, 1, 1, 2}, std::vector<double>{0.2, 0.8});
    const Tensor t({1, 1, 1, 2}, std::vector<double>{0.0, 1.0});
    const LossResult r = l1_loss(p, t);
    CHECK(r.loss == doctest::Approx(0.2));
    CHECK(r.grad.at(0, 0, 0, 0) == 0.5);
    CHECK(r.grad.at(0, 0, 0, 1) == -0.5);

    const LossResult same = l1_loss(p, p);
    CHECK(same.loss == 0.0);
    for (double g : same.grad.data()) CHECK(g == 0.0);
    CHECK(l1_loss(Tensor({1, 1, 2, 2}, 1.0), Tensor({1, 1, 2, 2}, 0.0)).loss == 1.0);
    CHECK_THROWS_AS(l1_loss(p, Tensor({1, 1, 2, 1})), ShapeError);
}

TEST_CASE("zero parameters give a zero residual")
{
    const UNetConfig cfg;
    Rng rng(8);
    const Tensor x = random_tensor(rng, {1, 1, 64, 64}, 0.0, 1.0);
    const Tensor r = unet_forward(zero_params(cfg), cfg, x);
    CHECK(r.shape() == x.shape());
    for (double v : r.data()) CHECK(v == 0.0);
}

TEST_CASE("unet output matches input shape and enforces divisibility")
{
    const UNetConfig cfg;
    const UNetParams p = init_params(cfg, 3);
    Rng rng(9);
    CHECK(unet_forward(p, cfg, random_tensor(rng, {2, 1, 32, 48}, 0.0, 1.0)).shape() == Shape{2, 1, 32, 48});
    CHECK_THROWS_AS(unet_forward(p, cfg, Tensor({1, 1, 30, 32})), ShapeError);
    CHECK(full_scale_config().widths == std::vector<int>{16, 32, 64, 128, 256});
}

TEST_CASE("parameter blocks follow the documented order")
{
    const UNetParams p = zero_params(UNetConfig{});
    std::vector<std::string> names;
    for (const auto& b : p.blocks) names.push_back(b.name);
    CHECK(names == std::vector<std::string>{"enc0.w", "enc0.b", "enc1.w", "enc1.b", "enc2.w", "enc2.b", "up1.w",
                                            "up1.b", "dec1.w", "dec1.b", "up0.w", "up0.b", "dec0.w", "dec0.b",
                                            "out.w", "out.b"});
    CHECK(init_params(UNetConfig{}, 5) == init_params(UNetConfig{}, 5));
    CHECK_FALSE(init_params(UNetConfig{}, 5) == init_params(UNetConfig{}, 6));
}

TEST_CASE("full network gradients match central differences")
{
    const UNetConfig cfg = micro_config();
    Rng rng(10);
    const Tensor x = random_tensor(rng, {1, 1, 8, 8}, 0.0, 1.0);
    const Tensor target = random_tensor(rng, {1, 1, 8, 8}, 0.0, 1.0);
    const UNetParams p = init_params(cfg, 11);
    CHECK(grad_check(p, cfg, x, target, 1e-6) <= 1e-4);
    CHECK(grad_check(zero_params(cfg), cfg, x, target, 1e-6) <= 1e-4);

    const double e4 = grad_check(p, cfg, x, target, 1e-4);
    const double e5 = grad_check(p, cfg, x, target, 1e-5);
    CHECK(e4 <= 1e-4);
    CHECK(e5 <= 1e-4);
}

TEST_CASE("grad_check catches a corrupted backward pass")
{
    const UNetConfig cfg = micro_config();
    Rng rng(12);
    const Tensor x = random_tensor(rng, {1, 1, 8, 8}, 0.0, 1.0);
    const Tensor target = random_tensor(rng, {1, 1, 8, 8}, 0.0, 1.0);
    const UNetParams p = init_params(cfg, 13);
    auto broken = [](const UNetParams& q, const UNetConfig& c, const Tensor& xx, const Tensor& tt) {
        ParamGrads g = enhancement_gradients(q, c, xx, tt);
        for (double& v : g[0].data()) v *= 1.5;
        return g;
    };
    CHECK(grad_check(p, cfg, x, target, 1e-6, broken) > 1e-2);
}

TEST_CASE("adam takes a bias-corrected first step")
{
    UNetParams p;
    p.blocks.push_back({"w", Tensor({1, 1, 1, 1}, 0.5)});
    OptimState st = OptimState::for_params(p);
    ParamGrads g{Tensor({1, 1, 1, 1}, 0.3)};
    adam_step(p, g, st, 1e-3);
    CHECK(st.step == 1);
    CHECK(p.blocks[0].value.data()[0] == doctest::Approx(0.5 - 1e-3).epsilon(1e-9));

    UNetParams q = p;
    OptimState sq = OptimState::for_params(q);
    adam_step(q, ParamGrads{Tensor({1, 1, 1, 1}, 0.0)}, sq, 1e-3);
    CHECK(q == p);
    CHECK(sq.step == 1);
}

TEST_CASE("adam rejects non-finite gradients without touching parameters")
{
    UNetParams p = init_params(micro_config(), 1);
    const UNetParams before = p;
    OptimState st = OptimState::for_params(p);
    ParamGrads g = zero_grads(p);
    g[3].data()[0] = std::nan("");
    try {
        adam_step(p, g, st, 1e-3);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(std::string(e.what()).find(p.blocks[3].name) != std::string::npos);
    }
    CHECK(p == before);
    CHECK(st.step == 0);
}

TEST_CASE("adam is deterministic")
{
    const UNetConfig cfg = micro_config();
    Rng rng(14);
    const Tensor x = random_tensor(rng, {1, 1, 8, 8}, 0.0, 1.0);
    const Tensor t = random_tensor(rng, {1, 1, 8, 8}, 0.0, 1.0);
    auto run = [&] {
        UNetParams p = init_params(cfg, 15);
        OptimState st = OptimState::for_params(p);
        for (int i = 0; i < 5; ++i) adam_step(p, enhancement_gradients(p, cfg, x, t), st, 1e-3);
        return p;
    };
    CHECK(run() == run());
}
