#include "inkwell/layers.hpp"

#include <algorithm>
#include <cmath>

#include "inkwell/error.hpp"

namespace inkwell {

namespace {

struct ConvGeometry {
    int k = 0;
    int pad = 0;
    int h = 0, w = 0;        // input
    int ho = 0, wo = 0;      // output

    // output rows/cols for which input row oy+ky-pad lies inside the image
    int row_begin(int ky) const { return std::max(0, pad - ky); }
    int row_end(int ky) const { return std::min(ho, h + pad - ky); }
    int col_begin(int kx) const { return std::max(0, pad - kx); }
    int col_end(int kx) const { return std::min(wo, w + pad - kx); }
};

ConvGeometry conv_geometry(const Tensor& x, const Tensor& kernel, int pad)
{
    if (kernel.c() != x.c()) {
        throw ShapeError("conv2d: kernel expects " + std::to_string(kernel.c()) + " input channels, input has " +
                         std::to_string(x.c()));
    }
    if (kernel.h() != kernel.w()) throw ShapeError("conv2d: kernel must be square");
    if (pad < 0) throw ShapeError("conv2d: negative padding");
    ConvGeometry g;
    g.k = kernel.h();
    g.pad = pad;
    g.h = x.h();
    g.w = x.w();
    g.ho = x.h() + 2 * pad - g.k + 1;
    g.wo = x.w() + 2 * pad - g.k + 1;
    if (g.ho < 1 || g.wo < 1) throw ShapeError("conv2d: kernel larger than padded input " + x.shape().str());
    return g;
}

void check_bias(std::span<const double> bias, int channels, const char* op)
{
    if (static_cast<int>(bias.size()) != channels) {
        throw ShapeError(std::string(op) + ": bias has " + std::to_string(bias.size()) + " entries, expected " +
                         std::to_string(channels));
    }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& kernel, std::span<const double> bias, int pad)
{
    const ConvGeometry g = conv_geometry(x, kernel, pad);
    const int cout = kernel.n();
    const int cin = x.c();
    check_bias(bias, cout, "conv2d");

    Tensor y({x.n(), cout, g.ho, g.wo});
    const double* kd = kernel.data().data();
    for (int n = 0; n < x.n(); ++n) {
        for (int co = 0; co < cout; ++co) {
            auto yp = y.plane(n, co);
            std::fill(yp.begin(), yp.end(), bias[static_cast<std::size_t>(co)]);
            double* yd = yp.data();
            for (int ci = 0; ci < cin; ++ci) {
                const double* xd = x.plane(n, ci).data();
                const double* kw = kd + (static_cast<std::size_t>(co) * cin + ci) * g.k * g.k;
                for (int ky = 0; ky < g.k; ++ky) {
                    for (int kx = 0; kx < g.k; ++kx) {
                        const double wv = kw[ky * g.k + kx];
                        const int c0 = g.col_begin(kx);
                        const int c1 = g.col_end(kx);
                        const int len = c1 - c0;
                        for (int oy = g.row_begin(ky); oy < g.row_end(ky); ++oy) {
                            double* yr = yd + static_cast<std::ptrdiff_t>(oy) * g.wo + c0;
                            const double* xr =
                                xd + static_cast<std::ptrdiff_t>(oy + ky - g.pad) * g.w + (c0 + kx - g.pad);
                            for (int i = 0; i < len; ++i) yr[i] += wv * xr[i];
                        }
                    }
                }
            }
        }
    }
    return y;
}

void conv2d_backward_accumulate(const Tensor& x, const Tensor& kernel, const Tensor& dy, int pad, Tensor* dx,
                                std::span<double> dkernel, std::span<double> dbias)
{
    const ConvGeometry g = conv_geometry(x, kernel, pad);
    const int cout = kernel.n();
    const int cin = x.c();
    if (!(dy.shape() == Shape{x.n(), cout, g.ho, g.wo})) throw ShapeError("conv2d_backward: bad upstream gradient");
    if (dkernel.size() != kernel.size()) throw ShapeError("conv2d_backward: kernel gradient buffer size");
    check_bias(dbias, cout, "conv2d_backward");
    if (dx && !(dx->shape() == x.shape())) throw ShapeError("conv2d_backward: dx buffer shape");

    const double* kd = kernel.data().data();
    for (int n = 0; n < x.n(); ++n) {
        for (int co = 0; co < cout; ++co) {
            const double* dyd = dy.plane(n, co).data();
            double bsum = 0.0;
            for (std::size_t i = 0; i < dy.shape().plane(); ++i) bsum += dyd[i];
            dbias[static_cast<std::size_t>(co)] += bsum;

            for (int ci = 0; ci < cin; ++ci) {
                const double* xd = x.plane(n, ci).data();
                double* dxd = dx ? dx->plane(n, ci).data() : nullptr;
                const std::size_t kbase = (static_cast<std::size_t>(co) * cin + ci) * g.k * g.k;
                for (int ky = 0; ky < g.k; ++ky) {
                    for (int kx = 0; kx < g.k; ++kx) {
                        const double wv = kd[kbase + ky * g.k + kx];
                        const int c0 = g.col_begin(kx);
                        const int c1 = g.col_end(kx);
                        const int len = c1 - c0;
                        double wsum = 0.0;
                        for (int oy = g.row_begin(ky); oy < g.row_end(ky); ++oy) {
                            const double* dyr = dyd + static_cast<std::ptrdiff_t>(oy) * g.wo + c0;
                            const std::ptrdiff_t xoff =
                                static_cast<std::ptrdiff_t>(oy + ky - g.pad) * g.w + (c0 + kx - g.pad);
                            const double* xr = xd + xoff;
                            double rsum = 0.0;
                            for (int i = 0; i < len; ++i) rsum += dyr[i] * xr[i];
                            wsum += rsum;
                            if (dxd) {
                                double* dxr = dxd + xoff;
                                for (int i = 0; i < len; ++i) dxr[i] += wv * dyr[i];
                            }
                        }
                        dkernel[kbase + ky * g.k + kx] += wsum;
                    }
                }
            }
        }
    }
}

ConvGrads conv2d_backward(const Tensor& x, const Tensor& kernel, const Tensor& dy, int pad)
{
    ConvGrads g{Tensor(x.shape()), Tensor(kernel.shape()), std::vector<double>(static_cast<std::size_t>(kernel.n()), 0.0)};
    conv2d_backward_accumulate(x, kernel, dy, pad, &g.dx, g.dkernel.data(), g.dbias);
    return g;
}

Tensor leaky_relu(const Tensor& x, double slope)
{
    Tensor y(x.shape());
    const auto src = x.data();
    auto dst = y.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : slope * src[i];
    return y;
}

Tensor leaky_relu_backward(const Tensor& x, const Tensor& dy, double slope)
{
    if (!(x.shape() == dy.shape())) throw ShapeError("leaky_relu_backward: shape mismatch");
    Tensor dx(x.shape());
    const auto xs = x.data();
    const auto g = dy.data();
    auto d = dx.data();
    for (std::size_t i = 0; i < xs.size(); ++i) d[i] = xs[i] > 0.0 ? g[i] : slope * g[i];
    return dx;
}

PoolResult maxpool2(const Tensor& x)
{
    if (x.h() % 2 != 0 || x.w() % 2 != 0) throw ShapeError("maxpool2: spatial dims must be even, got " + x.shape().str());
    const int ho = x.h() / 2;
    const int wo = x.w() / 2;
    PoolResult r{Tensor({x.n(), x.c(), ho, wo}), {}};
    r.argmax.resize(r.y.size());
    const auto src = x.data();
    std::size_t out = 0;
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            const std::size_t base = (static_cast<std::size_t>(n) * x.c() + c) * x.shape().plane();
            for (int oy = 0; oy < ho; ++oy) {
                for (int ox = 0; ox < wo; ++ox, ++out) {
                    const std::size_t i00 = base + static_cast<std::size_t>(2 * oy) * x.w() + 2 * ox;
                    const std::size_t cand[4] = {i00, i00 + 1, i00 + x.w(), i00 + x.w() + 1};
                    std::size_t best = cand[0];
                    for (int k = 1; k < 4; ++k) {
                        if (src[cand[k]] > src[best]) best = cand[k];
                    }
                    r.y.data()[out] = src[best];
                    r.argmax[out] = static_cast<std::uint32_t>(best);
                }
            }
        }
    }
    return r;
}

Tensor maxpool2_backward(const Shape& input_shape, const std::vector<std::uint32_t>& argmax, const Tensor& dy)
{
    if (argmax.size() != dy.size()) throw ShapeError("maxpool2_backward: argmax/gradient size mismatch");
    Tensor dx(input_shape);
    auto d = dx.data();
    const auto g = dy.data();
    for (std::size_t i = 0; i < g.size(); ++i) d[argmax[i]] += g[i];
    return dx;
}

Tensor transpose_conv2(const Tensor& x, const Tensor& kernel, std::span<const double> bias)
{
    if (kernel.n() != x.c() || kernel.h() != 2 || kernel.w() != 2) {
        throw ShapeError("transpose_conv2: kernel " + kernel.shape().str() + " incompatible with input " +
                         x.shape().str());
    }
    const int cout = kernel.c();
    check_bias(bias, cout, "transpose_conv2");
    const int h = x.h();
    const int w = x.w();
    const int wo = 2 * w;
    Tensor y({x.n(), cout, 2 * h, wo});
    const double* kd = kernel.data().data();
    for (int n = 0; n < x.n(); ++n) {
        for (int co = 0; co < cout; ++co) {
            auto yp = y.plane(n, co);
            std::fill(yp.begin(), yp.end(), bias[static_cast<std::size_t>(co)]);
            double* yd = yp.data();
            for (int ci = 0; ci < x.c(); ++ci) {
                const double* xd = x.plane(n, ci).data();
                const double* kw = kd + (static_cast<std::size_t>(ci) * cout + co) * 4;
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b) {
                        const double wv = kw[a * 2 + b];
                        for (int i = 0; i < h; ++i) {
                            double* yr = yd + static_cast<std::ptrdiff_t>(2 * i + a) * wo + b;
                            const double* xr = xd + static_cast<std::ptrdiff_t>(i) * w;
                            for (int j = 0; j < w; ++j) yr[2 * j] += wv * xr[j];
                        }
                    }
                }
            }
        }
    }
    return y;
}

void transpose_conv2_backward_accumulate(const Tensor& x, const Tensor& kernel, const Tensor& dy, Tensor* dx,
                                         std::span<double> dkernel, std::span<double> dbias)
{
    const int cout = kernel.c();
    if (kernel.n() != x.c() || kernel.h() != 2 || kernel.w() != 2 ||
        !(dy.shape() == Shape{x.n(), cout, 2 * x.h(), 2 * x.w()})) {
        throw ShapeError("transpose_conv2_backward: incompatible shapes");
    }
    if (dkernel.size() != kernel.size()) throw ShapeError("transpose_conv2_backward: kernel gradient buffer size");
    check_bias(dbias, cout, "transpose_conv2_backward");
    if (dx && !(dx->shape() == x.shape())) throw ShapeError("transpose_conv2_backward: dx buffer shape");

    const int h = x.h();
    const int w = x.w();
    const int wo = 2 * w;
    const double* kd = kernel.data().data();
    for (int n = 0; n < x.n(); ++n) {
        for (int co = 0; co < cout; ++co) {
            const double* dyd = dy.plane(n, co).data();
            double bsum = 0.0;
            for (std::size_t i = 0; i < dy.shape().plane(); ++i) bsum += dyd[i];
            dbias[static_cast<std::size_t>(co)] += bsum;
            for (int ci = 0; ci < x.c(); ++ci) {
                const double* xd = x.plane(n, ci).data();
                double* dxd = dx ? dx->plane(n, ci).data() : nullptr;
                const std::size_t kbase = (static_cast<std::size_t>(ci) * cout + co) * 4;
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b) {
                        const double wv = kd[kbase + a * 2 + b];
                        double wsum = 0.0;
                        for (int i = 0; i < h; ++i) {
                            const double* dyr = dyd + static_cast<std::ptrdiff_t>(2 * i + a) * wo + b;
                            const double* xr = xd + static_cast<std::ptrdiff_t>(i) * w;
                            double rsum = 0.0;
                            for (int j = 0; j < w; ++j) rsum += xr[j] * dyr[2 * j];
                            wsum += rsum;
                            if (dxd) {
                                double* dxr = dxd + static_cast<std::ptrdiff_t>(i) * w;
                                for (int j = 0; j < w; ++j) dxr[j] += wv * dyr[2 * j];
                            }
                        }
                        dkernel[kbase + a * 2 + b] += wsum;
                    }
                }
            }
        }
    }
}

ConvGrads transpose_conv2_backward(const Tensor& x, const Tensor& kernel, const Tensor& dy)
{
    ConvGrads g{Tensor(x.shape()), Tensor(kernel.shape()), std::vector<double>(static_cast<std::size_t>(kernel.c()), 0.0)};
    transpose_conv2_backward_accumulate(x, kernel, dy, &g.dx, g.dkernel.data(), g.dbias);
    return g;
}

Tensor concat_channels(const Tensor& a, const Tensor& b)
{
    if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
        throw ShapeError("concat_channels: " + a.shape().str() + " vs " + b.shape().str());
    }
    Tensor out({a.n(), a.c() + b.c(), a.h(), a.w()});
    for (int n = 0; n < a.n(); ++n) {
        for (int c = 0; c < a.c(); ++c) std::ranges::copy(a.plane(n, c), out.plane(n, c).begin());
        for (int c = 0; c < b.c(); ++c) std::ranges::copy(b.plane(n, c), out.plane(n, a.c() + c).begin());
    }
    return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& d, int channels_a)
{
    if (channels_a < 1 || channels_a >= d.c()) throw ShapeError("split_channels: bad split point");
    Tensor a({d.n(), channels_a, d.h(), d.w()});
    Tensor b({d.n(), d.c() - channels_a, d.h(), d.w()});
    for (int n = 0; n < d.n(); ++n) {
        for (int c = 0; c < a.c(); ++c) std::ranges::copy(d.plane(n, c), a.plane(n, c).begin());
        for (int c = 0; c < b.c(); ++c) std::ranges::copy(d.plane(n, channels_a + c), b.plane(n, c).begin());
    }
    return {std::move(a), std::move(b)};
}

LossResult l1_loss(const Tensor& pred, const Tensor& target)
{
    if (!(pred.shape() == target.shape())) {
        throw ShapeError("l1_loss: " + pred.shape().str() + " vs " + target.shape().str());
    }
    LossResult r{0.0, Tensor(pred.shape())};
    const auto p = pred.data();
    const auto t = target.data();
    auto g = r.grad.data();
    const double inv_n = 1.0 / static_cast<double>(p.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - t[i];
        sum += std::abs(d);
        g[i] = d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0);
    }
    r.loss = sum * inv_n;
    return r;
}

}  // namespace inkwell
