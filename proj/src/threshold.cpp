#include "inkwell/threshold.hpp"

#include <algorithm>
#include <cmath>

#include "inkwell/error.hpp"

namespace inkwell {

BinaryMap::BinaryMap(int w, int h, std::uint8_t fill) : width(w), height(h)
{
    if (w < 1 || h < 1) throw ArgumentError("binary map dimensions must be positive");
    labels.assign(static_cast<std::size_t>(w) * h, fill);
}

BinaryMap::BinaryMap(int w, int h, std::vector<std::uint8_t> l) : width(w), height(h), labels(std::move(l))
{
    if (w < 1 || h < 1) throw ArgumentError("binary map dimensions must be positive");
    if (labels.size() != static_cast<std::size_t>(w) * h) throw ArgumentError("label count does not match dimensions");
}

std::size_t BinaryMap::text_count() const
{
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

GrayImage binary_to_image(const BinaryMap& map)
{
    GrayImage out(map.width, map.height);
    auto d = out.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = map.labels[i] ? 0.0 : 1.0;
    return out;
}

BinaryMap image_to_binary(const GrayImage& img)
{
    BinaryMap out(img.width(), img.height());
    for (std::size_t i = 0; i < out.size(); ++i) out.labels[i] = img.data()[i] < 0.5 ? 1 : 0;
    return out;
}

int intensity_bin(double v) { return std::clamp(static_cast<int>(std::floor(v * 255.0 + 0.5)), 0, 255); }

Histogram256 histogram256(const GrayImage& img)
{
    Histogram256 h{};
    for (double v : img.data()) ++h[static_cast<std::size_t>(intensity_bin(v))];
    return h;
}

double between_class_variance(const Histogram256& h, int t)
{
    long double total = 0.0L;
    long double total_sum = 0.0L;
    long double w0 = 0.0L;
    long double sum0 = 0.0L;
    for (int i = 0; i < 256; ++i) {
        const auto c = static_cast<long double>(h[static_cast<std::size_t>(i)]);
        total += c;
        total_sum += c * i;
        if (i <= t) {
            w0 += c;
            sum0 += c * i;
        }
    }
    const long double w1 = total - w0;
    if (total == 0.0L || w0 == 0.0L || w1 == 0.0L) return 0.0;
    const long double mu0 = sum0 / w0;
    const long double mu1 = (total_sum - sum0) / w1;
    const long double d = mu0 - mu1;
    return static_cast<double>((w0 / total) * (w1 / total) * d * d);
}

int otsu_threshold(const Histogram256& h)
{
    // Single pass with running class sums. Class weights, means and the
    // variance are formed exactly as in between_class_variance so the argmax
    // cannot drift from the exhaustive definition through rounding.
    long double total = 0.0L;
    long double total_sum = 0.0L;
    for (int i = 0; i < 256; ++i) {
        const auto c = static_cast<long double>(h[static_cast<std::size_t>(i)]);
        total += c;
        total_sum += c * i;
    }
    if (total == 0.0L) throw ArgumentError("otsu_threshold: empty histogram");

    int best_t = 0;
    double best = -1.0;
    long double w0 = 0.0L;
    long double sum0 = 0.0L;
    for (int t = 0; t < 256; ++t) {
        const auto c = static_cast<long double>(h[static_cast<std::size_t>(t)]);
        w0 += c;
        sum0 += c * t;
        const long double w1 = total - w0;
        double var = 0.0;
        if (w0 != 0.0L && w1 != 0.0L) {
            const long double d = sum0 / w0 - (total_sum - sum0) / w1;
            var = static_cast<double>((w0 / total) * (w1 / total) * d * d);
        }
        if (var > best) {
            best = var;
            best_t = t;
        }
    }
    return best_t;
}

BinaryMap binarize_global(const GrayImage& img, int t)
{
    if (t < 0 || t > 255) throw ArgumentError("threshold must be in [0,255]");
    BinaryMap out(img.width(), img.height());
    for (std::size_t i = 0; i < out.size(); ++i) out.labels[i] = intensity_bin(img.data()[i]) <= t ? 1 : 0;
    return out;
}

BinaryMap otsu_binarize(const GrayImage& img)
{
    const Histogram256 h = histogram256(img);
    if (std::count_if(h.begin(), h.end(), [](std::uint64_t c) { return c != 0; }) < 2) {
        return BinaryMap(img.width(), img.height());
    }
    return binarize_global(img, otsu_threshold(h));
}

namespace {

void check_window(const GrayImage& img, int window)
{
    if (window < 3 || window % 2 == 0) throw ArgumentError("Sauvola window must be odd and >= 3");
    if (window > 2 * std::min(img.width(), img.height())) {
        throw ArgumentError("Sauvola window " + std::to_string(window) + " too large for " +
                            std::to_string(img.width()) + "x" + std::to_string(img.height()) + " image");
    }
}

}  // namespace

LocalStats local_stats_integral(const GrayImage& img, int window)
{
    check_window(img, window);
    const int w = img.width();
    const int h = img.height();
    const int r = window / 2;
    const auto stride = static_cast<std::size_t>(w) + 1;
    // Integral images of x and x^2 on the 0-255 scale, in extended precision
    // so E[x^2] - E[x]^2 does not cancel away the variance of flat regions.
    std::vector<long double> s1(stride * (h + 1), 0.0L);
    std::vector<long double> s2(stride * (h + 1), 0.0L);
    for (int y = 0; y < h; ++y) {
        long double row1 = 0.0L;
        long double row2 = 0.0L;
        for (int x = 0; x < w; ++x) {
            const long double v = 255.0L * img.at(x, y);
            row1 += v;
            row2 += v * v;
            const std::size_t i = (y + 1) * stride + x + 1;
            s1[i] = s1[i - stride] + row1;
            s2[i] = s2[i - stride] + row2;
        }
    }

    LocalStats st;
    st.mean.resize(img.size());
    st.stddev.resize(img.size());
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - r);
        const int y1 = std::min(h - 1, y + r);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - r);
            const int x1 = std::min(w - 1, x + r);
            const auto n = static_cast<long double>((y1 - y0 + 1) * (x1 - x0 + 1));
            auto box = [&](const std::vector<long double>& s) {
                return s[(y1 + 1) * stride + x1 + 1] - s[y0 * stride + x1 + 1] - s[(y1 + 1) * stride + x0] +
                       s[y0 * stride + x0];
            };
            const long double mean = box(s1) / n;
            const long double var = std::max(0.0L, box(s2) / n - mean * mean);
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            st.mean[i] = static_cast<double>(mean);
            st.stddev[i] = static_cast<double>(std::sqrt(var));
        }
    }
    return st;
}

LocalStats local_stats_naive(const GrayImage& img, int window)
{
    check_window(img, window);
    const int w = img.width();
    const int h = img.height();
    const int r = window / 2;
    LocalStats st;
    st.mean.resize(img.size());
    st.stddev.resize(img.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            long double sum = 0.0L;
            long double n = 0.0L;
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy) {
                for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
                    sum += 255.0L * img.at(xx, yy);
                    n += 1.0L;
                }
            }
            const long double mean = sum / n;
            long double ss = 0.0L;
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy) {
                for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
                    const long double d = 255.0L * img.at(xx, yy) - mean;
                    ss += d * d;
                }
            }
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            st.mean[i] = static_cast<double>(mean);
            st.stddev[i] = static_cast<double>(std::sqrt(ss / n));
        }
    }
    return st;
}

BinaryMap sauvola_binarize(const GrayImage& img, const SauvolaParams& params)
{
    const LocalStats st = local_stats_integral(img, params.window);
    BinaryMap out(img.width(), img.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double t = st.mean[i] * (1.0 + params.k * (st.stddev[i] / params.r - 1.0));
        out.labels[i] = 255.0 * img.data()[i] < t ? 1 : 0;
    }
    return out;
}

}  // namespace inkwell
