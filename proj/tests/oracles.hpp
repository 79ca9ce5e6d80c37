#pragma once

// Brute-force reference implementations used to check the optimized code.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "inkwell/image.hpp"
#include "inkwell/rng.hpp"
#include "inkwell/threshold.hpp"

namespace oracle {

// Exhaustive Otsu in exact integer arithmetic. For split t the between-class
// variance is proportional to (w1*S0 - w0*S1)^2 / (w0*w1); candidates are
// compared by cross-multiplication so no rounding is involved.
inline int otsu_exhaustive(const inkwell::Histogram256& h)
{
    using i128 = __int128;
    i128 total = 0;
    i128 total_sum = 0;
    for (int i = 0; i < 256; ++i) {
        total += h[i];
        total_sum += static_cast<i128>(h[i]) * i;
    }
    int best_t = 0;
    i128 best_num = 0;
    i128 best_den = 1;
    i128 w0 = 0;
    i128 s0 = 0;
    for (int t = 0; t < 256; ++t) {
        w0 += h[t];
        s0 += static_cast<i128>(h[t]) * t;
        const i128 w1 = total - w0;
        if (w0 == 0 || w1 == 0) continue;
        const i128 d = w1 * s0 - w0 * (total_sum - s0);
        const i128 num = d * d;
        const i128 den = w0 * w1;
        if (num * best_den > best_num * den) {
            best_num = num;
            best_den = den;
            best_t = t;
        }
    }
    return best_t;
}

inline std::array<std::array<double, 5>, 5> drd_weights()
{
    std::array<std::array<double, 5>, 5> w{};
    double sum = 0.0;
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            const double di = i - 2;
            const double dj = j - 2;
            w[i][j] = (i == 2 && j == 2) ? 1.0 : 1.0 / std::sqrt(di * di + dj * dj);
            sum += w[i][j];
        }
    }
    for (auto& row : w) {
        for (auto& v : row) v /= sum;
    }
    return w;
}

inline int nubn(const inkwell::BinaryMap& gt)
{
    int count = 0;
    for (int by = 0; by * 8 < gt.height; ++by) {
        for (int bx = 0; bx * 8 < gt.width; ++bx) {
            int ones = 0;
            int cells = 0;
            for (int y = by * 8; y < std::min(gt.height, by * 8 + 8); ++y) {
                for (int x = bx * 8; x < std::min(gt.width, bx * 8 + 8); ++x) {
                    ones += gt.at(x, y);
                    ++cells;
                }
            }
            if (ones > 0 && ones < cells) ++count;
        }
    }
    return count;
}

// Visits every pixel; sums in the same order as the definition.
inline double drd_naive(const inkwell::BinaryMap& pred, const inkwell::BinaryMap& gt, bool* defined)
{
    const auto w = drd_weights();
    double total = 0.0;
    for (int y = 0; y < gt.height; ++y) {
        for (int x = 0; x < gt.width; ++x) {
            const int p = pred.at(x, y);
            if (p == gt.at(x, y)) continue;
            double dk = 0.0;
            for (int i = 0; i < 5; ++i) {
                for (int j = 0; j < 5; ++j) {
                    const int gx = std::clamp(x + j - 2, 0, gt.width - 1);
                    const int gy = std::clamp(y + i - 2, 0, gt.height - 1);
                    dk += w[i][j] * std::abs(gt.at(gx, gy) - p);
                }
            }
            total += dk;
        }
    }
    const int blocks = oracle::nubn(gt);
    *defined = blocks > 0;
    return blocks > 0 ? total / blocks : 0.0;
}

struct Stats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

// Windowed mean / population std on the 0-255 scale, window clipped to the image.
inline Stats local_stats(const inkwell::GrayImage& img, int window)
{
    const int r = window / 2;
    Stats s;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            std::vector<long double> vals;
            for (int yy = y - r; yy <= y + r; ++yy) {
                for (int xx = x - r; xx <= x + r; ++xx) {
                    if (xx < 0 || yy < 0 || xx >= img.width() || yy >= img.height()) continue;
                    vals.push_back(255.0L * img.at(xx, yy));
                }
            }
            long double m = 0.0L;
            for (auto v : vals) m += v;
            m /= vals.size();
            long double ss = 0.0L;
            for (auto v : vals) ss += (v - m) * (v - m);
            s.mean.push_back(static_cast<double>(m));
            s.stddev.push_back(static_cast<double>(std::sqrt(ss / vals.size())));
        }
    }
    return s;
}

inline inkwell::GrayImage random_image(inkwell::Rng& rng, int w, int h)
{
    inkwell::GrayImage img(w, h);
    for (double& v : img.data()) v = rng.uniform();
    return img;
}

inline inkwell::BinaryMap random_map(inkwell::Rng& rng, int w, int h, double p)
{
    inkwell::BinaryMap m(w, h);
    for (auto& v : m.labels) v = rng.uniform() < p ? 1 : 0;
    return m;
}

}  // namespace oracle
