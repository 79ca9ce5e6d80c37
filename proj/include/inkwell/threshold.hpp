#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "inkwell/image.hpp"

namespace inkwell {

/// Per-pixel labels, 1 = text (dark), 0 = background.
struct BinaryMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> labels;

    BinaryMap() = default;
    BinaryMap(int width, int height, std::uint8_t fill = 0);
    BinaryMap(int width, int height, std::vector<std::uint8_t> labels);

    std::uint8_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return labels.size(); }
    std::size_t text_count() const;
    bool same_size(const BinaryMap& o) const { return width == o.width && height == o.height; }

    friend bool operator==(const BinaryMap&, const BinaryMap&) = default;
};

/// Text = 0 (black), background = 255 (white).
GrayImage binary_to_image(const BinaryMap& map);
/// Pixels darker than mid-grey become text.
BinaryMap image_to_binary(const GrayImage& img);

using Histogram256 = std::array<std::uint64_t, 256>;

/// bin = floor(v * 255 + 0.5), clamped to [0,255].
int intensity_bin(double v);
Histogram256 histogram256(const GrayImage& img);

/// Between-class variance w0*w1*(mu0-mu1)^2 of the split {bin <= t} / {bin > t}.
double between_class_variance(const Histogram256& h, int t);

/// Threshold bin maximizing between-class variance; smallest t wins ties.
/// Pixels with bin <= t are text. Throws ArgumentError on an empty histogram.
int otsu_threshold(const Histogram256& h);

BinaryMap binarize_global(const GrayImage& img, int t);
/// A single-valued image has no second class and comes out all background.
BinaryMap otsu_binarize(const GrayImage& img);

struct SauvolaParams {
    int window = 31;
    double k = 0.5;
    double r = 128.0;
};

/// Windowed mean and standard deviation on the 0-255 scale. The window is
/// centred on each pixel and clipped to the image.
struct LocalStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

LocalStats local_stats_integral(const GrayImage& img, int window);
LocalStats local_stats_naive(const GrayImage& img, int window);

/// T = m * (1 + k * (s/R - 1)); text iff 255*pixel < T.
BinaryMap sauvola_binarize(const GrayImage& img, const SauvolaParams& params = {});

}  // namespace inkwell
