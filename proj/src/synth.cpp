#include "inkwell/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "inkwell/error.hpp"
#include "inkwell/rng.hpp"

namespace inkwell {

namespace {

void stamp_disc(GrayImage& img, std::vector<std::uint8_t>& mask, double cx, double cy, double radius)
{
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
    const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(cx + radius)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
    const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(cy + radius)));
    const double r2 = radius * radius;
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            if (dx * dx + dy * dy <= r2) {
                img.at(x, y) = kInkLevel;
                mask[static_cast<std::size_t>(y) * img.width() + x] = 1;
            }
        }
    }
}

// A pen stroke: a random walk with slowly turning heading, stamped as discs.
void draw_stroke(Rng& rng, GrayImage& img, std::vector<std::uint8_t>& mask)
{
    const int pen = rng.range(1, 3);
    const double radius = std::max(0.5, pen / 2.0);
    double x = rng.uniform(0.0, img.width() - 1.0);
    double y = rng.uniform(0.0, img.height() - 1.0);
    double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const int segments = rng.range(3, 7);
    for (int s = 0; s < segments; ++s) {
        heading += 0.7 * rng.normal();
        const double len = rng.uniform(3.0, 9.0);
        const double nx = x + len * std::cos(heading);
        const double ny = y + len * std::sin(heading);
        const int steps = static_cast<int>(std::ceil(len * 2.0));
        for (int k = 0; k <= steps; ++k) {
            const double t = static_cast<double>(k) / steps;
            stamp_disc(img, mask, x + t * (nx - x), y + t * (ny - y), radius);
        }
        x = nx;
        y = ny;
    }
}

LabeledPatch render_strokes(Rng& rng, int width, int height)
{
    LabeledPatch out{GrayImage(width, height, kPaperLevel),
                     std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 0)};
    const double target = rng.uniform(0.05, 0.18);
    const auto pixels = static_cast<double>(out.labels.size());
    const int max_strokes = 4 + static_cast<int>(pixels / 16.0);
    for (int s = 0; s < max_strokes; ++s) {
        draw_stroke(rng, out.image, out.labels);
        if (static_cast<double>(out.text_pixels()) / pixels >= target) break;
    }
    return out;
}

}  // namespace

void LabeledPatch::validate() const
{
    if (labels.size() != image.size()) throw ArgumentError("label mask size does not match image");
    for (auto v : labels) {
        if (v > 1) throw ArgumentError("label values must be 0 or 1");
    }
}

std::size_t LabeledPatch::text_pixels() const
{
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

void DegradationSpec::validate() const
{
    if (!(noise_sigma >= 0.0)) throw ArgumentError("noise_sigma must be >= 0");
    if (!(bleed_strength >= 0.0 && bleed_strength <= 1.0)) throw ArgumentError("bleed_strength must be in [0,1]");
    if (!(gradient_amplitude >= 0.0 && gradient_amplitude <= 0.5))
        throw ArgumentError("gradient_amplitude must be in [0,0.5]");
    if (stain_count < 0) throw ArgumentError("stain_count must be >= 0");
}

DegradationSpec default_degradation()
{
    DegradationSpec s;
    s.noise_sigma = 0.08;
    s.bleed_strength = 0.45;
    s.gradient_amplitude = 0.4;
    s.stain_count = 3;
    return s;
}

GrayImage make_uniform_gt(const LabeledPatch& patch)
{
    patch.validate();
    double sum[2] = {0.0, 0.0};
    std::size_t count[2] = {0, 0};
    const auto px = patch.image.data();
    for (std::size_t i = 0; i < px.size(); ++i) {
        sum[patch.labels[i]] += px[i];
        ++count[patch.labels[i]];
    }
    GrayImage out(patch.image.width(), patch.image.height());
    if (count[1] == 0) {
        const double m = sum[0] / static_cast<double>(count[0]);
        std::fill(out.data().begin(), out.data().end(), m);
        return out;
    }
    const double mean[2] = {count[0] ? sum[0] / static_cast<double>(count[0]) : 0.0,
                            sum[1] / static_cast<double>(count[1])};
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = mean[patch.labels[i]];
    return out;
}

LabeledPatch render_text_patch(std::uint64_t rng_seed, int size)
{
    if (size < 16) throw ArgumentError("render_text_patch: size must be >= 16");
    return render_text_page(rng_seed, size, size);
}

LabeledPatch render_text_page(std::uint64_t rng_seed, int width, int height)
{
    if (width < 16 || height < 16) throw ArgumentError("render_text_page: dimensions must be >= 16");
    Rng rng(rng_seed);
    return render_strokes(rng, width, height);
}

GrayImage synth_degrade(const LabeledPatch& clean, const DegradationSpec& spec)
{
    clean.validate();
    spec.validate();
    const int w = clean.image.width();
    const int h = clean.image.height();
    Rng rng(spec.seed);

    // Every draw happens regardless of magnitude.
    std::vector<double> add(static_cast<std::size_t>(w) * h, 0.0);

    // background gradient: darkening ramp from 0 to -amplitude along a random direction
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    double pmin = 0.0;
    double pmax = 0.0;
    for (int cy : {0, h - 1}) {
        for (int cx : {0, w - 1}) {
            const double p = cx * c + cy * s;
            pmin = std::min(pmin, p);
            pmax = std::max(pmax, p);
        }
    }
    const double prange = pmax - pmin;
    if (spec.gradient_amplitude > 0.0 && prange > 0.0) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double t = (x * c + y * s - pmin) / prange;
                add[static_cast<std::size_t>(y) * w + x] -= spec.gradient_amplitude * t;
            }
        }
    }

    // bleed-through: a second page rendered and mirrored left-right
    const std::uint64_t verso_seed = rng.next();
    if (spec.bleed_strength > 0.0) {
        Rng verso_rng(verso_seed);
        const LabeledPatch verso = render_strokes(verso_rng, w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double v = verso.image.at(w - 1 - x, y);
                add[static_cast<std::size_t>(y) * w + x] += spec.bleed_strength * (v - kPaperLevel);
            }
        }
    }

    // stains: soft elliptical dark blobs
    for (int k = 0; k < spec.stain_count; ++k) {
        const double cx = rng.uniform(0.0, w);
        const double cy = rng.uniform(0.0, h);
        const double rx = rng.uniform(w / 10.0, w / 4.0) + 1.0;
        const double ry = rng.uniform(h / 10.0, h / 4.0) + 1.0;
        const double depth = rng.uniform(0.15, 0.35);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double dx = (x - cx) / rx;
                const double dy = (y - cy) / ry;
                add[static_cast<std::size_t>(y) * w + x] -= depth * std::exp(-(dx * dx + dy * dy));
            }
        }
    }

    GrayImage out = clean.image;
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const double noise = rng.normal();
        double v = dst[i] + add[i];
        if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise;
        dst[i] = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

std::pair<GrayImage, GrayImage> augment_variant(const GrayImage& degraded, const GrayImage& gt, int k)
{
    if (degraded.width() != gt.width() || degraded.height() != gt.height())
        throw ArgumentError("augment_pair: degraded and ground truth differ in size");
    if (degraded.width() != degraded.height()) throw ArgumentError("augment_pair: patches must be square");
    if (k < 0 || k >= kAugmentVariants) throw ArgumentError("augment variant out of range");

    const int size = degraded.width();
    if (k == 0) return {degraded, gt};
    if (k == 4) return {rotate90(degraded, 3), rotate90(gt, 3)};
    const int region = static_cast<int>(std::lround(kAugmentScales[k - 1] * size));
    auto scaled = [&](const GrayImage& img) { return resize_bilinear(center_region(img, region), size, size); };
    return {scaled(degraded), scaled(gt)};
}

std::vector<std::pair<GrayImage, GrayImage>> augment_pair(const GrayImage& degraded, const GrayImage& gt)
{
    std::vector<std::pair<GrayImage, GrayImage>> out;
    out.reserve(kAugmentVariants);
    for (int k = 0; k < kAugmentVariants; ++k) out.push_back(augment_variant(degraded, gt, k));
    return out;
}

}  // namespace inkwell
