#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "inkwell/image.hpp"

namespace inkwell {

/// Intensities of the synthetic renderer.
inline constexpr double kInkLevel = 0.15;
inline constexpr double kPaperLevel = 0.85;

/// An image with its per-pixel text mask (1 = text, 0 = background).
struct LabeledPatch {
    GrayImage image;
    std::vector<std::uint8_t> labels;

    void validate() const;
    std::size_t text_pixels() const;
};

struct DegradationSpec {
    double noise_sigma = 0.0;
    double bleed_strength = 0.0;      // [0,1]
    double gradient_amplitude = 0.0;  // [0,0.5]
    int stain_count = 0;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const DegradationSpec&) const = default;
};

/// Degradation used for the default training corpus and evaluation pages.
DegradationSpec default_degradation();

GrayImage make_uniform_gt(const LabeledPatch& patch);

/// Random pen strokes on paper, deterministic in `rng_seed`. size >= 16.
LabeledPatch render_text_patch(std::uint64_t rng_seed, int size);
LabeledPatch render_text_page(std::uint64_t rng_seed, int width, int height);

GrayImage synth_degrade(const LabeledPatch& clean, const DegradationSpec& spec);

/// Scale factors used for augmentation and multiscale inference.
inline constexpr double kAugmentScales[] = {0.75, 1.25, 1.5};
inline constexpr int kAugmentVariants = 5;

/// Variant k of augment_pair: 0 original, 1..3 rescaled, 4 rotated 270 degrees.
std::pair<GrayImage, GrayImage> augment_variant(const GrayImage& degraded, const GrayImage& gt, int k);
std::vector<std::pair<GrayImage, GrayImage>> augment_pair(const GrayImage& degraded, const GrayImage& gt);

// Corpus on disk -------------------------------------------------------------

struct CorpusOptions {
    int count = 2000;
    int patch_size = 64;
    std::uint64_t seed = 1;
    DegradationSpec spec = default_degradation();
    // scale each magnitude of item i by an independent factor in [0,1]
    bool vary_strength = true;
};

struct CorpusItem {
    GrayImage degraded;
    GrayImage gt;
    LabeledPatch clean;
};

CorpusItem make_corpus_item(const CorpusOptions& opt, int index);

/// Writes NNNN.x.pgm, NNNN.gt.pgm, NNNN.mask.pgm and corpus.meta.
void write_corpus(const std::filesystem::path& dir, const CorpusOptions& opt);

std::string format_corpus_meta(const CorpusOptions& opt);
CorpusOptions parse_corpus_meta(const std::string& text);

/// Text = 0 (black), background = 255, as in DIBCO ground truth.
GrayImage labels_to_image(const std::vector<std::uint8_t>& labels, int width, int height);
std::vector<std::uint8_t> image_to_labels(const GrayImage& img);

/// Degraded inputs paired with uniform ground-truth targets.
struct TrainingSet {
    std::vector<GrayImage> inputs;
    std::vector<GrayImage> targets;
    std::size_t size() const { return inputs.size(); }
};

/// Reads a synthetic corpus (directory with corpus.meta), or a directory of
/// `<name>.pgm` images with `<name>.mask.pgm` binary ground truth, which are
/// cut into patch_size windows at half-patch stride.
TrainingSet load_training_set(const std::filesystem::path& dir, int patch_size);

}  // namespace inkwell
