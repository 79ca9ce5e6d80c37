#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "inkwell/config.hpp"
#include "inkwell/error.hpp"
#include "inkwell/rng.hpp"
#include "inkwell/synth.hpp"

namespace fs = std::filesystem;

namespace inkwell {

namespace {

std::string item_stem(int index)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", index);
    return buf;
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void append_patches(TrainingSet& set, const GrayImage& image, const std::vector<std::uint8_t>& labels, int patch)
{
    const int stride = std::max(1, patch / 2);
    const auto xs = window_offsets(image.width(), patch, stride);
    const auto ys = window_offsets(image.height(), patch, stride);
    for (int y : ys) {
        for (int x : xs) {
            LabeledPatch lp{crop(image, x, y, patch, patch), {}};
            lp.labels.reserve(static_cast<std::size_t>(patch) * patch);
            for (int r = 0; r < patch; ++r) {
                const auto row = static_cast<std::size_t>(y + r) * image.width() + x;
                lp.labels.insert(lp.labels.end(), labels.begin() + static_cast<std::ptrdiff_t>(row),
                                 labels.begin() + static_cast<std::ptrdiff_t>(row + patch));
            }
            set.targets.push_back(make_uniform_gt(lp));
            set.inputs.push_back(std::move(lp.image));
        }
    }
}

}  // namespace

CorpusItem make_corpus_item(const CorpusOptions& opt, int index)
{
    const std::uint64_t item_seed = derive_seed(opt.seed, static_cast<std::uint64_t>(index));
    Rng rng(item_seed);
    LabeledPatch clean = render_text_patch(rng.next(), opt.patch_size);

    DegradationSpec spec = opt.spec;
    spec.seed = rng.next();
    if (opt.vary_strength) {
        spec.noise_sigma *= rng.uniform();
        spec.bleed_strength *= rng.uniform();
        spec.gradient_amplitude *= rng.uniform();
        spec.stain_count = rng.range(0, opt.spec.stain_count);
    }
    GrayImage degraded = synth_degrade(clean, spec);
    // ground truth: per-class means of the degraded patch under the clean labels
    GrayImage gt = make_uniform_gt({degraded, clean.labels});
    return {std::move(degraded), std::move(gt), std::move(clean)};
}

std::string format_corpus_meta(const CorpusOptions& opt)
{
    std::ostringstream out;
    out << std::setprecision(17);
    out << "count=" << opt.count << "\n";
    out << "patch_size=" << opt.patch_size << "\n";
    out << "seed=" << opt.seed << "\n";
    out << "noise_sigma=" << opt.spec.noise_sigma << "\n";
    out << "bleed_strength=" << opt.spec.bleed_strength << "\n";
    out << "gradient_amplitude=" << opt.spec.gradient_amplitude << "\n";
    out << "stain_count=" << opt.spec.stain_count << "\n";
    out << "vary_strength=" << (opt.vary_strength ? 1 : 0) << "\n";
    return out.str();
}

CorpusOptions parse_corpus_meta(const std::string& text)
{
    const KeyValues kv = parse_key_values(text);
    static const char* known[] = {"count",          "patch_size",         "seed",        "noise_sigma",
                                  "bleed_strength", "gradient_amplitude", "stain_count", "vary_strength"};
    for (const auto& [key, value] : kv) {
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            throw FormatError("corpus.meta: unknown key '" + key + "'");
    }
    auto need = [&](const std::string& key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) throw FormatError("corpus.meta: missing key '" + key + "'");
        return it->second;
    };
    CorpusOptions opt;
    opt.count = parse_int(need("count"), "count");
    opt.patch_size = parse_int(need("patch_size"), "patch_size");
    opt.seed = parse_u64(need("seed"), "seed");
    opt.spec.noise_sigma = parse_double(need("noise_sigma"), "noise_sigma");
    opt.spec.bleed_strength = parse_double(need("bleed_strength"), "bleed_strength");
    opt.spec.gradient_amplitude = parse_double(need("gradient_amplitude"), "gradient_amplitude");
    opt.spec.stain_count = parse_int(need("stain_count"), "stain_count");
    opt.vary_strength = parse_int(need("vary_strength"), "vary_strength") != 0;
    return opt;
}

GrayImage labels_to_image(const std::vector<std::uint8_t>& labels, int width, int height)
{
    GrayImage out(width, height);
    if (labels.size() != out.size()) throw ArgumentError("label count does not match dimensions");
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = labels[i] ? 0.0 : 1.0;
    return out;
}

std::vector<std::uint8_t> image_to_labels(const GrayImage& img)
{
    std::vector<std::uint8_t> labels(img.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = img.data()[i] < 0.5 ? 1 : 0;
    return labels;
}

void write_corpus(const fs::path& dir, const CorpusOptions& opt)
{
    if (opt.count < 1) throw ArgumentError("count must be >= 1");
    if (opt.patch_size < 16) throw ArgumentError("patch_size must be >= 16");
    opt.spec.validate();

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ArgumentError("cannot create '" + dir.string() + "': " + ec.message());

    for (int i = 0; i < opt.count; ++i) {
        const CorpusItem item = make_corpus_item(opt, i);
        const std::string stem = item_stem(i);
        write_pgm_file((dir / (stem + ".x.pgm")).string(), item.degraded);
        write_pgm_file((dir / (stem + ".gt.pgm")).string(), item.gt);
        write_pgm_file((dir / (stem + ".mask.pgm")).string(),
                       labels_to_image(item.clean.labels, opt.patch_size, opt.patch_size));
    }

    std::ofstream meta(dir / "corpus.meta", std::ios::trunc);
    if (!meta) throw ArgumentError("cannot write corpus.meta in '" + dir.string() + "'");
    meta << format_corpus_meta(opt);
}

TrainingSet load_training_set(const fs::path& dir, int patch_size)
{
    if (!fs::is_directory(dir)) throw ArgumentError("'" + dir.string() + "' is not a directory");
    TrainingSet set;

    if (fs::exists(dir / "corpus.meta")) {
        const CorpusOptions opt = parse_corpus_meta(read_text(dir / "corpus.meta"));
        if (opt.patch_size != patch_size) {
            std::ostringstream msg;
            msg << "corpus patch_size " << opt.patch_size << " does not match configured patch_size " << patch_size;
            throw ArgumentError(msg.str());
        }
        for (int i = 0; i < opt.count; ++i) {
            const std::string stem = item_stem(i);
            GrayImage x = read_pgm_file((dir / (stem + ".x.pgm")).string());
            GrayImage gt = read_pgm_file((dir / (stem + ".gt.pgm")).string());
            if (x.width() != patch_size || x.height() != patch_size || gt.width() != patch_size ||
                gt.height() != patch_size)
                throw FormatError((dir / (stem + ".x.pgm")).string() + ": unexpected patch dimensions");
            set.inputs.push_back(std::move(x));
            set.targets.push_back(std::move(gt));
        }
        return set;
    }

    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (!entry.is_regular_file() || entry.path().extension() != ".pgm") continue;
        if (name.size() > 9 && name.ends_with(".mask.pgm")) continue;
        images.push_back(entry.path());
    }
    std::sort(images.begin(), images.end());
    for (const auto& path : images) {
        fs::path mask_path = path;
        mask_path.replace_extension(".mask.pgm");
        if (!fs::exists(mask_path)) continue;
        const GrayImage image = read_image_file(path.string());
        const GrayImage mask = read_pgm_file(mask_path.string());
        if (mask.width() != image.width() || mask.height() != image.height())
            throw FormatError(mask_path.string() + ": mask size differs from image");
        if (image.width() < patch_size || image.height() < patch_size) continue;
        append_patches(set, image, image_to_labels(mask), patch_size);
    }
    if (set.size() == 0) throw ArgumentError("no training pairs found in '" + dir.string() + "'");
    return set;
}

}  // namespace inkwell
