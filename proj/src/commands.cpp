#include "inkwell/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <type_traits>

#include <CLI11.hpp>

#include "inkwell/error.hpp"
#include "inkwell/metrics.hpp"
#include "inkwell/model_io.hpp"
#include "inkwell/synth.hpp"
#include "inkwell/threshold.hpp"

namespace inkwell {

namespace fs = std::filesystem;

UNetConfig unet_config_from(const RunConfig& rc)
{
    UNetConfig cfg;
    cfg.depth = rc.depth;
    cfg.widths = rc.widths;
    return cfg;
}

TrainConfig train_config_from(const RunConfig& rc)
{
    TrainConfig tc;
    tc.learning_rate = rc.lr;
    tc.batch_size = rc.batch;
    tc.steps = rc.steps;
    tc.m = rc.m;
    tc.seed = rc.seed;
    tc.truncate = rc.truncate;
    tc.augment = rc.augment;
    return tc;
}

EnhanceOptions enhance_options_from(const RunConfig& rc)
{
    EnhanceOptions opt;
    opt.scales = rc.scales;
    opt.patch_size = rc.patch_size;
    opt.sauvola = SauvolaParams{rc.sauvola_window, rc.sauvola_k, rc.sauvola_r};
    opt.ink_fraction = rc.ink_fraction;
    return opt;
}

namespace {

// Config file first, then every flag the user actually passed.
struct ConfigSource {
    std::string file;
    std::vector<std::string> overrides; // key=value
};

RunConfig resolve_config(const ConfigSource& src)
{
    RunConfig rc;
    if (!src.file.empty()) {
        std::ifstream in(src.file);
        if (!in) throw ArgumentError("cannot read config '" + src.file + "'");
        std::stringstream text;
        text << in.rdbuf();
        rc.apply(parse_key_values(text.str()));
    }
    for (const auto& kv : src.overrides) rc.apply(parse_key_values(kv));
    rc.validate();
    return rc;
}

template <class T>
void add_override(CLI::App* app, ConfigSource& src, const std::string& flag, const std::string& key,
                  const std::string& help)
{
    app->add_option_function<T>(
        flag,
        [&src, key](const T& v) {
            std::ostringstream s;
            if constexpr (std::is_floating_point_v<T>) s << std::setprecision(17);
            s << key << "=" << v;
            src.overrides.push_back(s.str());
        },
        help);
}

void add_string_override(CLI::App* app, ConfigSource& src, const std::string& flag, const std::string& key,
                         const std::string& help)
{
    app->add_option_function<std::string>(
        flag, [&src, key](const std::string& v) { src.overrides.push_back(key + "=" + v); }, help);
}

std::string iterate_path(const std::string& output, int i)
{
    const fs::path p(output);
    fs::path stem = p.parent_path() / p.stem();
    return stem.string() + ".iter" + std::to_string(i) + (p.has_extension() ? p.extension().string() : ".pgm");
}

struct EnhanceFlags {
    std::string model;
    int iterations = 0;
    bool multiscale = false;
    bool fusion = false;
    bool uniform = false;
    int threads = 1;
};

void add_enhance_flags(CLI::App* app, EnhanceFlags& f, bool model_required)
{
    auto* opt = app->add_option("--model", f.model, "Model file written by `train`");
    if (model_required) opt->required();
    app->add_option("--iterations", f.iterations, "Iterations to run (default: the model's m)")->check(CLI::PositiveNumber);
    app->add_flag("--multiscale", f.multiscale, "Average enhancement over the configured scales");
    app->add_flag("--fusion", f.fusion, "Average the outputs of all iterations");
    app->add_flag("--uniform", f.uniform, "Locally uniform rescale of ink-bearing patches");
    app->add_option("--threads", f.threads, "Worker threads for patch inference")->check(CLI::PositiveNumber);
}

RefineChain load_chain(const EnhanceFlags& f)
{
    RefineChain chain = read_model_file(f.model);
    if (f.iterations > 0 && f.iterations != chain.m) {
        if (chain.mode == ChainMode::Stacked) {
            if (f.iterations > chain.m) {
                throw ArgumentError("stacked model has " + std::to_string(chain.m) + " networks, cannot run " +
                                    std::to_string(f.iterations) + " iterations");
            }
            chain.nets.resize(static_cast<std::size_t>(f.iterations));
        }
        chain.m = f.iterations;
    }
    return chain;
}

EnhanceResult run_enhancement(const RefineChain& chain, const GrayImage& img, const RunConfig& rc,
                              const EnhanceFlags& f, std::ostream& err)
{
    EnhanceOptions opt = enhance_options_from(rc);
    opt.multiscale = f.multiscale;
    opt.fusion = f.fusion;
    opt.uniform = f.uniform;
    opt.threads = f.threads;
    EnhanceResult r = enhance_document(chain, img, opt);
    for (const auto& w : r.warnings) err << "warning: " << w << "\n";
    return r;
}

std::string format_loss(double v)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(6) << v;
    return s.str();
}

int cmd_synth(const fs::path& out_dir, const CorpusOptions& opt, std::ostream& out, std::ostream& err)
{
    if (opt.count < 1) {
        err << "error: count must be >= 1\n";
        return kExitUsage;
    }
    try {
        opt.spec.validate();
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    write_corpus(out_dir, opt);
    out << "wrote " << opt.count << " items of " << opt.patch_size << "x" << opt.patch_size << " to " << out_dir.string()
        << "\n";
    return kExitOk;
}

int cmd_train(const std::string& data, const std::string& model_out, const RunConfig& rc, std::ostream& out)
{
    const TrainingSet corpus = load_training_set(data, rc.patch_size);
    const TrainConfig tc = train_config_from(rc);
    const UNetConfig cfg = unet_config_from(rc);
    out << "training " << mode_name(rc.mode) << " m=" << rc.m << " on " << corpus.size() << " patches, " << tc.steps
        << " steps\n";

    const int epoch_steps =
        std::max(1, static_cast<int>((corpus.size() + static_cast<std::size_t>(tc.batch_size) - 1) /
                                     static_cast<std::size_t>(tc.batch_size)));
    int epoch = 0;
    int in_epoch = 0;
    double total = 0.0;
    std::vector<double> per(static_cast<std::size_t>(rc.m), 0.0);
    auto flush = [&] {
        if (in_epoch == 0) return;
        ++epoch;
        out << "epoch " << epoch << " L_total=" << format_loss(total / in_epoch);
        for (std::size_t i = 0; i < per.size(); ++i) out << " L" << (i + 1) << "=" << format_loss(per[i] / in_epoch);
        out << "\n";
        total = 0.0;
        std::fill(per.begin(), per.end(), 0.0);
        in_epoch = 0;
    };
    const RefineChain chain = train_chain(corpus, rc.mode, cfg, tc, [&](const StepReport& r) {
        total += r.loss.total;
        for (std::size_t i = 0; i < per.size(); ++i) per[i] += r.loss.per_iteration[i];
        if (++in_epoch == epoch_steps) flush();
    });
    flush();
    write_model_file(model_out, chain);
    out << "saved " << model_out << "\n";
    return kExitOk;
}

int cmd_enhance(const std::string& input, const std::string& output, bool emit_iterates, const RunConfig& rc,
                const EnhanceFlags& f, std::ostream& out, std::ostream& err)
{
    const RefineChain chain = load_chain(f);
    const GrayImage img = read_image_file(input);
    const EnhanceResult r = run_enhancement(chain, img, rc, f, err);
    write_pgm_file(output, r.image);
    out << "wrote " << output << "\n";
    if (emit_iterates) {
        for (std::size_t i = 0; i < r.iterates.size(); ++i) {
            const std::string path = iterate_path(output, static_cast<int>(i) + 1);
            write_pgm_file(path, r.iterates[i]);
            out << "wrote " << path << "\n";
        }
    }
    return kExitOk;
}

int cmd_binarize(const std::string& input, const std::string& output, const std::string& method,
                 const RunConfig& rc, const EnhanceFlags& f, std::ostream& out, std::ostream& err)
{
    GrayImage img = read_image_file(input);
    if (!f.model.empty()) img = run_enhancement(load_chain(f), img, rc, f, err).image;
    BinaryMap map;
    if (method == "otsu") {
        map = otsu_binarize(img);
    } else {
        SauvolaParams sp{rc.sauvola_window, rc.sauvola_k, rc.sauvola_r};
        const int limit = 2 * std::min(img.width(), img.height());
        if (sp.window > limit) {
            sp.window = limit % 2 == 0 ? limit - 1 : limit;
            err << "warning: Sauvola window reduced to " << sp.window << " for a " << img.width() << "x"
                << img.height() << " image\n";
        }
        map = sauvola_binarize(img, sp);
    }
    write_pgm_file(output, binary_to_image(map));
    out << "wrote " << output << " (" << map.text_count() << " text pixels)\n";
    return kExitOk;
}

int cmd_evaluate(const std::string& pred_path, const std::string& gt_path, const std::string& report,
                 std::ostream& out, std::ostream& err)
{
    const BinaryMap pred = image_to_binary(read_image_file(pred_path));
    const BinaryMap gt = image_to_binary(read_image_file(gt_path));
    if (!pred.same_size(gt)) {
        err << "error: prediction is " << pred.width << "x" << pred.height << ", ground truth is " << gt.width << "x"
            << gt.height << "\n";
        return kExitData;
    }
    const MetricsReport r = evaluate(pred, gt);
    out << format_report_kv(r);
    if (!report.empty()) {
        std::ofstream f(report);
        if (!f) throw FormatError("cannot write report '" + report + "'");
        f << format_report_json(r);
        if (!f) throw FormatError("failed writing report '" + report + "'");
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Iterative residual enhancement and binarization of document images", "inkwell"};
    app.require_subcommand(1);

    // synth
    std::string synth_out;
    CorpusOptions corpus;
    bool fixed_strength = false;
    auto* synth = app.add_subcommand("synth", "Write a synthetic training corpus");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--count", corpus.count, "Number of patch triplets");
    synth->add_option("--seed", corpus.seed, "Generator seed");
    synth->add_option("--patch-size", corpus.patch_size, "Patch side in pixels");
    synth->add_option("--noise", corpus.spec.noise_sigma, "Gaussian noise sigma");
    synth->add_option("--bleed", corpus.spec.bleed_strength, "Bleed-through strength");
    synth->add_option("--gradient", corpus.spec.gradient_amplitude, "Illumination gradient amplitude");
    synth->add_option("--stains", corpus.spec.stain_count, "Maximum stain count");
    synth->add_flag("--fixed-strength", fixed_strength, "Apply the full degradation to every item");

    // train
    std::string train_data;
    std::string train_out;
    ConfigSource train_cfg;
    auto* train = app.add_subcommand("train", "Train a refinement chain");
    train->add_option("--data", train_data, "Corpus directory, or directory of <name>.pgm + <name>.mask.pgm")
        ->required();
    train->add_option("--out", train_out, "Model file to write")->required();
    train->add_option("--config", train_cfg.file, "key=value configuration file");
    add_string_override(train, train_cfg, "--mode", "mode", "rr or sr");
    add_override<int>(train, train_cfg, "--m", "m", "Iterations");
    add_override<int>(train, train_cfg, "--steps", "steps", "Optimizer steps");
    add_override<double>(train, train_cfg, "--lr", "lr", "Learning rate");
    add_override<int>(train, train_cfg, "--batch", "batch", "Batch size");
    add_override<std::uint64_t>(train, train_cfg, "--seed", "seed", "Initialization and sampling seed");
    add_override<int>(train, train_cfg, "--patch-size", "patch_size", "Patch side");
    add_override<int>(train, train_cfg, "--depth", "depth", "Network levels");
    add_string_override(train, train_cfg, "--widths", "widths", "Channels per level, e.g. 8,16,32");
    add_override<int>(train, train_cfg, "--truncate", "truncate", "Backpropagate through at most k iterations");
    add_string_override(train, train_cfg, "--augment", "augment", "true or false");

    // enhance
    std::string enh_in;
    std::string enh_out;
    bool emit_iterates = false;
    ConfigSource enh_cfg;
    EnhanceFlags enh_flags;
    auto* enhance = app.add_subcommand("enhance", "Enhance a document image");
    enhance->add_option("--input", enh_in, "Input PGM (or PPM)")->required();
    enhance->add_option("--output", enh_out, "Output PGM")->required();
    enhance->add_option("--config", enh_cfg.file, "key=value configuration file");
    add_enhance_flags(enhance, enh_flags, true);
    enhance->add_flag("--emit-iterates", emit_iterates, "Also write <output>.iter<i>.pgm for every iteration");
    add_override<int>(enhance, enh_cfg, "--patch-size", "patch_size", "Inference patch side");
    add_string_override(enhance, enh_cfg, "--scales", "scales", "Comma-separated scale factors");

    // binarize
    std::string bin_in;
    std::string bin_out;
    std::string method = "otsu";
    ConfigSource bin_cfg;
    EnhanceFlags bin_flags;
    auto* binarize = app.add_subcommand("binarize", "Threshold an image, optionally after enhancement");
    binarize->add_option("--input", bin_in, "Input PGM (or PPM)")->required();
    binarize->add_option("--output", bin_out, "Binary PGM (text = 0)")->required();
    binarize->add_option("--method", method, "otsu or sauvola")->check(CLI::IsMember({"otsu", "sauvola"}));
    binarize->add_option("--config", bin_cfg.file, "key=value configuration file");
    add_enhance_flags(binarize, bin_flags, false);
    add_override<int>(binarize, bin_cfg, "--patch-size", "patch_size", "Inference patch side");
    add_string_override(binarize, bin_cfg, "--scales", "scales", "Comma-separated scale factors");
    add_override<int>(binarize, bin_cfg, "--window", "sauvola_window", "Sauvola window");
    add_override<double>(binarize, bin_cfg, "--k", "sauvola_k", "Sauvola k");
    add_override<double>(binarize, bin_cfg, "--r", "sauvola_r", "Sauvola dynamic range R");

    // evaluate
    std::string pred_path;
    std::string gt_path;
    std::string report;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a binary prediction against ground truth");
    evaluate_cmd->add_option("--pred", pred_path, "Predicted binary PGM")->required();
    evaluate_cmd->add_option("--gt", gt_path, "Ground-truth binary PGM")->required();
    evaluate_cmd->add_option("--report", report, "Write a JSON report here");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    RunConfig rc;
    try {
        if (train->parsed()) rc = resolve_config(train_cfg);
        if (enhance->parsed()) rc = resolve_config(enh_cfg);
        if (binarize->parsed()) rc = resolve_config(bin_cfg);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (synth->parsed()) {
            corpus.vary_strength = !fixed_strength;
            return cmd_synth(synth_out, corpus, out, err);
        }
        if (train->parsed()) return cmd_train(train_data, train_out, rc, out);
        if (enhance->parsed()) return cmd_enhance(enh_in, enh_out, emit_iterates, rc, enh_flags, out, err);
        if (binarize->parsed()) return cmd_binarize(bin_in, bin_out, method, rc, bin_flags, out, err);
        if (evaluate_cmd->parsed()) return cmd_evaluate(pred_path, gt_path, report, out, err);
    } catch (const TrainingError& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace inkwell
