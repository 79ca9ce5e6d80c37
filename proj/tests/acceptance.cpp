// Acceptance suite: prints one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...] [--save-model PATH]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>

#include "inkwell/commands.hpp"
#include "inkwell/image.hpp"
#include "inkwell/metrics.hpp"
#include "inkwell/model_io.hpp"
#include "inkwell/refine.hpp"
#include "inkwell/synth.hpp"
#include "inkwell/threshold.hpp"
#include "inkwell/unet.hpp"
#include "oracles.hpp"

using namespace inkwell;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

Tensor random_tensor(Rng& rng, const Shape& shape)
{
    Tensor t(shape);
    for (double& v : t.data()) v = rng.uniform();
    return t;
}

Outcome gradient_check()
{
    const auto t0 = Clock::now();
    UNetConfig cfg;
    cfg.depth = 2;
    cfg.widths = {4, 8};
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        Rng rng(seed);
        const Tensor x = random_tensor(rng, {1, 1, 8, 8});
        const Tensor target = random_tensor(rng, {1, 1, 8, 8});
        worst = std::max(worst, grad_check(init_params(cfg, seed), cfg, x, target, 1e-5));
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-4 && t < 60.0, fmt("max rel err %.3g (<= 1e-4), %.2fs (< 60s)", worst, t)};
}

Outcome otsu_oracle()
{
    const auto t0 = Clock::now();
    Rng rng(2024);
    int agree = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        Histogram256 h{};
        switch (trial % 4) {
            case 0:
                for (auto& c : h) c = rng.below(1000);
                break;
            case 1:
                for (int k = 0, n = 1 + static_cast<int>(rng.below(8)); k < n; ++k) h[rng.below(256)] += 1 + rng.below(5000);
                break;
            case 2:
                for (int k = 0; k < 2000; ++k) {
                    const double v = rng.uniform() < 0.3 ? 60 + 20 * rng.normal() : 190 + 15 * rng.normal();
                    h[static_cast<std::size_t>(std::clamp(std::lround(v), 0L, 255L))] += 1;
                }
                break;
            default:
                h[rng.below(256)] = 1 + rng.below(3);
                h[rng.below(256)] += 1 + rng.below(3);
                break;
        }
        if (otsu_threshold(h) == oracle::otsu_exhaustive(h)) ++agree;
    }
    const double t = seconds_since(t0);
    return {agree == 1000 && t < 5.0, fmt("%.0f/1000 agree, %.2fs (< 5s)", agree, t)};
}

Outcome drd_sauvola_oracle()
{
    Rng rng(77);
    int drd_ok = 0;
    double worst = 0.0;
    int map_mismatch = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const BinaryMap gt = oracle::random_map(rng, 32, 32, 0.05 + 0.5 * rng.uniform());
        BinaryMap pred = gt;
        const double flip = 0.2 * rng.uniform();
        for (auto& v : pred.labels) {
            if (rng.uniform() < flip) v ^= 1;
        }
        bool defined = false;
        const double ref = oracle::drd_naive(pred, gt, &defined);
        const auto got = drd(pred, gt);
        if (got.has_value() == defined && (!defined || *got == ref)) ++drd_ok;

        const GrayImage img = oracle::random_image(rng, 32, 32);
        const SauvolaParams sp{3 + 2 * static_cast<int>(rng.below(15)), 0.1 + 0.4 * rng.uniform(), 128.0};
        const LocalStats fast = local_stats_integral(img, sp.window);
        const oracle::Stats ref_stats = oracle::local_stats(img, sp.window);
        const BinaryMap map = sauvola_binarize(img, sp);
        for (std::size_t i = 0; i < img.size(); ++i) {
            worst = std::max({worst, std::abs(fast.mean[i] - ref_stats.mean[i]),
                              std::abs(fast.stddev[i] - ref_stats.stddev[i])});
            const double t = ref_stats.mean[i] * (1.0 + sp.k * (ref_stats.stddev[i] / sp.r - 1.0));
            const double v = 255.0 * img.data()[i];
            if (std::abs(v - t) > 1e-9 && map.labels[i] != (v < t ? 1 : 0)) ++map_mismatch;
        }
    }
    return {drd_ok == 200 && worst <= 1e-9 && map_mismatch == 0,
            fmt("DRD exact %.0f/200, Sauvola stats max err %.3g (<= 1e-9), %.0f map mismatches", drd_ok, worst,
                map_mismatch)};
}

Outcome identity_chain()
{
    const RefineChain chain = zero_chain(ChainMode::Recurrent, 6, UNetConfig{});
    EnhanceOptions opt;
    opt.fusion = opt.multiscale = opt.uniform = false;
    Rng rng(606);
    int exact = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const int w = 20 + static_cast<int>(rng.below(120));
        const int h = 20 + static_cast<int>(rng.below(120));
        const auto bytes = save_pgm(oracle::random_image(rng, w, h));
        const GrayImage in = load_pgm(bytes);
        if (save_pgm(enhance_document(chain, in, opt).image) == bytes) ++exact;
    }
    return {exact == 20, fmt("%.0f/20 bit-exact", exact)};
}

Outcome roundtrip_and_stitch()
{
    Rng rng(505);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const GrayImage img = oracle::random_image(rng, 1 + static_cast<int>(rng.below(64)), 1 + static_cast<int>(rng.below(64)));
        const GrayImage back = load_pgm(save_pgm(img));
        for (std::size_t i = 0; i < img.size(); ++i) worst = std::max(worst, std::abs(back.data()[i] - img.data()[i]));
    }
    int identical = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const int w = 4 + static_cast<int>(rng.below(60));
        const int h = 4 + static_cast<int>(rng.below(60));
        const int size = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(w, h))));
        const int stride = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(size)));
        const GrayImage img = oracle::random_image(rng, w, h);
        if (stitch_average(extract_patches(img, size, stride), w, h) == img) ++identical;
    }
    return {worst <= 1.0 / 510.0 + 1e-12 && identical == 50,
            fmt("PGM max err %.6f (<= %.6f), stitch identity %.0f/50", worst, 1.0 / 510.0, identical)};
}

// Held-out pages: seeds disjoint from the training corpus, full-strength degradation.
struct Page {
    GrayImage clean;
    GrayImage degraded;
    BinaryMap gt;
};

std::vector<Page> held_out_pages()
{
    std::vector<Page> pages;
    for (int j = 0; j < 50; ++j) {
        Rng rng(derive_seed(0xACCE55000000ULL, static_cast<std::uint64_t>(j)));
        LabeledPatch clean = render_text_page(rng.next(), 128, 128);
        DegradationSpec spec = default_degradation();
        spec.seed = rng.next();
        GrayImage degraded = synth_degrade(clean, spec);
        pages.push_back({clean.image, std::move(degraded), BinaryMap(128, 128, clean.labels)});
    }
    return pages;
}

struct EfficacyResults {
    double train_seconds = 0.0;
    double fm_raw = 0.0;
    double fm_enhanced = 0.0;
    double l1_raw = 0.0;
    double l1_enhanced = 0.0;
    std::vector<double> fm_iterate;
};

EfficacyResults run_efficacy(const std::string& save_model_path)
{
    EfficacyResults r;
    const CorpusOptions copt;
    TrainingSet corpus;
    for (int i = 0; i < copt.count; ++i) {
        CorpusItem item = make_corpus_item(copt, i);
        corpus.inputs.push_back(std::move(item.degraded));
        corpus.targets.push_back(std::move(item.gt));
    }
    const TrainConfig tc;
    const auto t0 = Clock::now();
    const RefineChain chain = train_chain(corpus, ChainMode::Stacked, UNetConfig{}, tc, [](const StepReport& s) {
        if (s.step % 200 == 0) std::fprintf(stderr, "  train step %d loss %.5f\n", s.step, s.loss.total);
    });
    r.train_seconds = seconds_since(t0);
    if (!save_model_path.empty()) write_model_file(save_model_path, chain);

    EnhanceOptions opt;
    opt.fusion = opt.multiscale = opt.uniform = false;
    const auto pages = held_out_pages();
    r.fm_iterate.assign(static_cast<std::size_t>(chain.m), 0.0);
    for (const Page& p : pages) {
        const EnhanceResult e = enhance_document(chain, p.degraded, opt);
        r.fm_raw += f_measure(confusion(otsu_binarize(p.degraded), p.gt));
        r.fm_enhanced += f_measure(confusion(otsu_binarize(e.image), p.gt));
        r.l1_raw += mean_abs_diff(p.degraded, p.clean);
        r.l1_enhanced += mean_abs_diff(e.image, p.clean);
        for (std::size_t i = 0; i < e.iterates.size(); ++i) {
            r.fm_iterate[i] += f_measure(confusion(otsu_binarize(e.iterates[i]), p.gt));
        }
    }
    const double n = static_cast<double>(pages.size());
    r.fm_raw /= n;
    r.fm_enhanced /= n;
    r.l1_raw /= n;
    r.l1_enhanced /= n;
    for (double& v : r.fm_iterate) v /= n;
    return r;
}

Outcome efficacy(const EfficacyResults& r)
{
    const double gain = r.fm_enhanced - r.fm_raw;
    const bool pass = r.train_seconds <= 1800.0 && gain >= 5.0 && r.l1_enhanced < r.l1_raw;
    std::string d = fmt("train %.0fs (<= 1800s); FM raw %.2f, enhanced %.2f, gain %.2f (>= 5)", r.train_seconds,
                        r.fm_raw, r.fm_enhanced, gain);
    d += fmt("; L1 enhanced %.4f < raw %.4f", r.l1_enhanced, r.l1_raw);
    return {pass, d};
}

Outcome iterative(const EfficacyResults& r)
{
    if (r.fm_iterate.size() < 3) return {false, "fewer than 3 iterates"};
    const double f1 = r.fm_iterate[0];
    const double f3 = r.fm_iterate[2];
    return {f3 >= f1 - 0.5, fmt("Otsu FM iterate 1 %.2f, 2 %.2f, 3 %.2f (3 >= 1 - 0.5)", f1, r.fm_iterate[1], f3)};
}

BinaryMap bar(int w, int h, int x0, int y0, int bw, int bh)
{
    BinaryMap m(w, h);
    for (int y = y0; y < y0 + bh; ++y) {
        for (int x = x0; x < x0 + bw; ++x) m.at(x, y) = 1;
    }
    return m;
}

Outcome metric_fixtures()
{
    BinaryMap pred(20, 1);
    BinaryMap gt(20, 1);
    for (int i = 0; i < 8; ++i) pred.at(i, 0) = gt.at(i, 0) = 1;
    pred.at(8, 0) = pred.at(9, 0) = 1;
    gt.at(10, 0) = gt.at(11, 0) = 1;
    const double fm = f_measure(confusion(pred, gt));

    const BinaryMap clean(10, 10);
    BinaryMap one = clean;
    one.at(4, 6) = 1;
    const double p = psnr(one, clean);

    const BinaryMap dgt = bar(32, 32, 0, 0, 4, 4);
    BinaryMap dpred = dgt;
    dpred.at(20, 20) = 1;
    const auto d = drd(dpred, dgt);
    const double d_expected = 1.0 / static_cast<double>(nubn(dgt));

    const BinaryMap sgt = bar(24, 12, 2, 4, 20, 4);
    const BinaryMap skel = skeletonize(sgt);
    BinaryMap half(24, 12);
    for (int y = 0; y < 12; ++y) {
        for (int x = 0; x < 24; ++x) {
            if (skel.at(x, y)) half.at(x, y) = 1;
            if (skel.at(x, y) && sgt.at(x, y == 5 ? 6 : 5)) half.at(x, y == 5 ? 6 : 5) = 1;
        }
    }
    const double fps = pseudo_f_measure(half, sgt);

    const bool pass = std::abs(fm - 80.0) <= 1e-9 && std::abs(p - 20.0) <= 1e-9 && d.has_value() &&
                      std::abs(*d - d_expected) <= 1e-9 && std::abs(fps - 100.0) <= 1e-9;
    return {pass, fmt("FM %.12g, PSNR %.12g, DRD*NUBN %.12g, pseudo-F %.12g", fm, p, d ? *d / d_expected : -1.0, fps)};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool same_tree(const fs::path& a, const fs::path& b)
{
    std::set<std::string> na;
    std::set<std::string> nb;
    for (const auto& e : fs::directory_iterator(a)) na.insert(e.path().filename().string());
    for (const auto& e : fs::directory_iterator(b)) nb.insert(e.path().filename().string());
    if (na != nb || na.empty()) return false;
    for (const auto& n : na) {
        if (slurp(a / n) != slurp(b / n)) return false;
    }
    return true;
}

Outcome determinism()
{
    const fs::path dir = fs::temp_directory_path() / "inkwell_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto run = [](const std::vector<std::string>& args) {
        std::ostringstream out;
        std::ostringstream err;
        const int code = run_cli(args, out, err);
        return std::make_pair(code, out.str());
    };
    auto p = [&](const std::string& leaf) { return (dir / leaf).string(); };

    bool ok = true;
    std::string detail;
    for (const std::string tag : {"a", "b"}) {
        ok &= run({"synth", "--out", p("corpus_" + tag), "--count", "24", "--seed", "11", "--patch-size", "32"}).first == 0;
    }
    const bool synth_same = ok && same_tree(dir / "corpus_a", dir / "corpus_b");

    std::string logs[2];
    for (int k = 0; k < 2; ++k) {
        const auto r = run({"train", "--data", p("corpus_a"), "--out", p("model" + std::to_string(k) + ".inkw"),
                            "--mode", "sr", "--m", "2", "--steps", "12", "--batch", "4", "--depth", "2", "--widths",
                            "4,8", "--seed", "5", "--patch-size", "32"});
        ok &= r.first == 0;
        // the last line names the output file
        logs[k] = r.second.substr(0, r.second.rfind("saved "));
    }
    const std::string model_a = slurp(dir / "model0.inkw");
    const bool train_same = ok && !model_a.empty() && model_a == slurp(dir / "model1.inkw") &&
                            logs[0] == logs[1];

    Rng rng(9);
    {
        const auto bytes = save_pgm(oracle::random_image(rng, 77, 53));
        std::ofstream f(p("page.pgm"), std::ios::binary);
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    std::vector<std::string> outputs;
    for (const std::string threads : {"1", "1", "2", "3"}) {
        const std::string o = p("enh_" + std::to_string(outputs.size()) + ".pgm");
        ok &= run({"enhance", "--input", p("page.pgm"), "--output", o, "--model", p("model0.inkw"), "--patch-size",
                   "16", "--multiscale", "--fusion", "--threads", threads})
                  .first == 0;
        outputs.push_back(slurp(o));
    }
    bool enhance_same = ok && !outputs[0].empty();
    for (const auto& o : outputs) enhance_same &= o == outputs[0];

    fs::remove_all(dir);
    detail = std::string("synth ") + (synth_same ? "identical" : "DIFFERS") + ", train " +
             (train_same ? "identical" : "DIFFERS") + ", enhance (threads 1,1,2,3) " +
             (enhance_same ? "identical" : "DIFFERS");
    return {synth_same && train_same && enhance_same, detail};
}

}  // namespace

int main(int argc, char** argv)
{
    std::set<int> wanted;
    std::string save_model_path;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--save-model" && i + 1 < argc) {
            save_model_path = argv[++i];
        } else {
            wanted.insert(std::stoi(a));
        }
    }
    auto want = [&](int c) { return wanted.empty() || wanted.count(c) > 0; };

    int failures = 0;
    auto report = [&](int c, const char* name, const std::function<Outcome()>& fn) {
        if (!want(c)) return;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c, name, o.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "gradient correctness", gradient_check);
    report(2, "otsu oracle", otsu_oracle);
    report(3, "drd/sauvola oracle", drd_sauvola_oracle);
    report(4, "identity chain", identity_chain);
    report(5, "round trip and stitching", roundtrip_and_stitch);
    if (want(6) || want(7)) {
        EfficacyResults r;
        std::string error;
        try {
            r = run_efficacy(save_model_path);
        } catch (const std::exception& e) {
            error = e.what();
        }
        report(6, "enhancement efficacy", [&] { return error.empty() ? efficacy(r) : Outcome{false, error}; });
        report(7, "iterative improvement", [&] { return error.empty() ? iterative(r) : Outcome{false, error}; });
    }
    report(8, "metric fixtures", metric_fixtures);
    report(9, "determinism", determinism);
    return failures == 0 ? 0 : 1;
}
