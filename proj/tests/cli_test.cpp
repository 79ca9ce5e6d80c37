#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "inkwell/commands.hpp"
#include "inkwell/image.hpp"
#include "inkwell/metrics.hpp"
#include "inkwell/model_io.hpp"
#include "inkwell/synth.hpp"
#include "inkwell/threshold.hpp"
#include "oracles.hpp"

using namespace inkwell;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run cli(const std::vector<std::string>& args)
{
    std::ostringstream out;
    std::ostringstream err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("inkwell_cli_" + name))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& b)
{
    std::ofstream f(path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

std::vector<double> epoch_losses(const std::string& log)
{
    std::vector<double> v;
    std::istringstream in(log);
    std::string line;
    while (std::getline(in, line)) {
        const auto at = line.find("L_total=");
        if (line.rfind("epoch ", 0) == 0 && at != std::string::npos) v.push_back(std::stod(line.substr(at + 8)));
    }
    return v;
}

UNetConfig micro()
{
    UNetConfig cfg;
    cfg.depth = 2;
    cfg.widths = {4, 8};
    return cfg;
}

}  // namespace

TEST_CASE("synth is deterministic per seed")
{
    TempDir t("synth");
    REQUIRE(cli({"synth", "--out", t / "a", "--count", "10", "--seed", "7", "--patch-size", "32"}).code == 0);
    REQUIRE(cli({"synth", "--out", t / "b", "--count", "10", "--seed", "7", "--patch-size", "32"}).code == 0);
    REQUIRE(cli({"synth", "--out", t / "c", "--count", "10", "--seed", "8", "--patch-size", "32"}).code == 0);
    std::size_t files = 0;
    bool any_differs = false;
    for (const auto& e : fs::directory_iterator(t.path / "a")) {
        const std::string name = e.path().filename().string();
        CHECK(slurp(e.path()) == slurp(t.path / "b" / name));
        if (name != "corpus.meta" && slurp(e.path()) != slurp(t.path / "c" / name)) any_differs = true;
        ++files;
    }
    CHECK(files == 31);
    CHECK(any_differs);

    const Run bad = cli({"synth", "--out", t / "d", "--count", "0"});
    CHECK(bad.code == kExitUsage);
    CHECK(bad.err.find("count") != std::string::npos);
}

TEST_CASE("train writes the requested mode and logs a falling loss")
{
    TempDir t("train");
    REQUIRE(cli({"synth", "--out", t / "data", "--count", "8", "--seed", "3", "--patch-size", "16"}).code == 0);
    const std::vector<std::string> common = {"--data",  t / "data", "--m",   "2",    "--steps", "40",  "--batch",
                                             "4",       "--lr",     "3e-3",  "--depth", "2",    "--widths", "4,8", "--patch-size", "16"};
    for (const std::string mode : {"rr", "sr"}) {
        std::vector<std::string> args = {"train", "--out", t / (mode + ".inkw"), "--mode", mode};
        args.insert(args.end(), common.begin(), common.end());
        const Run r = cli(args);
        REQUIRE(r.code == 0);
        const auto losses = epoch_losses(r.out);
        REQUIRE(losses.size() == 20);
        CHECK(losses.back() < losses.front());
        const RefineChain c = read_model_file(t / (mode + ".inkw"));
        CHECK(c.m == 2);
        CHECK(c.mode == (mode == "rr" ? ChainMode::Recurrent : ChainMode::Stacked));
        CHECK(c.nets.size() == (mode == "rr" ? 1U : 2U));
    }

    std::vector<std::string> args = {"train", "--out", t / "x.inkw", "--mode", "xx"};
    args.insert(args.end(), common.begin(), common.end());
    CHECK(cli(args).code == kExitUsage);
}

TEST_CASE("enhance with a zero model returns the input")
{
    TempDir t("enhance");
    write_model_file(t / "zero.inkw", zero_chain(ChainMode::Recurrent, 6, micro()));
    Rng rng(4);
    write_bytes(t / "in.pgm", save_pgm(oracle::random_image(rng, 37, 29)));

    REQUIRE(cli({"enhance", "--input", t / "in.pgm", "--output", t / "out.pgm", "--model", t / "zero.inkw",
                 "--patch-size", "16", "--emit-iterates"})
                .code == 0);
    CHECK(slurp(t / "out.pgm") == slurp(t / "in.pgm"));
    for (int i = 1; i <= 6; ++i) CHECK(fs::exists(t / ("out.iter" + std::to_string(i) + ".pgm")));
    CHECK_FALSE(fs::exists(t / "out.iter7.pgm"));

    const Run missing = cli({"enhance", "--input", t / "in.pgm", "--output", t / "o.pgm", "--model", t / "none.inkw"});
    CHECK(missing.code != 0);
    write_bytes(t / "junk.inkw", {1, 2, 3});
    CHECK(cli({"enhance", "--input", t / "in.pgm", "--output", t / "o.pgm", "--model", t / "junk.inkw"}).code != 0);
    CHECK(cli({"enhance", "--input", t / "in.pgm", "--output", t / "o.pgm"}).code == kExitUsage);
}

TEST_CASE("enhance output does not depend on thread count")
{
    TempDir t("threads");
    write_model_file(t / "m.inkw", init_chain(ChainMode::Stacked, 2, micro(), 5));
    Rng rng(6);
    write_bytes(t / "in.pgm", save_pgm(oracle::random_image(rng, 45, 33)));
    for (const std::string threads : {"1", "2", "4"}) {
        REQUIRE(cli({"enhance", "--input", t / "in.pgm", "--output", t / ("o" + threads + ".pgm"), "--model",
                     t / "m.inkw", "--patch-size", "16", "--multiscale", "--fusion", "--threads", threads})
                    .code == 0);
    }
    CHECK(slurp(t / "o1.pgm") == slurp(t / "o2.pgm"));
    CHECK(slurp(t / "o1.pgm") == slurp(t / "o4.pgm"));
}

TEST_CASE("binarize a constant image yields background")
{
    TempDir t("binarize");
    write_bytes(t / "flat.pgm", save_pgm(GrayImage(30, 20, 0.7)));
    for (const std::string method : {"otsu", "sauvola"}) {
        const Run r = cli({"binarize", "--input", t / "flat.pgm", "--output", t / "b.pgm", "--method", method});
        REQUIRE(r.code == 0);
        const BinaryMap m = image_to_binary(read_image_file(t / "b.pgm"));
        CHECK(m.text_count() == 0);
    }
    CHECK(cli({"binarize", "--input", t / "flat.pgm", "--output", t / "b.pgm", "--method", "niblack"}).code ==
          kExitUsage);
}

TEST_CASE("evaluate prints and writes the report")
{
    TempDir t("evaluate");
    Rng rng(8);
    const BinaryMap gt = oracle::random_map(rng, 40, 24, 0.3);
    write_bytes(t / "gt.pgm", save_pgm(binary_to_image(gt)));
    const Run same = cli({"evaluate", "--pred", t / "gt.pgm", "--gt", t / "gt.pgm", "--report", t / "r.json"});
    REQUIRE(same.code == 0);
    const MetricsReport r = parse_report_kv(same.out);
    CHECK(r.fm == 100.0);
    REQUIRE(r.drd.has_value());
    CHECK(*r.drd == 0.0);
    const auto j = nlohmann::json::parse(slurp(t.path / "r.json"));
    CHECK(j.at("fm").get<double>() == 100.0);
    CHECK(j.at("drd").get<double>() == 0.0);

    write_bytes(t / "small.pgm", save_pgm(GrayImage(10, 10, 1.0)));
    const Run bad = cli({"evaluate", "--pred", t / "small.pgm", "--gt", t / "gt.pgm"});
    CHECK(bad.code == kExitData);
    CHECK(bad.err.find("10x10") != std::string::npos);
    CHECK(bad.err.find("40x24") != std::string::npos);
}

TEST_CASE("unknown commands and missing arguments are usage errors")
{
    CHECK(cli({"frobnicate"}).code == kExitUsage);
    CHECK(cli({"evaluate", "--pred", "x.pgm"}).code == kExitUsage);
    CHECK(cli({"--help"}).code == 0);
}
