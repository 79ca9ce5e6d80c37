#include "inkwell/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "inkwell/config.hpp"
#include "inkwell/error.hpp"

namespace inkwell {

namespace {

void check_same(const BinaryMap& a, const BinaryMap& b, const char* op)
{
    if (!a.same_size(b)) {
        std::ostringstream msg;
        msg << op << ": prediction is " << a.width << "x" << a.height << ", ground truth is " << b.width << "x"
            << b.height;
        throw ArgumentError(msg.str());
    }
}

double harmonic_percent(double precision, double recall)
{
    if (precision + recall == 0.0) return 0.0;
    return 100.0 * 2.0 * precision * recall / (precision + recall);
}

double ratio(std::uint64_t num, std::uint64_t den)
{
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string format_number(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Confusion confusion(const BinaryMap& pred, const BinaryMap& gt)
{
    check_same(pred, gt, "confusion");
    Confusion c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred.labels[i] != 0;
        const bool g = gt.labels[i] != 0;
        if (p && g) ++c.tp;
        else if (p) ++c.fp;
        else if (g) ++c.fn;
        else ++c.tn;
    }
    return c;
}

double f_measure(const Confusion& c)
{
    return harmonic_percent(ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn));
}

BinaryMap skeletonize(const BinaryMap& map)
{
    BinaryMap img = map;
    const int w = img.width;
    const int h = img.height;
    auto px = [&](int x, int y) -> int {
        return (x < 0 || y < 0 || x >= w || y >= h) ? 0 : img.at(x, y);
    };

    std::vector<std::size_t> removals;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int pass = 0; pass < 2; ++pass) {
            removals.clear();
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    if (!img.at(x, y)) continue;
                    // neighbours clockwise from north: P2..P9
                    const int p[8] = {px(x, y - 1),     px(x + 1, y - 1), px(x + 1, y), px(x + 1, y + 1),
                                      px(x, y + 1),     px(x - 1, y + 1), px(x - 1, y), px(x - 1, y - 1)};
                    int b = 0;
                    int a = 0;
                    for (int i = 0; i < 8; ++i) {
                        b += p[i];
                        if (p[i] == 0 && p[(i + 1) % 8] == 1) ++a;
                    }
                    if (b < 2 || b > 6 || a != 1) continue;
                    const int n = p[0], e = p[2], s = p[4], wst = p[6];
                    const bool ok = pass == 0 ? (n * e * s == 0 && e * s * wst == 0)
                                              : (n * e * wst == 0 && n * s * wst == 0);
                    if (ok) removals.push_back(static_cast<std::size_t>(y) * w + x);
                }
            }
            for (std::size_t i : removals) img.labels[i] = 0;
            if (!removals.empty()) changed = true;
        }
    }
    return img;
}

double pseudo_f_measure(const BinaryMap& pred, const BinaryMap& gt)
{
    check_same(pred, gt, "pseudo_f_measure");
    const Confusion c = confusion(pred, gt);
    const BinaryMap skel = skeletonize(gt);
    std::uint64_t covered = 0;
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < skel.size(); ++i) {
        if (!skel.labels[i]) continue;
        ++total;
        if (pred.labels[i]) ++covered;
    }
    return harmonic_percent(ratio(c.tp, c.tp + c.fp), ratio(covered, total));
}

double psnr(const BinaryMap& pred, const BinaryMap& gt)
{
    check_same(pred, gt, "psnr");
    std::uint64_t flipped = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) flipped += (pred.labels[i] != 0) != (gt.labels[i] != 0);
    if (flipped == 0) return kPsnrCap;
    const double mse = static_cast<double>(flipped) / static_cast<double>(pred.size());
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

std::uint64_t nubn(const BinaryMap& gt)
{
    std::uint64_t count = 0;
    for (int by = 0; by < gt.height; by += 8) {
        for (int bx = 0; bx < gt.width; bx += 8) {
            bool text = false;
            bool background = false;
            for (int y = by; y < std::min(by + 8, gt.height); ++y) {
                for (int x = bx; x < std::min(bx + 8, gt.width); ++x) {
                    (gt.at(x, y) ? text : background) = true;
                }
            }
            if (text && background) ++count;
        }
    }
    return count;
}

const std::array<std::array<double, 5>, 5>& drd_weights()
{
    static const auto table = [] {
        std::array<std::array<double, 5>, 5> w{};
        double sum = 0.0;
        for (int i = 0; i < 5; ++i) {
            for (int j = 0; j < 5; ++j) {
                const int di = i - 2;
                const int dj = j - 2;
                w[i][j] = (di == 0 && dj == 0) ? 1.0 : 1.0 / std::sqrt(static_cast<double>(di * di + dj * dj));
                sum += w[i][j];
            }
        }
        for (auto& row : w) {
            for (double& v : row) v /= sum;
        }
        return w;
    }();
    return table;
}

double drd_pixel(const BinaryMap& pred, const BinaryMap& gt, int x, int y)
{
    const auto& wt = drd_weights();
    const int value = pred.at(x, y) != 0;
    double sum = 0.0;
    const bool interior = x >= 2 && y >= 2 && x < gt.width - 2 && y < gt.height - 2;
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            int gx = x + j - 2;
            int gy = y + i - 2;
            if (!interior) {
                gx = std::clamp(gx, 0, gt.width - 1);
                gy = std::clamp(gy, 0, gt.height - 1);
            }
            const int g = gt.at(gx, gy) != 0;
            if (g != value) sum += wt[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return sum;
}

std::optional<double> drd(const BinaryMap& pred, const BinaryMap& gt)
{
    check_same(pred, gt, "drd");
    const std::uint64_t blocks = nubn(gt);
    double total = 0.0;
    for (int y = 0; y < gt.height; ++y) {
        for (int x = 0; x < gt.width; ++x) {
            if ((pred.at(x, y) != 0) != (gt.at(x, y) != 0)) total += drd_pixel(pred, gt, x, y);
        }
    }
    if (blocks == 0) return std::nullopt;
    return total / static_cast<double>(blocks);
}

MetricsReport evaluate(const BinaryMap& pred, const BinaryMap& gt)
{
    MetricsReport r;
    r.fm = f_measure(confusion(pred, gt));
    r.fps = pseudo_f_measure(pred, gt);
    r.psnr = psnr(pred, gt);
    r.drd = drd(pred, gt);
    r.nubn = nubn(gt);
    return r;
}

std::string format_report_kv(const MetricsReport& r)
{
    std::ostringstream out;
    out << "fm=" << format_number(r.fm) << "\n";
    out << "fps=" << format_number(r.fps) << "\n";
    out << "psnr=" << format_number(r.psnr) << "\n";
    out << "drd=" << (r.drd ? format_number(*r.drd) : std::string("undefined")) << "\n";
    out << "nubn=" << r.nubn << "\n";
    return out.str();
}

MetricsReport parse_report_kv(const std::string& text)
{
    const KeyValues kv = parse_key_values(text);
    auto need = [&](const char* key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) throw FormatError(std::string("report: missing key '") + key + "'");
        return it->second;
    };
    MetricsReport r;
    r.fm = parse_double(need("fm"), "fm");
    r.fps = parse_double(need("fps"), "fps");
    r.psnr = parse_double(need("psnr"), "psnr");
    const std::string& d = need("drd");
    if (d != "undefined") r.drd = parse_double(d, "drd");
    r.nubn = parse_u64(need("nubn"), "nubn");
    return r;
}

std::string format_report_json(const MetricsReport& r)
{
    nlohmann::ordered_json j;
    j["fm"] = r.fm;
    j["fps"] = r.fps;
    j["psnr"] = r.psnr;
    j["drd"] = r.drd ? nlohmann::ordered_json(*r.drd) : nlohmann::ordered_json(nullptr);
    j["nubn"] = r.nubn;
    return j.dump(2) + "\n";
}

MetricsReport parse_report_json(const std::string& text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        MetricsReport r;
        r.fm = j.at("fm").get<double>();
        r.fps = j.at("fps").get<double>();
        r.psnr = j.at("psnr").get<double>();
        if (!j.at("drd").is_null()) r.drd = j.at("drd").get<double>();
        r.nubn = j.at("nubn").get<std::uint64_t>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report: ") + e.what());
    }
}

}  // namespace inkwell
