#include "inkwell/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "inkwell/error.hpp"

namespace inkwell {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& text, const char* kind)
{
    throw ArgumentError("invalid " + std::string(kind) + " for '" + key + "': '" + text + "'");
}

std::vector<std::string> split_commas(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

}  // namespace

KeyValues parse_key_values(const std::string& text)
{
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw FormatError("line " + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trim(t.substr(0, eq));
        if (!kv.emplace(key, trim(t.substr(eq + 1))).second) {
            throw FormatError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
    }
    return kv;
}

int parse_int(const std::string& text, const std::string& key)
{
    int v = 0;
    const auto* end = text.data() + text.size();
    const auto r = std::from_chars(text.data(), end, v);
    if (r.ec != std::errc{} || r.ptr != end) bad_value(key, text, "integer");
    return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& key)
{
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto r = std::from_chars(text.data(), end, v);
    if (r.ec != std::errc{} || r.ptr != end) bad_value(key, text, "unsigned integer");
    return v;
}

double parse_double(const std::string& text, const std::string& key)
{
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto r = std::from_chars(text.data(), end, v);
    if (r.ec != std::errc{} || r.ptr != end || !std::isfinite(v)) bad_value(key, text, "number");
    return v;
}

bool parse_bool(const std::string& text, const std::string& key)
{
    if (text == "true" || text == "1" || text == "on") return true;
    if (text == "false" || text == "0" || text == "off") return false;
    bad_value(key, text, "boolean");
}

std::vector<int> parse_int_list(const std::string& text, const std::string& key)
{
    std::vector<int> out;
    for (const auto& item : split_commas(text)) out.push_back(parse_int(item, key));
    if (out.empty()) bad_value(key, text, "list");
    return out;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& key)
{
    std::vector<double> out;
    for (const auto& item : split_commas(text)) out.push_back(parse_double(item, key));
    if (out.empty()) bad_value(key, text, "list");
    return out;
}

ChainMode parse_mode(const std::string& text)
{
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t == "rr") return ChainMode::Recurrent;
    if (t == "sr") return ChainMode::Stacked;
    throw ArgumentError("mode must be 'rr' or 'sr', got '" + text + "'");
}

const char* mode_name(ChainMode mode) { return mode == ChainMode::Recurrent ? "rr" : "sr"; }

std::vector<std::string> run_config_keys()
{
    return {"mode",          "m",          "patch_size",     "depth",     "widths",    "lr",
            "batch",         "steps",      "seed",           "truncate",  "augment",   "scales",
            "sauvola_window", "sauvola_k", "sauvola_r",      "ink_fraction"};
}

void RunConfig::apply(const KeyValues& kv)
{
    const auto keys = run_config_keys();
    for (const auto& [key, value] : kv) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw ArgumentError("unknown configuration key '" + key + "'");

        if (key == "mode") mode = parse_mode(value);
        else if (key == "m") m = parse_int(value, key);
        else if (key == "patch_size") patch_size = parse_int(value, key);
        else if (key == "depth") depth = parse_int(value, key);
        else if (key == "widths") widths = parse_int_list(value, key);
        else if (key == "lr") lr = parse_double(value, key);
        else if (key == "batch") batch = parse_int(value, key);
        else if (key == "steps") steps = parse_int(value, key);
        else if (key == "seed") seed = parse_u64(value, key);
        else if (key == "truncate") truncate = parse_int(value, key);
        else if (key == "augment") augment = parse_bool(value, key);
        else if (key == "scales") scales = parse_double_list(value, key);
        else if (key == "sauvola_window") sauvola_window = parse_int(value, key);
        else if (key == "sauvola_k") sauvola_k = parse_double(value, key);
        else if (key == "sauvola_r") sauvola_r = parse_double(value, key);
        else if (key == "ink_fraction") ink_fraction = parse_double(value, key);
    }
}

void RunConfig::validate() const
{
    auto fail = [](const std::string& what) { throw ArgumentError(what); };
    if (m < 1) fail("m must be >= 1");
    if (depth < 1) fail("depth must be >= 1");
    if (static_cast<int>(widths.size()) != depth) fail("widths must list exactly depth entries");
    for (int w : widths) {
        if (w < 1) fail("widths must be positive");
    }
    if (patch_size < 1 || patch_size % (1 << (depth - 1)) != 0)
        fail("patch_size must be a positive multiple of 2^(depth-1)");
    if (!(lr > 0.0)) fail("lr must be positive");
    if (batch < 1) fail("batch must be >= 1");
    if (steps < 1) fail("steps must be >= 1");
    if (truncate < 0) fail("truncate must be >= 0");
    for (double s : scales) {
        if (!(s > 0.0)) fail("scales must be positive");
    }
    if (sauvola_window < 3 || sauvola_window % 2 == 0) fail("sauvola_window must be odd and >= 3");
    if (!(sauvola_r > 0.0)) fail("sauvola_r must be positive");
    if (!(ink_fraction >= 0.0 && ink_fraction <= 1.0)) fail("ink_fraction must be in [0,1]");
}

}  // namespace inkwell
