#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace inkwell {

using KeyValues = std::map<std::string, std::string>;

/// Flat `key=value` text: one pair per line, `#` starts a comment line.
/// Duplicate keys and lines without '=' are FormatErrors.
KeyValues parse_key_values(const std::string& text);

int parse_int(const std::string& text, const std::string& key);
std::uint64_t parse_u64(const std::string& text, const std::string& key);
double parse_double(const std::string& text, const std::string& key);
/// true/false, 1/0 or on/off.
bool parse_bool(const std::string& text, const std::string& key);
/// Comma-separated list, e.g. "8,16,32".
std::vector<int> parse_int_list(const std::string& text, const std::string& key);
std::vector<double> parse_double_list(const std::string& text, const std::string& key);

enum class ChainMode : std::uint8_t { Recurrent = 0, Stacked = 1 };

ChainMode parse_mode(const std::string& text);
const char* mode_name(ChainMode mode);

/// Every tunable of the command-line pipeline.
struct RunConfig {
    ChainMode mode = ChainMode::Stacked;
    int m = 3;
    int patch_size = 64;
    int depth = 3;
    std::vector<int> widths = {8, 16, 32};
    double lr = 1e-4;
    int batch = 5;
    int steps = 2000;
    std::uint64_t seed = 1;
    int truncate = 0;
    bool augment = true;
    std::vector<double> scales = {1.0, 0.75, 1.25, 1.5};
    int sauvola_window = 31;
    double sauvola_k = 0.5;
    double sauvola_r = 128.0;
    double ink_fraction = 0.005;

    /// Applies pairs on top of the current values; unknown keys are rejected.
    void apply(const KeyValues& kv);
    void validate() const;
};

std::vector<std::string> run_config_keys();

}  // namespace inkwell
