#include "inkwell/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "inkwell/error.hpp"

namespace inkwell {

namespace {

class Writer {
public:
    void bytes(const char* s, std::size_t n) { out_.insert(out_.end(), s, s + n); }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    void le(std::uint64_t v, int n)
    {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1, "u8")); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(le(2, "u16")); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4, "u32")); }
    float f32() { return std::bit_cast<float>(u32()); }
    std::size_t pos() const { return pos_; }
    bool done() const { return pos_ == b_.size(); }

    void need(std::size_t n, const char* what) const
    {
        if (b_.size() - pos_ < n) {
            throw FormatError("model file truncated at byte " + std::to_string(pos_) + " reading " + what);
        }
    }

private:
    std::uint64_t le(int n, const char* what)
    {
        need(static_cast<std::size_t>(n), what);
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> save_model(const RefineChain& chain)
{
    chain.validate();
    Writer w;
    w.bytes("INKW", 4);
    w.u16(kModelVersion);
    w.u8(static_cast<std::uint8_t>(chain.mode));
    w.u32(static_cast<std::uint32_t>(chain.m));
    w.u32(static_cast<std::uint32_t>(chain.cfg.depth));
    for (int width : chain.cfg.widths) w.u32(static_cast<std::uint32_t>(width));
    w.f32(static_cast<float>(chain.cfg.leaky_slope));
    for (const auto& net : chain.nets) {
        for (const auto& block : net.blocks) {
            w.u32(static_cast<std::uint32_t>(block.value.size()));
            for (double v : block.value.data()) w.f32(static_cast<float>(v));
        }
    }
    return w.take();
}

RefineChain load_model(std::span<const std::uint8_t> bytes)
{
    Reader r(bytes);
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), "INKW", 4) != 0) throw FormatError("not a model file (bad magic)");
    for (int i = 0; i < 4; ++i) r.u8();
    const std::uint16_t version = r.u16();
    if (version != kModelVersion) throw FormatError("unsupported model version " + std::to_string(version));
    const std::uint8_t mode = r.u8();
    if (mode > 1) throw FormatError("model mode byte " + std::to_string(mode) + " is not 0 or 1");

    RefineChain chain;
    chain.mode = static_cast<ChainMode>(mode);
    const std::uint32_t m = r.u32();
    if (m < 1 || m > 1024) throw FormatError("model iteration count " + std::to_string(m) + " out of range");
    chain.m = static_cast<int>(m);
    const std::uint32_t depth = r.u32();
    if (depth < 1 || depth > 16) throw FormatError("model depth " + std::to_string(depth) + " out of range");
    chain.cfg.depth = static_cast<int>(depth);
    chain.cfg.widths.clear();
    for (std::uint32_t l = 0; l < depth; ++l) {
        const std::uint32_t width = r.u32();
        if (width < 1 || width > 65536) throw FormatError("model width " + std::to_string(width) + " out of range");
        chain.cfg.widths.push_back(static_cast<int>(width));
    }
    chain.cfg.leaky_slope = r.f32();
    try {
        chain.cfg.validate();
    } catch (const ArgumentError& e) {
        throw FormatError(std::string("model config invalid: ") + e.what());
    }

    const std::size_t count = RefineChain::net_count(chain.mode, chain.m);
    for (std::size_t k = 0; k < count; ++k) {
        UNetParams net = zero_params(chain.cfg);
        for (auto& block : net.blocks) {
            const std::size_t at = r.pos();
            const std::uint32_t len = r.u32();
            if (len != block.value.size()) {
                throw FormatError("model block " + block.name + " at byte " + std::to_string(at) + " has " +
                                  std::to_string(len) + " values, expected " + std::to_string(block.value.size()));
            }
            r.need(static_cast<std::size_t>(len) * 4, block.name.c_str());
            for (double& v : block.value.data()) {
                const float f = r.f32();
                if (!std::isfinite(f)) throw FormatError("model block " + block.name + " holds a non-finite value");
                v = f;
            }
        }
        chain.nets.push_back(std::move(net));
    }
    if (!r.done()) throw FormatError("model file has trailing bytes after offset " + std::to_string(r.pos()));
    return chain;
}

void write_model_file(const std::string& path, const RefineChain& chain)
{
    const auto bytes = save_model(chain);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("failed writing '" + path + "'");
}

RefineChain read_model_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open model '" + path + "'");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return load_model(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

}  // namespace inkwell
