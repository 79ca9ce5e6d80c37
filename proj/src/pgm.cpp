#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "inkwell/error.hpp"
#include "inkwell/image.hpp"

namespace inkwell {

namespace {

struct PnmHeader {
    int channels = 1;
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::size_t payload_offset = 0;
};

[[noreturn]] void format_error(std::size_t offset, const std::string& what)
{
    std::ostringstream msg;
    msg << "PNM format error at byte " << offset << ": " << what;
    throw FormatError(msg.str());
}

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t pos() const { return pos_; }

    void skip_space_and_comments()
    {
        while (pos_ < bytes_.size()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    int read_int(const char* field)
    {
        skip_space_and_comments();
        const std::size_t start = pos_;
        long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000) format_error(start, std::string(field) + " is too large");
            ++pos_;
        }
        if (pos_ == start) format_error(start, std::string("expected ") + field);
        return static_cast<int>(value);
    }

    // exactly one whitespace byte separates maxval from the raster
    void expect_single_space()
    {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) format_error(pos_, "expected whitespace after maxval");
        ++pos_;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

PnmHeader parse_header(std::span<const std::uint8_t> bytes, bool allow_color)
{
    if (bytes.size() < 2 || bytes[0] != 'P') format_error(0, "missing 'P' magic");
    PnmHeader h;
    if (bytes[1] == '5') {
        h.channels = 1;
    } else if (bytes[1] == '6' && allow_color) {
        h.channels = 3;
    } else {
        format_error(1, std::string("unsupported magic 'P") + static_cast<char>(bytes[1]) + "'");
    }

    HeaderReader r(bytes.subspan(2));
    h.width = r.read_int("width");
    h.height = r.read_int("height");
    const std::size_t maxval_at = r.pos() + 2;
    h.maxval = r.read_int("maxval");
    if (h.width < 1 || h.height < 1) format_error(2, "zero image dimension");
    if (h.maxval < 1 || h.maxval > 255) format_error(maxval_at, "maxval must be in [1,255]");
    r.expect_single_space();
    h.payload_offset = r.pos() + 2;

    const std::size_t need = static_cast<std::size_t>(h.width) * h.height * h.channels;
    if (bytes.size() - h.payload_offset < need) {
        std::ostringstream what;
        what << "truncated payload: need " << need << " bytes, have " << bytes.size() - h.payload_offset;
        format_error(bytes.size(), what.str());
    }
    return h;
}

GrayImage decode(std::span<const std::uint8_t> bytes, bool allow_color)
{
    const PnmHeader h = parse_header(bytes, allow_color);
    const auto payload = bytes.subspan(h.payload_offset);
    const double scale = 1.0 / h.maxval;
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        if (h.channels == 1) {
            const std::uint8_t b = payload[i];
            if (b > h.maxval) format_error(h.payload_offset + i, "sample exceeds maxval");
            v = b * scale;
        } else {
            const std::uint8_t r = payload[3 * i];
            const std::uint8_t g = payload[3 * i + 1];
            const std::uint8_t b = payload[3 * i + 2];
            if (std::max({r, g, b}) > h.maxval) format_error(h.payload_offset + 3 * i, "sample exceeds maxval");
            v = (0.299 * r + 0.587 * g + 0.114 * b) * scale;
        }
        data[i] = std::clamp(v, 0.0, 1.0);
    }
    return GrayImage(h.width, h.height, std::move(data));
}

std::vector<std::uint8_t> read_bytes(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::uint8_t quantize_u8(double v)
{
    const double q = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
    return static_cast<std::uint8_t>(q);
}

GrayImage load_pgm(std::span<const std::uint8_t> bytes) { return decode(bytes, false); }

GrayImage load_pnm_as_gray(std::span<const std::uint8_t> bytes) { return decode(bytes, true); }

std::vector<std::uint8_t> save_pgm(const GrayImage& img)
{
    const std::string header =
        "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(header.size() + img.size());
    for (double v : img.data()) out.push_back(quantize_u8(v));
    return out;
}

GrayImage read_pgm_file(const std::string& path)
{
    const auto bytes = read_bytes(path);
    try {
        return load_pgm(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

GrayImage read_image_file(const std::string& path)
{
    const auto bytes = read_bytes(path);
    try {
        return load_pnm_as_gray(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

void write_pgm_file(const std::string& path, const GrayImage& img)
{
    const auto bytes = save_pgm(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ArgumentError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ArgumentError("write failed for '" + path + "'");
}

}  // namespace inkwell
