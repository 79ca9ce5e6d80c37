#include "inkwell/image.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "inkwell/error.hpp"

namespace inkwell {

namespace {

void check_dims(int width, int height)
{
    if (width < 1 || height < 1) {
        std::ostringstream msg;
        msg << "image dimensions must be positive, got " << width << "x" << height;
        throw ArgumentError(msg.str());
    }
}

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

int reflect_index(int i, int n)
{
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

}  // namespace

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height)
{
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data))
{
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        std::ostringstream msg;
        msg << "image data length " << data_.size() << " does not match " << width << "x" << height;
        throw ArgumentError(msg.str());
    }
}

void GrayImage::validate() const
{
    for (std::size_t i = 0; i < data_.size(); ++i) {
        const double v = data_[i];
        if (!(v >= 0.0 && v <= 1.0)) {
            std::ostringstream msg;
            msg << "intensity " << v << " at index " << i << " is outside [0,1]";
            throw ArgumentError(msg.str());
        }
    }
}

void GrayImage::clamp01()
{
    for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
}

double GrayImage::mean() const
{
    double sum = 0.0;
    for (double v : data_) sum += v;
    return data_.empty() ? 0.0 : sum / static_cast<double>(data_.size());
}

double GrayImage::min_value() const { return *std::min_element(data_.begin(), data_.end()); }
double GrayImage::max_value() const { return *std::max_element(data_.begin(), data_.end()); }

std::vector<int> window_offsets(int extent, int size, int stride)
{
    if (size < 1 || size > extent) {
        std::ostringstream msg;
        msg << "window size " << size << " does not fit extent " << extent;
        throw ArgumentError(msg.str());
    }
    if (stride < 1) throw ArgumentError("stride must be >= 1");
    std::vector<int> offsets;
    const int last = extent - size;
    for (int o = 0; o < last; o += stride) offsets.push_back(o);
    offsets.push_back(last);
    return offsets;
}

PatchSet extract_patches(const GrayImage& img, int size, int stride)
{
    if (size > std::min(img.width(), img.height())) {
        std::ostringstream msg;
        msg << "patch size " << size << " exceeds image " << img.width() << "x" << img.height();
        throw ArgumentError(msg.str());
    }
    const auto xs = window_offsets(img.width(), size, stride);
    const auto ys = window_offsets(img.height(), size, stride);

    PatchSet set;
    set.patch_size = size;
    set.entries.reserve(xs.size() * ys.size());
    for (int y : ys) {
        for (int x : xs) set.entries.push_back({crop(img, x, y, size, size), x, y});
    }
    return set;
}

GrayImage stitch_average(const PatchSet& patches, int width, int height)
{
    check_dims(width, height);
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<long double> sum(n, 0.0L);
    std::vector<std::uint32_t> count(n, 0);

    for (const auto& e : patches.entries) {
        const int pw = e.patch.width();
        const int ph = e.patch.height();
        if (e.x < 0 || e.y < 0 || e.x + pw > width || e.y + ph > height) {
            std::ostringstream msg;
            msg << "patch at (" << e.x << "," << e.y << ") size " << pw << "x" << ph
                << " lies outside " << width << "x" << height;
            throw ArgumentError(msg.str());
        }
        for (int y = 0; y < ph; ++y) {
            const std::size_t row = static_cast<std::size_t>(e.y + y) * static_cast<std::size_t>(width) + e.x;
            for (int x = 0; x < pw; ++x) {
                sum[row + x] += e.patch.at(x, y);
                ++count[row + x];
            }
        }
    }

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (count[i] == 0) {
            std::ostringstream msg;
            msg << "pixel (" << i % width << "," << i / width << ") is not covered by any patch";
            throw CoverageError(msg.str());
        }
        out[i] = static_cast<double>(sum[i] / count[i]);
    }
    return GrayImage(width, height, std::move(out));
}

GrayImage resize_bilinear(const GrayImage& img, int new_width, int new_height)
{
    check_dims(new_width, new_height);
    if (new_width == img.width() && new_height == img.height()) return img;

    const double sx = static_cast<double>(img.width()) / new_width;
    const double sy = static_cast<double>(img.height()) / new_height;

    struct Tap {
        int i0, i1;
        double t;
    };
    auto taps = [](int n_out, int n_in, double scale) {
        std::vector<Tap> out(static_cast<std::size_t>(n_out));
        for (int d = 0; d < n_out; ++d) {
            const double src = std::clamp((d + 0.5) * scale - 0.5, 0.0, static_cast<double>(n_in - 1));
            const int i0 = static_cast<int>(std::floor(src));
            const int i1 = std::min(i0 + 1, n_in - 1);
            out[static_cast<std::size_t>(d)] = {i0, i1, src - i0};
        }
        return out;
    };
    const auto tx = taps(new_width, img.width(), sx);
    const auto ty = taps(new_height, img.height(), sy);

    GrayImage out(new_width, new_height);
    for (int y = 0; y < new_height; ++y) {
        const Tap& vy = ty[static_cast<std::size_t>(y)];
        for (int x = 0; x < new_width; ++x) {
            const Tap& vx = tx[static_cast<std::size_t>(x)];
            const double a = img.at(vx.i0, vy.i0);
            const double b = img.at(vx.i1, vy.i0);
            const double c = img.at(vx.i0, vy.i1);
            const double d = img.at(vx.i1, vy.i1);
            const double top = a + vx.t * (b - a);
            const double bottom = c + vx.t * (d - c);
            const double v = top + vy.t * (bottom - top);
            // keep the result inside the hull of its four taps despite rounding
            const double lo = std::min({a, b, c, d});
            const double hi = std::max({a, b, c, d});
            out.at(x, y) = std::clamp(v, lo, hi);
        }
    }
    return out;
}

GrayImage rotate90(const GrayImage& img, int quarter_turns)
{
    if (quarter_turns < 0 || quarter_turns > 3) throw ArgumentError("quarter_turns must be in {0,1,2,3}");
    if (quarter_turns == 0) return img;

    const int w = img.width();
    const int h = img.height();
    const bool swap = quarter_turns % 2 == 1;
    GrayImage out(swap ? h : w, swap ? w : h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = img.at(x, y);
            switch (quarter_turns) {
            case 1: out.at(h - 1 - y, x) = v; break;
            case 2: out.at(w - 1 - x, h - 1 - y) = v; break;
            default: out.at(y, w - 1 - x) = v; break;
            }
        }
    }
    return out;
}

GrayImage crop(const GrayImage& img, int x, int y, int width, int height)
{
    if (x < 0 || y < 0 || width < 1 || height < 1 || x + width > img.width() || y + height > img.height()) {
        std::ostringstream msg;
        msg << "crop (" << x << "," << y << ") " << width << "x" << height << " outside " << img.width() << "x"
            << img.height();
        throw ArgumentError(msg.str());
    }
    GrayImage out(width, height);
    for (int r = 0; r < height; ++r) {
        const auto src = img.data().subspan(static_cast<std::size_t>(y + r) * img.width() + x, width);
        std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(r) * width);
    }
    return out;
}

GrayImage pad_reflect(const GrayImage& img, int new_width, int new_height)
{
    if (new_width < img.width() || new_height < img.height()) throw ArgumentError("pad_reflect cannot shrink");
    GrayImage out(new_width, new_height);
    for (int y = 0; y < new_height; ++y) {
        const int sy = reflect_index(y, img.height());
        for (int x = 0; x < new_width; ++x) out.at(x, y) = img.at(reflect_index(x, img.width()), sy);
    }
    return out;
}

GrayImage center_region(const GrayImage& img, int size)
{
    if (size < 1) throw ArgumentError("region size must be positive");
    const int x0 = (img.width() - size) / 2;
    const int y0 = (img.height() - size) / 2;
    GrayImage out(size, size);
    for (int y = 0; y < size; ++y) {
        const int sy = clamp_index(y0 + y, img.height());
        for (int x = 0; x < size; ++x) out.at(x, y) = img.at(clamp_index(x0 + x, img.width()), sy);
    }
    return out;
}

double mean_abs_diff(const GrayImage& a, const GrayImage& b)
{
    if (a.width() != b.width() || a.height() != b.height()) throw ArgumentError("mean_abs_diff: size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a.data()[i] - b.data()[i]);
    return sum / static_cast<double>(a.size());
}

}  // namespace inkwell
