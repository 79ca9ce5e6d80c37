#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace inkwell {

/// Single-channel raster with row-major intensities in [0,1].
///
/// Construction checks the size invariant. The value range is checked by
/// `validate()` and restored by `clamp01()`; hot loops write through `data()`
/// without per-pixel checks.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, double fill = 0.0);
    GrayImage(int width, int height, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double at(int x, int y) const { return data_[index(x, y)]; }
    double& at(int x, int y) { return data_[index(x, y)]; }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }
    const std::vector<double>& values() const { return data_; }

    /// Throws ArgumentError if any value is outside [0,1] or non-finite.
    void validate() const;
    void clamp01();

    double mean() const;
    double min_value() const;
    double max_value() const;

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

struct PatchEntry {
    GrayImage patch;
    int x = 0;
    int y = 0;
};

/// Square patches cut from one source image, with their top-left offsets.
struct PatchSet {
    int patch_size = 0;
    std::vector<PatchEntry> entries;
};

// PGM (binary P5) ------------------------------------------------------------

GrayImage load_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> save_pgm(const GrayImage& img);

GrayImage read_pgm_file(const std::string& path);
void write_pgm_file(const std::string& path, const GrayImage& img);

/// Accepts P5 or P6; colour input is converted with BT.601 luma weights.
GrayImage load_pnm_as_gray(std::span<const std::uint8_t> bytes);
GrayImage read_image_file(const std::string& path);

/// round-half-up quantization used by save_pgm
std::uint8_t quantize_u8(double v);

// Geometry -------------------------------------------------------------------

/// Sliding-window offsets along one axis; the last window is flush with the border.
std::vector<int> window_offsets(int extent, int size, int stride);

PatchSet extract_patches(const GrayImage& img, int size, int stride);
GrayImage stitch_average(const PatchSet& patches, int width, int height);

GrayImage resize_bilinear(const GrayImage& img, int new_width, int new_height);

/// Positive quarter turns rotate clockwise.
GrayImage rotate90(const GrayImage& img, int quarter_turns);

GrayImage crop(const GrayImage& img, int x, int y, int width, int height);

/// Reflect-pads (mirror without repeating the edge pixel) on the right and bottom.
GrayImage pad_reflect(const GrayImage& img, int new_width, int new_height);

/// Crop of side `size` centred on the image; regions outside replicate the edge.
GrayImage center_region(const GrayImage& img, int size);

double mean_abs_diff(const GrayImage& a, const GrayImage& b);

}  // namespace inkwell
