#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace inkwell {

struct Shape {
    int n = 1;
    int c = 1;
    int h = 1;
    int w = 1;

    std::size_t count() const
    {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
               static_cast<std::size_t>(w);
    }
    std::size_t plane() const { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

/// N x C x H x W array of doubles, row-major.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    const Shape& shape() const { return shape_; }
    int n() const { return shape_.n; }
    int c() const { return shape_.c; }
    int h() const { return shape_.h; }
    int w() const { return shape_.w; }
    std::size_t size() const { return data_.size(); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& at(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
    double at(int n, int c, int y, int x) const { return data_[offset(n, c, y, x)]; }

    /// One H x W plane.
    std::span<double> plane(int n, int c) { return std::span<double>(data_).subspan(offset(n, c, 0, 0), shape_.plane()); }
    std::span<const double> plane(int n, int c) const
    {
        return std::span<const double>(data_).subspan(offset(n, c, 0, 0), shape_.plane());
    }

    void fill(double v);
    Tensor& operator+=(const Tensor& other);

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::size_t offset(int n, int c, int y, int x) const
    {
        return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
    }

    Shape shape_;
    std::vector<double> data_;
};

class GrayImage;

/// 1 x 1 x H x W view of an image.
Tensor to_tensor(const GrayImage& img);
/// Builds an image from channel 0 of sample `n`, clamping to [0,1].
GrayImage to_image(const Tensor& t, int n = 0);

}  // namespace inkwell
