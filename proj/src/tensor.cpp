#include "inkwell/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "inkwell/error.hpp"
#include "inkwell/image.hpp"

namespace inkwell {

std::string Shape::str() const
{
    std::ostringstream s;
    s << n << "x" << c << "x" << h << "x" << w;
    return s.str();
}

namespace {

void check_shape(const Shape& s)
{
    if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) throw ShapeError("tensor dimensions must be >= 1, got " + s.str());
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(shape)
{
    check_shape(shape);
    data_.assign(shape.count(), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data))
{
    check_shape(shape);
    if (data_.size() != shape.count()) throw ShapeError("tensor data length does not match shape " + shape.str());
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other)
{
    if (!(shape_ == other.shape_)) throw ShapeError("cannot add " + other.shape_.str() + " to " + shape_.str());
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor to_tensor(const GrayImage& img)
{
    return Tensor({1, 1, img.height(), img.width()}, img.values());
}

GrayImage to_image(const Tensor& t, int n)
{
    GrayImage out(t.w(), t.h());
    const auto src = t.plane(n, 0);
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::clamp(src[i], 0.0, 1.0);
    return out;
}

}  // namespace inkwell
