#include "camse/tensor.hpp"

#include <numeric>
#include <sstream>

#include "camse/errors.hpp"

namespace camse {

namespace {
std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    data_.assign(shape_product(shape_), 0.0);
    cols_ = shape_.size() == 2 ? shape_[1] : (shape_.empty() ? 0 : shape_.back());
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size()) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str());
    }
    cols_ = shape_.size() == 2 ? shape_[1] : (shape_.empty() ? 0 : shape_.back());
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

std::size_t Tensor::rows() const {
    if (ndim() != 2) throw DimensionError("rows() on non-matrix tensor " + shape_str());
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (ndim() != 2) throw DimensionError("cols() on non-matrix tensor " + shape_str());
    return shape_[1];
}

double Tensor::item() const {
    if (size() != 1) throw DimensionError("item() on tensor of size " + std::to_string(size()));
    return data_[0];
}

void Tensor::fill(double v) {
    for (double& x : data_) x = v;
}

bool Tensor::all_finite() const {
    for (double x : data_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << 'x';
        os << shape_[i];
    }
    os << ']';
    return os.str();
}

}  // namespace camse
