#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace camse {

// Dense row-major tensor of doubles. Rank 1 and 2 cover the whole model;
// scalars are shape {1}. Checkpoints may store f32, in-memory data is
// always f64.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t rows() const;
    std::size_t cols() const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    // Value of a single-element tensor.
    double item() const;

    void fill(double v);
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;
    std::string shape_str() const;

  private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
    std::size_t cols_ = 0;  // cached for 2-D row access
};

}  // namespace camse
