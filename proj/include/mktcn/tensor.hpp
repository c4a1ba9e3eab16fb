#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mktcn/rng.hpp"

namespace mktcn {

// Dense row-major array of 64-bit floats. Shapes are fixed at construction;
// the whole project runs in double precision, training included.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    void fill(double v);
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    std::string shape_str() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// Standard matrix product in 64-bit arithmetic; throws on inner-dim mismatch.
Tensor matmul(const Tensor& a, const Tensor& b);

// Fills a tensor with i.i.d. draws from N(mean, std^2); std must be >= 0.
Tensor gaussian_fill(Rng& rng, std::vector<std::size_t> shape, double mean, double std);

// Numerically stable softmax (max subtraction). Throws on NaN input.
std::vector<double> softmax(const std::vector<double>& logits);

// Index of the maximum; ties resolve to the lowest index.
std::size_t argmax(const std::vector<double>& values);

}  // namespace mktcn
