#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "subsetflow/errors.hpp"

namespace subsetflow {

// Dense row-major tensor of 64-bit floats.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(count(shape_), 0.0);
    }

    Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
        data_.assign(count(shape_), fill);
    }

    static Tensor scalar(double v) {
        Tensor t({1});
        t.data_[0] = v;
        return t;
    }

    static Tensor vec(std::vector<double> v) {
        Tensor t;
        t.shape_ = {static_cast<int>(v.size())};
        t.data_ = std::move(v);
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int size() const { return static_cast<int>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<const double> view() const { return {data_.data(), data_.size()}; }

    double& operator[](int i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int i) const { return data_[static_cast<size_t>(i)]; }

    int rows() const { return shape_.size() == 2 ? shape_[0] : (shape_.empty() ? 0 : shape_[0]); }
    int cols() const { return shape_.size() == 2 ? shape_[1] : 1; }

    double& at2(int r, int c) { return data_[static_cast<size_t>(r) * shape_[1] + c]; }
    double at2(int r, int c) const { return data_[static_cast<size_t>(r) * shape_[1] + c]; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    static size_t count(const std::vector<int>& shape) {
        size_t n = 1;
        for (int e : shape) {
            if (e < 0) throw ContractError("negative tensor extent");
            n *= static_cast<size_t>(e);
        }
        return shape.empty() ? 0 : n;
    }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

}  // namespace subsetflow
