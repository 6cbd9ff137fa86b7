#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "geff/error.hpp"
#include "geff/rng.hpp"

namespace geff {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense row-major matrix of doubles. 64-bit everywhere: gradient checks need
// the headroom.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    static Tensor zeros(int r, int c) { return Tensor(r, c); }
    static Tensor full(int r, int c, double v) {
        Tensor t(r, c);
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }
    static Tensor scalar(double v) { return full(1, 1, v); }
    static Tensor from_rows(int r, int c, std::vector<double> values) {
        if (static_cast<std::size_t>(r) * c != values.size())
            throw ShapeError("from_rows: size mismatch");
        Tensor t;
        t.rows = r;
        t.cols = c;
        t.data = std::move(values);
        return t;
    }

    std::size_t size() const { return data.size(); }
    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    double* row_ptr(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const double* row_ptr(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    bool is_scalar() const { return rows == 1 && cols == 1; }
    double scalar_value() const {
        if (!is_scalar()) throw NotScalarError("tensor is not 1x1");
        return data[0];
    }
    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    Eigen::Map<EMat> map() { return Eigen::Map<EMat>(data.data(), rows, cols); }
    Eigen::Map<const EMat> map() const { return Eigen::Map<const EMat>(data.data(), rows, cols); }
};

// Uniform(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(int fan_in, int fan_out, Rng& rng);

}  // namespace geff
