#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "hatcn/errors.hpp"

namespace hatcn {

// Dense row-major matrix of doubles. The unit of every network value:
// activations are channels-by-time, vectors are 1xN or Nx1 grids.
class Grid {
public:
    Grid() : rows_(0), cols_(0) {}

    Grid(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (rows == 0 || cols == 0) throw ConfigError("Grid: dimensions must be >= 1");
    }

    Grid(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (rows == 0 || cols == 0) throw ConfigError("Grid: dimensions must be >= 1");
        if (data_.size() != rows * cols) throw ConfigError("Grid: data length != rows*cols");
    }

    static Grid row(std::vector<double> v) {
        const std::size_t n = v.size();
        return Grid(1, n, std::move(v));
    }

    static Grid column(std::vector<double> v) {
        const std::size_t n = v.size();
        return Grid(n, 1, std::move(v));
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

    const std::vector<double>& values() const { return data_; }

    void fill(double v) { data_.assign(data_.size(), v); }

    bool same_shape(const Grid& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double sum() const {
        double s = 0.0;
        for (double v : data_) s += v;
        return s;
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

}  // namespace hatcn
