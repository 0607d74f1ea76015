#ifndef TASKGP_LINALG_TILE_HPP
#define TASKGP_LINALG_TILE_HPP

#pragma once

#include "taskgp/error.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace taskgp::linalg {

/// Dense row-major block of doubles. Also used as the plain dense matrix type.
class tile
{
  public:
    tile() = default;

    tile(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) { }

    tile(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data))
    {
        if (data_.size() != rows_ * cols_)
            throw dimension_error("tile data length does not match rows*cols");
    }

    static tile identity(std::size_t n)
    {
        tile t(n, n);
        for (std::size_t i = 0; i < n; ++i)
            t(i, i) = 1.0;
        return t;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double &operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return { data_.data() + i * cols_, cols_ }; }
    std::span<const double> row(std::size_t i) const noexcept { return { data_.data() + i * cols_, cols_ }; }

    double *data() noexcept { return data_.data(); }
    const double *data() const noexcept { return data_.data(); }
    std::span<const double> values() const noexcept { return data_; }

    tile transposed() const
    {
        tile t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                t(j, i) = (*this)(i, j);
        return t;
    }

    friend bool operator==(const tile &, const tile &) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

using matrix = tile;

/// Contiguous slice of a tiled vector.
using segment = std::vector<double>;

}  // namespace taskgp::linalg

#endif
