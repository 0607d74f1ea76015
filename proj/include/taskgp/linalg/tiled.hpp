#ifndef TASKGP_LINALG_TILED_HPP
#define TASKGP_LINALG_TILED_HPP

#pragma once

// Tiled matrices and the task-graph algorithms built on them.
//
// Each tile is held behind a future. Algorithms never modify a completed tile:
// every kernel invocation is submitted as a task whose dependencies are the
// futures of its input tiles, and the resulting future replaces the old one in
// the output structure. There is no barrier between algorithm steps, so the
// graph of a whole GP pipeline can be built up front and executed as one.
//
// All algorithms here submit tasks and therefore require a running runtime.
// They return immediately; call to_dense()/to_vector() (or get() on a tile)
// to wait for results.

#include "taskgp/linalg/tile.hpp"
#include "taskgp/runtime/runtime.hpp"

#include <cstddef>
#include <vector>

namespace taskgp::linalg {

using tile_future = rt::future<tile>;
using segment_future = rt::future<segment>;

/// Square matrix of order n split into T x T tiles of size n/T, with only the
/// lower tile triangle (i >= j) stored. Holds symmetric matrices and lower
/// triangular factors.
class tiled_matrix
{
  public:
    tiled_matrix() = default;

    /// Throws dimension_error unless T >= 1 and T divides n.
    tiled_matrix(std::size_t n, std::size_t tiles_per_dim);

    /// Lower tiles of `dense`; diagonal tiles are copied whole.
    static tiled_matrix from_dense(const matrix &dense, std::size_t tiles_per_dim);

    std::size_t n() const noexcept { return n_; }
    std::size_t tiles_per_dim() const noexcept { return tiles_; }
    std::size_t tile_size() const noexcept { return tiles_ == 0 ? 0 : n_ / tiles_; }

    tile_future &at(std::size_t i, std::size_t j);
    const tile_future &at(std::size_t i, std::size_t j) const;

    enum class fill
    {
        lower,      ///< upper triangle zero (for factors)
        symmetric,  ///< upper triangle mirrored from the lower one
    };

    /// Waits for every tile.
    matrix to_dense(fill mode) const;

  private:
    std::size_t index(std::size_t i, std::size_t j) const;

    std::size_t n_ = 0;
    std::size_t tiles_ = 0;
    std::vector<tile_future> grid_;
};

/// Vector of length n split into T segments of n/T.
class tiled_vector
{
  public:
    tiled_vector() = default;
    tiled_vector(std::size_t n, std::size_t tiles);

    static tiled_vector from_vector(const std::vector<double> &v, std::size_t tiles);

    std::size_t n() const noexcept { return n_; }
    std::size_t tiles() const noexcept { return segments_.size(); }
    std::size_t segment_size() const noexcept { return segments_.empty() ? 0 : n_ / segments_.size(); }

    segment_future &at(std::size_t i) { return segments_.at(i); }
    const segment_future &at(std::size_t i) const { return segments_.at(i); }

    std::vector<double> to_vector() const;

  private:
    std::size_t n_ = 0;
    std::vector<segment_future> segments_;
};

/// rows x cols matrix split into row_tiles x col_tiles full grid.
class rect_tiled_matrix
{
  public:
    rect_tiled_matrix() = default;
    rect_tiled_matrix(std::size_t rows, std::size_t cols, std::size_t row_tiles, std::size_t col_tiles);

    static rect_tiled_matrix from_dense(const matrix &dense, std::size_t row_tiles, std::size_t col_tiles);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t row_tiles() const noexcept { return row_tiles_; }
    std::size_t col_tiles() const noexcept { return col_tiles_; }
    std::size_t tile_rows() const noexcept { return row_tiles_ == 0 ? 0 : rows_ / row_tiles_; }
    std::size_t tile_cols() const noexcept { return col_tiles_ == 0 ? 0 : cols_ / col_tiles_; }

    tile_future &at(std::size_t i, std::size_t j) { return grid_.at(i * col_tiles_ + j); }
    const tile_future &at(std::size_t i, std::size_t j) const { return grid_.at(i * col_tiles_ + j); }

    matrix to_dense() const;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t row_tiles_ = 0;
    std::size_t col_tiles_ = 0;
    std::vector<tile_future> grid_;
};

// ---------------------------------------------------------------------------
// algorithms

/// Right-looking tiled Cholesky: for each step k, POTRF on (k,k), TRSM on
/// (i,k) for i > k, SYRK on (i,i) and GEMM on (i,j) for k < j < i.
tiled_matrix tiled_cholesky(const tiled_matrix &k);

/// beta with L * beta == b.
tiled_vector tiled_forward_solve(const tiled_matrix &l, const tiled_vector &b);

/// alpha with L^T * alpha == b.
tiled_vector tiled_backward_solve(const tiled_matrix &l, const tiled_vector &b);

/// W = B * L^{-T} (so W * L^T == B); same tiling as b, whose column tiling
/// must match l.
rect_tiled_matrix tiled_right_solve(const tiled_matrix &l, const rect_tiled_matrix &b);

/// V = L^{-1} * B^T, i.e. the transpose of tiled_right_solve. For an M x N
/// b the result is N x M with tile (k, c) the transpose of W's tile (c, k).
rect_tiled_matrix tiled_forward_solve_matrix(const tiled_matrix &l, const rect_tiled_matrix &b);

/// a * x; x must be tiled like a's columns. The result is tiled like a's rows.
tiled_vector tiled_gemv(const rect_tiled_matrix &a, const tiled_vector &x);

/// c - W * W^T for symmetric c (lower tile storage), W tiled with rows
/// matching c.
tiled_matrix tiled_syrk(const rect_tiled_matrix &w, const tiled_matrix &c);

/// diag(c) - rownorms(W)^2 where `d` holds diag(c).
tiled_vector tiled_diag_syrk(const rect_tiled_matrix &w, const tiled_vector &d);

/// Diagonal of a tiled symmetric matrix as a tiled vector.
tiled_vector tiled_diagonal(const tiled_matrix &a);

rt::future<double> tiled_dot(const tiled_vector &a, const tiled_vector &b);

}  // namespace taskgp::linalg

#endif
