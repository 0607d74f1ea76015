#include "taskgp/linalg/tiled.hpp"

#include "taskgp/linalg/tile_kernels.hpp"

#include <numeric>
#include <string>

namespace taskgp::linalg {

namespace {

void check_tiling(std::size_t n, std::size_t tiles, const char *what)
{
    if (tiles == 0)
        throw dimension_error(std::string(what) + ": tile count must be positive");
    if (n == 0 || n % tiles != 0)
        throw dimension_error(std::string(what) + ": tile count " + std::to_string(tiles)
                              + " does not divide dimension " + std::to_string(n));
}

tile copy_block(const matrix &dense, std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols)
{
    tile t(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            t(i, j) = dense(r0 + i, c0 + j);
    return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// tiled_matrix

tiled_matrix::tiled_matrix(std::size_t n, std::size_t tiles_per_dim) : n_(n), tiles_(tiles_per_dim)
{
    check_tiling(n, tiles_per_dim, "tiled_matrix");
    grid_.resize(tiles_ * (tiles_ + 1) / 2);
}

tiled_matrix tiled_matrix::from_dense(const matrix &dense, std::size_t tiles_per_dim)
{
    if (dense.rows() != dense.cols())
        throw dimension_error("tiled_matrix::from_dense: matrix must be square");
    tiled_matrix out(dense.rows(), tiles_per_dim);
    std::size_t const b = out.tile_size();
    for (std::size_t i = 0; i < tiles_per_dim; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            out.at(i, j) = rt::make_ready_future(copy_block(dense, i * b, j * b, b, b));
    return out;
}

std::size_t tiled_matrix::index(std::size_t i, std::size_t j) const
{
    if (i >= tiles_ || j > i)
        throw dimension_error("tiled_matrix: tile (" + std::to_string(i) + "," + std::to_string(j)
                              + ") is outside the stored lower triangle");
    return i * (i + 1) / 2 + j;
}

tile_future &tiled_matrix::at(std::size_t i, std::size_t j)
{
    return grid_[index(i, j)];
}

const tile_future &tiled_matrix::at(std::size_t i, std::size_t j) const
{
    return grid_[index(i, j)];
}

matrix tiled_matrix::to_dense(fill mode) const
{
    matrix out(n_, n_);
    std::size_t const b = tile_size();
    for (std::size_t ti = 0; ti < tiles_; ++ti)
    {
        for (std::size_t tj = 0; tj <= ti; ++tj)
        {
            const tile &t = at(ti, tj).get();
            for (std::size_t i = 0; i < b; ++i)
            {
                for (std::size_t j = 0; j < b; ++j)
                {
                    std::size_t const r = ti * b + i;
                    std::size_t const c = tj * b + j;
                    if (c > r)
                        continue;
                    out(r, c) = t(i, j);
                    if (mode == fill::symmetric)
                        out(c, r) = t(i, j);
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// tiled_vector

tiled_vector::tiled_vector(std::size_t n, std::size_t tiles) : n_(n)
{
    check_tiling(n, tiles, "tiled_vector");
    segments_.resize(tiles);
}

tiled_vector tiled_vector::from_vector(const std::vector<double> &v, std::size_t tiles)
{
    tiled_vector out(v.size(), tiles);
    std::size_t const b = out.segment_size();
    for (std::size_t i = 0; i < tiles; ++i)
        out.at(i) = rt::make_ready_future(segment(v.begin() + static_cast<std::ptrdiff_t>(i * b),
                                                  v.begin() + static_cast<std::ptrdiff_t>((i + 1) * b)));
    return out;
}

std::vector<double> tiled_vector::to_vector() const
{
    std::vector<double> out;
    out.reserve(n_);
    for (const auto &s : segments_)
    {
        const segment &v = s.get();
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// rect_tiled_matrix

rect_tiled_matrix::rect_tiled_matrix(std::size_t rows, std::size_t cols, std::size_t row_tiles,
                                     std::size_t col_tiles)
    : rows_(rows), cols_(cols), row_tiles_(row_tiles), col_tiles_(col_tiles)
{
    check_tiling(rows, row_tiles, "rect_tiled_matrix rows");
    check_tiling(cols, col_tiles, "rect_tiled_matrix cols");
    grid_.resize(row_tiles * col_tiles);
}

rect_tiled_matrix rect_tiled_matrix::from_dense(const matrix &dense, std::size_t row_tiles, std::size_t col_tiles)
{
    rect_tiled_matrix out(dense.rows(), dense.cols(), row_tiles, col_tiles);
    std::size_t const br = out.tile_rows();
    std::size_t const bc = out.tile_cols();
    for (std::size_t i = 0; i < row_tiles; ++i)
        for (std::size_t j = 0; j < col_tiles; ++j)
            out.at(i, j) = rt::make_ready_future(copy_block(dense, i * br, j * bc, br, bc));
    return out;
}

matrix rect_tiled_matrix::to_dense() const
{
    matrix out(rows_, cols_);
    std::size_t const br = tile_rows();
    std::size_t const bc = tile_cols();
    for (std::size_t ti = 0; ti < row_tiles_; ++ti)
    {
        for (std::size_t tj = 0; tj < col_tiles_; ++tj)
        {
            const tile &t = at(ti, tj).get();
            for (std::size_t i = 0; i < br; ++i)
                for (std::size_t j = 0; j < bc; ++j)
                    out(ti * br + i, tj * bc + j) = t(i, j);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// algorithms

tiled_matrix tiled_cholesky(const tiled_matrix &k)
{
    tiled_matrix a = k;
    std::size_t const t = a.tiles_per_dim();
    for (std::size_t s = 0; s < t; ++s)
    {
        a.at(s, s) = rt::dataflow([](const tile &x) { return potrf(x); }, a.at(s, s));
        for (std::size_t i = s + 1; i < t; ++i)
            a.at(i, s) = rt::dataflow([](const tile &l, const tile &b) { return trsm(l, b); }, a.at(s, s), a.at(i, s));
        for (std::size_t i = s + 1; i < t; ++i)
        {
            a.at(i, i) =
                rt::dataflow([](const tile &x, const tile &c) { return syrk(x, c); }, a.at(i, s), a.at(i, i));
            for (std::size_t j = s + 1; j < i; ++j)
                a.at(i, j) = rt::dataflow([](const tile &x, const tile &y, const tile &c) { return gemm(x, y, c); },
                                          a.at(i, s), a.at(j, s), a.at(i, j));
        }
    }
    return a;
}

tiled_vector tiled_forward_solve(const tiled_matrix &l, const tiled_vector &b)
{
    if (b.tiles() != l.tiles_per_dim() || b.n() != l.n())
        throw dimension_error("tiled_forward_solve: vector tiling does not match the factor");
    tiled_vector x = b;
    std::size_t const t = l.tiles_per_dim();
    for (std::size_t k = 0; k < t; ++k)
    {
        x.at(k) = rt::dataflow([](const tile &lk, const segment &v) { return trsv(lk, v); }, l.at(k, k), x.at(k));
        for (std::size_t i = k + 1; i < t; ++i)
            x.at(i) = rt::dataflow([](const tile &a, const segment &v, const segment &y) { return gemv_sub(a, v, y); },
                                   l.at(i, k), x.at(k), x.at(i));
    }
    return x;
}

tiled_vector tiled_backward_solve(const tiled_matrix &l, const tiled_vector &b)
{
    if (b.tiles() != l.tiles_per_dim() || b.n() != l.n())
        throw dimension_error("tiled_backward_solve: vector tiling does not match the factor");
    tiled_vector x = b;
    std::size_t const t = l.tiles_per_dim();
    for (std::size_t k = t; k-- > 0;)
    {
        x.at(k) = rt::dataflow([](const tile &lk, const segment &v) { return trsv_trans(lk, v); }, l.at(k, k), x.at(k));
        for (std::size_t i = 0; i < k; ++i)
            x.at(i) = rt::dataflow(
                [](const tile &a, const segment &v, const segment &y) { return gemv_trans_sub(a, v, y); }, l.at(k, i),
                x.at(k), x.at(i));
    }
    return x;
}

rect_tiled_matrix tiled_right_solve(const tiled_matrix &l, const rect_tiled_matrix &b)
{
    if (b.col_tiles() != l.tiles_per_dim() || b.cols() != l.n())
        throw dimension_error("tiled_right_solve: column tiling does not match the factor");
    rect_tiled_matrix w = b;
    std::size_t const t = l.tiles_per_dim();
    for (std::size_t c = 0; c < w.row_tiles(); ++c)
    {
        for (std::size_t k = 0; k < t; ++k)
        {
            tile_future acc = w.at(c, k);
            for (std::size_t j = 0; j < k; ++j)
                acc = rt::dataflow([](const tile &x, const tile &y, const tile &z) { return gemm(x, y, z); }, w.at(c, j),
                                   l.at(k, j), acc);
            w.at(c, k) = rt::dataflow([](const tile &lk, const tile &z) { return trsm(lk, z); }, l.at(k, k), acc);
        }
    }
    return w;
}

rect_tiled_matrix tiled_forward_solve_matrix(const tiled_matrix &l, const rect_tiled_matrix &b)
{
    rect_tiled_matrix const w = tiled_right_solve(l, b);
    rect_tiled_matrix v(w.cols(), w.rows(), w.col_tiles(), w.row_tiles());
    for (std::size_t c = 0; c < w.row_tiles(); ++c)
        for (std::size_t k = 0; k < w.col_tiles(); ++k)
            v.at(k, c) = rt::dataflow([](const tile &x) { return x.transposed(); }, w.at(c, k));
    return v;
}

tiled_vector tiled_gemv(const rect_tiled_matrix &a, const tiled_vector &x)
{
    if (x.tiles() != a.col_tiles() || x.n() != a.cols())
        throw dimension_error("tiled_gemv: vector tiling does not match the matrix columns");
    tiled_vector y(a.rows(), a.row_tiles());
    for (std::size_t r = 0; r < a.row_tiles(); ++r)
    {
        segment_future acc = rt::make_ready_future(segment(a.tile_rows(), 0.0));
        for (std::size_t c = 0; c < a.col_tiles(); ++c)
            acc = rt::dataflow([](const tile &m, const segment &v, const segment &s) { return gemv_add(m, v, s); },
                               a.at(r, c), x.at(c), acc);
        y.at(r) = acc;
    }
    return y;
}

tiled_matrix tiled_syrk(const rect_tiled_matrix &w, const tiled_matrix &c)
{
    if (w.row_tiles() != c.tiles_per_dim() || w.rows() != c.n())
        throw dimension_error("tiled_syrk: row tiling does not match the symmetric matrix");
    tiled_matrix out = c;
    std::size_t const t = c.tiles_per_dim();
    for (std::size_t i = 0; i < t; ++i)
    {
        for (std::size_t j = 0; j <= i; ++j)
        {
            tile_future acc = out.at(i, j);
            for (std::size_t k = 0; k < w.col_tiles(); ++k)
            {
                if (i == j)
                    acc = rt::dataflow([](const tile &x, const tile &z) { return syrk(x, z); }, w.at(i, k), acc);
                else
                    acc = rt::dataflow([](const tile &x, const tile &y, const tile &z) { return gemm(x, y, z); },
                                       w.at(i, k), w.at(j, k), acc);
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

tiled_vector tiled_diag_syrk(const rect_tiled_matrix &w, const tiled_vector &d)
{
    if (w.row_tiles() != d.tiles() || w.rows() != d.n())
        throw dimension_error("tiled_diag_syrk: row tiling does not match the diagonal");
    tiled_vector out = d;
    for (std::size_t i = 0; i < d.tiles(); ++i)
    {
        segment_future acc = out.at(i);
        for (std::size_t k = 0; k < w.col_tiles(); ++k)
            acc = rt::dataflow([](const tile &x, const segment &s) { return diag_syrk_sub(x, s); }, w.at(i, k), acc);
        out.at(i) = acc;
    }
    return out;
}

tiled_vector tiled_diagonal(const tiled_matrix &a)
{
    tiled_vector d(a.n(), a.tiles_per_dim());
    for (std::size_t i = 0; i < a.tiles_per_dim(); ++i)
        d.at(i) = rt::dataflow(
            [](const tile &x) {
                segment s(x.rows());
                for (std::size_t r = 0; r < x.rows(); ++r)
                    s[r] = x(r, r);
                return s;
            },
            a.at(i, i));
    return d;
}

rt::future<double> tiled_dot(const tiled_vector &a, const tiled_vector &b)
{
    if (a.tiles() != b.tiles() || a.n() != b.n())
        throw dimension_error("tiled_dot: tiling mismatch");
    rt::future<double> acc = rt::make_ready_future(0.0);
    for (std::size_t i = 0; i < a.tiles(); ++i)
        acc = rt::dataflow([](const segment &x, const segment &y, double s) { return s + dot(x, y); }, a.at(i), b.at(i),
                           acc);
    return acc;
}

}  // namespace taskgp::linalg
