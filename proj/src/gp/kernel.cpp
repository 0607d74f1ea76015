#include "taskgp/gp/kernel.hpp"

#include <cmath>
#include <string>

namespace taskgp::gp {

using linalg::matrix;
using linalg::tile;

void kernel_params::validate() const
{
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
        throw invalid_config("kernel_params: lengthscale must be positive, got " + std::to_string(lengthscale));
    if (!(vertical_scale > 0.0) || !std::isfinite(vertical_scale))
        throw invalid_config("kernel_params: vertical_scale must be positive, got " + std::to_string(vertical_scale));
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
        throw invalid_config("kernel_params: noise_variance must be non-negative, got "
                             + std::to_string(noise_variance));
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept
{
    double r2 = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d)
    {
        double const diff = a[d] - b[d];
        r2 += diff * diff;
    }
    return r2;
}

namespace {

double se_value(double r2, const kernel_params &p) noexcept
{
    return p.vertical_scale * std::exp(-r2 / (2.0 * p.lengthscale * p.lengthscale));
}

}  // namespace

double kernel(std::span<const double> zi, std::span<const double> zj, bool same_index, const kernel_params &p)
{
    if (zi.size() != zj.size())
        throw dimension_error("kernel: feature vectors differ in length");
    double const k = se_value(squared_distance(zi, zj), p);
    return same_index ? k + p.noise_variance : k;
}

namespace {

// Kernel block between rows [r0, r0+rows) of `a` and [c0, c0+cols) of `b`.
// `noise_on_diagonal` adds sigma^2 where global row index equals column index.
tile kernel_block(const matrix &a, std::size_t r0, std::size_t rows, const matrix &b, std::size_t c0,
                  std::size_t cols, const kernel_params &p, bool noise_on_diagonal)
{
    tile t(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
    {
        auto const zi = a.row(r0 + i);
        for (std::size_t j = 0; j < cols; ++j)
        {
            double v = se_value(squared_distance(zi, b.row(c0 + j)), p);
            if (noise_on_diagonal && r0 + i == c0 + j)
                v += p.noise_variance;
            t(i, j) = v;
        }
    }
    return t;
}

linalg::tiled_matrix assemble_symmetric(std::shared_ptr<const matrix> z, const kernel_params &p, std::size_t tiles,
                                        bool with_noise)
{
    p.validate();
    linalg::tiled_matrix k(z->rows(), tiles);
    std::size_t const b = k.tile_size();
    for (std::size_t i = 0; i < tiles; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            k.at(i, j) = rt::async([z, p, i, j, b, with_noise] {
                return kernel_block(*z, i * b, b, *z, j * b, b, p, with_noise);
            });
    return k;
}

}  // namespace

linalg::tiled_matrix assemble_covariance(std::shared_ptr<const matrix> z, const kernel_params &p, std::size_t tiles)
{
    return assemble_symmetric(std::move(z), p, tiles, true);
}

linalg::tiled_matrix assemble_prior_covariance(std::shared_ptr<const matrix> test, const kernel_params &p,
                                               std::size_t tiles)
{
    return assemble_symmetric(std::move(test), p, tiles, false);
}

linalg::rect_tiled_matrix assemble_cross_covariance(std::shared_ptr<const matrix> test,
                                                    std::shared_ptr<const matrix> train, const kernel_params &p,
                                                    std::size_t test_tiles, std::size_t train_tiles)
{
    p.validate();
    if (test->cols() != train->cols())
        throw dimension_error("cross covariance: test and training inputs differ in dimension");
    linalg::rect_tiled_matrix k(test->rows(), train->rows(), test_tiles, train_tiles);
    std::size_t const br = k.tile_rows();
    std::size_t const bc = k.tile_cols();
    for (std::size_t i = 0; i < test_tiles; ++i)
        for (std::size_t j = 0; j < train_tiles; ++j)
            k.at(i, j) = rt::async([test, train, p, i, j, br, bc] {
                return kernel_block(*test, i * br, br, *train, j * bc, bc, p, false);
            });
    return k;
}

linalg::tiled_vector assemble_prior_variance(std::size_t m, const kernel_params &p, std::size_t tiles)
{
    p.validate();
    linalg::tiled_vector d(m, tiles);
    std::size_t const b = d.segment_size();
    double const nu = p.vertical_scale;
    for (std::size_t i = 0; i < tiles; ++i)
        d.at(i) = rt::async([b, nu] { return linalg::segment(b, nu); });
    return d;
}

linalg::tiled_matrix assemble_covariance(const dataset &data, const kernel_params &p, std::size_t tiles)
{
    return assemble_covariance(std::make_shared<const matrix>(data.z), p, tiles);
}

linalg::rect_tiled_matrix assemble_cross_covariance(const dataset &test, const dataset &train, const kernel_params &p,
                                                    std::size_t test_tiles, std::size_t train_tiles)
{
    return assemble_cross_covariance(std::make_shared<const matrix>(test.z), std::make_shared<const matrix>(train.z),
                                     p, test_tiles, train_tiles);
}

}  // namespace taskgp::gp
