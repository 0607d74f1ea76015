#ifndef TASKGP_GP_KERNEL_HPP
#define TASKGP_GP_KERNEL_HPP

#pragma once

#include "taskgp/dataset.hpp"
#include "taskgp/linalg/tiled.hpp"

#include <cstddef>
#include <memory>
#include <span>

namespace taskgp::gp {

struct trainable_flags
{
    bool lengthscale = true;
    bool vertical_scale = true;
    bool noise_variance = true;

    bool any() const noexcept { return lengthscale || vertical_scale || noise_variance; }
};

/// Squared-exponential kernel hyperparameters.
struct kernel_params
{
    double lengthscale = 1.0;
    double vertical_scale = 1.0;
    double noise_variance = 0.1;
    trainable_flags trainable{};

    /// Throws invalid_config unless l > 0, nu > 0, sigma^2 >= 0 (all finite).
    void validate() const;
};

/// nu * exp(-|zi - zj|^2 / (2 l^2)) + [same_index] * sigma^2
///
/// `same_index` marks the two arguments as the same training sample; the noise
/// term never applies between different samples or across datasets.
double kernel(std::span<const double> zi, std::span<const double> zj, bool same_index, const kernel_params &p);

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

/// Noisy training covariance K, one task per lower tile. Requires the runtime.
linalg::tiled_matrix assemble_covariance(std::shared_ptr<const linalg::matrix> z, const kernel_params &p,
                                         std::size_t tiles);

/// K(test, train) without noise, test_tiles x train_tiles grid.
linalg::rect_tiled_matrix assemble_cross_covariance(std::shared_ptr<const linalg::matrix> test,
                                                    std::shared_ptr<const linalg::matrix> train,
                                                    const kernel_params &p, std::size_t test_tiles,
                                                    std::size_t train_tiles);

/// Noise-free prior covariance of the test inputs.
linalg::tiled_matrix assemble_prior_covariance(std::shared_ptr<const linalg::matrix> test, const kernel_params &p,
                                               std::size_t tiles);

/// Diagonal of the noise-free prior covariance (constant nu).
linalg::tiled_vector assemble_prior_variance(std::size_t m, const kernel_params &p, std::size_t tiles);

// Convenience overloads that copy the inputs.
linalg::tiled_matrix assemble_covariance(const dataset &data, const kernel_params &p, std::size_t tiles);
linalg::rect_tiled_matrix assemble_cross_covariance(const dataset &test, const dataset &train, const kernel_params &p,
                                                    std::size_t test_tiles, std::size_t train_tiles);

}  // namespace taskgp::gp

#endif
