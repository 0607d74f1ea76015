#ifndef TASKGP_GP_GP_MODEL_HPP
#define TASKGP_GP_GP_MODEL_HPP

#pragma once

#include "taskgp/dataset.hpp"
#include "taskgp/gp/kernel.hpp"
#include "taskgp/linalg/tiled.hpp"

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

namespace taskgp::gp {

/// Variances in [-variance_clamp_tolerance, 0) are rounded up to zero; anything
/// more negative raises numerical_error.
inline constexpr double variance_clamp_tolerance = 1e-9;

struct prediction_result
{
    std::vector<double> mean;
    std::variant<std::monostate, std::vector<double>, linalg::matrix> uncertainty;

    bool has_variance() const noexcept { return std::holds_alternative<std::vector<double>>(uncertainty); }
    bool has_covariance() const noexcept { return std::holds_alternative<linalg::matrix>(uncertainty); }
    const std::vector<double> &variance() const { return std::get<std::vector<double>>(uncertainty); }
    const linalg::matrix &covariance() const { return std::get<linalg::matrix>(uncertainty); }
};

struct adam_config
{
    double learning_rate = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t iterations = 100;

    void validate() const;
};

/// Adam moments over the log-parameters (lengthscale, vertical scale, noise).
struct adam_state
{
    std::array<double, 3> m{};
    std::array<double, 3> v{};
    std::size_t step = 0;
};

/// Gradient of the negative log marginal likelihood with respect to the raw
/// hyperparameters. Entries of frozen parameters are zero.
struct gradient
{
    double lengthscale = 0.0;
    double vertical_scale = 0.0;
    double noise_variance = 0.0;
};

/// Lower bound applied to a trained noise variance.
inline constexpr double noise_floor = 1e-12;

/// Gaussian-process regression model with a squared-exponential kernel.
///
/// Every public computation runs as a task graph inside the runtime (through
/// run_as_root, or inline when already on a worker), so a runtime must be
/// running. The Cholesky factor of the training covariance is cached and
/// dropped whenever the hyperparameters change. Calls on one model must be
/// serialized by the caller.
class gp_model
{
  public:
    /// `tiles_per_dim` must divide the number of training samples.
    gp_model(dataset train, kernel_params params, std::size_t tiles_per_dim);

    const dataset &train() const noexcept { return *train_; }
    const kernel_params &params() const noexcept { return params_; }
    std::size_t tiles_per_dim() const noexcept { return tiles_; }
    const adam_state &optimizer_state() const noexcept { return adam_; }

    void set_params(const kernel_params &p);

    /// Test tiling: tiles_per_dim when it divides M, otherwise gcd(M, tiles_per_dim).
    std::size_t test_tiles_for(std::size_t m) const noexcept;

    prediction_result predict(const linalg::matrix &test) const;
    prediction_result predict_with_full_cov(const linalg::matrix &test) const;
    prediction_result predict_variance(const linalg::matrix &test) const;

    /// log L = -1/2 log|K| - 1/2 y^T K^{-1} y - N/2 log(2 pi)
    double log_likelihood() const;

    /// Gradient of -log L via d log L / d theta = 1/2 tr((alpha alpha^T - K^{-1}) dK/dtheta).
    gradient loss_gradients() const;

    /// Runs `opt.iterations` Adam steps on log-parameters and returns the
    /// negative log-likelihood after every step.
    std::vector<double> optimize(const adam_config &opt);

    bool has_cached_factor() const noexcept { return factor_.has_value(); }

  private:
    struct loss_and_gradient
    {
        double loss;
        gradient grad;
    };

    const linalg::tiled_matrix &factor() const;
    linalg::tiled_vector alpha() const;
    linalg::tiled_vector targets() const;
    void check_test(const linalg::matrix &test) const;
    loss_and_gradient evaluate_loss_and_gradient() const;

    std::shared_ptr<const dataset> train_;
    std::shared_ptr<const linalg::matrix> train_z_;
    kernel_params params_;
    std::size_t tiles_;
    adam_state adam_;
    mutable std::optional<linalg::tiled_matrix> factor_;
};

}  // namespace taskgp::gp

#endif
