#include "taskgp/gp/gp_model.hpp"

#include "taskgp/linalg/tile_kernels.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace taskgp::gp {

using linalg::matrix;
using linalg::rect_tiled_matrix;
using linalg::segment;
using linalg::tile;
using linalg::tiled_matrix;
using linalg::tiled_vector;

void adam_config::validate() const
{
    if (iterations < 1)
        throw invalid_config("adam_config: iterations must be at least 1");
    if (!(learning_rate > 0.0))
        throw invalid_config("adam_config: learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw invalid_config("adam_config: beta1 and beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0))
        throw invalid_config("adam_config: epsilon must be positive");
}

namespace {

void clamp_variance(double &v)
{
    if (v >= 0.0)
        return;
    if (v >= -variance_clamp_tolerance)
    {
        v = 0.0;
        return;
    }
    throw numerical_error("predicted variance " + std::to_string(v) + " is below the round-off tolerance");
}

rt::future<double> log_det(const tiled_matrix &l)
{
    rt::future<double> acc = rt::make_ready_future(0.0);
    for (std::size_t k = 0; k < l.tiles_per_dim(); ++k)
        acc = rt::dataflow(
            [](const tile &t, double s) {
                for (std::size_t i = 0; i < t.rows(); ++i)
                    s += 2.0 * std::log(t(i, i));
                return s;
            },
            l.at(k, k), acc);
    return acc;
}

tiled_matrix zero_symmetric(std::size_t n, std::size_t tiles)
{
    tiled_matrix z(n, tiles);
    std::size_t const b = z.tile_size();
    auto const zero = rt::make_ready_future(tile(b, b));
    for (std::size_t i = 0; i < tiles; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            z.at(i, j) = zero;
    return z;
}

rect_tiled_matrix identity_rect(std::size_t n, std::size_t tiles)
{
    rect_tiled_matrix id(n, n, tiles, tiles);
    std::size_t const b = id.tile_rows();
    auto const zero = rt::make_ready_future(tile(b, b));
    auto const eye = rt::make_ready_future(tile::identity(b));
    for (std::size_t i = 0; i < tiles; ++i)
        for (std::size_t j = 0; j < tiles; ++j)
            id.at(i, j) = i == j ? eye : zero;
    return id;
}

// Contribution of one lower tile (i, j) to
//   sum_ab (alpha_a alpha_b - Kinv_ab) * dK_ab / dtheta
// for theta = (l, nu, sigma^2). Off-diagonal tiles count twice.
std::array<double, 3> gradient_tile(const matrix &z, const kernel_params &p, std::size_t i, std::size_t j,
                                    std::size_t b, const tile &neg_kinv, const segment &ai, const segment &aj)
{
    double const l2 = p.lengthscale * p.lengthscale;
    double const l3 = l2 * p.lengthscale;
    std::array<double, 3> acc{};
    for (std::size_t r = 0; r < b; ++r)
    {
        auto const zr = z.row(i * b + r);
        for (std::size_t c = 0; c < b; ++c)
        {
            double const coef = ai[r] * aj[c] + neg_kinv(r, c);
            double const r2 = squared_distance(zr, z.row(j * b + c));
            double const e = std::exp(-r2 / (2.0 * l2));
            acc[0] += coef * p.vertical_scale * e * r2 / l3;
            acc[1] += coef * e;
            if (i == j && r == c)
                acc[2] += coef;
        }
    }
    if (i != j)
        for (auto &v : acc)
            v *= 2.0;
    return acc;
}

double log_2pi_term(std::size_t n)
{
    return 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

}  // namespace

// ---------------------------------------------------------------------------

gp_model::gp_model(dataset train, kernel_params params, std::size_t tiles_per_dim)
    : params_(params), tiles_(tiles_per_dim)
{
    train.validate();
    params_.validate();
    if (tiles_ == 0 || train.size() % tiles_ != 0)
        throw dimension_error("gp_model: tiles_per_dim " + std::to_string(tiles_) + " does not divide N = "
                              + std::to_string(train.size()));
    train_z_ = std::make_shared<const matrix>(train.z);
    train_ = std::make_shared<const dataset>(std::move(train));
}

void gp_model::set_params(const kernel_params &p)
{
    p.validate();
    params_ = p;
    factor_.reset();
}

std::size_t gp_model::test_tiles_for(std::size_t m) const noexcept
{
    if (m % tiles_ == 0)
        return tiles_;
    return std::gcd(m, tiles_);
}

const tiled_matrix &gp_model::factor() const
{
    if (!factor_)
        factor_ = linalg::tiled_cholesky(assemble_covariance(train_z_, params_, tiles_));
    return *factor_;
}

tiled_vector gp_model::targets() const
{
    return tiled_vector::from_vector(train_->y, tiles_);
}

tiled_vector gp_model::alpha() const
{
    const tiled_matrix &l = factor();
    return linalg::tiled_backward_solve(l, linalg::tiled_forward_solve(l, targets()));
}

void gp_model::check_test(const matrix &test) const
{
    if (test.cols() != train_->dims())
        throw dimension_error("predict: test inputs have " + std::to_string(test.cols()) + " columns, model expects "
                              + std::to_string(train_->dims()));
    if (test.rows() == 0)
        throw dimension_error("predict: empty test set");
}

prediction_result gp_model::predict(const matrix &test) const
{
    check_test(test);
    return rt::run_as_root([&] {
        auto const tz = std::make_shared<const matrix>(test);
        std::size_t const mt = test_tiles_for(test.rows());
        auto const cross = assemble_cross_covariance(tz, train_z_, params_, mt, tiles_);
        auto const mean = linalg::tiled_gemv(cross, alpha());
        return prediction_result{ mean.to_vector(), std::monostate{} };
    });
}

prediction_result gp_model::predict_with_full_cov(const matrix &test) const
{
    check_test(test);
    return rt::run_as_root([&] {
        auto const tz = std::make_shared<const matrix>(test);
        std::size_t const mt = test_tiles_for(test.rows());
        const tiled_matrix &l = factor();
        auto const cross = assemble_cross_covariance(tz, train_z_, params_, mt, tiles_);
        auto const mean = linalg::tiled_gemv(cross, alpha());
        // W = K(test, train) L^{-T}; Sigma = K(test, test) - W W^T
        auto const w = linalg::tiled_right_solve(l, cross);
        auto const sigma = linalg::tiled_syrk(w, assemble_prior_covariance(tz, params_, mt));

        matrix cov = sigma.to_dense(tiled_matrix::fill::symmetric);
        for (std::size_t i = 0; i < cov.rows(); ++i)
            clamp_variance(cov(i, i));
        return prediction_result{ mean.to_vector(), std::move(cov) };
    });
}

prediction_result gp_model::predict_variance(const matrix &test) const
{
    check_test(test);
    return rt::run_as_root([&] {
        auto const tz = std::make_shared<const matrix>(test);
        std::size_t const mt = test_tiles_for(test.rows());
        const tiled_matrix &l = factor();
        auto const cross = assemble_cross_covariance(tz, train_z_, params_, mt, tiles_);
        auto const mean = linalg::tiled_gemv(cross, alpha());
        auto const w = linalg::tiled_right_solve(l, cross);
        auto const var = linalg::tiled_diag_syrk(w, assemble_prior_variance(test.rows(), params_, mt));

        std::vector<double> v = var.to_vector();
        for (double &x : v)
            clamp_variance(x);
        return prediction_result{ mean.to_vector(), std::move(v) };
    });
}

double gp_model::log_likelihood() const
{
    return rt::run_as_root([&] {
        const tiled_matrix &l = factor();
        auto const beta = linalg::tiled_forward_solve(l, targets());
        auto const quad = linalg::tiled_dot(beta, beta);
        auto const logdet = log_det(l);
        return -0.5 * logdet.get() - 0.5 * quad.get() - log_2pi_term(train_->size());
    });
}

gp_model::loss_and_gradient gp_model::evaluate_loss_and_gradient() const
{
    return rt::run_as_root([&] {
        const tiled_matrix &l = factor();
        std::size_t const n = train_->size();
        auto const beta = linalg::tiled_forward_solve(l, targets());
        auto const a = linalg::tiled_backward_solve(l, beta);
        auto const quad = linalg::tiled_dot(beta, beta);
        auto const logdet = log_det(l);

        loss_and_gradient out{};
        const trainable_flags &flags = params_.trainable;
        if (flags.any())
        {
            // K^{-1} = L^{-T} L^{-1} = W W^T with W = I L^{-T}; tiled_syrk gives -K^{-1}.
            auto const w = linalg::tiled_right_solve(l, identity_rect(n, tiles_));
            auto const neg_kinv = linalg::tiled_syrk(w, zero_symmetric(n, tiles_));

            std::size_t const b = l.tile_size();
            std::vector<rt::future<std::array<double, 3>>> parts;
            for (std::size_t i = 0; i < tiles_; ++i)
                for (std::size_t j = 0; j <= i; ++j)
                    parts.push_back(rt::dataflow(
                        [z = train_z_, p = params_, i, j, b](const tile &nk, const segment &ai, const segment &aj) {
                            return gradient_tile(*z, p, i, j, b, nk, ai, aj);
                        },
                        neg_kinv.at(i, j), a.at(i), a.at(j)));

            std::array<double, 3> sum{};
            for (const auto &f : parts)
            {
                const auto &v = f.get();
                for (std::size_t k = 0; k < 3; ++k)
                    sum[k] += v[k];
            }
            // d(-log L)/d theta = -1/2 * sum
            out.grad.lengthscale = flags.lengthscale ? -0.5 * sum[0] : 0.0;
            out.grad.vertical_scale = flags.vertical_scale ? -0.5 * sum[1] : 0.0;
            out.grad.noise_variance = flags.noise_variance ? -0.5 * sum[2] : 0.0;
        }
        out.loss = 0.5 * logdet.get() + 0.5 * quad.get() + log_2pi_term(n);
        return out;
    });
}

gradient gp_model::loss_gradients() const
{
    if (!params_.trainable.any())
        return {};
    return evaluate_loss_and_gradient().grad;
}

std::vector<double> gp_model::optimize(const adam_config &opt)
{
    opt.validate();

    auto fail_at = [](const not_positive_definite &e, std::size_t iteration) {
        return not_positive_definite(std::string(e.what()) + " (optimizer iteration " + std::to_string(iteration) + ")",
                                     iteration);
    };

    kernel_params p = params_;
    if (p.trainable.noise_variance && p.noise_variance < noise_floor)
        p.noise_variance = noise_floor;
    set_params(p);

    std::vector<double> history;
    history.reserve(opt.iterations);
    for (std::size_t it = 0; it < opt.iterations; ++it)
    {
        loss_and_gradient lg;
        try
        {
            lg = evaluate_loss_and_gradient();
        }
        catch (const not_positive_definite &e)
        {
            throw fail_at(e, it);
        }
        if (it > 0)
            history.push_back(lg.loss);

        std::array<double, 3> theta{ params_.lengthscale, params_.vertical_scale, params_.noise_variance };
        std::array<double, 3> const g{ lg.grad.lengthscale, lg.grad.vertical_scale, lg.grad.noise_variance };
        std::array<bool, 3> const train{ params_.trainable.lengthscale, params_.trainable.vertical_scale,
                                         params_.trainable.noise_variance };

        ++adam_.step;
        double const t = static_cast<double>(adam_.step);
        for (std::size_t k = 0; k < 3; ++k)
        {
            if (!train[k])
                continue;
            // chain rule onto u = log(theta)
            double const gu = theta[k] * g[k];
            adam_.m[k] = opt.beta1 * adam_.m[k] + (1.0 - opt.beta1) * gu;
            adam_.v[k] = opt.beta2 * adam_.v[k] + (1.0 - opt.beta2) * gu * gu;
            double const mhat = adam_.m[k] / (1.0 - std::pow(opt.beta1, t));
            double const vhat = adam_.v[k] / (1.0 - std::pow(opt.beta2, t));
            double const u = std::log(theta[k]) - opt.learning_rate * mhat / (std::sqrt(vhat) + opt.epsilon);
            theta[k] = std::exp(u);
        }
        p = params_;
        p.lengthscale = theta[0];
        p.vertical_scale = theta[1];
        p.noise_variance = train[2] ? std::max(theta[2], noise_floor) : theta[2];
        set_params(p);
    }

    try
    {
        history.push_back(-log_likelihood());
    }
    catch (const not_positive_definite &e)
    {
        throw fail_at(e, opt.iterations);
    }
    return history;
}

}  // namespace taskgp::gp
