#include "taskgp/data/msd.hpp"

#include "taskgp/error.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace taskgp::data {

namespace {

constexpr double divergence_limit = 1e12;

double forcing_at(const forcing &f, double t)
{
    if (const auto *s = std::get_if<sine_forcing>(&f))
        return s->amplitude * std::sin(2.0 * std::numbers::pi * s->frequency * t);
    return 0.0;
}

using state = std::array<double, 2>;

state derivative(const msd_config &c, const state &s, double t)
{
    double const x = s[0];
    double const v = s[1];
    double const a = (forcing_at(c.input, t) - c.damping * v - c.stiffness * x - c.cubic_stiffness * x * x * x) / c.mass;
    return { v, a };
}

}  // namespace

void msd_config::validate() const
{
    if (!(mass > 0.0))
        throw invalid_config("msd_config: mass must be positive");
    if (!(stiffness > 0.0))
        throw invalid_config("msd_config: stiffness must be positive");
    if (!(damping >= 0.0) || !(cubic_stiffness >= 0.0))
        throw invalid_config("msd_config: damping and cubic_stiffness must be non-negative");
    if (!(dt > 0.0))
        throw invalid_config("msd_config: dt must be positive");
    if (steps < 2)
        throw invalid_config("msd_config: at least two steps are required");
    if (!(noise_std >= 0.0))
        throw invalid_config("msd_config: noise_std must be non-negative");
}

msd_trajectory simulate_msd_states(const msd_config &cfg)
{
    cfg.validate();
    msd_trajectory out;
    out.position.resize(cfg.steps);
    out.velocity.resize(cfg.steps);

    state s{ cfg.initial_position, cfg.initial_velocity };
    double const h = cfg.dt;
    for (std::size_t i = 0; i < cfg.steps; ++i)
    {
        out.position[i] = s[0];
        out.velocity[i] = s[1];
        if (!(std::abs(s[0]) <= divergence_limit) || !(std::abs(s[1]) <= divergence_limit))
            throw divergence_error("mass-spring-damper diverged at step " + std::to_string(i));
        if (i + 1 == cfg.steps)
            break;

        double const t = static_cast<double>(i) * h;
        auto const k1 = derivative(cfg, s, t);
        auto const k2 = derivative(cfg, { s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1] }, t + 0.5 * h);
        auto const k3 = derivative(cfg, { s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1] }, t + 0.5 * h);
        auto const k4 = derivative(cfg, { s[0] + h * k3[0], s[1] + h * k3[1] }, t + h);
        for (std::size_t d = 0; d < 2; ++d)
            s[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
    }
    return out;
}

std::vector<double> simulate_msd(const msd_config &cfg)
{
    std::vector<double> x = simulate_msd_states(cfg).position;
    if (cfg.noise_std > 0.0)
    {
        std::mt19937_64 rng(cfg.seed);
        std::normal_distribution<double> noise(0.0, cfg.noise_std);
        for (double &v : x)
            v += noise(rng);
    }
    return x;
}

}  // namespace taskgp::data
