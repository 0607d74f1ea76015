#ifndef TASKGP_DATA_MSD_HPP
#define TASKGP_DATA_MSD_HPP

#pragma once

// Nonlinear (Duffing-type) mass-spring-damper:
//
//     m x'' + c x' + k x + k3 x^3 = u(t)
//
// integrated with fixed-step classical RK4. The position trajectory is the
// raw material for lag-embedded GP regression datasets.

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

namespace taskgp::data {

struct no_forcing
{
};

/// u(t) = amplitude * sin(2 pi frequency t)
struct sine_forcing
{
    double amplitude = 1.0;
    double frequency = 0.1;
};

using forcing = std::variant<no_forcing, sine_forcing>;

struct msd_config
{
    double mass = 1.0;
    double damping = 0.3;
    double stiffness = 1.0;
    double cubic_stiffness = 0.5;
    double dt = 0.05;
    std::size_t steps = 1000;
    forcing input = sine_forcing{ 1.0, 0.1 };
    double initial_position = 0.0;
    double initial_velocity = 0.0;
    std::uint64_t seed = 0;
    double noise_std = 0.01;

    /// Throws invalid_config for non-physical or degenerate settings.
    void validate() const;
};

struct msd_trajectory
{
    std::vector<double> position;
    std::vector<double> velocity;
};

/// Noise-free states at t = 0, dt, ..., (steps-1) dt.
/// Throws divergence_error if a state exceeds 1e12 in magnitude.
msd_trajectory simulate_msd_states(const msd_config &cfg);

/// Positions with additive Gaussian measurement noise (std noise_std, seeded).
std::vector<double> simulate_msd(const msd_config &cfg);

}  // namespace taskgp::data

#endif
