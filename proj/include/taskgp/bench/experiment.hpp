#ifndef TASKGP_BENCH_EXPERIMENT_HPP
#define TASKGP_BENCH_EXPERIMENT_HPP

#pragma once

// Benchmark sweeps over (workers, tiles per dimension, problem size).
//
// Each cell starts a fresh runtime, runs untimed warmups, times the requested
// repetitions and stops the runtime again. Timing covers model construction,
// covariance assembly and the operation itself; data generation is excluded.

#include "taskgp/gp/kernel.hpp"
#include "taskgp/linalg/tile_kernels.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace taskgp::bench {

enum class operation
{
    optimize,
    predict,
    predict_full_cov,
    predict_var
};

/// CLI spelling: optimize, predict, predict-full-cov, predict-var.
std::string_view to_string(operation op) noexcept;

/// Accepts hyphens or underscores.
std::optional<operation> parse_operation(std::string_view name) noexcept;

struct experiment_spec
{
    operation op = operation::predict;
    std::vector<std::size_t> n_train{ 256 };
    /// Test points per cell; 0 means "same as n_train".
    std::size_t n_test = 0;
    std::size_t regressors = 8;
    std::vector<std::size_t> tiles{ 1 };
    std::vector<std::size_t> workers{ 1 };
    std::size_t repetitions = 5;
    std::size_t warmup = 1;
    std::uint64_t seed = 0;
    std::size_t optimize_iterations = 3;
    gp::kernel_params params{};
    /// Defaults to the fastest backend compiled in.
    std::optional<linalg::kernel_backend> backend;

    /// Throws invalid_config; checks every T divides every N.
    void validate() const;

    std::size_t test_size(std::size_t n) const noexcept { return n_test == 0 ? n : n_test; }
};

struct bench_record
{
    operation op = operation::predict;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::size_t regressors = 0;
    std::size_t tiles = 0;
    std::size_t workers = 0;
    std::size_t repetitions = 0;
    std::size_t warmup = 0;
    std::uint64_t seed = 0;
    std::string backend;
    bool ok = true;
    double mean_seconds = 0.0;
    double half_width_seconds = 0.0;
    std::vector<double> raw_seconds;
    std::string error;

    bool operator==(const bench_record &) const = default;
};

/// Called after each cell completes.
using progress_callback = std::function<void(const bench_record &)>;

/// Loop order: N, then T, then workers. A failing cell is recorded with
/// ok == false and the sweep continues. Throws invalid_config before
/// running anything if the spec is invalid, and already_running if a
/// runtime is active.
std::vector<bench_record> run_experiment(const experiment_spec &spec, const progress_callback &progress = {});

/// Half-width of the 95% percentile bootstrap interval of the mean
/// (`resamples` resamples, seeded). Zero when all times are equal.
double bootstrap_half_width(const std::vector<double> &times, std::size_t resamples = 1000,
                            std::uint64_t seed = 0);

/// Header plus one row per record. Throws invalid_config on an empty list.
void emit_csv(const std::vector<bench_record> &records, const std::string &path);

/// Reads a file written by emit_csv. Throws parse_error.
std::vector<bench_record> load_records_csv(const std::string &path);

struct speedup_entry
{
    std::size_t tiles = 0;
    std::size_t workers = 0;
    double mean_seconds = 0.0;
    double speedup = 1.0;
};

struct summary
{
    operation op = operation::predict;
    std::size_t n_train = 0;
    /// Per T: speedup over the fewest-workers record with the same T.
    std::vector<speedup_entry> parallel;
    /// Per worker count: speedup over the smallest-T record with the same workers.
    std::vector<speedup_entry> tiling;

    std::string text() const;
};

/// Successful records only. Throws invalid_config if no record succeeded or
/// records mix operations or problem sizes.
summary summarize(const std::vector<bench_record> &records);

}  // namespace taskgp::bench

#endif
