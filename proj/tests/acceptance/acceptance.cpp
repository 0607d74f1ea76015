// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and limits are fixed below.
//
//   acceptance [--only <name>]

#include "oracle/dense_oracle.hpp"
#include "support/convert.hpp"
#include "support/gp_fixtures.hpp"
#include "support/random_dag.hpp"
#include "taskgp/bench/experiment.hpp"
#include "taskgp/gp/gp_model.hpp"
#include "taskgp/linalg/tiled.hpp"
#include "taskgp/runtime/runtime.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <future>
#include <random>
#include <string>
#include <thread>
#include <vector>

using namespace taskgp;
using taskgp::testing::make_gp_problem;
using taskgp::testing::to_dataset;
using taskgp::testing::to_mat;
using taskgp::testing::to_oracle;
using taskgp::testing::to_tile;

namespace {

constexpr double oracle_tol = 1e-8;
constexpr double oracle_time_limit_s = 60.0;
constexpr double gradient_rel_tol = 1e-5;
constexpr double gradient_fd_step = 1e-5;
constexpr double gradient_time_limit_s = 30.0;
constexpr double diag_tol = 1e-12;
constexpr double determinism_tol = 1e-10;
constexpr double min_parallel_speedup = 2.0;
constexpr double min_tiling_speedup = 1.5;
constexpr double dag_timeout_s = 120.0;

struct outcome
{
    bool pass;
    std::string detail;
};

struct runtime_guard
{
    explicit runtime_guard(std::size_t workers) { rt::start_runtime({ .worker_count = workers }); }
    ~runtime_guard() { rt::stop_runtime(); }
    runtime_guard(const runtime_guard &) = delete;
    runtime_guard &operator=(const runtime_guard &) = delete;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char *f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

gp::kernel_params random_params(std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> u(0.5, 1.5);
    gp::kernel_params p;
    p.lengthscale = u(rng);
    p.vertical_scale = u(rng);
    p.noise_variance = 0.1 * u(rng);
    return p;
}

oracle::vec diagonal(const oracle::mat &a)
{
    oracle::vec d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        d[i] = a[i][i];
    return d;
}

// ---------------------------------------------------------------------------

outcome oracle_equivalence()
{
    auto const t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::string worst_where = "-";
    std::size_t configs = 0;
    auto note = [&](double err, const std::string &where) {
        if (!(err <= worst))
        {
            worst = std::isnan(err) ? INFINITY : err;
            worst_where = where;
        }
    };

    runtime_guard g(4);
    std::uint64_t seed = 100;
    for (auto backend : taskgp::testing::available_backends())
    {
        linalg::scoped_kernel_backend kb(backend);
        for (std::size_t n : { 16, 64, 256 })
        {
            for (std::size_t m : { 16, 64 })
            {
                for (std::size_t t : { 1, 4, 8 })
                {
                    if (n % t != 0)
                        continue;
                    ++configs;
                    std::string const where = fmt("%s N=%zu M=%zu T=%zu", std::string(linalg::to_string(backend)).c_str(), n, m, t);
                    std::mt19937_64 rng(seed);
                    auto const prob = make_gp_problem(n, m, 1 + seed % 4, seed);
                    ++seed;
                    auto const p = random_params(rng);
                    auto const op = to_oracle(p);

                    auto const z = std::make_shared<const linalg::matrix>(to_tile(prob.train));
                    auto const l = rt::run_as_root([&] {
                        return linalg::tiled_cholesky(gp::assemble_covariance(z, p, t))
                            .to_dense(linalg::tiled_matrix::fill::lower);
                    });
                    auto const l_ref = oracle::cholesky(oracle::train_cov(prob.train, op));
                    note(l_ref ? oracle::max_abs_diff(to_mat(l), *l_ref) : INFINITY, where + " cholesky");

                    gp::gp_model const model(to_dataset(prob.train, prob.y), p, t);
                    auto const test = to_tile(prob.test);
                    auto const mean_ref = oracle::predict_mean(prob.train, prob.y, prob.test, op);
                    auto const cov_ref = oracle::predict_cov(prob.train, prob.test, op);

                    note(oracle::max_abs_diff(model.predict(test).mean, mean_ref), where + " predict");
                    auto const full = model.predict_with_full_cov(test);
                    note(std::max(oracle::max_abs_diff(full.mean, mean_ref),
                                  oracle::max_abs_diff(to_mat(full.covariance()), cov_ref)),
                         where + " predict_with_full_cov");
                    auto const var = model.predict_variance(test);
                    note(std::max(oracle::max_abs_diff(var.mean, mean_ref),
                                  oracle::max_abs_diff(var.variance(), diagonal(cov_ref))),
                         where + " predict_var");
                    note(std::abs(model.log_likelihood() - oracle::log_likelihood(prob.train, prob.y, op)),
                         where + " log_likelihood");
                }
            }
        }
    }
    double const elapsed = seconds_since(t0);
    return { worst <= oracle_tol && elapsed < oracle_time_limit_s,
             fmt("%zu configurations, max abs err %.3e at %s (tol %.0e), %.2f s (limit %.0f s)", configs, worst,
                 worst_where.c_str(), oracle_tol, elapsed, oracle_time_limit_s) };
}

outcome gradient_acceptance()
{
    auto const t0 = std::chrono::steady_clock::now();
    runtime_guard g(4);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
        std::mt19937_64 rng(7000 + seed);
        auto const prob = make_gp_problem(32, 1, 1 + seed % 3, 7000 + seed);
        auto const p = random_params(rng);
        auto const op = to_oracle(p);
        gp::gp_model const model(to_dataset(prob.train, prob.y), p, 4);
        auto const grad = model.loss_gradients();

        // central differences of the dense negative log-likelihood in log(theta)
        auto nll = [&](oracle::gp_params q) { return -oracle::log_likelihood(prob.train, prob.y, q); };
        auto fd = [&](double oracle::gp_params::*member) {
            auto up = op;
            auto dn = op;
            up.*member = op.*member * std::exp(gradient_fd_step);
            dn.*member = op.*member * std::exp(-gradient_fd_step);
            return (nll(up) - nll(dn)) / (2.0 * gradient_fd_step);
        };
        auto rel = [](double got, double want) { return std::abs(got - want) / std::abs(want); };
        worst = std::max({ worst, rel(grad.lengthscale * p.lengthscale, fd(&oracle::gp_params::lengthscale)),
                           rel(grad.vertical_scale * p.vertical_scale, fd(&oracle::gp_params::vertical)),
                           rel(grad.noise_variance * p.noise_variance, fd(&oracle::gp_params::noise)) });
        if (std::isnan(worst))
            worst = INFINITY;
    }
    double const elapsed = seconds_since(t0);
    return { worst <= gradient_rel_tol && elapsed < gradient_time_limit_s,
             fmt("20 models N=32, max rel err %.3e (tol %.0e), %.2f s (limit %.0f s)", worst, gradient_rel_tol,
                 elapsed, gradient_time_limit_s) };
}

outcome diag_consistency()
{
    runtime_guard g(4);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed)
    {
        std::mt19937_64 rng(300 + seed);
        std::size_t const n = std::size_t{ 16 } << (seed % 4);
        std::size_t const t = std::size_t{ 1 } << (seed % 4);
        auto const prob = make_gp_problem(n, 8 * (1 + seed % 3), 1 + seed % 4, 300 + seed);
        gp::gp_model const model(to_dataset(prob.train, prob.y), random_params(rng), t);
        auto const test = to_tile(prob.test);
        auto const full = model.predict_with_full_cov(test);
        auto const var = model.predict_variance(test);
        auto const &cov = full.covariance();
        for (std::size_t i = 0; i < var.variance().size(); ++i)
        {
            double const e = std::abs(cov(i, i) - var.variance()[i]);
            worst = std::isnan(e) ? INFINITY : std::max(worst, e);
        }
    }
    return { worst <= diag_tol, fmt("10 instances, max |diag(cov) - var| %.3e (tol %.0e)", worst, diag_tol) };
}

outcome determinism()
{
    auto const prob = make_gp_problem(64, 32, 3, 4242);
    gp::kernel_params p;
    p.lengthscale = 0.9;
    p.vertical_scale = 1.2;
    p.noise_variance = 0.05;
    auto const test = to_tile(prob.test);

    auto run = [&](std::size_t workers, std::size_t tiles) {
        runtime_guard g(workers);
        gp::gp_model model(to_dataset(prob.train, prob.y), p, tiles);
        std::vector<double> out = model.predict(test).mean;
        auto const full = model.predict_with_full_cov(test);
        out.insert(out.end(), full.covariance().values().begin(), full.covariance().values().end());
        auto const var = model.predict_variance(test).variance();
        out.insert(out.end(), var.begin(), var.end());
        out.push_back(model.log_likelihood());
        auto const gr = model.loss_gradients();
        out.insert(out.end(), { gr.lengthscale, gr.vertical_scale, gr.noise_variance });
        gp::adam_config opt;
        opt.iterations = 5;
        auto const hist = model.optimize(opt);
        out.insert(out.end(), hist.begin(), hist.end());
        return out;
    };

    auto const ref = run(1, 1);
    double worst = 0.0;
    for (std::size_t w : { 1, 4 })
        for (std::size_t t : { 1, 4 })
        {
            auto const got = run(w, t);
            double const e = got.size() == ref.size() ? oracle::max_abs_diff(got, ref) : INFINITY;
            worst = std::isnan(e) ? INFINITY : std::max(worst, e);
        }
    return { worst <= determinism_tol,
             fmt("workers {1,4} x T {1,4}, max deviation %.3e (tol %.0e)", worst, determinism_tol) };
}

outcome scaling()
{
    bench::experiment_spec spec;
    spec.op = bench::operation::predict_full_cov;
    spec.n_train = { 2048 };
    spec.tiles = { 1, 8 };
    spec.workers = { 1, 4 };
    spec.repetitions = 5;
    spec.warmup = 1;
    auto const recs = bench::run_experiment(spec);

    auto mean = [&](std::size_t t, std::size_t w) {
        for (const auto &r : recs)
            if (r.tiles == t && r.workers == w && r.ok)
                return r.mean_seconds;
        return std::numeric_limits<double>::quiet_NaN();
    };
    double const parallel = mean(8, 1) / mean(8, 4);
    double const tiling = mean(1, 4) / mean(8, 4);
    bool const pass = parallel >= min_parallel_speedup && tiling >= min_tiling_speedup;
    return { pass, fmt("predict_full_cov N=M=2048 (%s kernels): 4w vs 1w at T=8 %.2fx (need %.1f), T=8 vs T=1 at 4w "
                       "%.2fx (need %.1f); means T8w1 %.3f s, T8w4 %.3f s, T1w4 %.3f s; hardware threads %u",
                       recs.front().backend.c_str(), parallel, min_parallel_speedup, tiling, min_tiling_speedup,
                       mean(8, 1), mean(8, 4), mean(1, 4), std::thread::hardware_concurrency()) };
}

outcome var_only_advantage()
{
    bench::experiment_spec spec;
    spec.n_train = { 4096 };
    spec.tiles = { 8 };
    spec.workers = { 4 };
    spec.repetitions = 5;
    spec.warmup = 1;

    spec.op = bench::operation::predict_full_cov;
    auto const full = bench::run_experiment(spec).front();
    spec.op = bench::operation::predict_var;
    auto const var = bench::run_experiment(spec).front();
    bool const pass = full.ok && var.ok && var.mean_seconds < full.mean_seconds;
    return { pass, fmt("N=M=4096, T=8, 4 workers (%s kernels): var-only %.3f s +- %.3f, full-cov %.3f s +- %.3f",
                       var.backend.c_str(), var.mean_seconds, var.half_width_seconds, full.mean_seconds,
                       full.half_width_seconds) };
}

outcome lifecycle()
{
    // drain before stop
    std::atomic<std::size_t> counter{ 0 };
    rt::start_runtime({ .worker_count = 4 });
    for (int i = 0; i < 1000; ++i)
        (void)rt::async([&counter] {
            std::this_thread::sleep_for(std::chrono::microseconds(20));
            counter.fetch_add(1, std::memory_order_relaxed);
        });
    rt::stop_runtime();
    std::size_t const drained = counter.load();

    // random DAGs under a watchdog
    auto dags = std::async(std::launch::async, [] {
        std::size_t mismatches = 0;
        runtime_guard g(4);
        for (std::uint64_t seed = 0; seed < 100; ++seed)
        {
            std::size_t const nodes = 1 + (seed * 37) % 200;
            auto const dag = taskgp::testing::make_random_dag(nodes, 1 + seed % 6, 9000 + seed);
            auto const want = taskgp::testing::evaluate_sequential(dag);
            auto const got = rt::run_as_root([&] { return taskgp::testing::evaluate_tasks(dag); });
            if (got != want)
                ++mismatches;
        }
        return mismatches;
    });
    if (dags.wait_for(std::chrono::duration<double>(dag_timeout_s)) != std::future_status::ready)
    {
        std::printf("FAIL  lifecycle: 100 random DAGs did not finish within %.0f s (deadlock)\n", dag_timeout_s);
        std::fflush(stdout);
        std::_Exit(1);
    }
    std::size_t const mismatches = dags.get();
    bool const pass = drained == 1000 && mismatches == 0 && rt::state() == rt::lifecycle::stopped;
    return { pass, fmt("drain counter %zu/1000; 100 random DAGs (<=200 nodes, 4 workers), %zu mismatches, no deadlock",
                       drained, mismatches) };
}

}  // namespace

int main(int argc, char **argv)
{
    std::string only;
    if (argc == 3 && std::string(argv[1]) == "--only")
        only = argv[2];

    struct criterion
    {
        const char *name;
        std::function<outcome()> run;
    };
    std::vector<criterion> const criteria{
        { "oracle-equivalence", oracle_equivalence },
        { "gradients", gradient_acceptance },
        { "diag-consistency", diag_consistency },
        { "determinism", determinism },
        { "scaling", scaling },
        { "var-only-advantage", var_only_advantage },
        { "lifecycle", lifecycle },
    };

    int failed = 0;
    int ran = 0;
    for (const auto &c : criteria)
    {
        if (!only.empty() && only != c.name)
            continue;
        ++ran;
        outcome o;
        try
        {
            o = c.run();
        }
        catch (const std::exception &e)
        {
            if (rt::state() != rt::lifecycle::stopped)
                rt::stop_runtime();
            o = { false, std::string("exception: ") + e.what() };
        }
        std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    if (ran == 0)
    {
        std::fprintf(stderr, "acceptance: unknown criterion '%s'\n", only.c_str());
        return 2;
    }
    std::printf("%d/%d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
