#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "taskgp/bench/experiment.hpp"
#include "taskgp/error.hpp"
#include "taskgp/runtime/runtime.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>

using namespace taskgp;
using namespace taskgp::bench;

namespace {

std::string temp_path(const std::string &name)
{
    return (std::filesystem::temp_directory_path() / ("taskgp_test_" + name)).string();
}

std::size_t count_lines(const std::string &path)
{
    std::ifstream in(path);
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line))
        ++n;
    return n;
}

bench_record record(std::size_t tiles, std::size_t workers, double mean)
{
    bench_record r;
    r.op = operation::predict_full_cov;
    r.n_train = 1024;
    r.n_test = 1024;
    r.regressors = 8;
    r.tiles = tiles;
    r.workers = workers;
    r.repetitions = 1;
    r.backend = "reference";
    r.mean_seconds = mean;
    r.raw_seconds = { mean };
    return r;
}

}  // namespace

TEST_CASE("operation names")
{
    CHECK(parse_operation("predict-full-cov") == operation::predict_full_cov);
    CHECK(parse_operation("predict_var") == operation::predict_var);
    CHECK(parse_operation("optimize") == operation::optimize);
    CHECK_FALSE(parse_operation("train").has_value());
    CHECK(to_string(operation::predict_var) == "predict-var");
}

TEST_CASE("run_experiment: one record per worker count, raw times per repetition")
{
    experiment_spec spec;
    spec.op = operation::predict;
    spec.n_train = { 256 };
    spec.tiles = { 4 };
    spec.workers = { 1, 2 };
    spec.repetitions = 5;
    auto const recs = run_experiment(spec);
    REQUIRE(recs.size() == 2);
    for (const auto &r : recs)
    {
        CHECK(r.ok);
        CHECK(r.raw_seconds.size() == 5);
        CHECK(r.n_test == 256);
        CHECK(r.mean_seconds > 0.0);
        CHECK(r.half_width_seconds >= 0.0);
    }
    CHECK(recs[0].workers == 1);
    CHECK(recs[1].workers == 2);
    CHECK(rt::state() == rt::lifecycle::stopped);
}

TEST_CASE("run_experiment: every operation runs")
{
    for (auto op : { operation::optimize, operation::predict, operation::predict_full_cov, operation::predict_var })
    {
        experiment_spec spec;
        spec.op = op;
        spec.n_train = { 32, 64 };
        spec.n_test = 16;
        spec.tiles = { 1, 4 };
        spec.workers = { 2 };
        spec.repetitions = 2;
        spec.warmup = 0;
        auto const recs = run_experiment(spec);
        CHECK(recs.size() == 4);
        for (const auto &r : recs)
        {
            CHECK(r.ok);
            CHECK(r.n_test == 16);
        }
    }
}

TEST_CASE("run_experiment: invalid specs are rejected before running")
{
    experiment_spec spec;
    spec.n_train = { 100 };
    spec.tiles = { 3 };
    CHECK_THROWS_AS(run_experiment(spec), invalid_config);
    spec.tiles = { 4 };
    spec.repetitions = 0;
    CHECK_THROWS_AS(run_experiment(spec), invalid_config);
    spec.repetitions = 1;
    spec.workers = {};
    CHECK_THROWS_AS(run_experiment(spec), invalid_config);

    rt::start_runtime({ .worker_count = 1 });
    spec.workers = { 1 };
    CHECK_THROWS_AS(run_experiment(spec), already_running);
    rt::stop_runtime();
}

TEST_CASE("run_experiment: a failing cell is recorded and the sweep continues")
{
    experiment_spec spec;
    spec.n_train = { 16 };
    spec.tiles = { 1, 2 };
    spec.workers = { 1 };
    spec.repetitions = 3;
    // noise-free, nearly constant kernel: K is numerically singular
    spec.params.lengthscale = 1e8;
    spec.params.noise_variance = 0.0;
    auto const recs = run_experiment(spec);
    REQUIRE(recs.size() == 2);
    for (const auto &r : recs)
    {
        CHECK_FALSE(r.ok);
        CHECK_FALSE(r.error.empty());
        CHECK(r.raw_seconds.empty());
    }
    CHECK(rt::state() == rt::lifecycle::stopped);

    spec.params = {};
    CHECK(run_experiment(spec).front().ok);
}

TEST_CASE("bootstrap half-width")
{
    CHECK(bootstrap_half_width({ 2.0, 2.0, 2.0, 2.0, 2.0 }) == 0.0);
    CHECK(bootstrap_half_width({ 3.0 }) == 0.0);

    std::vector<double> const t{ 1.0, 2.0, 3.0, 4.0, 5.0 };
    double const h = bootstrap_half_width(t, 1000, 7);
    CHECK(h > 0.0);
    CHECK(h <= 2.0);
    CHECK(h == bootstrap_half_width(t, 1000, 7));
    // normal approximation of the percentile interval: 1.96 * sd / sqrt(n)
    double const approx = 1.96 * std::sqrt(2.0 / 5.0);
    CHECK(h == doctest::Approx(approx).epsilon(0.15));
}

TEST_CASE("emit_csv: header plus one row per record, exact round trip")
{
    std::vector<bench_record> recs{ record(1, 1, 1.0 / 3.0), record(4, 2, 0.1), record(8, 4, 2e-7) };
    recs[1].raw_seconds = { 0.1, 0.2, 1e-9, 0.30000000000000004 };
    recs[1].half_width_seconds = 0.0123456789012345678;
    recs[2].ok = false;
    recs[2].raw_seconds.clear();
    recs[2].error = "not positive definite, at \"tile\" (2,2)";
    recs[0].seed = 18446744073709551615ull;

    auto const path = temp_path("records.csv");
    emit_csv(recs, path);
    CHECK(count_lines(path) == 4);
    CHECK(load_records_csv(path) == recs);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(emit_csv({}, path), invalid_config);
}

TEST_CASE("load_records_csv: malformed input")
{
    auto const path = temp_path("bad_records.csv");
    std::ofstream(path) << "not,a,header\n";
    CHECK_THROWS_AS(load_records_csv(path), parse_error);

    emit_csv({ record(1, 1, 1.0) }, path);
    std::ofstream(path, std::ios::app) << "predict,1,2\n";
    try
    {
        (void)load_records_csv(path);
        FAIL("expected parse_error");
    }
    catch (const parse_error &e)
    {
        CHECK(e.line() == 3);
    }
    std::filesystem::remove(path);
}

TEST_CASE("summarize: speedup arithmetic")
{
    auto const one = summarize({ record(4, 1, 3.0) });
    REQUIRE(one.parallel.size() == 1);
    CHECK(one.parallel[0].speedup == 1.0);
    REQUIRE(one.tiling.size() == 1);
    CHECK(one.tiling[0].speedup == 1.0);

    auto const two = summarize({ record(4, 1, 10.0), record(4, 2, 5.0) });
    REQUIRE(two.parallel.size() == 2);
    CHECK(two.parallel[0].speedup == 1.0);
    CHECK(two.parallel[1].workers == 2);
    CHECK(two.parallel[1].speedup == 2.0);

    auto const tiles = summarize({ record(1, 4, 9.0), record(8, 4, 3.0), record(1, 1, 12.0) });
    REQUIRE(tiles.tiling.size() == 3);
    CHECK(tiles.tiling[2].workers == 4);
    CHECK(tiles.tiling[2].tiles == 8);
    CHECK(tiles.tiling[2].speedup == 3.0);
    CHECK(tiles.text().find("3.000") != std::string::npos);

    auto other = record(4, 2, 5.0);
    other.n_train = 2048;
    CHECK_THROWS_AS(summarize({ record(4, 1, 10.0), other }), invalid_config);
    auto other_op = record(4, 2, 5.0);
    other_op.op = operation::predict;
    CHECK_THROWS_AS(summarize({ record(4, 1, 10.0), other_op }), invalid_config);
    CHECK_THROWS_AS(summarize({}), invalid_config);
}

TEST_CASE("run_experiment: full covariance speeds up with four workers")
{
    if (std::thread::hardware_concurrency() < 4)
    {
        MESSAGE("skipped: needs at least 4 hardware threads, found " << std::thread::hardware_concurrency());
        return;
    }
    experiment_spec spec;
    spec.op = operation::predict_full_cov;
    spec.n_train = { 1024 };
    spec.tiles = { 4 };
    spec.workers = { 1, 4 };
    spec.repetitions = 3;
    auto const s = summarize(run_experiment(spec));
    REQUIRE(s.parallel.size() == 2);
    CHECK(s.parallel[1].speedup > 1.0);
}
