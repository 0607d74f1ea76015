#include "taskgp/bench/experiment.hpp"

#include "taskgp/data/lag.hpp"
#include "taskgp/data/msd.hpp"
#include "taskgp/error.hpp"
#include "taskgp/gp/gp_model.hpp"
#include "taskgp/runtime/runtime.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <utility>

namespace taskgp::bench {

std::string_view to_string(operation op) noexcept
{
    switch (op)
    {
    case operation::optimize: return "optimize";
    case operation::predict: return "predict";
    case operation::predict_full_cov: return "predict-full-cov";
    case operation::predict_var: return "predict-var";
    }
    return "unknown";
}

std::optional<operation> parse_operation(std::string_view name) noexcept
{
    std::string s(name);
    std::replace(s.begin(), s.end(), '_', '-');
    for (auto op : { operation::optimize, operation::predict, operation::predict_full_cov, operation::predict_var })
        if (s == to_string(op))
            return op;
    return std::nullopt;
}

void experiment_spec::validate() const
{
    if (repetitions < 1)
        throw invalid_config("experiment: repetitions must be at least 1");
    if (n_train.empty() || tiles.empty() || workers.empty())
        throw invalid_config("experiment: n_train, tiles and workers must be non-empty");
    if (regressors < 1)
        throw invalid_config("experiment: at least one regressor is required");
    if (op == operation::optimize && optimize_iterations < 1)
        throw invalid_config("experiment: optimize needs at least one iteration");
    params.validate();
    if (backend && !linalg::kernel_backend_available(*backend))
        throw invalid_config("experiment: kernel backend " + std::string(linalg::to_string(*backend))
                             + " is not available in this build");
    for (auto w : workers)
        if (w < 1)
            throw invalid_config("experiment: worker counts must be at least 1");
    for (auto n : n_train)
    {
        if (n < 1)
            throw invalid_config("experiment: n_train must be positive");
        for (auto t : tiles)
            if (t < 1 || n % t != 0)
                throw invalid_config("experiment: T=" + std::to_string(t) + " does not divide N="
                                     + std::to_string(n));
    }
}

namespace {

struct cell_data
{
    dataset train;
    linalg::matrix test;
};

cell_data make_cell_data(const experiment_spec &spec, std::size_t n)
{
    std::size_t const m = spec.test_size(n);
    data::msd_config cfg;
    cfg.seed = spec.seed;
    cfg.steps = n + m + spec.regressors;
    auto const series = data::simulate_msd(cfg);
    auto [train, test] = data::split_contiguous(data::lag_embed(series, { spec.regressors }), n);
    return { std::move(train), std::move(test.z) };
}

void run_once(const experiment_spec &spec, const cell_data &d, std::size_t tiles)
{
    gp::gp_model model(d.train, spec.params, tiles);
    switch (spec.op)
    {
    case operation::optimize: {
        gp::adam_config opt;
        opt.iterations = spec.optimize_iterations;
        (void)model.optimize(opt);
        break;
    }
    case operation::predict: (void)model.predict(d.test); break;
    case operation::predict_full_cov: (void)model.predict_with_full_cov(d.test); break;
    case operation::predict_var: (void)model.predict_variance(d.test); break;
    }
}

double mean_of(const std::vector<double> &v)
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double bootstrap_half_width(const std::vector<double> &times, std::size_t resamples, std::uint64_t seed)
{
    if (times.size() < 2 || resamples == 0)
        return 0.0;
    if (std::all_of(times.begin(), times.end(), [&](double t) { return t == times.front(); }))
        return 0.0;

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, times.size() - 1);
    std::vector<double> means(resamples);
    for (auto &m : means)
    {
        double s = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i)
            s += times[pick(rng)];
        m = s / static_cast<double>(times.size());
    }
    std::sort(means.begin(), means.end());

    auto const quantile = [&](double q) {
        double const pos = q * static_cast<double>(means.size() - 1);
        auto const lo = static_cast<std::size_t>(std::floor(pos));
        auto const hi = std::min(lo + 1, means.size() - 1);
        double const frac = pos - static_cast<double>(lo);
        return means[lo] + frac * (means[hi] - means[lo]);
    };
    return std::max(0.0, (quantile(0.975) - quantile(0.025)) / 2.0);
}

std::vector<bench_record> run_experiment(const experiment_spec &spec, const progress_callback &progress)
{
    spec.validate();
    if (rt::state() != rt::lifecycle::stopped)
        throw already_running();

    auto const backend = spec.backend.value_or(linalg::preferred_kernel_backend());
    linalg::scoped_kernel_backend backend_guard(backend);

    std::vector<bench_record> records;
    for (auto n : spec.n_train)
    {
        std::optional<cell_data> data;
        std::string data_error;
        try
        {
            data = make_cell_data(spec, n);
        }
        catch (const std::exception &e)
        {
            data_error = e.what();
        }

        for (auto t : spec.tiles)
        {
            for (auto w : spec.workers)
            {
                bench_record r;
                r.op = spec.op;
                r.n_train = n;
                r.n_test = spec.test_size(n);
                r.regressors = spec.regressors;
                r.tiles = t;
                r.workers = w;
                r.repetitions = spec.repetitions;
                r.warmup = spec.warmup;
                r.seed = spec.seed;
                r.backend = std::string(linalg::to_string(backend));

                if (!data)
                {
                    r.ok = false;
                    r.error = data_error;
                }
                else
                {
                    try
                    {
                        rt::start_runtime({ .worker_count = w });
                        try
                        {
                            for (std::size_t i = 0; i < spec.warmup; ++i)
                                run_once(spec, *data, t);
                            for (std::size_t i = 0; i < spec.repetitions; ++i)
                            {
                                auto const t0 = std::chrono::steady_clock::now();
                                run_once(spec, *data, t);
                                auto const t1 = std::chrono::steady_clock::now();
                                r.raw_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
                            }
                        }
                        catch (...)
                        {
                            rt::stop_runtime();
                            throw;
                        }
                        rt::stop_runtime();
                        r.mean_seconds = mean_of(r.raw_seconds);
                        r.half_width_seconds = bootstrap_half_width(r.raw_seconds, 1000, spec.seed);
                    }
                    catch (const std::exception &e)
                    {
                        r.ok = false;
                        r.error = e.what();
                        r.raw_seconds.clear();
                        r.mean_seconds = 0.0;
                        r.half_width_seconds = 0.0;
                    }
                }
                if (progress)
                    progress(r);
                records.push_back(std::move(r));
            }
        }
    }
    return records;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr std::string_view csv_header = "operation,n_train,n_test,regressors,tiles,workers,repetitions,warmup,seed,"
                                        "backend,status,mean_s,half_width_s,raw_times_s,error";

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string quote(const std::string &s)
{
    std::string out = "\"";
    for (char c : s)
    {
        if (c == '"')
            out += '"';
        out += (c == '\n' || c == '\r') ? ' ' : c;
    }
    return out + '"';
}

std::vector<std::string> split_csv_line(const std::string &line, std::size_t line_no)
{
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i)
    {
        char const c = line[i];
        if (quoted)
        {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"')
            {
                cur += '"';
                ++i;
            }
            else if (c == '"')
                quoted = false;
            else
                cur += c;
        }
        else if (c == '"')
            quoted = true;
        else if (c == ',')
            fields.push_back(std::exchange(cur, {}));
        else if (c != '\r')
            cur += c;
    }
    if (quoted)
        throw parse_error("load_records_csv: unterminated quote", line_no);
    fields.push_back(cur);
    return fields;
}

template <typename T>
T parse_number(const std::string &s, std::size_t line_no)
{
    T v{};
    auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        throw parse_error("load_records_csv: invalid number '" + s + "'", line_no);
    return v;
}

}  // namespace

void emit_csv(const std::vector<bench_record> &records, const std::string &path)
{
    if (records.empty())
        throw invalid_config("emit_csv: no records");
    std::ofstream out(path);
    if (!out)
        throw error("emit_csv: cannot open " + path);

    out << csv_header << '\n';
    for (const auto &r : records)
    {
        std::string raw;
        for (std::size_t i = 0; i < r.raw_seconds.size(); ++i)
            raw += (i ? ";" : "") + fmt(r.raw_seconds[i]);
        out << to_string(r.op) << ',' << r.n_train << ',' << r.n_test << ',' << r.regressors << ',' << r.tiles << ','
            << r.workers << ',' << r.repetitions << ',' << r.warmup << ',' << r.seed << ',' << r.backend << ','
            << (r.ok ? "ok" : "failed") << ',' << fmt(r.mean_seconds) << ',' << fmt(r.half_width_seconds) << ','
            << raw << ',' << quote(r.error) << '\n';
    }
    if (!out)
        throw error("emit_csv: write failed for " + path);
}

std::vector<bench_record> load_records_csv(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw error("load_records_csv: cannot open " + path);

    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line))
        throw parse_error("load_records_csv: empty file", 1);
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != csv_header)
        throw parse_error("load_records_csv: unexpected header", 1);

    std::vector<bench_record> records;
    while (std::getline(in, line))
    {
        ++line_no;
        if (line.empty())
            continue;
        auto const f = split_csv_line(line, line_no);
        if (f.size() != 15)
            throw parse_error("load_records_csv: expected 15 fields", line_no);

        bench_record r;
        auto const op = parse_operation(f[0]);
        if (!op)
            throw parse_error("load_records_csv: unknown operation '" + f[0] + "'", line_no);
        r.op = *op;
        r.n_train = parse_number<std::size_t>(f[1], line_no);
        r.n_test = parse_number<std::size_t>(f[2], line_no);
        r.regressors = parse_number<std::size_t>(f[3], line_no);
        r.tiles = parse_number<std::size_t>(f[4], line_no);
        r.workers = parse_number<std::size_t>(f[5], line_no);
        r.repetitions = parse_number<std::size_t>(f[6], line_no);
        r.warmup = parse_number<std::size_t>(f[7], line_no);
        r.seed = parse_number<std::uint64_t>(f[8], line_no);
        r.backend = f[9];
        if (f[10] != "ok" && f[10] != "failed")
            throw parse_error("load_records_csv: unknown status '" + f[10] + "'", line_no);
        r.ok = f[10] == "ok";
        r.mean_seconds = parse_number<double>(f[11], line_no);
        r.half_width_seconds = parse_number<double>(f[12], line_no);
        std::stringstream raw(f[13]);
        std::string item;
        while (std::getline(raw, item, ';'))
            r.raw_seconds.push_back(parse_number<double>(item, line_no));
        r.error = f[14];
        records.push_back(std::move(r));
    }
    return records;
}

// ---------------------------------------------------------------------------
// summary

summary summarize(const std::vector<bench_record> &records)
{
    std::vector<const bench_record *> ok;
    for (const auto &r : records)
        if (r.ok)
            ok.push_back(&r);
    if (ok.empty())
        throw invalid_config("summarize: no successful records");

    summary s;
    s.op = ok.front()->op;
    s.n_train = ok.front()->n_train;
    for (const auto *r : ok)
    {
        if (r->op != s.op)
            throw invalid_config("summarize: records mix operations");
        if (r->n_train != s.n_train || r->n_test != ok.front()->n_test)
            throw invalid_config("summarize: records mix problem sizes");
    }

    // (tiles, workers) -> mean
    std::map<std::pair<std::size_t, std::size_t>, double> by_cell;
    for (const auto *r : ok)
        by_cell[{ r->tiles, r->workers }] = r->mean_seconds;

    std::map<std::size_t, double> parallel_base;
    std::map<std::size_t, double> tiling_base;
    for (const auto &[key, mean] : by_cell)
        parallel_base.try_emplace(key.first, mean);
    for (const auto &[key, mean] : by_cell)
    {
        auto const [t, w] = key;
        s.parallel.push_back({ t, w, mean, parallel_base.at(t) / mean });
    }

    std::map<std::pair<std::size_t, std::size_t>, double> by_workers;
    for (const auto &[key, mean] : by_cell)
        by_workers[{ key.second, key.first }] = mean;
    for (const auto &[key, mean] : by_workers)
        tiling_base.try_emplace(key.first, mean);
    for (const auto &[key, mean] : by_workers)
    {
        auto const [w, t] = key;
        s.tiling.push_back({ t, w, mean, tiling_base.at(w) / mean });
    }
    return s;
}

std::string summary::text() const
{
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s  N=%zu\n", std::string(to_string(op)).c_str(), n_train);
    out += buf;
    out += "parallel speedup (vs fewest workers, per T)\n";
    out += "      T  workers      mean_s  speedup\n";
    for (const auto &e : parallel)
    {
        std::snprintf(buf, sizeof buf, "%7zu %8zu %11.6f %8.3f\n", e.tiles, e.workers, e.mean_seconds, e.speedup);
        out += buf;
    }
    out += "tiling speedup (vs smallest T, per worker count)\n";
    out += "workers        T      mean_s  speedup\n";
    for (const auto &e : tiling)
    {
        std::snprintf(buf, sizeof buf, "%7zu %8zu %11.6f %8.3f\n", e.workers, e.tiles, e.mean_seconds, e.speedup);
        out += buf;
    }
    return out;
}

}  // namespace taskgp::bench
