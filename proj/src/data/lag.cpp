#include "taskgp/data/lag.hpp"

#include <string>

namespace taskgp::data {

dataset lag_embed(std::span<const double> series, lag_spec spec)
{
    std::size_t const d = spec.regressors;
    if (d < 1)
        throw dimension_error("lag_embed: at least one regressor is required");
    if (series.size() <= d)
        throw dimension_error("lag_embed: series of length " + std::to_string(series.size())
                              + " is too short for " + std::to_string(d) + " regressors");

    std::size_t const n = series.size() - d;
    dataset out{ linalg::matrix(n, d), std::vector<double>(n) };
    for (std::size_t t = 0; t < n; ++t)
    {
        for (std::size_t k = 0; k < d; ++k)
            out.z(t, k) = series[t + d - 1 - k];
        out.y[t] = series[t + d];
    }
    return out;
}

std::pair<dataset, dataset> split_contiguous(const dataset &data, std::size_t n_first)
{
    if (n_first > data.size())
        throw dimension_error("split_contiguous: split point beyond dataset size");
    std::size_t const d = data.dims();
    std::size_t const n_second = data.size() - n_first;
    dataset a{ linalg::matrix(n_first, d), {} };
    dataset b{ linalg::matrix(n_second, d), {} };
    for (std::size_t i = 0; i < data.size(); ++i)
    {
        dataset &dst = i < n_first ? a : b;
        std::size_t const r = i < n_first ? i : i - n_first;
        for (std::size_t k = 0; k < d; ++k)
            dst.z(r, k) = data.z(i, k);
        dst.y.push_back(data.y[i]);
    }
    return { std::move(a), std::move(b) };
}

}  // namespace taskgp::data
