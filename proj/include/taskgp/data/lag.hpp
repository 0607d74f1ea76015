#ifndef TASKGP_DATA_LAG_HPP
#define TASKGP_DATA_LAG_HPP

#pragma once

#include "taskgp/dataset.hpp"

#include <cstddef>
#include <span>
#include <utility>

namespace taskgp::data {

/// Regressor count for lag embedding.
struct lag_spec
{
    std::size_t regressors = 8;
};

/// Row t of Z is (x[t+D-1], ..., x[t]) and y[t] = x[t+D], so Z has
/// len - D rows. Throws dimension_error unless 1 <= D < len.
dataset lag_embed(std::span<const double> series, lag_spec spec);

/// First `n_first` rows and the remainder.
std::pair<dataset, dataset> split_contiguous(const dataset &data, std::size_t n_first);

}  // namespace taskgp::data

#endif
