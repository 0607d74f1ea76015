#ifndef TASKGP_DATASET_HPP
#define TASKGP_DATASET_HPP

#pragma once

#include "taskgp/linalg/tile.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace taskgp {

/// Regressor matrix Z (N x D, row per sample) and targets y (length N).
struct dataset
{
    linalg::matrix z;
    std::vector<double> y;

    std::size_t size() const noexcept { return z.rows(); }
    std::size_t dims() const noexcept { return z.cols(); }

    /// Throws dimension_error / numerical_error on a malformed dataset.
    void validate() const
    {
        if (z.rows() != y.size())
            throw dimension_error("dataset: row count of Z does not match length of y");
        if (z.cols() == 0)
            throw dimension_error("dataset: at least one regressor column is required");
        for (double v : z.values())
            if (!std::isfinite(v))
                throw numerical_error("dataset: non-finite entry in Z");
        for (double v : y)
            if (!std::isfinite(v))
                throw numerical_error("dataset: non-finite entry in y");
    }
};

}  // namespace taskgp

#endif
