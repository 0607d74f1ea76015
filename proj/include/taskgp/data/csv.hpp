#ifndef TASKGP_DATA_CSV_HPP
#define TASKGP_DATA_CSV_HPP

#pragma once

// Comma-separated datasets: one sample per line, regressors first, target in
// the last column. Numbers are written with 17 significant digits so that a
// save/load round trip is exact.

#include "taskgp/dataset.hpp"

#include <string>

namespace taskgp::data {

struct csv_options
{
    bool header = false;
};

/// Throws parse_error (with a 1-based line number) on malformed input,
/// dimension_mismatch on ragged rows, and taskgp::error if the file cannot
/// be opened.
dataset load_csv(const std::string &path, csv_options opts = {});

void save_csv(const dataset &data, const std::string &path, csv_options opts = {});

}  // namespace taskgp::data

#endif
