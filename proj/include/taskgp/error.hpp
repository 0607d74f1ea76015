#ifndef TASKGP_ERROR_HPP
#define TASKGP_ERROR_HPP

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace taskgp {

/// Base class of every error raised by the library.
class error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// runtime lifecycle

class already_running : public error
{
  public:
    already_running() : error("task runtime is already running") { }
};

class not_running : public error
{
  public:
    not_running() : error("task runtime is not running") { }
};

class invalid_config : public error
{
  public:
    using error::error;
};

// ---------------------------------------------------------------------------
// numerics

class dimension_error : public error
{
  public:
    using error::error;
};

/// A Cholesky pivot was not strictly positive.
///
/// When raised from inside the optimizer the failing iteration is attached.
class not_positive_definite : public error
{
  public:
    explicit not_positive_definite(const std::string &what, std::optional<std::size_t> iteration = std::nullopt)
        : error(what), iteration_(iteration)
    {
    }

    std::optional<std::size_t> iteration() const noexcept { return iteration_; }

  private:
    std::optional<std::size_t> iteration_;
};

class singular_triangular : public error
{
  public:
    using error::error;
};

/// Round-off beyond the tolerated band, e.g. a clearly negative variance.
class numerical_error : public error
{
  public:
    using error::error;
};

class divergence_error : public error
{
  public:
    using error::error;
};

// ---------------------------------------------------------------------------
// io

class parse_error : public error
{
  public:
    parse_error(const std::string &what, std::size_t line)
        : error("line " + std::to_string(line) + ": " + what), line_(line)
    {
    }

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// Ragged row in a rectangular text file.
class dimension_mismatch : public parse_error
{
  public:
    using parse_error::parse_error;
};

}  // namespace taskgp

#endif
