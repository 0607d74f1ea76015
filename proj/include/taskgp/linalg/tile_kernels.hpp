#ifndef TASKGP_LINALG_TILE_KERNELS_HPP
#define TASKGP_LINALG_TILE_KERNELS_HPP

#pragma once

// Sequential tile kernels. Every kernel takes its inputs by const reference
// and returns a fresh result; nothing is updated in place.
//
// Two implementations exist behind the same functions: hand-written loops
// (always built, the default) and an OpenBLAS/LAPACK backend compiled in when
// TASKGP_HAVE_OPENBLAS is defined. The backend is a process-wide switch.

#include "taskgp/linalg/tile.hpp"

#include <optional>
#include <string_view>

namespace taskgp::linalg {

enum class kernel_backend
{
    reference,
    openblas
};

bool kernel_backend_available(kernel_backend b) noexcept;

/// Throws invalid_config if `b` was not compiled in.
void set_kernel_backend(kernel_backend b);

kernel_backend current_kernel_backend() noexcept;

/// Fastest backend compiled into this build.
kernel_backend preferred_kernel_backend() noexcept;

std::string_view to_string(kernel_backend b) noexcept;
std::optional<kernel_backend> parse_kernel_backend(std::string_view name) noexcept;

/// Switches the backend for the lifetime of the guard.
class scoped_kernel_backend
{
  public:
    explicit scoped_kernel_backend(kernel_backend b) : previous_(current_kernel_backend()) { set_kernel_backend(b); }
    ~scoped_kernel_backend() { set_kernel_backend(previous_); }
    scoped_kernel_backend(const scoped_kernel_backend &) = delete;
    scoped_kernel_backend &operator=(const scoped_kernel_backend &) = delete;

  private:
    kernel_backend previous_;
};

// ---------------------------------------------------------------------------
// Cholesky building blocks

/// Lower Cholesky factor L with L*L^T == a. Strictly upper entries are zero.
/// Throws not_positive_definite when a pivot is not strictly positive.
tile potrf(const tile &a);

/// X with X * l^T == b, l lower triangular. Throws singular_triangular.
tile trsm(const tile &l, const tile &b);

/// c - a * a^T (both triangles written).
tile syrk(const tile &a, const tile &c);

/// c - a * b^T.
tile gemm(const tile &a, const tile &b, const tile &c);

// ---------------------------------------------------------------------------
// vector kernels

/// x with l * x == b.
segment trsv(const tile &l, const segment &b);

/// x with l^T * x == b.
segment trsv_trans(const tile &l, const segment &b);

/// y + a * x
segment gemv_add(const tile &a, const segment &x, const segment &y);

/// y - a * x
segment gemv_sub(const tile &a, const segment &x, const segment &y);

/// y - a^T * x
segment gemv_trans_sub(const tile &a, const segment &x, const segment &y);

/// d[i] - sum_j a(i, j)^2, i.e. the diagonal of diag(d) - a * a^T.
segment diag_syrk_sub(const tile &a, const segment &d);

double dot(const segment &a, const segment &b);

}  // namespace taskgp::linalg

#endif
