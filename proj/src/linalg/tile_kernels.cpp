#include "taskgp/linalg/tile_kernels.hpp"

#include <atomic>
#include <cmath>
#include <string>

#ifdef TASKGP_HAVE_OPENBLAS
#include <cblas.h>
#include <mutex>

extern "C" void dpotrf_(const char *uplo, const int *n, double *a, const int *lda, int *info);
#endif

namespace taskgp::linalg {

namespace {

std::atomic<kernel_backend> g_backend{ kernel_backend::reference };

bool use_blas() noexcept
{
    return g_backend.load(std::memory_order_relaxed) == kernel_backend::openblas;
}

void require(bool ok, const char *what)
{
    if (!ok)
        throw dimension_error(what);
}

void check_triangular_diagonal(const tile &l)
{
    for (std::size_t j = 0; j < l.rows(); ++j)
        if (l(j, j) == 0.0)
            throw singular_triangular("zero on the diagonal of a triangular tile at index " + std::to_string(j));
}

// ---------------------------------------------------------------------------
// reference loops
//
// Inner loops are written as contiguous axpy updates so the compiler can
// vectorize them without reassociating reductions.

tile ref_potrf(const tile &a)
{
    std::size_t const n = a.rows();
    // u holds L^T (upper, row-major): row k of u is column k of L.
    tile u(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            u(i, j) = a(j, i);

    for (std::size_t k = 0; k < n; ++k)
    {
        double const pivot = u(k, k);
        if (!(pivot > 0.0) || !std::isfinite(pivot))
            throw not_positive_definite("non-positive pivot " + std::to_string(pivot) + " at index "
                                        + std::to_string(k));
        double const ukk = std::sqrt(pivot);
        double const inv = 1.0 / ukk;
        double *uk = u.data() + k * n;
        uk[k] = ukk;
        for (std::size_t j = k + 1; j < n; ++j)
            uk[j] *= inv;
        for (std::size_t i = k + 1; i < n; ++i)
        {
            double const f = uk[i];
            double *ui = u.data() + i * n;
            for (std::size_t j = i; j < n; ++j)
                ui[j] -= f * uk[j];
        }
    }
    return u.transposed();
}

tile ref_trsm(const tile &l, const tile &b)
{
    std::size_t const n = l.rows();
    std::size_t const m = b.rows();
    // y = l^{-1} b^T, row j of y is column j of the result.
    tile y = b.transposed();
    for (std::size_t j = 0; j < n; ++j)
    {
        double *yj = y.data() + j * m;
        for (std::size_t k = 0; k < j; ++k)
        {
            double const f = l(j, k);
            const double *yk = y.data() + k * m;
            for (std::size_t r = 0; r < m; ++r)
                yj[r] -= f * yk[r];
        }
        double const inv = 1.0 / l(j, j);
        for (std::size_t r = 0; r < m; ++r)
            yj[r] *= inv;
    }
    return y.transposed();
}

// c - a * b^T, restricted to columns j <= i when `lower_only`.
tile ref_gemm_nt(const tile &a, const tile &b, const tile &c, bool lower_only)
{
    std::size_t const m = c.rows();
    std::size_t const n = c.cols();
    std::size_t const k = a.cols();
    tile const bt = b.transposed();
    tile out = c;
    for (std::size_t i = 0; i < m; ++i)
    {
        double *ci = out.data() + i * n;
        std::size_t const jend = lower_only ? i + 1 : n;
        for (std::size_t p = 0; p < k; ++p)
        {
            double const f = a(i, p);
            const double *bp = bt.data() + p * n;
            for (std::size_t j = 0; j < jend; ++j)
                ci[j] -= f * bp[j];
        }
    }
    return out;
}

tile ref_syrk(const tile &a, const tile &c)
{
    tile out = ref_gemm_nt(a, a, c, true);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = i + 1; j < out.cols(); ++j)
            out(i, j) = out(j, i);
    return out;
}

segment ref_trsv(const tile &l, const segment &b)
{
    std::size_t const n = l.rows();
    segment x(b);
    for (std::size_t j = 0; j < n; ++j)
    {
        double s = x[j];
        for (std::size_t k = 0; k < j; ++k)
            s -= l(j, k) * x[k];
        x[j] = s / l(j, j);
    }
    return x;
}

segment ref_trsv_trans(const tile &l, const segment &b)
{
    std::size_t const n = l.rows();
    segment x(b);
    for (std::size_t i = n; i-- > 0;)
    {
        x[i] /= l(i, i);
        double const xi = x[i];
        for (std::size_t k = 0; k < i; ++k)
            x[k] -= l(i, k) * xi;
    }
    return x;
}

segment ref_gemv(const tile &a, const segment &x, const segment &y, double sign)
{
    segment out(y);
    for (std::size_t i = 0; i < a.rows(); ++i)
    {
        double s = 0.0;
        const double *ai = a.data() + i * a.cols();
        for (std::size_t j = 0; j < a.cols(); ++j)
            s += ai[j] * x[j];
        out[i] += sign * s;
    }
    return out;
}

segment ref_gemv_trans_sub(const tile &a, const segment &x, const segment &y)
{
    segment out(y);
    for (std::size_t i = 0; i < a.rows(); ++i)
    {
        double const xi = x[i];
        const double *ai = a.data() + i * a.cols();
        for (std::size_t j = 0; j < a.cols(); ++j)
            out[j] -= ai[j] * xi;
    }
    return out;
}

#ifdef TASKGP_HAVE_OPENBLAS

int as_int(std::size_t v)
{
    return static_cast<int>(v);
}

tile blas_potrf(const tile &a)
{
    // Row-major lower is column-major upper.
    tile out = a;
    int const n = as_int(a.rows());
    int info = 0;
    char const uplo = 'U';
    dpotrf_(&uplo, &n, out.data(), &n, &info);
    if (info > 0)
        throw not_positive_definite("non-positive pivot at index " + std::to_string(info - 1));
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = i + 1; j < out.cols(); ++j)
            out(i, j) = 0.0;
    return out;
}

tile blas_trsm(const tile &l, const tile &b)
{
    tile out = b;
    cblas_dtrsm(CblasRowMajor, CblasRight, CblasLower, CblasTrans, CblasNonUnit, as_int(b.rows()), as_int(b.cols()),
                1.0, l.data(), as_int(l.cols()), out.data(), as_int(out.cols()));
    return out;
}

tile blas_syrk(const tile &a, const tile &c)
{
    tile out = c;
    cblas_dsyrk(CblasRowMajor, CblasLower, CblasNoTrans, as_int(c.rows()), as_int(a.cols()), -1.0, a.data(),
                as_int(a.cols()), 1.0, out.data(), as_int(out.cols()));
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = i + 1; j < out.cols(); ++j)
            out(i, j) = out(j, i);
    return out;
}

tile blas_gemm(const tile &a, const tile &b, const tile &c)
{
    tile out = c;
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, as_int(c.rows()), as_int(c.cols()), as_int(a.cols()), -1.0,
                a.data(), as_int(a.cols()), b.data(), as_int(b.cols()), 1.0, out.data(), as_int(out.cols()));
    return out;
}

segment blas_trsv(const tile &l, const segment &b, bool trans)
{
    segment x(b);
    cblas_dtrsv(CblasRowMajor, CblasLower, trans ? CblasTrans : CblasNoTrans, CblasNonUnit, as_int(l.rows()),
                l.data(), as_int(l.cols()), x.data(), 1);
    return x;
}

segment blas_gemv(const tile &a, const segment &x, const segment &y, double alpha, bool trans)
{
    segment out(y);
    cblas_dgemv(CblasRowMajor, trans ? CblasTrans : CblasNoTrans, as_int(a.rows()), as_int(a.cols()), alpha, a.data(),
                as_int(a.cols()), x.data(), 1, 1.0, out.data(), 1);
    return out;
}

void pin_openblas_threads()
{
    static std::once_flag once;
    // Parallelism comes from the task runtime; BLAS calls stay sequential.
    std::call_once(once, [] { openblas_set_num_threads(1); });
}

#endif

}  // namespace

bool kernel_backend_available(kernel_backend b) noexcept
{
    switch (b)
    {
    case kernel_backend::reference:
        return true;
    case kernel_backend::openblas:
#ifdef TASKGP_HAVE_OPENBLAS
        return true;
#else
        return false;
#endif
    }
    return false;
}

void set_kernel_backend(kernel_backend b)
{
    if (!kernel_backend_available(b))
        throw invalid_config("kernel backend '" + std::string(to_string(b)) + "' is not available in this build");
#ifdef TASKGP_HAVE_OPENBLAS
    if (b == kernel_backend::openblas)
        pin_openblas_threads();
#endif
    g_backend.store(b);
}

kernel_backend current_kernel_backend() noexcept
{
    return g_backend.load();
}

kernel_backend preferred_kernel_backend() noexcept
{
    return kernel_backend_available(kernel_backend::openblas) ? kernel_backend::openblas : kernel_backend::reference;
}

std::string_view to_string(kernel_backend b) noexcept
{
    return b == kernel_backend::openblas ? "openblas" : "reference";
}

std::optional<kernel_backend> parse_kernel_backend(std::string_view name) noexcept
{
    if (name == "reference")
        return kernel_backend::reference;
    if (name == "openblas")
        return kernel_backend::openblas;
    return std::nullopt;
}

tile potrf(const tile &a)
{
    require(a.rows() == a.cols(), "potrf: tile must be square");
#ifdef TASKGP_HAVE_OPENBLAS
    if (use_blas())
        return blas_potrf(a);
#endif
    return ref_potrf(a);
}

tile trsm(const tile &l, const tile &b)
{
    require(l.rows() == l.cols() && b.cols() == l.rows(), "trsm: shape mismatch");
    check_triangular_diagonal(l);
#ifdef TASKGP_HAVE_OPENBLAS
    if (use_blas())
        return blas_trsm(l, b);
#endif
    return ref_trsm(l, b);
}

tile syrk(const tile &a, const tile &c)
{
    require(c.rows() == c.cols() && a.rows() == c.rows(), "syrk: shape mismatch");
#ifdef TASKGP_HAVE_OPENBLAS
    if (use_blas())
        return blas_syrk(a, c);
#endif
    return ref_syrk(a, c);
}

tile gemm(const tile &a, const tile &b, const tile &c)
{
    require(a.rows() == c.rows() && b.rows() == c.cols() && a.cols() == b.cols(), "gemm: shape mismatch");
#ifdef TASKGP_HAVE_OPENBLAS
    if (use_blas())
        return blas_gemm(a, b, c);
#endif
    return ref_gemm_nt(a, b, c, false);
}

segment trsv(const tile &l, const segment &b)
{
    require(l.rows() == l.cols() && b.size() == l.rows(), "trsv: shape mismatch");
    check_triangular_diagonal(l);
#ifdef TASKGP_HAVE_OPENBLAS
    if (use_blas())
        return blas_trsv(l, b, false);
#endif
    return ref_trsv(l, b);
}

segment trsv_trans(const tile &l, const segment &b)
{
    require(l.rows() == l.cols() && b.size() == l.rows(), "trsv_trans: shape mismatch");
    check_triangular_diagonal(l);
#ifdef TASKGP_HAVE_OPENBLAS
    if (use_blas())
        return blas_trsv(l, b, true);
#endif
    return ref_trsv_trans(l, b);
}

segment gemv_add(const tile &a, const segment &x, const segment &y)
{
    require(x.size() == a.cols() && y.size() == a.rows(), "gemv: shape mismatch");
#ifdef TASKGP_HAVE_OPENBLAS
    if (use_blas())
        return blas_gemv(a, x, y, 1.0, false);
#endif
    return ref_gemv(a, x, y, 1.0);
}

segment gemv_sub(const tile &a, const segment &x, const segment &y)
{
    require(x.size() == a.cols() && y.size() == a.rows(), "gemv: shape mismatch");
#ifdef TASKGP_HAVE_OPENBLAS
    if (use_blas())
        return blas_gemv(a, x, y, -1.0, false);
#endif
    return ref_gemv(a, x, y, -1.0);
}

segment gemv_trans_sub(const tile &a, const segment &x, const segment &y)
{
    require(x.size() == a.rows() && y.size() == a.cols(), "gemv: shape mismatch");
#ifdef TASKGP_HAVE_OPENBLAS
    if (use_blas())
        return blas_gemv(a, x, y, -1.0, true);
#endif
    return ref_gemv_trans_sub(a, x, y);
}

segment diag_syrk_sub(const tile &a, const segment &d)
{
    require(d.size() == a.rows(), "diag_syrk_sub: shape mismatch");
    segment out(d);
    for (std::size_t i = 0; i < a.rows(); ++i)
    {
        double s = 0.0;
        for (double v : a.row(i))
            s += v * v;
        out[i] -= s;
    }
    return out;
}

double dot(const segment &a, const segment &b)
{
    require(a.size() == b.size(), "dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

}  // namespace taskgp::linalg
