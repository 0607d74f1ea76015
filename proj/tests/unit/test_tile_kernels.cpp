#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracle/dense_oracle.hpp"
#include "support/convert.hpp"
#include "taskgp/linalg/tile_kernels.hpp"

#include <cmath>
#include <string>

using namespace taskgp::linalg;
using taskgp::testing::available_backends;
using taskgp::testing::to_mat;
using taskgp::testing::to_tile;

TEST_CASE("backend selection")
{
    CHECK(current_kernel_backend() == kernel_backend::reference);
    CHECK(kernel_backend_available(kernel_backend::reference));
    CHECK(parse_kernel_backend("openblas") == kernel_backend::openblas);
    CHECK_FALSE(parse_kernel_backend("mkl").has_value());
    if (!kernel_backend_available(kernel_backend::openblas))
        CHECK_THROWS_AS(set_kernel_backend(kernel_backend::openblas), taskgp::invalid_config);
    {
        scoped_kernel_backend guard(preferred_kernel_backend());
        CHECK(current_kernel_backend() == preferred_kernel_backend());
    }
    CHECK(current_kernel_backend() == kernel_backend::reference);
}

TEST_CASE("tile kernels")
{
    for (auto backend : available_backends())
    {
        scoped_kernel_backend guard(backend);
        std::string const name(to_string(backend));
        CAPTURE(name);

        SUBCASE("potrf")
        {
            CHECK(potrf(tile::identity(4)) == tile::identity(4));

            tile const l = potrf(tile(2, 2, { 4, 2, 2, 3 }));
            CHECK(l(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
            CHECK(l(0, 1) == 0.0);
            CHECK(l(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
            CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

            CHECK_THROWS_AS(potrf(tile(2, 2, { 1, 2, 2, 1 })), taskgp::not_positive_definite);
            CHECK_THROWS_AS(potrf(tile(2, 3)), taskgp::dimension_error);

            auto const a = oracle::random_spd(24, 24.0, 7);
            auto const expected = *oracle::cholesky(a);
            CHECK(oracle::max_abs_diff(to_mat(potrf(to_tile(a))), expected) <= 1e-12);
        }

        SUBCASE("trsm")
        {
            tile const b(3, 3, { 1, 2, 3, 4, 5, 6, 7, 8, 9 });
            CHECK(trsm(tile::identity(3), b) == b);

            tile const l(2, 2, { 2, 0, 1, std::sqrt(2.0) });
            tile const x = trsm(l, tile(2, 2, { 2, 1, 4, 3 }));
            // X l^T == b, worked by hand: X = [[1, 0], [2, 1/sqrt(2)]].
            CHECK(x(0, 0) == doctest::Approx(1.0));
            CHECK(std::abs(x(0, 1)) <= 1e-15);
            CHECK(x(1, 0) == doctest::Approx(2.0));
            CHECK(x(1, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
            auto const back = oracle::matmul(to_mat(x), oracle::transpose(to_mat(l)));
            CHECK(oracle::max_abs_diff(back, { { 2, 1 }, { 4, 3 } }) <= 1e-14);

            CHECK_THROWS_AS(trsm(tile(2, 2, { 0, 0, 1, 1 }), b), taskgp::dimension_error);
            CHECK_THROWS_AS(trsm(tile(2, 2, { 0, 0, 1, 1 }), tile(3, 2)), taskgp::singular_triangular);

            // Rectangular right-hand side against the dense oracle.
            auto const lo = *oracle::cholesky(oracle::random_spd(16, 16.0, 3));
            auto const rhs = oracle::random_matrix(5, 16, 4);
            auto const sol = to_mat(trsm(to_tile(lo), to_tile(rhs)));
            CHECK(oracle::max_abs_diff(oracle::matmul(sol, oracle::transpose(lo)), rhs) <= 1e-12);
        }

        SUBCASE("syrk")
        {
            tile const c(2, 2, { 3, 1, 1, 5 });
            CHECK(syrk(tile(2, 3), c) == c);
            tile const r = syrk(tile(2, 1, { 1, 1 }), tile::identity(2));
            CHECK(r == tile(2, 2, { 0, -1, -1, 0 }));

            for (std::uint64_t seed = 0; seed < 10; ++seed)
            {
                auto const a = to_tile(oracle::random_matrix(9, 6, seed));
                auto const s = to_tile(oracle::random_spd(9, 1.0, seed + 100));
                tile const out = syrk(a, s);
                CHECK(out == out.transposed());
                auto const expected = oracle::matmul(to_mat(a), oracle::transpose(to_mat(a)));
                double err = 0.0;
                for (std::size_t i = 0; i < 9; ++i)
                    for (std::size_t j = 0; j < 9; ++j)
                        err = std::max(err, std::abs(out(i, j) - (s(i, j) - expected[i][j])));
                CHECK(err <= 1e-13);
            }
        }

        SUBCASE("gemm")
        {
            tile const c(2, 2, { 1, 2, 3, 4 });
            CHECK(gemm(tile(2, 2), tile(2, 2, { 5, 6, 7, 8 }), c) == c);
            CHECK(gemm(tile::identity(2), tile(2, 2, { 1, 2, 3, 4 }), tile(2, 2)) == tile(2, 2, { -1, -3, -2, -4 }));

            auto const a = oracle::random_matrix(8, 8, 11);
            auto const b = oracle::random_matrix(8, 8, 12);
            auto const cc = oracle::random_matrix(8, 8, 13);
            auto const ab = oracle::matmul(a, oracle::transpose(b));
            auto expected = cc;
            for (std::size_t i = 0; i < 8; ++i)
                for (std::size_t j = 0; j < 8; ++j)
                    expected[i][j] -= ab[i][j];
            CHECK(oracle::max_abs_diff(to_mat(gemm(to_tile(a), to_tile(b), to_tile(cc))), expected) <= 1e-13);

            CHECK_THROWS_AS(gemm(tile(2, 3), tile(2, 2), tile(2, 2)), taskgp::dimension_error);
        }

        SUBCASE("vector kernels")
        {
            auto const lo = *oracle::cholesky(oracle::random_spd(12, 12.0, 21));
            auto const b = oracle::random_vector(12, 22);
            CHECK(oracle::max_abs_diff(trsv(to_tile(lo), b), oracle::forward_sub(lo, b)) <= 1e-13);
            CHECK(oracle::max_abs_diff(trsv_trans(to_tile(lo), b), oracle::backward_sub_t(lo, b)) <= 1e-13);
            CHECK_THROWS_AS(trsv(tile(2, 2), segment{ 1, 1 }), taskgp::singular_triangular);
            CHECK_THROWS_AS(trsv_trans(tile(2, 2), segment{ 1, 1 }), taskgp::singular_triangular);

            auto const a = oracle::random_matrix(5, 7, 23);
            auto const x = oracle::random_vector(7, 24);
            auto const y = oracle::random_vector(5, 25);
            auto const ax = oracle::matvec(a, x);
            segment add = y, sub = y;
            for (std::size_t i = 0; i < 5; ++i)
            {
                add[i] += ax[i];
                sub[i] -= ax[i];
            }
            CHECK(oracle::max_abs_diff(gemv_add(to_tile(a), x, y), add) <= 1e-14);
            CHECK(oracle::max_abs_diff(gemv_sub(to_tile(a), x, y), sub) <= 1e-14);

            auto const atx = oracle::matvec(oracle::transpose(a), y);
            segment tsub = x;
            for (std::size_t i = 0; i < 7; ++i)
                tsub[i] -= atx[i];
            CHECK(oracle::max_abs_diff(gemv_trans_sub(to_tile(a), y, x), tsub) <= 1e-14);

            segment const d = diag_syrk_sub(tile(2, 2, { 1, 2, 3, 4 }), segment{ 10, 30 });
            CHECK(d == segment{ 5, 5 });
            CHECK(dot(segment{ 1, 2, 3 }, segment{ 4, 5, 6 }) == 32.0);
        }
    }
}
