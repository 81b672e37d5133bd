#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "skbsem/kernels.hpp"
#include "skbsem/rng.hpp"

using namespace skbsem;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.gaussian();
    return v;
}

}  // namespace

TEST_CASE("gemm_nn matches a hand-computed 2x2 product") {
    // [1 2; 3 4] * [5 6; 7 8] = [19 22; 43 50]
    const std::vector<double> a{1, 2, 3, 4}, b{5, 6, 7, 8};
    std::vector<double> c(4);
    kernels::gemm_nn_serial(a.data(), b.data(), c.data(), 2, 2, 2, false);
    CHECK(c == std::vector<double>{19, 22, 43, 50});
}

TEST_CASE("gemm accumulate adds into the output") {
    const std::vector<double> a{1, 0, 0, 1}, b{2, 3, 4, 5};
    std::vector<double> c{10, 10, 10, 10};
    kernels::gemm_nn_serial(a.data(), b.data(), c.data(), 2, 2, 2, true);
    CHECK(c == std::vector<double>{12, 13, 14, 15});
}

TEST_CASE("gemm_tn and gemm_nt agree with explicit transposition") {
    Rng rng(7);
    const std::size_t m = 5, k = 4, n = 3;
    const auto a = random_vec(rng, k * m);  // stored [k x m] for tn
    const auto b = random_vec(rng, k * n);

    // Reference: transpose a into [m x k], then plain gemm_nn.
    std::vector<double> at(m * k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < m; ++j) at[j * k + i] = a[i * m + j];
    std::vector<double> want(m * n), got(m * n);
    kernels::gemm_nn_serial(at.data(), b.data(), want.data(), m, k, n, false);
    kernels::gemm_tn_serial(a.data(), b.data(), got.data(), m, k, n, false);
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));

    const auto a2 = random_vec(rng, m * k);
    const auto b2 = random_vec(rng, n * k);  // stored [n x k] for nt
    std::vector<double> b2t(k * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) b2t[j * n + i] = b2[i * k + j];
    kernels::gemm_nn_serial(a2.data(), b2t.data(), want.data(), m, k, n, false);
    kernels::gemm_nt_serial(a2.data(), b2.data(), got.data(), m, k, n, false);
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
    Rng rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t m = 1 + rng.uniform_index(40);
        const std::size_t k = 1 + rng.uniform_index(40);
        const std::size_t n = 1 + rng.uniform_index(40);
        const auto b = random_vec(rng, k * n);

        {
            const auto a = random_vec(rng, m * k);
            std::vector<double> cs(m * n), cp(m * n);
            kernels::gemm_nn_serial(a.data(), b.data(), cs.data(), m, k, n, false);
            kernels::gemm_nn_parallel(a.data(), b.data(), cp.data(), m, k, n, false);
            CHECK(cs == cp);
        }
        {
            const auto a = random_vec(rng, k * m);
            std::vector<double> cs(m * n), cp(m * n);
            kernels::gemm_tn_serial(a.data(), b.data(), cs.data(), m, k, n, false);
            kernels::gemm_tn_parallel(a.data(), b.data(), cp.data(), m, k, n, false);
            CHECK(cs == cp);
        }
        {
            const auto a = random_vec(rng, m * k);
            const auto bt = random_vec(rng, n * k);
            std::vector<double> cs(m * n), cp(m * n);
            kernels::gemm_nt_serial(a.data(), bt.data(), cs.data(), m, k, n, false);
            kernels::gemm_nt_parallel(a.data(), bt.data(), cp.data(), m, k, n, false);
            CHECK(cs == cp);
        }
    }
}

TEST_CASE("map kernels match between serial and parallel") {
    Rng rng(3);
    const auto x = random_vec(rng, 1000);
    const auto y = random_vec(rng, 1000);
    std::vector<double> s(1000), p(1000);
    kernels::map_unary_serial(x.data(), s.data(), x.size(), [](double v) { return std::exp(v); });
    kernels::map_unary_parallel(x.data(), p.data(), x.size(), [](double v) { return std::exp(v); });
    CHECK(s == p);
    kernels::map_binary_serial(x.data(), y.data(), s.data(), x.size(), [](double a, double b) { return a * b; });
    kernels::map_binary_parallel(x.data(), y.data(), p.data(), x.size(), [](double a, double b) { return a * b; });
    CHECK(s == p);
}

TEST_CASE("threading guard restores configuration") {
    kernels::set_parallel_enabled(true);
    kernels::set_max_threads(0);
    {
        kernels::ThreadingGuard guard(false, 1);
        CHECK_FALSE(kernels::parallel_enabled());
        CHECK(kernels::max_threads() == 1);
    }
    CHECK(kernels::parallel_enabled());
    CHECK(kernels::max_threads() == 0);
}
