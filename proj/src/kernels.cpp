#include "skbsem/kernels.hpp"

#include <algorithm>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace skbsem::kernels {

namespace {

bool g_parallel = true;
int g_max_threads = 0;

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWorkThreshold = 16384;

int effective_threads() {
#ifdef _OPENMP
    int hw = omp_get_max_threads();
    if (g_max_threads > 0) return std::min(g_max_threads, hw);
    return hw;
#else
    return 1;
#endif
}

bool use_parallel(std::size_t work) {
    if (!g_parallel || work < kParallelWorkThreshold) return false;
    return effective_threads() > 1;
}

}  // namespace

void set_max_threads(int n) { g_max_threads = n < 0 ? 0 : n; }
int max_threads() { return g_max_threads; }
void set_parallel_enabled(bool enabled) { g_parallel = enabled; }
bool parallel_enabled() { return g_parallel; }

ThreadingGuard::ThreadingGuard(bool enabled, int threads)
    : prev_enabled_(g_parallel), prev_threads_(g_max_threads) {
    g_parallel = enabled;
    g_max_threads = threads;
}

ThreadingGuard::~ThreadingGuard() {
    g_parallel = prev_enabled_;
    g_max_threads = prev_threads_;
}

// One output row of C = A*B, accumulated in increasing-k order. Shared by
// the serial and parallel variants so both produce identical bits.
static inline void gemm_nn_row(const double* a, const double* b, double* c,
                               std::size_t i, std::size_t k, std::size_t n, bool accumulate) {
    double* crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
        const double av = arow[p];
        const double* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
}

void gemm_nn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) gemm_nn_row(a, b, c, i, k, n, accumulate);
}

void gemm_nn_parallel(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i)
        gemm_nn_row(a, b, c, static_cast<std::size_t>(i), k, n, accumulate);
#else
    gemm_nn_serial(a, b, c, m, k, n, accumulate);
#endif
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (use_parallel(m * k * n))
        gemm_nn_parallel(a, b, c, m, k, n, accumulate);
    else
        gemm_nn_serial(a, b, c, m, k, n, accumulate);
}

static inline void gemm_tn_row(const double* a, const double* b, double* c,
                               std::size_t i, std::size_t k, std::size_t m, std::size_t n, bool accumulate) {
    double* crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
        const double av = a[p * m + i];
        const double* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
}

void gemm_tn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) gemm_tn_row(a, b, c, i, k, m, n, accumulate);
}

void gemm_tn_parallel(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i)
        gemm_tn_row(a, b, c, static_cast<std::size_t>(i), k, m, n, accumulate);
#else
    gemm_tn_serial(a, b, c, m, k, n, accumulate);
#endif
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (use_parallel(m * k * n))
        gemm_tn_parallel(a, b, c, m, k, n, accumulate);
    else
        gemm_tn_serial(a, b, c, m, k, n, accumulate);
}

static inline void gemm_nt_row(const double* a, const double* b, double* c,
                               std::size_t i, std::size_t k, std::size_t n, bool accumulate) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
        const double* brow = b + j * k;
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        if (accumulate)
            crow[j] += acc;
        else
            crow[j] = acc;
    }
}

void gemm_nt_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) gemm_nt_row(a, b, c, i, k, n, accumulate);
}

void gemm_nt_parallel(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i)
        gemm_nt_row(a, b, c, static_cast<std::size_t>(i), k, n, accumulate);
#else
    gemm_nt_serial(a, b, c, m, k, n, accumulate);
#endif
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (use_parallel(m * k * n))
        gemm_nt_parallel(a, b, c, m, k, n, accumulate);
    else
        gemm_nt_serial(a, b, c, m, k, n, accumulate);
}

void map_unary_serial(const double* x, double* y, std::size_t n, UnaryFn f) {
    for (std::size_t i = 0; i < n; ++i) y[i] = f(x[i]);
}

void map_unary_parallel(const double* x, double* y, std::size_t n, UnaryFn f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) y[i] = f(x[i]);
#else
    map_unary_serial(x, y, n, f);
#endif
}

void map_unary(const double* x, double* y, std::size_t n, UnaryFn f) {
    if (use_parallel(n * 8))
        map_unary_parallel(x, y, n, f);
    else
        map_unary_serial(x, y, n, f);
}

void map_binary_serial(const double* x, const double* y, double* z, std::size_t n, BinaryFn f) {
    for (std::size_t i = 0; i < n; ++i) z[i] = f(x[i], y[i]);
}

void map_binary_parallel(const double* x, const double* y, double* z, std::size_t n, BinaryFn f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) z[i] = f(x[i], y[i]);
#else
    map_binary_serial(x, y, z, n, f);
#endif
}

void map_binary(const double* x, const double* y, double* z, std::size_t n, BinaryFn f) {
    if (use_parallel(n * 8))
        map_binary_parallel(x, y, z, n, f);
    else
        map_binary_serial(x, y, z, n, f);
}

}  // namespace skbsem::kernels
