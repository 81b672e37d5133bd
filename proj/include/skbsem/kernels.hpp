#pragma once

#include <cstddef>

namespace skbsem::kernels {

// Dense kernels behind the autodiff ops. Every kernel exists twice: a serial
// reference (*_serial) and an OpenMP version (*_parallel) that partitions
// independent output rows across threads. Within one output element the
// accumulation order is identical in both, so results are bit-identical for
// any thread count — seeded runs stay reproducible with parallelism on.
//
// The default entry points dispatch on configuration and problem size.

// Thread cap for the parallel kernels. 0 = library default (all available).
void set_max_threads(int n);
int max_threads();

// Force the serial reference path everywhere (used by tests and the
// single-core acceptance runs).
void set_parallel_enabled(bool enabled);
bool parallel_enabled();

// Restores the previous threading configuration on destruction.
class ThreadingGuard {
public:
    ThreadingGuard(bool enabled, int threads);
    ~ThreadingGuard();

private:
    bool prev_enabled_;
    int prev_threads_;
};

// c[m x n] = a[m x k] * b[k x n]; accumulate adds into c instead.
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_nn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_nn_parallel(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate);

// c[m x n] = a^T * b with a stored [k x m].
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_tn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_tn_parallel(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate);

// c[m x n] = a * b^T with b stored [n x k].
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_nt_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_nt_parallel(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate);

// y[i] = f(x[i]) and z[i] = f(x[i], y[i]) for plain function pointers.
using UnaryFn = double (*)(double);
using BinaryFn = double (*)(double, double);
void map_unary(const double* x, double* y, std::size_t n, UnaryFn f);
void map_unary_serial(const double* x, double* y, std::size_t n, UnaryFn f);
void map_unary_parallel(const double* x, double* y, std::size_t n, UnaryFn f);
void map_binary(const double* x, const double* y, double* z, std::size_t n, BinaryFn f);
void map_binary_serial(const double* x, const double* y, double* z, std::size_t n, BinaryFn f);
void map_binary_parallel(const double* x, const double* y, double* z, std::size_t n, BinaryFn f);

}  // namespace skbsem::kernels
