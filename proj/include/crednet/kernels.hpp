#pragma once

#include <cstddef>

namespace crednet::kern {

// Dense numeric kernels behind the tensor ops. Each has an OpenMP-parallel
// implementation (the default) and a serial reference in kern::ref used by
// tests and the benchmark. Parallel variants partition by output row with
// serial accumulation per element, so results are bit-identical to the
// reference for any thread count.

// c[n x m] = a[n x k] * b[k x m]
void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t k, std::size_t m);

// row-wise softmax with optional additive mask: where mask[i*m+j] == 0 the
// entry gets exactly zero weight; mask == nullptr means no masking.
void row_softmax(const double* x, const double* mask, double* out,
                 std::size_t n, std::size_t m);

// out[i*m+j] = a[i] + b[j]
void outer_sum(const double* a, const double* b, double* out,
               std::size_t n, std::size_t m);

// c[n x k] = a[n x m] * b[k x m]^T
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t n, std::size_t m, std::size_t k);

// c[k x m] = a[n x k]^T * b[n x m]
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t n, std::size_t k, std::size_t m);

namespace ref {
void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t k, std::size_t m);
void row_softmax(const double* x, const double* mask, double* out,
                 std::size_t n, std::size_t m);
void outer_sum(const double* a, const double* b, double* out,
               std::size_t n, std::size_t m);
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t n, std::size_t m, std::size_t k);
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t n, std::size_t k, std::size_t m);
} // namespace ref

} // namespace crednet::kern
