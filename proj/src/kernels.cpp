#include "crednet/kernels.hpp"

#include <cmath>
#include <limits>

namespace crednet::kern {

namespace {

inline void matmul_row(const double* a, const double* b, double* c,
                       std::size_t i, std::size_t k, std::size_t m) {
    double* ci = c + i * m;
    for (std::size_t j = 0; j < m; ++j) ci[j] = 0.0;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
        const double aip = ai[p];
        if (aip == 0.0) continue;
        const double* bp = b + p * m;
        for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
}

inline void matmul_nt_row(const double* a, const double* b, double* c,
                          std::size_t i, std::size_t m, std::size_t k) {
    const double* ai = a + i * m;
    double* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
        const double* bp = b + p * m;
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += ai[j] * bp[j];
        ci[p] = acc;
    }
}

inline void matmul_tn_row(const double* a, const double* b, double* c,
                          std::size_t p, std::size_t n, std::size_t k, std::size_t m) {
    double* cp = c + p * m;
    for (std::size_t j = 0; j < m; ++j) cp[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double aip = a[i * k + p];
        if (aip == 0.0) continue;
        const double* bi = b + i * m;
        for (std::size_t j = 0; j < m; ++j) cp[j] += aip * bi[j];
    }
}

inline void softmax_row(const double* x, const double* mask, double* out,
                        std::size_t i, std::size_t m) {
    const double* xi = x + i * m;
    const double* mi = mask ? mask + i * m : nullptr;
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j)
        if ((!mi || mi[j] != 0.0) && xi[j] > hi) hi = xi[j];
    double* oi = out + i * m;
    if (hi == -std::numeric_limits<double>::infinity()) {
        // fully masked row: defined as all zeros
        for (std::size_t j = 0; j < m; ++j) oi[j] = 0.0;
        return;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double e = (!mi || mi[j] != 0.0) ? std::exp(xi[j] - hi) : 0.0;
        oi[j] = e;
        sum += e;
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < m; ++j) oi[j] *= inv;
}

} // namespace

void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t k, std::size_t m) {
    const std::ptrdiff_t ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * k * m > 16384)
    for (std::ptrdiff_t i = 0; i < ni; ++i)
        matmul_row(a, b, c, static_cast<std::size_t>(i), k, m);
}

void row_softmax(const double* x, const double* mask, double* out,
                 std::size_t n, std::size_t m) {
    const std::ptrdiff_t ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * m > 4096)
    for (std::ptrdiff_t i = 0; i < ni; ++i)
        softmax_row(x, mask, out, static_cast<std::size_t>(i), m);
}

void outer_sum(const double* a, const double* b, double* out,
               std::size_t n, std::size_t m) {
    const std::ptrdiff_t ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * m > 16384)
    for (std::ptrdiff_t i = 0; i < ni; ++i) {
        double* oi = out + static_cast<std::size_t>(i) * m;
        const double ai = a[i];
        for (std::size_t j = 0; j < m; ++j) oi[j] = ai + b[j];
    }
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t n, std::size_t m, std::size_t k) {
    const std::ptrdiff_t ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * k * m > 16384)
    for (std::ptrdiff_t i = 0; i < ni; ++i)
        matmul_nt_row(a, b, c, static_cast<std::size_t>(i), m, k);
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t n, std::size_t k, std::size_t m) {
    const std::ptrdiff_t ki = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(static) if (n * k * m > 16384)
    for (std::ptrdiff_t p = 0; p < ki; ++p)
        matmul_tn_row(a, b, c, static_cast<std::size_t>(p), n, k, m);
}

namespace ref {

void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) matmul_row(a, b, c, i, k, m);
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t n, std::size_t m, std::size_t k) {
    for (std::size_t i = 0; i < n; ++i) matmul_nt_row(a, b, c, i, m, k);
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t p = 0; p < k; ++p) matmul_tn_row(a, b, c, p, n, k, m);
}

void row_softmax(const double* x, const double* mask, double* out,
                 std::size_t n, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) softmax_row(x, mask, out, i, m);
}

void outer_sum(const double* a, const double* b, double* out,
               std::size_t n, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        double* oi = out + i * m;
        for (std::size_t j = 0; j < m; ++j) oi[j] = a[i] + b[j];
    }
}

} // namespace ref

} // namespace crednet::kern
