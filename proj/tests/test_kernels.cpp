#include <doctest.h>

#include <vector>

#include "crednet/kernels.hpp"
#include "crednet/rng.hpp"

using crednet::Rng;
namespace kern = crednet::kern;

namespace {

std::vector<double> random_buf(std::size_t n, Rng& rng, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

} // namespace

TEST_CASE("matmul parallel matches serial reference bit for bit") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 1 + rng.below(40);
        std::size_t k = 1 + rng.below(40);
        std::size_t m = 1 + rng.below(40);
        auto a = random_buf(n * k, rng);
        auto b = random_buf(k * m, rng);
        std::vector<double> c1(n * m), c2(n * m);
        kern::matmul(a.data(), b.data(), c1.data(), n, k, m);
        kern::ref::matmul(a.data(), b.data(), c2.data(), n, k, m);
        CHECK(c1 == c2);
    }
    // above the parallel-dispatch threshold
    std::size_t n = 64, k = 48, m = 56;
    auto a = random_buf(n * k, rng);
    auto b = random_buf(k * m, rng);
    std::vector<double> c1(n * m), c2(n * m);
    kern::matmul(a.data(), b.data(), c1.data(), n, k, m);
    kern::ref::matmul(a.data(), b.data(), c2.data(), n, k, m);
    CHECK(c1 == c2);
}

TEST_CASE("matmul_nt and matmul_tn match naive transposition") {
    Rng rng(11);
    std::size_t n = 13, k = 9, m = 17;
    auto a = random_buf(n * k, rng);
    auto g = random_buf(n * m, rng);
    auto b = random_buf(k * m, rng);

    // a^T * g, reference by explicit transpose + matmul
    std::vector<double> at(k * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) at[p * n + i] = a[i * k + p];
    std::vector<double> want(k * m), got(k * m);
    kern::ref::matmul(at.data(), g.data(), want.data(), k, n, m);
    kern::matmul_tn(a.data(), g.data(), got.data(), n, k, m);
    for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    std::vector<double> got_ref(k * m);
    kern::ref::matmul_tn(a.data(), g.data(), got_ref.data(), n, k, m);
    CHECK(got == got_ref);

    // g * b^T
    std::vector<double> bt(m * k);
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < m; ++j) bt[j * k + p] = b[p * m + j];
    std::vector<double> want2(n * k), got2(n * k);
    kern::ref::matmul(g.data(), bt.data(), want2.data(), n, m, k);
    kern::matmul_nt(g.data(), b.data(), got2.data(), n, m, k);
    for (std::size_t i = 0; i < want2.size(); ++i)
        CHECK(got2[i] == doctest::Approx(want2[i]).epsilon(1e-12));
}

TEST_CASE("row_softmax parallel matches serial and zeroes masked entries") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 1 + rng.below(80);
        std::size_t m = 1 + rng.below(80);
        auto x = random_buf(n * m, rng, -5.0, 5.0);
        auto mask = random_buf(n * m, rng);
        for (auto& v : mask) v = v > 0 ? 1.0 : 0.0;
        std::vector<double> o1(n * m), o2(n * m);
        kern::row_softmax(x.data(), mask.data(), o1.data(), n, m);
        kern::ref::row_softmax(x.data(), mask.data(), o2.data(), n, m);
        CHECK(o1 == o2);
        for (std::size_t i = 0; i < n * m; ++i)
            if (mask[i] == 0.0) CHECK(o1[i] == 0.0);
    }
}

TEST_CASE("outer_sum matches reference") {
    Rng rng(5);
    std::size_t n = 70, m = 90;
    auto a = random_buf(n, rng);
    auto b = random_buf(m, rng);
    std::vector<double> o1(n * m), o2(n * m);
    kern::outer_sum(a.data(), b.data(), o1.data(), n, m);
    kern::ref::outer_sum(a.data(), b.data(), o2.data(), n, m);
    CHECK(o1 == o2);
    CHECK(o1[3 * m + 4] == a[3] + b[4]);
}
