#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "crednet/gradcheck.hpp"
#include "crednet/params_io.hpp"
#include "crednet/rng.hpp"
#include "crednet/tape.hpp"

using namespace crednet;
using namespace crednet::ad;

TEST_CASE("softmax of a zero row is uniform") {
    Tape t;
    Tensor x = Tensor::row({0, 0, 0});
    Tensor y = t.softmax_rows(x);
    for (int j = 0; j < 3; ++j) CHECK(y[j] == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("sigmoid(0) is one half") {
    Tape t;
    CHECK(t.sigmoid(Tensor::scalar(0.0)).item() == doctest::Approx(0.5));
}

TEST_CASE("masked softmax hand case") {
    Tape t;
    Tensor x = Tensor::row({2, 1, 3});
    Tensor mask = Tensor::row({1, 0, 1});
    Tensor y = t.masked_softmax_rows(x, mask);
    double denom = std::exp(2.0) + std::exp(3.0);
    CHECK(y[0] == doctest::Approx(std::exp(2.0) / denom).epsilon(1e-12));
    CHECK(y[1] == 0.0);
    CHECK(y[2] == doctest::Approx(std::exp(3.0) / denom).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one and are non-negative") {
    Rng rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t n = 1 + rng.below(12), m = 1 + rng.below(12);
        Tensor x(n, m);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-8, 8);
        Tape t;
        Tensor y = t.softmax_rows(x);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0;
            for (std::size_t j = 0; j < m; ++j) {
                CHECK(y(i, j) >= 0.0);
                s += y(i, j);
            }
            CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("shape mismatches name the op and shapes") {
    Tape t;
    Tensor a(2, 3), b(4, 5);
    CHECK_THROWS_WITH_AS(t.matmul(a, b), "matmul: shape mismatch 2x3 vs 4x5",
                         std::runtime_error);
    CHECK_THROWS_AS(t.mul(a, b), std::runtime_error);
    Rng rng(1);
    CHECK_THROWS_AS(t.dropout(a, 1.0, true, rng), std::runtime_error);
    CHECK_THROWS_AS(t.dropout(a, -0.1, true, rng), std::runtime_error);
}

TEST_CASE("backward hand case: sum of W*x") {
    Tape t;
    Tensor W = t.leaf(Tensor(2, 2, {1, 2, 3, 4}), "W");
    Tensor x = t.leaf(Tensor(2, 1, {1, 1}), "x");
    Tensor loss = t.sum(t.matmul(W, x));
    GradMap g = t.backward(loss);
    const Tensor& dx = g.at(x);
    CHECK(dx[0] == doctest::Approx(4.0)); // column sums of W
    CHECK(dx[1] == doctest::Approx(6.0));
    const Tensor& dW = g.at(W);
    for (std::size_t i = 0; i < 4; ++i) CHECK(dW[i] == doctest::Approx(1.0));
    CHECK(t.node_count() == 0); // tape consumed
}

TEST_CASE("backward of sigmoid at zero is a quarter") {
    Tape t;
    Tensor x = t.leaf(Tensor::scalar(0.0));
    GradMap g = t.backward(t.sigmoid(x));
    CHECK(g.at(x)[0] == doctest::Approx(0.25));
}

TEST_CASE("leaf not reaching the loss gets an all-zero gradient") {
    Tape t;
    Tensor used = t.leaf(Tensor::row({1, 2}));
    Tensor unused = t.leaf(Tensor(3, 2));
    GradMap g = t.backward(t.sum(used));
    const Tensor& dz = g.at(unused);
    CHECK(dz.rows() == 3);
    for (std::size_t i = 0; i < dz.size(); ++i) CHECK(dz[i] == 0.0);
}

TEST_CASE("backward rejects non-scalar and detached losses") {
    Tape t;
    Tensor x = t.leaf(Tensor::row({1, 2}));
    Tensor y = t.scale(x, 2.0);
    CHECK_THROWS_AS(t.backward(y), std::runtime_error);
    Tensor det = Tensor::scalar(1.0);
    CHECK_THROWS_AS(t.backward(det), std::runtime_error);
}

TEST_CASE("grad_check on a quadratic is exact to 1e-6") {
    auto f = [](Tape& t, const std::vector<Tensor>& p) {
        return t.sum(t.mul(p[0], p[0]));
    };
    double err = grad_check(f, {Tensor::row({1, 2})}, 1e-4);
    CHECK(err < 1e-6);
}

TEST_CASE("grad_check of a constant function is zero") {
    auto f = [](Tape& t, const std::vector<Tensor>& p) {
        return t.sum(t.scale(p[0], 0.0));
    };
    CHECK(grad_check(f, {Tensor::row({1, 2, 3})}, 1e-4) == 0.0);
}

namespace {

Tensor rand_t(Rng& rng, std::size_t n, std::size_t m, double lo = -2, double hi = 2) {
    Tensor t(n, m);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// exercises one op kind inside a scalar objective, several random shapes
double check_op(const char* name, int trials, std::uint64_t seed,
                const std::function<Tensor(Tape&, const std::vector<Tensor>&)>& f,
                const std::function<std::vector<Tensor>(Rng&)>& make_params) {
    INFO(name);
    Rng rng(seed);
    double worst = 0;
    for (int i = 0; i < trials; ++i) {
        auto params = make_params(rng);
        auto obj = [&](Tape& t, const std::vector<Tensor>& p) { return t.sum(f(t, p)); };
        worst = std::max(worst, grad_check(obj, params, 1e-4));
    }
    return worst;
}

} // namespace

TEST_CASE("all op kinds pass randomized gradient checks") {
    auto two_mats = [](Rng& rng) {
        std::size_t n = 1 + rng.below(5), m = 1 + rng.below(5);
        return std::vector<Tensor>{rand_t(rng, n, m), rand_t(rng, n, m)};
    };

    CHECK(check_op("matmul", 8, 100, [](Tape& t, const std::vector<Tensor>& p) {
        return t.matmul(p[0], p[1]);
    }, [](Rng& rng) {
        std::size_t n = 1 + rng.below(4), k = 1 + rng.below(4), m = 1 + rng.below(4);
        return std::vector<Tensor>{rand_t(rng, n, k), rand_t(rng, k, m)};
    }) < 1e-3);

    CHECK(check_op("add", 8, 101, [](Tape& t, const std::vector<Tensor>& p) {
        return t.add(p[0], p[1]);
    }, two_mats) < 1e-3);

    CHECK(check_op("add row broadcast", 4, 102, [](Tape& t, const std::vector<Tensor>& p) {
        return t.add(p[0], p[1]);
    }, [](Rng& rng) {
        std::size_t n = 2 + rng.below(4), m = 1 + rng.below(5);
        return std::vector<Tensor>{rand_t(rng, n, m), rand_t(rng, 1, m)};
    }) < 1e-3);

    CHECK(check_op("mul", 8, 103, [](Tape& t, const std::vector<Tensor>& p) {
        return t.mul(p[0], p[1]);
    }, two_mats) < 1e-3);

    CHECK(check_op("mul_scalar", 4, 104, [](Tape& t, const std::vector<Tensor>& p) {
        return t.mul_scalar(p[0], p[1]);
    }, [](Rng& rng) {
        return std::vector<Tensor>{rand_t(rng, 3, 2), rand_t(rng, 1, 1)};
    }) < 1e-3);

    CHECK(check_op("scale", 4, 105, [](Tape& t, const std::vector<Tensor>& p) {
        return t.scale(p[0], -1.7);
    }, [](Rng& rng) { return std::vector<Tensor>{rand_t(rng, 3, 4)}; }) < 1e-3);

    CHECK(check_op("scale_rows", 4, 106, [](Tape& t, const std::vector<Tensor>& p) {
        return t.scale_rows(p[0], p[1]);
    }, [](Rng& rng) {
        std::size_t n = 1 + rng.below(5);
        return std::vector<Tensor>{rand_t(rng, n, 3), rand_t(rng, n, 1)};
    }) < 1e-3);

    CHECK(check_op("concat_rows+slice", 6, 107, [](Tape& t, const std::vector<Tensor>& p) {
        Tensor c = t.concat_rows(p);
        return t.slice_rows(c, 1, c.rows());
    }, [](Rng& rng) {
        std::size_t m = 1 + rng.below(4);
        return std::vector<Tensor>{rand_t(rng, 1 + rng.below(3), m),
                                   rand_t(rng, 1 + rng.below(3), m)};
    }) < 1e-3);

    CHECK(check_op("concat_cols+slice", 6, 108, [](Tape& t, const std::vector<Tensor>& p) {
        Tensor c = t.concat_cols(p);
        return t.slice_cols(c, 0, 1 + c.cols() / 2);
    }, [](Rng& rng) {
        std::size_t n = 1 + rng.below(4);
        return std::vector<Tensor>{rand_t(rng, n, 1 + rng.below(3)),
                                   rand_t(rng, n, 1 + rng.below(3))};
    }) < 1e-3);

    CHECK(check_op("reshape", 4, 109, [](Tape& t, const std::vector<Tensor>& p) {
        return t.reshape(p[0], p[0].size(), 1);
    }, [](Rng& rng) { return std::vector<Tensor>{rand_t(rng, 2, 3)}; }) < 1e-3);

    CHECK(check_op("leaky_relu", 8, 110, [](Tape& t, const std::vector<Tensor>& p) {
        return t.leaky_relu(p[0], 0.2);
    }, [](Rng& rng) { return std::vector<Tensor>{rand_t(rng, 3, 3)}; }) < 1e-3);

    CHECK(check_op("relu", 8, 111, [](Tape& t, const std::vector<Tensor>& p) {
        return t.relu(p[0]);
    }, [](Rng& rng) { return std::vector<Tensor>{rand_t(rng, 3, 3)}; }) < 1e-3);

    CHECK(check_op("sigmoid", 6, 112, [](Tape& t, const std::vector<Tensor>& p) {
        return t.sigmoid(p[0]);
    }, [](Rng& rng) { return std::vector<Tensor>{rand_t(rng, 2, 4)}; }) < 1e-3);

    CHECK(check_op("log", 6, 113, [](Tape& t, const std::vector<Tensor>& p) {
        return t.log(p[0]);
    }, [](Rng& rng) { return std::vector<Tensor>{rand_t(rng, 2, 3, 0.2, 4.0)}; }) < 1e-3);

    CHECK(check_op("softmax_rows", 8, 114, [](Tape& t, const std::vector<Tensor>& p) {
        return t.mul(t.softmax_rows(p[0]), p[1]);
    }, two_mats) < 1e-3);

    CHECK(check_op("masked_softmax_rows", 8, 115, [](Tape& t, const std::vector<Tensor>& p) {
        std::size_t m = p[0].cols();
        Tensor mask(p[0].rows(), m);
        for (std::size_t i = 0; i < mask.rows(); ++i)
            for (std::size_t j = 0; j < m; ++j)
                mask(i, j) = (i + j) % 2 == 0 || j == 0 ? 1.0 : 0.0;
        return t.mul(t.masked_softmax_rows(p[0], mask), p[1]);
    }, two_mats) < 1e-3);

    CHECK(check_op("outer_sum", 4, 116, [](Tape& t, const std::vector<Tensor>& p) {
        return t.outer_sum(p[0], p[1]);
    }, [](Rng& rng) {
        return std::vector<Tensor>{rand_t(rng, 1 + rng.below(4), 1),
                                   rand_t(rng, 1 + rng.below(4), 1)};
    }) < 1e-3);

    CHECK(check_op("row_sum", 4, 117, [](Tape& t, const std::vector<Tensor>& p) {
        return t.row_sum(p[0]);
    }, [](Rng& rng) { return std::vector<Tensor>{rand_t(rng, 4, 3)}; }) < 1e-3);

    CHECK(check_op("bce_loss", 6, 118, [](Tape& t, const std::vector<Tensor>& p) {
        Tensor labels(p[0].rows(), 1);
        for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2 ? 1.0 : 0.0;
        return t.bce_loss(t.sigmoid(p[0]), labels);
    }, [](Rng& rng) { return std::vector<Tensor>{rand_t(rng, 5, 1)}; }) < 1e-3);
}

TEST_CASE("dropout") {
    Tensor x = Tensor::row({1, 2, 3, 4, 5, 6, 7, 8});
    Tape t;
    SUBCASE("train off is the identity, bit for bit") {
        Rng rng(1);
        Tensor y = t.dropout(x, 0.5, false, rng);
        CHECK(y.values() == x.values());
    }
    SUBCASE("inverted scaling preserves kept entries scaled by 1/keep") {
        Rng rng(2);
        Tensor y = t.dropout(x, 0.5, true, rng);
        int kept = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] != 0.0) {
                CHECK(y[i] == doctest::Approx(x[i] * 2.0));
                ++kept;
            }
        }
        CHECK(kept > 0);
    }
    SUBCASE("identical seeds give identical masks") {
        Rng r1(9), r2(9);
        Tensor y1 = t.dropout(x, 0.3, true, r1);
        Tensor y2 = t.dropout(x, 0.3, true, r2);
        CHECK(y1.values() == y2.values());
    }
}

TEST_CASE("apply dispatches the enumerated op kinds") {
    Tape t;
    Tensor a = Tensor::row({1, 2});
    Tensor b = Tensor::row({3, 4});
    CHECK(t.apply({.kind = OpKind::Add}, {a, b}).values() == std::vector<double>{4, 6});
    CHECK(t.apply({.kind = OpKind::Scale, .factor = 2.0}, {a}).values() ==
          std::vector<double>{2, 4});
    CHECK(t.apply({.kind = OpKind::Sum}, {a}).item() == 3.0);
    Op msm{.kind = OpKind::MaskedSoftmaxRows};
    msm.mask = Tensor::row({1, 0});
    Tensor y = t.apply(msm, {a});
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 0.0);
    CHECK_THROWS_AS(t.apply({.kind = OpKind::Matmul}, {a}), std::runtime_error);
}

TEST_CASE("concat then split recovers originals exactly") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n1 = 1 + rng.below(5), n2 = 1 + rng.below(5), m = 1 + rng.below(5);
        Tensor a = rand_t(rng, n1, m), b = rand_t(rng, n2, m);
        Tape t;
        Tensor c = t.concat_rows(std::vector<Tensor>{a, b});
        CHECK(t.slice_rows(c, 0, n1).values() == a.values());
        CHECK(t.slice_rows(c, n1, n1 + n2).values() == b.values());

        Tensor a2 = rand_t(rng, m, n1), b2 = rand_t(rng, m, n2);
        Tensor c2 = t.concat_cols(std::vector<Tensor>{a2, b2});
        CHECK(t.slice_cols(c2, 0, n1).values() == a2.values());
        CHECK(t.slice_cols(c2, n1, n1 + n2).values() == b2.values());
    }
}

TEST_CASE("identical inputs give bit-identical outputs with dropout off") {
    Rng rng(31);
    Tensor x = rand_t(rng, 6, 5);
    Tensor w = rand_t(rng, 5, 4);
    auto run = [&]() {
        Tape t;
        Tensor h = t.matmul(x, w);
        h = t.leaky_relu(h, 0.2);
        h = t.softmax_rows(h);
        return t.sum(h).item();
    };
    CHECK(run() == run());
}

TEST_CASE("parameter snapshots round-trip through the binary format") {
    NamedParams params;
    params.emplace_back("w1", Tensor(2, 3, {1, 2, 3, 4, 5, 6}));
    params.emplace_back("bias", Tensor::row({0.5, -0.5}));
    std::string path = "params_roundtrip_test.bin";
    save_params(path, params);
    NamedParams back = load_params(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].first == "w1");
    CHECK(back[0].second.values() == params[0].second.values());
    CHECK(back[0].second.rows() == 2);
    CHECK(back[1].first == "bias");
    CHECK(back[1].second.values() == params[1].second.values());
    std::remove(path.c_str());
}
