#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace crednet {

// mt19937_64 core with hand-rolled distribution transforms. The standard
// distributions differ between library implementations; these do not, so
// seeded runs are reproducible across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed)
        : eng_(splitmix(seed)), seed_mix_(splitmix(seed ^ 0x5bd1e995u)) {}

    std::uint64_t bits() { return eng_(); }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // modulo bias is negligible for desk-scale n; not worth a rejection loop
        return n ? eng_() % n : 0;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller, one value per call (the spare is discarded so the stream
    // position does not depend on call interleaving)
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // independent child stream; stable regardless of how much the parent
    // has been consumed
    Rng fork(std::uint64_t stream) const {
        return Rng(seed_mix_ ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 eng_;
    std::uint64_t seed_mix_;
};

} // namespace crednet
