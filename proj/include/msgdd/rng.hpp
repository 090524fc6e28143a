#ifndef MSGDD_RNG_HPP
#define MSGDD_RNG_HPP

#include "msgdd/types.hpp"

#include <cstdint>
#include <random>

namespace msgdd {

// splitmix64 step; used to derive independent stream seeds from (seed, tags).
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag_a, std::uint64_t tag_b = 0) {
    return mix_seed(mix_seed(mix_seed(seed) ^ tag_a) ^ tag_b);
}

// Deterministic random stream. mt19937_64 is fully specified by the standard
// and the normal/uniform transforms below are written out explicitly, so two
// streams built from equal seeds produce identical sequences on any platform.
// normal() draws two uniforms per call (Box-Muller, cosine branch only); there
// is no cached spare, which keeps the stream state equal to the engine state
// and makes checkpoint resume exact.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n), rejection sampled (no modulo bias)
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw Error("core", "uniform_int needs n >= 1");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    template <typename Scalar>
    void fill_normal(ArrayX<Scalar>& out, double stddev, double mean = 0.0) {
        for (Eigen::Index i = 0; i < out.size(); ++i)
            out[i] = static_cast<Scalar>(mean + stddev * normal());
    }

    // Fisher-Yates with the explicit integer draw above.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace msgdd

#endif
