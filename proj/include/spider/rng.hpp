#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>

namespace spider::rng {

// splitmix64 finalizer; bijective on uint64
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

// Seed tree: every stochastic draw in the project is keyed by a hash of
// (master_seed, path...) so that replays are bit-identical and independent
// of evaluation order or thread scheduling.
constexpr std::uint64_t derive(std::uint64_t master,
                               std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(master ^ 0x9e3779b97f4a7c15ULL);
    for (std::uint64_t x : path)
        h = mix64(h ^ (x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
    return h;
}

// Deterministic uniform stream (splitmix64 sequence). Satisfies
// UniformRandomBitGenerator; all distribution transforms below are
// hand-rolled so the produced sequences are fixed by the seed alone.
class Stream {
  public:
    using result_type = std::uint64_t;
    explicit constexpr Stream(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    constexpr result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    // uniform on the open interval (0,1); never returns an endpoint
    double uniform() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    double exponential() noexcept { return -std::log(uniform()); }

    // Box-Muller, stateless (no cached spare)
    double gaussian() noexcept {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

  private:
    std::uint64_t state_;
};

}  // namespace spider::rng
