#pragma once

#include <cstdint>
#include <random>

namespace mobkit {

/// Seedable RNG with derivable substreams. The engine (mt19937_64) and all
/// sampling routines are fixed algorithms, so the stream of draws is fully
/// determined by the seed: substreams generated in parallel reproduce the
/// exact output of a sequential run.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    /// Independent stream derived from this stream's seed and a salt.
    /// Deterministic; does not consume state from the parent.
    Rng substream(std::uint64_t salt) const;

    std::uint64_t next_u64();

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller (pairs cached).
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Mean-one lognormal: exp(sigma*Z - sigma^2/2).
    double lognormal_unit(double sigma);

    /// Binomial by Bernoulli summation; exact and portable, O(n).
    long binomial(long n, double p);

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// splitmix64 step; used for seed derivation and cheap hashing.
std::uint64_t splitmix64(std::uint64_t& state);

} // namespace mobkit
