#include "mobkit/rng.hpp"

#include <cmath>

namespace mobkit {

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed)
{
    std::uint64_t s = seed;
    engine_.seed(splitmix64(s));
}

Rng Rng::substream(std::uint64_t salt) const
{
    std::uint64_t s = seed_ ^ (0xA0761D6478BD642Full + salt);
    std::uint64_t mixed = splitmix64(s);
    return Rng(mixed);
}

std::uint64_t Rng::next_u64()
{
    return engine_();
}

double Rng::uniform()
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi)
{
    return lo + (hi - lo) * uniform();
}

double Rng::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; u clamped away from 0 so log stays finite.
    double u = uniform();
    if (u <= 0.0) u = 0x1.0p-53;
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double a = 6.283185307179586476925286766559 * v;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

double Rng::lognormal_unit(double sigma)
{
    if (sigma == 0.0) return 1.0;
    return std::exp(sigma * normal() - 0.5 * sigma * sigma);
}

long Rng::binomial(long n, double p)
{
    if (p <= 0.0 || n <= 0) return 0;
    if (p >= 1.0) return n;
    long k = 0;
    for (long i = 0; i < n; ++i) {
        if (uniform() < p) ++k;
    }
    return k;
}

} // namespace mobkit
