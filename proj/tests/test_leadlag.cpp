#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mobkit/error.hpp"
#include "mobkit/leadlag.hpp"
#include "mobkit/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace mobkit;
using namespace mobkit::leadlag;

namespace {

IrregularSeries daily(const std::vector<double>& values, double t0 = 0.0)
{
    IrregularSeries s;
    for (std::size_t i = 0; i < values.size(); ++i) s.times.push_back(t0 + static_cast<double>(i));
    s.values = values;
    return s;
}

// Lockdown-style reduction curve: flat 0, 5-day linear rise, flat 1.
std::vector<double> ramp_curve(int n_days, int ramp_end)
{
    std::vector<double> v(static_cast<std::size_t>(n_days));
    for (int t = 0; t < n_days; ++t) {
        v[static_cast<std::size_t>(t)] = std::clamp((5.0 - (ramp_end - t)) / 5.0, 0.0, 1.0);
    }
    return v;
}

std::vector<double> shift_values(const std::vector<double>& v, int lag)
{
    std::vector<double> out(v.size(), 0.0);
    for (std::size_t t = 0; t < v.size(); ++t) {
        const long s = static_cast<long>(t) - lag;
        if (s >= 0 && s < static_cast<long>(v.size())) out[t] = v[static_cast<std::size_t>(s)];
        else if (s >= static_cast<long>(v.size())) out[t] = v.back();
    }
    return out;
}

// raw mobility series whose reduction index equals `reduction` exactly
IrregularSeries mobility_with_reduction(const std::vector<double>& reduction)
{
    std::vector<double> m;
    for (double r : reduction) m.push_back(100.0 * (1.0 - r) + 10.0);
    return daily(m);
}

// Naive O(n*m) Hayashi-Yoshida oracle: literal double loop over interval
// pairs, kept independent of the sweep implementation.
double hy_naive(const IrregularSeries& x, const IrregularSeries& y)
{
    double sum = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        for (std::size_t j = 1; j < y.size(); ++j) {
            const bool overlap = x.times[i - 1] < y.times[j] && y.times[j - 1] < x.times[i];
            if (overlap) sum += (x.values[i] - x.values[i - 1]) * (y.values[j] - y.values[j - 1]);
        }
    }
    return sum;
}

double pearson_oracle(const std::vector<double>& a, const std::vector<double>& b)
{
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

// Brute-force integer-lag scan on regular daily grids, by index shifting.
long best_lag_oracle(const std::vector<double>& x, const std::vector<double>& y, long max_lag)
{
    long best = 0;
    double best_abs = -1.0;
    for (long lag = -max_lag; lag <= max_lag; ++lag) {
        std::vector<double> xs, ys;
        for (long t = 0; t < static_cast<long>(x.size()); ++t) {
            const long u = t + lag;
            if (u < 0 || u >= static_cast<long>(y.size())) continue;
            xs.push_back(x[static_cast<std::size_t>(t)]);
            ys.push_back(y[static_cast<std::size_t>(u)]);
        }
        if (xs.size() < 3) continue;
        const double r = std::abs(pearson_oracle(xs, ys));
        if (r > best_abs + 1e-15) {
            best_abs = r;
            best = lag;
        }
    }
    return best;
}

} // namespace

TEST_CASE("normalize_mobility_reduction: linear map and degenerate input")
{
    const NormalizedSeries n = normalize_mobility_reduction(daily({10.0, 5.0, 0.0}));
    CHECK(n.series.values == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(n.raw_min == 0.0);
    CHECK(n.raw_max == 10.0);

    CHECK_THROWS_WITH_AS(normalize_mobility_reduction(daily({3.0, 3.0, 3.0})),
                         doctest::Contains("degenerate"), Error);
}

TEST_CASE("normalize: random series matches the direct formula; endpoints attained")
{
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v;
        for (int i = 0; i < 50; ++i) v.push_back(rng.uniform(1.0, 500.0));
        const auto nm = normalize_mobility_reduction(daily(v));
        const auto nc = normalize_cumdeaths(daily(v));
        const double lo = *std::min_element(v.begin(), v.end());
        const double hi = *std::max_element(v.begin(), v.end());
        for (std::size_t i = 0; i < v.size(); ++i) {
            CHECK(nm.series.values[i] == doctest::Approx(1.0 - (v[i] - lo) / (hi - lo)).epsilon(1e-12));
            CHECK(nc.series.values[i] == doctest::Approx((v[i] - lo) / (hi - lo)).epsilon(1e-12));
            CHECK(nm.series.values[i] >= 0.0);
            CHECK(nm.series.values[i] <= 1.0);
        }
        CHECK(*std::min_element(nc.series.values.begin(), nc.series.values.end()) == 0.0);
        CHECK(*std::max_element(nc.series.values.begin(), nc.series.values.end()) == 1.0);
    }
}

TEST_CASE("normalize_cumdeaths: linear map and affine antisymmetry")
{
    const NormalizedSeries n = normalize_cumdeaths(daily({0.0, 50.0, 100.0}));
    CHECK(n.series.values == std::vector<double>{0.0, 0.5, 1.0});

    // negating the series reverses the normalization
    const NormalizedSeries neg = normalize_cumdeaths(daily({0.0, -50.0, -100.0}));
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(neg.series.values[i] == doctest::Approx(1.0 - n.series.values[i]));
    }
}

TEST_CASE("hy_covariance: synchronous grids reduce to sum of increment products")
{
    Rng rng(7);
    std::vector<double> xv, yv;
    for (int i = 0; i < 40; ++i) {
        xv.push_back(rng.uniform(0, 10));
        yv.push_back(rng.uniform(0, 10));
    }
    const IrregularSeries x = daily(xv), y = daily(yv);
    double direct = 0.0;
    for (std::size_t i = 1; i < xv.size(); ++i) direct += (xv[i] - xv[i - 1]) * (yv[i] - yv[i - 1]);
    CHECK(hy_covariance(x, y) == direct); // bitwise: same accumulation order
}

TEST_CASE("hy_covariance: hand-enumerated overlap fixture")
{
    // x has one interval (0,2] with increment 3; y has (0,1] and (1,3]
    // with increments 1 and 2; both overlap (0,2] -> 3*1 + 3*2 = 9
    IrregularSeries x;
    x.times = {0.0, 2.0};
    x.values = {0.0, 3.0};
    IrregularSeries y;
    y.times = {0.0, 1.0, 3.0};
    y.values = {0.0, 1.0, 3.0};
    CHECK(hy_covariance(x, y) == doctest::Approx(9.0));
    CHECK(hy_covariance(y, x) == doctest::Approx(9.0));
}

TEST_CASE("hy_covariance: sweep equals naive double loop on random nonsynchronous pairs")
{
    Rng rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        auto random_series = [&rng]() {
            IrregularSeries s;
            const int n = 2 + static_cast<int>(rng.uniform(0, 49));
            double t = rng.uniform(0, 3);
            double v = rng.uniform(-1, 1);
            for (int i = 0; i < n; ++i) {
                s.times.push_back(t);
                s.values.push_back(v);
                t += rng.uniform(0.05, 2.0);
                v += rng.uniform(-1, 1);
            }
            return s;
        };
        const IrregularSeries x = random_series(), y = random_series();
        const double sweep = hy_covariance(x, y);
        const double naive = hy_naive(x, y);
        CHECK(sweep == doctest::Approx(naive).epsilon(1e-12));

        // symmetry and bilinearity in increments
        CHECK(hy_covariance(y, x) == doctest::Approx(sweep).epsilon(1e-12));
        IrregularSeries y3 = y;
        for (double& v : y3.values) v *= 3.0;
        CHECK(hy_covariance(x, y3) == doctest::Approx(3.0 * sweep).epsilon(1e-12));
    }
}

TEST_CASE("estimate_lag: zero lag on identical series")
{
    const auto x = normalize_mobility_reduction(mobility_with_reduction(ramp_curve(60, 30)));
    const auto est = estimate_lag(x, x, {.max_lag_days = 20});
    CHECK(est.theta_hat == 0.0);
    CHECK(est.correlation_shifted == doctest::Approx(1.0));
}

TEST_CASE("estimate_lag: planted 5-day shift found by both modes and the oracle")
{
    const std::vector<double> base = ramp_curve(60, 30);
    const std::vector<double> lagged = shift_values(base, 5);
    const auto x = normalize_mobility_reduction(mobility_with_reduction(base));
    const auto y = normalize_cumdeaths(daily(lagged));

    CHECK(best_lag_oracle(x.series.values, y.series.values, 20) == 5);

    for (ContrastMode mode : {ContrastMode::Pearson, ContrastMode::HayashiYoshida}) {
        const auto est = estimate_lag(x, y, {.max_lag_days = 20, .mode = mode});
        CHECK(est.theta_hat == 5.0);
        CHECK(est.correlation_shifted == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(est.r_squared_shifted == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("estimate_lag: exact recovery and antisymmetry for integer lags")
{
    const int n = 120;
    const std::vector<double> base = ramp_curve(n, 45);
    for (int lag : {-10, -3, 0, 3, 10, 21}) {
        const auto x = normalize_mobility_reduction(mobility_with_reduction(base));
        const auto y = normalize_cumdeaths(daily(shift_values(base, lag)));
        const auto est = estimate_lag(x, y, {.max_lag_days = 40});
        CHECK(est.theta_hat == static_cast<double>(lag));
        CHECK(est.correlation_shifted >= est.correlation_raw - 1e-12);

        const auto back = estimate_lag(y, x, {.max_lag_days = 40});
        CHECK(back.theta_hat == -est.theta_hat);
    }
}

TEST_CASE("estimate_lag: i.i.d. noise sigma=0.05 moves theta_hat by <= 2 days in >= 95% of trials")
{
    const int n = 120, lag = 14;
    const std::vector<double> base = ramp_curve(n, 45);
    const std::vector<double> lagged = shift_values(base, lag);
    Rng rng(301);

    int within = 0;
    const int trials = 200;
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<double> noisy = lagged;
        for (double& v : noisy) v += rng.normal(0.0, 0.05);
        const auto x = normalize_mobility_reduction(mobility_with_reduction(base));
        const auto y = normalize_cumdeaths(daily(noisy));
        const auto est = estimate_lag(x, y, {.max_lag_days = 40});
        if (std::abs(est.theta_hat - lag) <= 2.0) ++within;
    }
    CHECK(within >= 190); // 95% of 200
}

TEST_CASE("estimate_lag: sub-day grid step resolves fractional lags")
{
    // half-day sampling, lag of 2.5 days
    IrregularSeries mob;
    for (int i = 0; i < 160; ++i) {
        const double t = 0.5 * i;
        mob.times.push_back(t);
        mob.values.push_back(110.0 - 100.0 * std::clamp((t - 30.0) / 5.0, 0.0, 1.0));
    }
    IrregularSeries deaths;
    for (int i = 0; i < 160; ++i) {
        const double t = 0.5 * i;
        deaths.times.push_back(t);
        deaths.values.push_back(std::clamp((t - 2.5 - 30.0) / 5.0, 0.0, 1.0));
    }
    const auto est = estimate_lag(normalize_mobility_reduction(mob), normalize_cumdeaths(deaths),
                                  {.max_lag_days = 10.0, .step_days = 0.5});
    CHECK(est.theta_hat == 2.5);
    CHECK(est.correlation_shifted == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("estimate_lag: exclusions and failure when nothing overlaps")
{
    // series overlapping by only 2 days: every lag leaves < 3 pairs
    const auto x = normalize_mobility_reduction(daily({3.0, 2.0, 1.0, 0.5}, 0.0));
    const auto y = normalize_cumdeaths(daily({0.0, 1.0, 2.0, 3.0}, 50.0));
    CHECK_THROWS_WITH_AS(estimate_lag(x, y, {.max_lag_days = 3}), doctest::Contains("excluded"), Error);

    CHECK_THROWS_AS(estimate_lag(x, y, {.max_lag_days = 0.0}), Error);
    CHECK_THROWS_AS(estimate_lag(x, y, {.max_lag_days = 10.0, .step_days = 0.0}), Error);
}

TEST_CASE("lag_quality_flags")
{
    LagEstimate est;
    est.theta_hat = 35.0;
    est.overlap_count = 50;
    est.lagger_raw_iqr = 40.0;
    CHECK(lag_quality_flags(est).count(kFlagSpuriousLargeLag) == 1);

    est.theta_hat = 14.0;
    est.overlap_count = 4;
    CHECK(lag_quality_flags(est).count(kFlagSpuriousLargeLag) == 1);

    est.overlap_count = 80;
    CHECK(lag_quality_flags(est).empty());

    est.lagger_raw_iqr = 0.2; // flat cumulative curve on the raw scale
    CHECK(lag_quality_flags(est).count(kFlagFlatTarget) == 1);
}

TEST_CASE("series CSV and LagEstimate JSON")
{
    std::istringstream in("date,value\n2020-03-01,5\n2020-03-02,4\n2020-03-04,1\n");
    const IrregularSeries s = read_series_csv(in);
    REQUIRE(s.size() == 3);
    CHECK(s.times[2] - s.times[0] == 3.0);

    std::ostringstream out;
    write_series_csv(s, out);
    std::istringstream in2(out.str());
    const IrregularSeries s2 = read_series_csv(in2);
    CHECK(s2.times == s.times);
    CHECK(s2.values == s.values);

    const auto x = normalize_mobility_reduction(daily(ramp_curve(30, 15)));
    const auto est = estimate_lag(x, x, {.max_lag_days = 5});
    const auto j = nlohmann::json::parse(est.to_json(lag_quality_flags(est)));
    CHECK(j.at("theta_hat").get<double>() == 0.0);
    CHECK(j.at("grid").size() == 11);
    CHECK(j.at("contrast").size() == 11);
    CHECK(j.at("mode").get<std::string>() == "pearson");
}

TEST_CASE("irregular series validation")
{
    IrregularSeries bad;
    bad.times = {0.0, 0.0};
    bad.values = {1.0, 2.0};
    CHECK_THROWS_AS(bad.validate(), Error);
    IrregularSeries one;
    one.times = {0.0};
    one.values = {1.0};
    CHECK_THROWS_AS(one.validate(), Error);
}
