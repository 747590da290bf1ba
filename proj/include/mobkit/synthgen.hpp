#pragma once

#include "mobkit/connectivity.hpp"
#include "mobkit/dates.hpp"
#include "mobkit/leadlag.hpp"
#include "mobkit/odm.hpp"
#include "mobkit/regress.hpp"
#include "mobkit/region.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mobkit::synth {

/// Everything that defines a synthetic scenario. Identical configs yield
/// byte-identical corpora: all randomness flows from rng_seed through
/// per-region substreams, so generation order and thread count never
/// change the output.
struct ScenarioConfig {
    int n_regions = 30;
    std::uint64_t rng_seed = 42;
    DateRange date_range = {Date(2020, 1, 1), Date(2020, 1, 1) + 119};

    // mobility dynamics
    double gravity_exponent = 2.0;
    double internal_factor = 0.35;   // diagonal flow = population * factor
    Date lockdown_date = Date(2020, 1, 1) + 45;
    double lockdown_strength = 0.8;  // post-lockdown flows scale by (1 - strength)
    double weekly_drift_sigma = 0.0; // innovation sd of a mean-reverting weekly
                                     // log-drift on off-diagonal flows
    double noise_sigma = 0.0;        // lognormal flow noise and death-curve noise

    // epidemic dynamics
    std::string seed_region;         // empty: most populous group
    int planted_lag_days = 14;
    Date outbreak_date = Date(2020, 1, 1); // mobility-driven deaths start here
    double background_rate = 0.0;          // mobility-independent daily increments
    double log_const = 0.2;                // toll = exp(log_const + a1 log m + a2 (log m)^2)
    double alpha1 = 0.35;
    double alpha2 = 0.02;
    double igg_attack_rate_scale = 0.1;

    int fine_cells_per_region = 1; // >1 splits each region into ODM-level cells

    void validate() const;
};

/// Seeded region registry: centroids in a bounded box, log-uniform
/// populations, identity partition (optionally split into fine cells).
odm::RegionRegistry gen_regions(const ScenarioConfig& config);

/// Gravity-model flows with weekday periodicity on off-diagonal cells, a
/// 5-day linear ramp reaching full (1 - lockdown_strength) scaling at the
/// lockdown date, optional weekly drift and lognormal noise.
odm::ODMSeries gen_odm(const odm::RegionRegistry& registry, const ScenarioConfig& config);

/// Daily diagonal of the group-level connectivity: one raw internal
/// mobility series per group. General utility for lead-lag inputs.
std::map<std::string, leadlag::IrregularSeries> daily_internal_series(const odm::ODMSeries& series);

struct GroundTruth {
    int planted_lag_days = 0;
    Date lockdown_date;
    Date outbreak_date;
    std::string seed_region;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double log_const = 0.0;
    std::uint64_t rng_seed = 0;
    std::map<std::string, double> mobility_from_seed; // m_i entering the toll
    std::map<std::string, double> toll;               // final mobility-driven deaths

    std::string to_json() const;
};

struct EpidemicData {
    std::vector<std::string> regions; // sorted group ids
    std::vector<Date> dates;
    std::map<std::string, std::vector<double>> cumdeaths;      // aligned with dates
    std::map<std::string, leadlag::IrregularSeries> mobility;  // raw daily internal
    std::vector<regress::IgGRecord> igg;
    GroundTruth truth;

    regress::ResponsePanel deaths_panel() const;
    leadlag::IrregularSeries deaths_series(const std::string& region) const;
};

/// Cumulative excess-death curves with a planted lag: each region's
/// mobility-driven component is its own reduction curve shifted by
/// planted_lag_days and scaled to a toll driven by connectivity from the
/// seed region. Noise is applied to the profile and floored at the
/// running maximum so curves stay nondecreasing. Antibody positives are
/// binomial draws proportional to the attack rate.
EpidemicData gen_epidemic(const odm::RegionRegistry& registry, const odm::ODMSeries& series,
                          const ScenarioConfig& config);

/// Cross-sectional rows drawn from a known quadratic log-mobility response
/// surface; the direct oracle for coefficient-recovery tests.
struct CrossSectionConfig {
    int n_rows = 60;
    std::uint64_t rng_seed = 1;
    double const_term = 5.0;
    double alpha1 = 1.2;
    double alpha2 = 0.3;
    double alpha3 = -0.01;
    double noise_sigma = 0.0; // absolute sd of response noise
    double log_mobility_lo = 0.5, log_mobility_hi = 8.0;
    double distance_lo = 10.0, distance_hi = 900.0;
};

regress::RegressionDataset gen_cross_section(const CrossSectionConfig& config);

} // namespace mobkit::synth
