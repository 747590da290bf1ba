#include "mobkit/synthgen.hpp"

#include "mobkit/error.hpp"
#include "mobkit/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mobkit::synth {

namespace {

// Substream domains; region/cell index goes into the low bits.
constexpr std::uint64_t kSaltRegions = 0x1ull << 32;
constexpr std::uint64_t kSaltOdm = 0x2ull << 32;
constexpr std::uint64_t kSaltDeaths = 0x3ull << 32;
constexpr std::uint64_t kSaltIgg = 0x4ull << 32;

constexpr double kFlowScale = 1e-3;
constexpr double kMinDistanceKm = 1.0;
constexpr double kDriftMeanReversion = 0.6; // AR(1) coefficient of the weekly log-drift

// Mon..Sun multipliers for off-diagonal (inter-region) flows.
constexpr double kWeekdayFactor[7] = {1.00, 1.02, 1.01, 1.03, 1.05, 0.88, 0.80};

std::string region_id(int index)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "R%03d", index);
    return buf;
}

// 1 before the ramp, (1 - strength) from the lockdown date on, linear in
// between: the reduction builds up over the five days ending at lockdown.
double lockdown_scale(Date d, Date lockdown, double strength)
{
    const double ramp = std::clamp((5.0 - static_cast<double>(lockdown - d)) / 5.0, 0.0, 1.0);
    return 1.0 - strength * ramp;
}

} // namespace

void ScenarioConfig::validate() const
{
    if (n_regions < 2) throw Error("scenario: need at least 2 regions");
    if (date_range.start > date_range.end) throw Error("scenario: inverted date range");
    if (!date_range.contains(lockdown_date)) throw Error("scenario: lockdown date outside date range");
    if (planted_lag_days >= date_range.length()) throw Error("scenario: planted lag longer than the window");
    if (lockdown_strength < 0.0 || lockdown_strength > 1.0) throw Error("scenario: lockdown strength not in [0,1]");
    if (noise_sigma < 0.0 || weekly_drift_sigma < 0.0 || background_rate < 0.0 || igg_attack_rate_scale < 0.0)
        throw Error("scenario: negative noise/rate parameter");
    if (fine_cells_per_region < 1) throw Error("scenario: fine_cells_per_region must be >= 1");
}

odm::RegionRegistry gen_regions(const ScenarioConfig& config)
{
    config.validate();
    const Rng master(config.rng_seed);

    std::vector<odm::Region> regions;
    for (int i = 0; i < config.n_regions; ++i) {
        Rng rng = master.substream(kSaltRegions | static_cast<std::uint64_t>(i));
        const std::string group = region_id(i);
        const double lat = rng.uniform(40.0, 50.0);
        const double lon = rng.uniform(0.0, 12.0);
        const double population = std::exp(rng.uniform(std::log(5e4), std::log(8e5)));

        if (config.fine_cells_per_region == 1) {
            regions.push_back({group, group, lat, lon, population, group});
        }
        else {
            for (int c = 0; c < config.fine_cells_per_region; ++c) {
                odm::Region cell;
                cell.id = group + "_c" + std::to_string(c);
                cell.name = cell.id;
                cell.latitude = std::clamp(lat + rng.uniform(-0.2, 0.2), -90.0, 90.0);
                cell.longitude = std::clamp(lon + rng.uniform(-0.2, 0.2), -180.0, 180.0);
                cell.population = population / config.fine_cells_per_region;
                cell.group_id = group;
                regions.push_back(std::move(cell));
            }
        }
    }
    return odm::RegionRegistry(std::move(regions));
}

odm::ODMSeries gen_odm(const odm::RegionRegistry& registry, const ScenarioConfig& config)
{
    config.validate();
    const Rng master(config.rng_seed);
    const std::size_t n = registry.size();
    const auto weeks = weekly_periods(config.date_range);

    // Pairwise baselines fixed once; dynamics multiply on top.
    std::vector<double> base(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const odm::Region& a = registry.at(static_cast<std::uint32_t>(i));
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                base[i * n + j] = a.population * config.internal_factor;
                continue;
            }
            const odm::Region& b = registry.at(static_cast<std::uint32_t>(j));
            const double dist = std::max(odm::region_distance(a, b), kMinDistanceKm);
            base[i * n + j] =
                kFlowScale * a.population * b.population / std::pow(dist, config.gravity_exponent);
        }
    }

    std::vector<odm::ODMRecord> records(n * n * static_cast<std::size_t>(config.date_range.length()));

    // One substream per origin row: its draws do not depend on other rows,
    // so rows can be produced in any order or in parallel.
    // Weekly drift is a stationary AR(1) on the log scale: travel patterns
    // wander but revert, so weeks far apart decorrelate in both directions.
    const double drift_stationary_sd =
        config.weekly_drift_sigma / std::sqrt(1.0 - kDriftMeanReversion * kDriftMeanReversion);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = master.substream(kSaltOdm | static_cast<std::uint64_t>(i));
        std::vector<double> log_drift(n, 0.0);
        if (config.weekly_drift_sigma > 0.0) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) log_drift[j] = rng.normal(0.0, drift_stationary_sd);
            }
        }
        std::size_t slot = i * n * static_cast<std::size_t>(config.date_range.length());
        bool first_week = true;
        for (const DateRange& week : weeks) {
            if (config.weekly_drift_sigma > 0.0 && !first_week) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (j != i) {
                        log_drift[j] = kDriftMeanReversion * log_drift[j] +
                                       rng.normal(0.0, config.weekly_drift_sigma);
                    }
                }
            }
            first_week = false;
            for (Date d = week.start; d <= week.end; ++d) {
                const double ramp = lockdown_scale(d, config.lockdown_date, config.lockdown_strength);
                for (std::size_t j = 0; j < n; ++j) {
                    double count = base[i * n + j] * ramp;
                    if (i != j) count *= kWeekdayFactor[d.weekday()] * std::exp(log_drift[j]);
                    if (config.noise_sigma > 0.0) count *= rng.lognormal_unit(config.noise_sigma);
                    records[slot++] = {d, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), count};
                }
            }
        }
    }
    return odm::ODMSeries(registry, std::move(records), config.date_range);
}

std::map<std::string, leadlag::IrregularSeries> daily_internal_series(const odm::ODMSeries& series)
{
    const odm::RegionRegistry& reg = series.registry();
    const std::int64_t n_days = series.date_range().length();
    const std::size_t n_groups = reg.groups().size();

    std::vector<std::vector<double>> sums(n_groups, std::vector<double>(static_cast<std::size_t>(n_days), 0.0));
    for (const odm::ODMRecord& r : series.records()) {
        const std::uint32_t go = reg.group_of(r.origin);
        if (go != reg.group_of(r.destination)) continue;
        sums[go][static_cast<std::size_t>(r.date - series.date_range().start)] += r.count;
    }

    std::map<std::string, leadlag::IrregularSeries> out;
    for (std::size_t g = 0; g < n_groups; ++g) {
        leadlag::IrregularSeries s;
        s.times.reserve(static_cast<std::size_t>(n_days));
        s.values = std::move(sums[g]);
        for (std::int64_t t = 0; t < n_days; ++t) {
            s.times.push_back(static_cast<double>((series.date_range().start + t).days()));
        }
        out.emplace(reg.groups()[g], std::move(s));
    }
    return out;
}

EpidemicData gen_epidemic(const odm::RegionRegistry& registry, const odm::ODMSeries& series,
                          const ScenarioConfig& config)
{
    config.validate();
    if (!series.date_range().contains(config.date_range))
        throw Error("gen_epidemic: ODM series does not cover the scenario date range");
    const Rng master(config.rng_seed);

    EpidemicData data;
    data.regions = registry.groups();
    for (Date d = config.date_range.start; d <= config.date_range.end; ++d) data.dates.push_back(d);
    data.mobility = daily_internal_series(series);

    // Group populations (fine cells summed).
    std::map<std::string, double> group_pop;
    for (const odm::Region& r : registry.regions()) {
        group_pop[r.group_id.empty() ? r.id : r.group_id] += r.population;
    }

    std::string seed_group = config.seed_region;
    if (seed_group.empty()) {
        for (const auto& [g, pop] : group_pop) {
            if (seed_group.empty() || pop > group_pop.at(seed_group)) seed_group = g;
        }
    }
    else if (!std::count(data.regions.begin(), data.regions.end(), seed_group)) {
        throw Error("gen_epidemic: seed region " + seed_group + " is not a group in the registry");
    }

    // Connectivity from the seed over the week leading into lockdown.
    DateRange seed_week = {config.lockdown_date - 7, config.lockdown_date - 1};
    seed_week.start = std::max(seed_week.start, config.date_range.start);
    seed_week.end = std::max(seed_week.end, seed_week.start);
    const odm::ConnectivityMatrix conn = odm::aggregate_connectivity(series, seed_week);
    const std::map<std::string, double> mobility_from_seed = regress::mobility_from_seed(conn, seed_group);

    data.truth.planted_lag_days = config.planted_lag_days;
    data.truth.lockdown_date = config.lockdown_date;
    data.truth.outbreak_date = config.outbreak_date;
    data.truth.seed_region = seed_group;
    data.truth.alpha1 = config.alpha1;
    data.truth.alpha2 = config.alpha2;
    data.truth.log_const = config.log_const;
    data.truth.rng_seed = config.rng_seed;
    data.truth.mobility_from_seed = mobility_from_seed;

    const std::int64_t n_days = config.date_range.length();
    for (std::size_t g = 0; g < data.regions.size(); ++g) {
        const std::string& region = data.regions[g];
        Rng rng = master.substream(kSaltDeaths | static_cast<std::uint64_t>(g));

        const double m = mobility_from_seed.at(region);
        if (m <= 0.0) throw Error("gen_epidemic: zero connectivity from seed to " + region);
        const double lm = std::log(m);
        const double toll = std::exp(config.log_const + config.alpha1 * lm + config.alpha2 * lm * lm);
        data.truth.toll[region] = toll;

        const leadlag::NormalizedSeries nmob = leadlag::normalize_mobility_reduction(data.mobility.at(region));

        // Shifted reduction profile, gated by the outbreak date; dates
        // before the window contribute zero deaths.
        std::vector<double> profile(static_cast<std::size_t>(n_days), 0.0);
        for (std::int64_t t = 0; t < n_days; ++t) {
            const Date d = config.date_range.start + t;
            if (d < config.outbreak_date) continue;
            const std::int64_t source = t - config.planted_lag_days;
            if (source < 0) continue;
            profile[static_cast<std::size_t>(t)] = nmob.series.values[static_cast<std::size_t>(source)];
        }

        // mobility-independent mortality: a region-specific daily rate, so
        // late in the window it dilutes the mobility signal region by region
        const double bg_rate = config.background_rate > 0.0 ? config.background_rate * rng.uniform() : 0.0;

        std::vector<double> curve(static_cast<std::size_t>(n_days), 0.0);
        double background = 0.0;
        double running_max = 0.0;
        for (std::int64_t t = 0; t < n_days; ++t) {
            const Date d = config.date_range.start + t;
            if (d >= config.outbreak_date) {
                double level = profile[static_cast<std::size_t>(t)];
                if (config.noise_sigma > 0.0) level += rng.normal(0.0, config.noise_sigma);
                running_max = std::max(running_max, level); // keeps the curve nondecreasing
            }
            if (bg_rate > 0.0) background += bg_rate * rng.uniform(0.5, 1.5);
            curve[static_cast<std::size_t>(t)] = toll * running_max + background;
        }
        data.cumdeaths.emplace(region, std::move(curve));

        Rng igg_rng = master.substream(kSaltIgg | static_cast<std::uint64_t>(g));
        const double pop = group_pop.at(region);
        const long tested = std::max(30l, std::lround(0.002 * pop));
        const double attack = std::clamp(config.igg_attack_rate_scale * toll / pop, 0.0, 0.95);
        const long positives = igg_rng.binomial(tested, attack);
        data.igg.push_back({region, static_cast<double>(positives), static_cast<double>(tested)});
    }
    return data;
}

regress::ResponsePanel EpidemicData::deaths_panel() const
{
    regress::ResponsePanel panel;
    for (const auto& [region, curve] : cumdeaths) {
        for (std::size_t t = 0; t < dates.size(); ++t) panel.set(dates[t], region, curve[t]);
    }
    return panel;
}

leadlag::IrregularSeries EpidemicData::deaths_series(const std::string& region) const
{
    auto it = cumdeaths.find(region);
    if (it == cumdeaths.end()) throw Error("unknown region " + region);
    leadlag::IrregularSeries s;
    for (std::size_t t = 0; t < dates.size(); ++t) {
        s.times.push_back(static_cast<double>(dates[t].days()));
        s.values.push_back(it->second[t]);
    }
    return s;
}

std::string GroundTruth::to_json() const
{
    nlohmann::json j;
    j["planted_lag_days"] = planted_lag_days;
    j["lockdown_date"] = lockdown_date.to_string();
    j["outbreak_date"] = outbreak_date.to_string();
    j["seed_region"] = seed_region;
    j["alpha1"] = alpha1;
    j["alpha2"] = alpha2;
    j["log_const"] = log_const;
    j["rng_seed"] = rng_seed;
    j["mobility_from_seed"] = mobility_from_seed;
    j["toll"] = toll;
    return j.dump(2) + "\n";
}

regress::RegressionDataset gen_cross_section(const CrossSectionConfig& config)
{
    if (config.n_rows < 5) throw Error("cross section: need at least 5 rows");
    Rng rng = Rng(config.rng_seed).substream(0x5ull << 32);

    regress::RegressionDataset ds;
    ds.seed_region = "S000";
    for (int i = 0; i < config.n_rows; ++i) {
        regress::RegressionRow row;
        char buf[16];
        std::snprintf(buf, sizeof buf, "S%03d", i);
        row.region_id = buf;
        const double lm = rng.uniform(config.log_mobility_lo, config.log_mobility_hi);
        row.mobility = std::exp(lm);
        row.distance = rng.uniform(config.distance_lo, config.distance_hi);
        row.response = config.const_term + config.alpha1 * lm + config.alpha2 * lm * lm +
                       config.alpha3 * row.distance;
        if (config.noise_sigma > 0.0) row.response += rng.normal(0.0, config.noise_sigma);
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

} // namespace mobkit::synth
