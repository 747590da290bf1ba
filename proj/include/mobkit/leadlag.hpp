#pragma once

#include "mobkit/dates.hpp"

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace mobkit::leadlag {

/// Observations at strictly increasing times (days since epoch; fractional
/// times allowed for sub-daily data). At least two points.
struct IrregularSeries {
    std::vector<double> times;
    std::vector<double> values;

    std::size_t size() const { return times.size(); }
    void validate() const; // throws unless strictly increasing and size >= 2
};

/// Reads/writes the `date,value` series CSV.
IrregularSeries read_series_csv(std::istream& in);
void write_series_csv(const IrregularSeries& s, std::ostream& out);

enum class NormalizationKind { MobilityReduction, CumulativeDeaths };

/// Min-max normalized series in [0,1] with both endpoints attained.
/// Keeps summary statistics of the raw values for quality flagging.
struct NormalizedSeries {
    IrregularSeries series;
    NormalizationKind kind;
    double raw_min = 0.0;
    double raw_max = 0.0;
    double raw_iqr = 0.0;
};

/// Mobility reduction index: 1 - (v - min)/(max - min). Value 1 marks the
/// strongest observed reduction (lockdown floor), 0 the unrestricted peak.
NormalizedSeries normalize_mobility_reduction(const IrregularSeries& series);

/// Plain min-max scaling (v - min)/(max - min) for cumulative series.
/// Dips are allowed: excess-death cumulatives can decrease.
NormalizedSeries normalize_cumdeaths(const IrregularSeries& series);

/// Hayashi-Yoshida covariance for nonsynchronously observed series:
/// sum over increment pairs whose half-open observation intervals overlap.
/// Interval-sweep implementation, uncentered raw increments.
double hy_covariance(const IrregularSeries& x, const IrregularSeries& y);

enum class ContrastMode { Pearson, HayashiYoshida };

struct LagConfig {
    double max_lag_days = 40.0; // grid spans [-max_lag, +max_lag]
    double step_days = 1.0;
    ContrastMode mode = ContrastMode::Pearson;
    int min_overlap = 3; // lags pairing fewer points are excluded
};

/// Result of the lag scan between a leader (mobility reduction) and a
/// lagger (cumulative deaths). theta_hat maximizes |contrast|; positive
/// theta means the lagger trails the leader by theta days.
struct LagEstimate {
    std::vector<double> grid;     // ordered lags, includes 0
    std::vector<double> contrast; // NaN where excluded
    std::vector<bool> excluded;
    double theta_hat = 0.0;
    double contrast_at_theta = 0.0;
    double correlation_raw = 0.0;     // pearson at lag 0 (NaN if undefined)
    double correlation_shifted = 0.0; // pearson at theta_hat
    double r_squared_shifted = 0.0;   // simple-regression R^2 at theta_hat
    long overlap_count = 0;           // paired points at theta_hat
    double lagger_raw_iqr = 0.0;
    ContrastMode mode = ContrastMode::Pearson;

    std::string to_json(const std::set<std::string>& flags = {}) const;
};

/// Scans the lag grid: for each theta the lagger's time axis is shifted by
/// -theta and the contrast evaluated against the leader. Ties at equal
/// |contrast| resolve toward the smallest |theta|, then the positive one.
LagEstimate estimate_lag(const NormalizedSeries& leader, const NormalizedSeries& lagger, const LagConfig& config = {},
                         int threads = 1);

struct LagQualityConfig {
    double spurious_lag_cap = 30.0; // |theta_hat| at or beyond this is suspect
    long min_overlap = 10;
    double flat_iqr_floor = 1.0; // raw-scale IQR below this marks a flat lagger
};

constexpr const char* kFlagSpuriousLargeLag = "SPURIOUS_LARGE_LAG";
constexpr const char* kFlagFlatTarget = "FLAT_TARGET";

std::set<std::string> lag_quality_flags(const LagEstimate& estimate, const LagQualityConfig& config = {});

} // namespace mobkit::leadlag
