#include "mobkit/leadlag.hpp"

#include "mobkit/csv.hpp"
#include "mobkit/error.hpp"
#include "mobkit/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace mobkit::leadlag {

namespace {

constexpr double kTimeEps = 1e-9;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

double quantile_type7(std::vector<double> sorted, double q)
{
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double iqr(const std::vector<double>& values)
{
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    return quantile_type7(sorted, 0.75) - quantile_type7(sorted, 0.25);
}

NormalizedSeries min_max_normalize(const IrregularSeries& series, NormalizationKind kind, bool invert)
{
    series.validate();
    const auto [lo_it, hi_it] = std::minmax_element(series.values.begin(), series.values.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi == lo) throw Error("degenerate normalization: series is constant");

    NormalizedSeries out;
    out.kind = kind;
    out.raw_min = lo;
    out.raw_max = hi;
    out.raw_iqr = iqr(series.values);
    out.series.times = series.times;
    out.series.values.reserve(series.size());
    for (double v : series.values) {
        const double scaled = (v - lo) / (hi - lo);
        out.series.values.push_back(invert ? 1.0 - scaled : scaled);
    }
    return out;
}

// Pairs x(t) with y(t + theta) on matching timestamps (two-pointer scan).
void matched_pairs(const IrregularSeries& x, const IrregularSeries& y, double theta, std::vector<double>& xs,
                   std::vector<double>& ys)
{
    xs.clear();
    ys.clear();
    std::size_t j = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double target = x.times[i] + theta;
        while (j < y.size() && y.times[j] < target - kTimeEps) ++j;
        if (j == y.size()) break;
        if (std::abs(y.times[j] - target) <= kTimeEps) {
            xs.push_back(x.values[i]);
            ys.push_back(y.values[j]);
        }
    }
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys)
{
    const std::size_t n = xs.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return kNaN;
    return sxy / std::sqrt(sxx * syy);
}

// Observation points of `a` falling inside the closed time span of `b`.
long span_overlap_count(const IrregularSeries& a, const IrregularSeries& b, double b_shift)
{
    const double lo = b.times.front() - b_shift, hi = b.times.back() - b_shift;
    long n = 0;
    for (double t : a.times) {
        if (t >= lo - kTimeEps && t <= hi + kTimeEps) ++n;
    }
    return n;
}

} // namespace

void IrregularSeries::validate() const
{
    if (times.size() != values.size()) throw Error("series: times and values differ in length");
    if (times.size() < 2) throw Error("series: need at least 2 observations");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (times[i] <= times[i - 1]) throw Error("series: observation times must be strictly increasing");
    }
}

IrregularSeries read_series_csv(std::istream& in)
{
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw Error("series CSV: empty input");
    if (fields.size() != 2 || fields[0] != "date" || fields[1] != "value")
        throw Error("series CSV: expected header 'date,value'");
    IrregularSeries s;
    while (reader.next(fields)) {
        const std::string where = "series line " + std::to_string(reader.line_number());
        if (fields.size() != 2) throw Error(where + ": expected 2 fields");
        s.times.push_back(static_cast<double>(Date::parse(fields[0]).days()));
        s.values.push_back(parse_double(fields[1], where));
    }
    s.validate();
    return s;
}

void write_series_csv(const IrregularSeries& s, std::ostream& out)
{
    out << "date,value\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out << Date(static_cast<std::int64_t>(std::llround(s.times[i]))).to_string() << ','
            << format_double(s.values[i]) << '\n';
    }
}

NormalizedSeries normalize_mobility_reduction(const IrregularSeries& series)
{
    return min_max_normalize(series, NormalizationKind::MobilityReduction, /*invert=*/true);
}

NormalizedSeries normalize_cumdeaths(const IrregularSeries& series)
{
    return min_max_normalize(series, NormalizationKind::CumulativeDeaths, /*invert=*/false);
}

double hy_covariance(const IrregularSeries& x, const IrregularSeries& y)
{
    x.validate();
    y.validate();
    const std::size_t n = x.size(), m = y.size();
    double sum = 0.0;
    // Increment i covers (t[i-1], t[i]]; increment j covers (s[j-1], s[j]].
    // They overlap iff t[i-1] < s[j] and s[j-1] < t[i]. Both interval lists
    // advance monotonically, so j restarts from the first candidate.
    std::size_t j_lo = 1;
    for (std::size_t i = 1; i < n; ++i) {
        const double dx = x.values[i] - x.values[i - 1];
        while (j_lo < m && y.times[j_lo] <= x.times[i - 1]) ++j_lo;
        for (std::size_t j = j_lo; j < m && y.times[j - 1] < x.times[i]; ++j) {
            sum += dx * (y.values[j] - y.values[j - 1]);
        }
    }
    return sum;
}

LagEstimate estimate_lag(const NormalizedSeries& leader, const NormalizedSeries& lagger, const LagConfig& config,
                         int threads)
{
    if (config.max_lag_days <= 0.0) throw Error("estimate_lag: max_lag_days must be positive");
    if (config.step_days <= 0.0) throw Error("estimate_lag: step_days must be positive");
    const IrregularSeries& x = leader.series;
    const IrregularSeries& y = lagger.series;
    x.validate();
    y.validate();

    LagEstimate est;
    est.mode = config.mode;
    est.lagger_raw_iqr = lagger.raw_iqr;

    const long k_max = static_cast<long>(std::floor(config.max_lag_days / config.step_days + kTimeEps));
    for (long k = -k_max; k <= k_max; ++k) est.grid.push_back(static_cast<double>(k) * config.step_days);
    est.contrast.assign(est.grid.size(), kNaN);
    est.excluded.assign(est.grid.size(), false);

    // The full grid is materialized before the argmax, so evaluation order
    // (and thread count) cannot change the selection.
    std::vector<long> pair_counts(est.grid.size(), 0);
    parallel_for(est.grid.size(), threads, [&](std::size_t gi) {
        const double theta = est.grid[gi];
        std::vector<double> xs, ys;
        matched_pairs(x, y, theta, xs, ys);
        pair_counts[gi] = static_cast<long>(xs.size());
        if (config.mode == ContrastMode::Pearson) {
            if (static_cast<int>(xs.size()) < config.min_overlap) {
                est.excluded[gi] = true;
                return;
            }
            const double r = pearson(xs, ys);
            if (std::isnan(r)) {
                est.excluded[gi] = true;
                return;
            }
            est.contrast[gi] = r;
        }
        else {
            const long span = std::min(span_overlap_count(x, y, theta), span_overlap_count(y, x, -theta));
            if (span < config.min_overlap) {
                est.excluded[gi] = true;
                return;
            }
            IrregularSeries shifted;
            shifted.times.reserve(y.size());
            for (double t : y.times) shifted.times.push_back(t - theta);
            shifted.values = y.values;
            est.contrast[gi] = hy_covariance(x, shifted);
        }
    });

    // argmax |contrast|; ties -> smaller |theta|, then positive theta.
    std::size_t best = est.grid.size();
    for (std::size_t gi = 0; gi < est.grid.size(); ++gi) {
        if (est.excluded[gi]) continue;
        if (best == est.grid.size()) {
            best = gi;
            continue;
        }
        const double a = std::abs(est.contrast[gi]), b = std::abs(est.contrast[best]);
        if (a > b) {
            best = gi;
        }
        else if (a == b) {
            const double ta = std::abs(est.grid[gi]), tb = std::abs(est.grid[best]);
            if (ta < tb || (ta == tb && est.grid[gi] > est.grid[best])) best = gi;
        }
    }
    if (best == est.grid.size()) throw Error("estimate_lag: every lag in the grid was excluded (too little overlap)");

    est.theta_hat = est.grid[best];
    est.contrast_at_theta = est.contrast[best];
    est.overlap_count = pair_counts[best];

    std::vector<double> xs, ys;
    matched_pairs(x, y, 0.0, xs, ys);
    est.correlation_raw = xs.size() >= 3 ? pearson(xs, ys) : kNaN;
    matched_pairs(x, y, est.theta_hat, xs, ys);
    est.correlation_shifted = xs.size() >= 3 ? pearson(xs, ys) : kNaN;
    est.r_squared_shifted =
        std::isnan(est.correlation_shifted) ? kNaN : est.correlation_shifted * est.correlation_shifted;
    return est;
}

std::set<std::string> lag_quality_flags(const LagEstimate& estimate, const LagQualityConfig& config)
{
    std::set<std::string> flags;
    if (std::abs(estimate.theta_hat) >= config.spurious_lag_cap || estimate.overlap_count < config.min_overlap) {
        flags.insert(kFlagSpuriousLargeLag);
    }
    if (estimate.lagger_raw_iqr < config.flat_iqr_floor) {
        flags.insert(kFlagFlatTarget);
    }
    return flags;
}

std::string LagEstimate::to_json(const std::set<std::string>& flags) const
{
    nlohmann::json j;
    j["mode"] = mode == ContrastMode::Pearson ? "pearson" : "hy";
    j["grid"] = grid;
    nlohmann::json contrast_json = nlohmann::json::array();
    for (std::size_t i = 0; i < contrast.size(); ++i) {
        if (excluded[i]) {
            contrast_json.push_back(nullptr);
        }
        else {
            contrast_json.push_back(contrast[i]);
        }
    }
    j["contrast"] = contrast_json;
    j["theta_hat"] = theta_hat;
    j["contrast_at_theta"] = contrast_at_theta;
    j["correlation_raw"] = std::isnan(correlation_raw) ? nlohmann::json(nullptr) : nlohmann::json(correlation_raw);
    j["correlation_shifted"] =
        std::isnan(correlation_shifted) ? nlohmann::json(nullptr) : nlohmann::json(correlation_shifted);
    j["r_squared_shifted"] =
        std::isnan(r_squared_shifted) ? nlohmann::json(nullptr) : nlohmann::json(r_squared_shifted);
    j["overlap_count"] = overlap_count;
    j["flags"] = flags;
    return j.dump(2) + "\n";
}

} // namespace mobkit::leadlag
