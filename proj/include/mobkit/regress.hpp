#pragma once

#include "mobkit/connectivity.hpp"
#include "mobkit/dates.hpp"
#include "mobkit/leadlag.hpp"
#include "mobkit/region.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace mobkit::regress {

/// The model family: response explained by log-mobility (linear +
/// quadratic) and/or distance from the seed region.
enum class ModelKind { Full, MobilityOnly, DistanceOnly };

enum class ResponseTransform { Identity, Log };

std::string model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// One region's cross-sectional observation: outcome (cumulative excess
/// deaths at a date, or antibody positives), mobility from the seed
/// region over the reference week, and distance to the seed region.
struct RegressionRow {
    std::string region_id;
    double response = 0.0;
    double mobility = 0.0; // nonnegative
    double distance = 0.0; // km
};

struct RegressionDataset {
    std::vector<RegressionRow> rows;
    Date response_date;
    DateRange mobility_period;
    std::string seed_region;
    ResponseTransform response_transform = ResponseTransform::Identity;
};

/// Keeps rows with strictly positive mobility and response (the log scale
/// needs both; anonymity thresholding cuts small cells to zero anyway).
/// Throws "insufficient data" if fewer rows remain than the largest model
/// needs (its parameter count + 1).
RegressionDataset select_cut(const RegressionDataset& dataset);

struct FitResult {
    ModelKind kind = ModelKind::Full;
    std::vector<std::string> names; // "const" first
    std::vector<double> coefficients;
    std::vector<double> standard_errors;
    std::vector<double> p_values;
    double r_squared = 0.0;
    bool degenerate_response = false; // SST == 0: r_squared reported as 0
    std::vector<double> standardized; // aligned with names; NaN at the intercept
    long n_rows = 0;
    std::string formula;

    std::string to_json() const;
};

/// Ordinary least squares on a design matrix whose first column is the
/// intercept. Column-pivoted QR; standard errors from sigma^2 (X'X)^-1;
/// two-sided p-values from Student-t with n-p degrees of freedom.
FitResult ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                  const std::vector<std::string>& names);

/// Covariate builder for a model kind (exposed for tests and oracles).
void build_design(const RegressionDataset& dataset, ModelKind kind, Eigen::MatrixXd& design,
                  Eigen::VectorXd& response, std::vector<std::string>& names);

/// Fits one model kind on the dataset and attaches standardized
/// coefficients. Mobility enters as natural log; datasets must be
/// cut-selected first wherever a log is taken.
FitResult fit_model(const RegressionDataset& dataset, ModelKind kind);

/// b_k * sd(x_k) / sd(y) for every non-intercept coefficient; the
/// intercept slot is NaN (not on the standardized scale).
std::vector<double> standardize_coefficients(const FitResult& fit, const Eigen::MatrixXd& design,
                                             const Eigen::VectorXd& response);

// --- response panels and sweeps -------------------------------------------

/// Sparse (date, region) -> value table read from `date,region,value` CSV.
class ResponsePanel {
public:
    static ResponsePanel read_csv(std::istream& in);
    void write_csv(std::ostream& out) const;

    void set(Date d, const std::string& region, double value);
    bool has(Date d, const std::string& region) const;
    double value(Date d, const std::string& region) const;

    const std::vector<Date>& dates() const;
    const std::vector<std::string>& regions() const;

    /// Chronological series of one region's values (for lead-lag input).
    leadlag::IrregularSeries series_for(const std::string& region) const;

private:
    void refresh_axes() const;
    std::map<std::string, std::map<Date, double>> data_;
    // axis caches, rebuilt lazily after modification
    mutable bool axes_stale_ = false;
    mutable std::vector<Date> dates_;
    mutable std::vector<std::string> regions_;
};

/// Excess over a baseline: value(observed) - value(baseline) on every
/// (date, region) present in both panels. The differencing helper for
/// turning raw death counts into excess deaths.
ResponsePanel panel_difference(const ResponsePanel& observed, const ResponsePanel& baseline);

struct SweepEntry {
    Date date; // response date, or mobility week start for week sweeps
    ModelKind kind = ModelKind::Full;
    bool skipped = false;
    std::string skip_reason;
    FitResult fit;
};

/// Refits the chosen models for each response date against one fixed
/// mobility week. Dates whose sample cannot be fitted are emitted as skip
/// markers, never as errors. Output is chronological and deterministic.
std::vector<SweepEntry> sweep_fit_over_dates(const ResponsePanel& responses,
                                             const std::map<std::string, double>& mobility,
                                             const std::map<std::string, double>& distance,
                                             const std::vector<Date>& dates, const std::vector<ModelKind>& kinds,
                                             ResponseTransform transform, bool cut, int threads = 1);

/// Dual sweep: response date fixed, mobility week varying.
std::vector<SweepEntry> sweep_fit_over_weeks(
    const ResponsePanel& responses, Date response_date,
    const std::vector<std::pair<Date, std::map<std::string, double>>>& weekly_mobility,
    const std::map<std::string, double>& distance, const std::vector<ModelKind>& kinds, ResponseTransform transform,
    bool cut, int threads = 1);

void write_sweep_csv(const std::vector<SweepEntry>& entries, std::ostream& out);

// --- correlation ------------------------------------------------------------

enum class CorrelationMethod { Pearson, Spearman };

/// Pearson: centered product-moment. Spearman: Pearson on average-tied
/// ranks. Throws on length < 3 or zero variance.
double correlation(const std::vector<double>& x, const std::vector<double>& y, CorrelationMethod method);

struct CorrelationSweepRow {
    Date week_start;
    CorrelationMethod method = CorrelationMethod::Pearson;
    double rho_mobility = 0.0;
    double rho_distance = 0.0;
    long n_regions = 0;
};

/// Correlates a fixed response (e.g. antibody positives per region) with
/// each week's mobility-from-seed and with distance, per method.
std::vector<CorrelationSweepRow> sweep_correlation_over_weeks(
    const std::map<std::string, double>& response,
    const std::vector<std::pair<Date, std::map<std::string, double>>>& weekly_mobility,
    const std::map<std::string, double>& distance, const std::vector<CorrelationMethod>& methods);

// --- input helpers ----------------------------------------------------------

struct IgGRecord {
    std::string region;
    double positives = 0.0;
    double tested = 0.0;
};

/// Reads `region,positives,tested` CSV.
std::vector<IgGRecord> read_igg_csv(std::istream& in);

/// Outbound mobility row of a connectivity matrix: seed group -> every
/// group (the seed's own cell is its internal mobility).
std::map<std::string, double> mobility_from_seed(const odm::ConnectivityMatrix& matrix, const std::string& seed_group);

/// Distance in km from the seed region's group centroid to every group
/// centroid (population-weighted over member regions).
std::map<std::string, double> distances_from_seed(const odm::RegionRegistry& registry, const std::string& seed_region);

} // namespace mobkit::regress
