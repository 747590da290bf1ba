#include "mobkit/regress.hpp"

#include "mobkit/csv.hpp"
#include "mobkit/error.hpp"
#include "mobkit/parallel.hpp"

#include <json.hpp>

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

namespace mobkit::regress {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kLargestModelParams = 4; // const + 3 covariates in the full model

double sample_sd(const Eigen::VectorXd& v)
{
    const double mean = v.mean();
    const double ss = (v.array() - mean).square().sum();
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<double> average_ranks(const std::vector<double>& v)
{
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });

    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0; // 1-based average rank
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

std::string formula_for(ModelKind kind, ResponseTransform transform)
{
    const std::string lhs = transform == ResponseTransform::Log ? "log(response)" : "response";
    switch (kind) {
        case ModelKind::Full:
            return lhs + " = const + alpha1*log(mobility) + alpha2*log(mobility)^2 + alpha3*distance";
        case ModelKind::MobilityOnly:
            return lhs + " = const + beta1*log(mobility) + beta2*log(mobility)^2";
        case ModelKind::DistanceOnly:
            return lhs + " = const + gamma1*distance";
    }
    return lhs;
}

// Assembles the per-date dataset and fits all requested kinds into `out`.
void fit_into_entries(const RegressionDataset& base, const std::vector<ModelKind>& kinds, bool cut, Date label,
                      std::vector<SweepEntry>& out)
{
    for (ModelKind kind : kinds) {
        SweepEntry entry;
        entry.date = label;
        entry.kind = kind;
        try {
            RegressionDataset ds = cut ? select_cut(base) : base;
            entry.fit = fit_model(ds, kind);
        }
        catch (const Error& e) {
            entry.skipped = true;
            entry.skip_reason = e.what();
        }
        out.push_back(std::move(entry));
    }
}

RegressionDataset assemble_dataset(const std::map<std::string, double>& response,
                                   const std::map<std::string, double>& mobility,
                                   const std::map<std::string, double>& distance)
{
    RegressionDataset ds;
    for (const auto& [region, value] : response) {
        auto mob = mobility.find(region);
        auto dist = distance.find(region);
        if (mob == mobility.end() || dist == distance.end()) continue;
        ds.rows.push_back({region, value, mob->second, dist->second});
    }
    return ds;
}

} // namespace

std::string model_kind_name(ModelKind kind)
{
    switch (kind) {
        case ModelKind::Full: return "full";
        case ModelKind::MobilityOnly: return "mobility_only";
        case ModelKind::DistanceOnly: return "distance_only";
    }
    return "?";
}

ModelKind parse_model_kind(const std::string& name)
{
    if (name == "full") return ModelKind::Full;
    if (name == "mob" || name == "mobility_only") return ModelKind::MobilityOnly;
    if (name == "dist" || name == "distance_only") return ModelKind::DistanceOnly;
    throw Error("unknown model kind '" + name + "' (expected full|mob|dist)");
}

RegressionDataset select_cut(const RegressionDataset& dataset)
{
    RegressionDataset out = dataset;
    out.rows.clear();
    for (const RegressionRow& row : dataset.rows) {
        if (row.mobility > 0.0 && row.response > 0.0) out.rows.push_back(row);
    }
    if (out.rows.size() < kLargestModelParams + 1) {
        throw Error("insufficient data: " + std::to_string(out.rows.size()) + " rows after cut, need at least " +
                    std::to_string(kLargestModelParams + 1));
    }
    return out;
}

FitResult ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response, const std::vector<std::string>& names)
{
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (static_cast<std::size_t>(p) != names.size()) throw Error("ols_fit: names do not match design columns");
    if (n <= p) {
        throw Error("insufficient data: " + std::to_string(n) + " rows for " + std::to_string(p) + " parameters");
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < p) {
        // Columns pivoted past the rank are the linearly dependent ones.
        const auto& perm = qr.colsPermutation().indices();
        std::string collinear;
        for (Eigen::Index k = qr.rank(); k < p; ++k) {
            if (!collinear.empty()) collinear += ", ";
            collinear += names[static_cast<std::size_t>(perm[k])];
        }
        throw Error("rank-deficient design: collinear column(s): " + collinear);
    }

    FitResult fit;
    fit.names = names;
    fit.n_rows = static_cast<long>(n);

    const Eigen::VectorXd beta = qr.solve(response);
    const Eigen::VectorXd residuals = response - design * beta;
    const double ssr = residuals.squaredNorm();
    const double sst = (response.array() - response.mean()).square().sum();
    if (sst <= 0.0) {
        fit.degenerate_response = true;
        fit.r_squared = 0.0;
    }
    else {
        fit.r_squared = std::clamp(1.0 - ssr / sst, 0.0, 1.0);
    }

    const double dof = static_cast<double>(n - p);
    const double sigma2 = ssr / dof;

    // (X'X)^-1 = P R^-1 R^-T P', so row norms of P R^-1 give the SEs.
    const Eigen::MatrixXd r_upper =
        qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv =
        r_upper.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd m = qr.colsPermutation() * r_inv;

    boost::math::students_t t_dist(dof);
    fit.coefficients.resize(static_cast<std::size_t>(p));
    fit.standard_errors.resize(static_cast<std::size_t>(p));
    fit.p_values.resize(static_cast<std::size_t>(p));
    for (Eigen::Index k = 0; k < p; ++k) {
        const double se = std::sqrt(sigma2) * m.row(k).norm();
        fit.coefficients[static_cast<std::size_t>(k)] = beta[k];
        fit.standard_errors[static_cast<std::size_t>(k)] = se;
        double pv;
        if (se > 0.0) {
            const double t = beta[k] / se;
            pv = 2.0 * boost::math::cdf(boost::math::complement(t_dist, std::abs(t)));
        }
        else {
            pv = beta[k] == 0.0 ? 1.0 : 0.0; // exact fit: zero residual variance
        }
        fit.p_values[static_cast<std::size_t>(k)] = pv;
    }
    return fit;
}

void build_design(const RegressionDataset& dataset, ModelKind kind, Eigen::MatrixXd& design,
                  Eigen::VectorXd& response, std::vector<std::string>& names)
{
    const Eigen::Index n = static_cast<Eigen::Index>(dataset.rows.size());
    const bool uses_mobility = kind != ModelKind::DistanceOnly;

    for (const RegressionRow& row : dataset.rows) {
        if (uses_mobility && row.mobility <= 0.0) {
            throw Error("log of nonpositive mobility for region " + row.region_id + "; apply select_cut first");
        }
        if (dataset.response_transform == ResponseTransform::Log && row.response <= 0.0) {
            throw Error("log of nonpositive response for region " + row.region_id + "; apply select_cut first");
        }
    }

    switch (kind) {
        case ModelKind::Full:
            names = {"const", "alpha1", "alpha2", "alpha3"};
            break;
        case ModelKind::MobilityOnly:
            names = {"const", "beta1", "beta2"};
            break;
        case ModelKind::DistanceOnly:
            names = {"const", "gamma1"};
            break;
    }

    design.resize(n, static_cast<Eigen::Index>(names.size()));
    response.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const RegressionRow& row = dataset.rows[static_cast<std::size_t>(i)];
        design(i, 0) = 1.0;
        if (kind == ModelKind::Full) {
            const double lm = std::log(row.mobility);
            design(i, 1) = lm;
            design(i, 2) = lm * lm;
            design(i, 3) = row.distance;
        }
        else if (kind == ModelKind::MobilityOnly) {
            const double lm = std::log(row.mobility);
            design(i, 1) = lm;
            design(i, 2) = lm * lm;
        }
        else {
            design(i, 1) = row.distance;
        }
        response[i] =
            dataset.response_transform == ResponseTransform::Log ? std::log(row.response) : row.response;
    }
}

FitResult fit_model(const RegressionDataset& dataset, ModelKind kind)
{
    Eigen::MatrixXd design;
    Eigen::VectorXd response;
    std::vector<std::string> names;
    build_design(dataset, kind, design, response, names);

    FitResult fit = ols_fit(design, response, names);
    fit.kind = kind;
    fit.formula = formula_for(kind, dataset.response_transform);
    if (!fit.degenerate_response) {
        fit.standardized = standardize_coefficients(fit, design, response);
    }
    return fit;
}

std::vector<double> standardize_coefficients(const FitResult& fit, const Eigen::MatrixXd& design,
                                             const Eigen::VectorXd& response)
{
    const double sd_y = sample_sd(response);
    if (sd_y <= 0.0) throw Error("standardize: response has zero variance");

    std::vector<double> out(fit.coefficients.size(), kNaN);
    for (Eigen::Index k = 1; k < design.cols(); ++k) {
        const double sd_x = sample_sd(design.col(k));
        if (sd_x <= 0.0) throw Error("standardize: covariate " + fit.names[static_cast<std::size_t>(k)] +
                                     " has zero variance");
        out[static_cast<std::size_t>(k)] = fit.coefficients[static_cast<std::size_t>(k)] * sd_x / sd_y;
    }
    return out;
}

std::string FitResult::to_json() const
{
    nlohmann::json j;
    j["model"] = model_kind_name(kind);
    j["formula"] = formula;
    j["n_rows"] = n_rows;
    j["r_squared"] = r_squared;
    j["degenerate_response"] = degenerate_response;
    nlohmann::json terms = nlohmann::json::array();
    for (std::size_t k = 0; k < names.size(); ++k) {
        nlohmann::json term;
        term["name"] = names[k];
        term["coefficient"] = coefficients[k];
        term["std_error"] = standard_errors[k];
        term["p_value"] = p_values[k];
        if (k < standardized.size() && !std::isnan(standardized[k])) {
            term["standardized"] = standardized[k];
        }
        else {
            term["standardized"] = nullptr;
        }
        terms.push_back(term);
    }
    j["terms"] = terms;
    return j.dump(2) + "\n";
}

// --- response panel ----------------------------------------------------------

ResponsePanel ResponsePanel::read_csv(std::istream& in)
{
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw Error("response CSV: empty input");
    if (fields.size() != 3 || fields[0] != "date" || fields[1] != "region" || fields[2] != "value")
        throw Error("response CSV: expected header 'date,region,value'");

    ResponsePanel panel;
    while (reader.next(fields)) {
        const std::string where = "response line " + std::to_string(reader.line_number());
        if (fields.size() != 3) throw Error(where + ": expected 3 fields");
        panel.data_[fields[1]][Date::parse(fields[0])] = parse_double(fields[2], where);
    }
    panel.axes_stale_ = true;
    return panel;
}

void ResponsePanel::write_csv(std::ostream& out) const
{
    out << "date,region,value\n";
    for (Date d : dates()) {
        for (const std::string& region : regions()) {
            auto it = data_.at(region).find(d);
            if (it != data_.at(region).end()) {
                out << d.to_string() << ',' << region << ',' << format_double(it->second) << '\n';
            }
        }
    }
}

void ResponsePanel::set(Date d, const std::string& region, double value)
{
    data_[region][d] = value;
    axes_stale_ = true;
}

bool ResponsePanel::has(Date d, const std::string& region) const
{
    auto it = data_.find(region);
    return it != data_.end() && it->second.count(d) != 0;
}

double ResponsePanel::value(Date d, const std::string& region) const
{
    return data_.at(region).at(d);
}

leadlag::IrregularSeries ResponsePanel::series_for(const std::string& region) const
{
    auto it = data_.find(region);
    if (it == data_.end()) throw Error("response panel: unknown region " + region);
    leadlag::IrregularSeries s;
    for (const auto& [d, v] : it->second) {
        s.times.push_back(static_cast<double>(d.days()));
        s.values.push_back(v);
    }
    return s;
}

const std::vector<Date>& ResponsePanel::dates() const
{
    if (axes_stale_) refresh_axes();
    return dates_;
}

const std::vector<std::string>& ResponsePanel::regions() const
{
    if (axes_stale_) refresh_axes();
    return regions_;
}

void ResponsePanel::refresh_axes() const
{
    std::set<Date> dates;
    regions_.clear();
    for (const auto& [region, series] : data_) {
        regions_.push_back(region);
        for (const auto& [d, v] : series) dates.insert(d);
    }
    dates_.assign(dates.begin(), dates.end());
    axes_stale_ = false;
}

ResponsePanel panel_difference(const ResponsePanel& observed, const ResponsePanel& baseline)
{
    ResponsePanel out;
    for (const std::string& region : observed.regions()) {
        for (Date d : observed.dates()) {
            if (observed.has(d, region) && baseline.has(d, region)) {
                out.set(d, region, observed.value(d, region) - baseline.value(d, region));
            }
        }
    }
    return out;
}

// --- sweeps -------------------------------------------------------------------

std::vector<SweepEntry> sweep_fit_over_dates(const ResponsePanel& responses,
                                             const std::map<std::string, double>& mobility,
                                             const std::map<std::string, double>& distance,
                                             const std::vector<Date>& dates, const std::vector<ModelKind>& kinds,
                                             ResponseTransform transform, bool cut, int threads)
{
    std::vector<Date> ordered = dates;
    std::sort(ordered.begin(), ordered.end());

    std::vector<std::vector<SweepEntry>> slots(ordered.size());
    parallel_for(ordered.size(), threads, [&](std::size_t i) {
        const Date d = ordered[i];
        std::map<std::string, double> response;
        for (const std::string& region : responses.regions()) {
            if (responses.has(d, region)) response[region] = responses.value(d, region);
        }
        RegressionDataset base = assemble_dataset(response, mobility, distance);
        base.response_date = d;
        base.response_transform = transform;
        fit_into_entries(base, kinds, cut, d, slots[i]);
    });

    std::vector<SweepEntry> out;
    for (auto& slot : slots) {
        for (auto& e : slot) out.push_back(std::move(e));
    }
    return out;
}

std::vector<SweepEntry> sweep_fit_over_weeks(
    const ResponsePanel& responses, Date response_date,
    const std::vector<std::pair<Date, std::map<std::string, double>>>& weekly_mobility,
    const std::map<std::string, double>& distance, const std::vector<ModelKind>& kinds, ResponseTransform transform,
    bool cut, int threads)
{
    std::vector<std::pair<Date, std::map<std::string, double>>> ordered = weekly_mobility;
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::map<std::string, double> response;
    for (const std::string& region : responses.regions()) {
        if (responses.has(response_date, region)) response[region] = responses.value(response_date, region);
    }

    std::vector<std::vector<SweepEntry>> slots(ordered.size());
    parallel_for(ordered.size(), threads, [&](std::size_t i) {
        RegressionDataset base = assemble_dataset(response, ordered[i].second, distance);
        base.response_date = response_date;
        base.mobility_period = {ordered[i].first, ordered[i].first + 6};
        base.response_transform = transform;
        fit_into_entries(base, kinds, cut, ordered[i].first, slots[i]);
    });

    std::vector<SweepEntry> out;
    for (auto& slot : slots) {
        for (auto& e : slot) out.push_back(std::move(e));
    }
    return out;
}

void write_sweep_csv(const std::vector<SweepEntry>& entries, std::ostream& out)
{
    out << "date,model,status,note,n_rows,r_squared,term,coefficient,std_error,p_value,standardized\n";
    for (const SweepEntry& e : entries) {
        if (e.skipped) {
            out << e.date.to_string() << ',' << model_kind_name(e.kind) << ",skipped," << e.skip_reason
                << ",,,,,,,\n";
            continue;
        }
        for (std::size_t k = 0; k < e.fit.names.size(); ++k) {
            out << e.date.to_string() << ',' << model_kind_name(e.kind) << ",ok,," << e.fit.n_rows << ','
                << format_double(e.fit.r_squared) << ',' << e.fit.names[k] << ','
                << format_double(e.fit.coefficients[k]) << ',' << format_double(e.fit.standard_errors[k]) << ','
                << format_double(e.fit.p_values[k]) << ',';
            if (k < e.fit.standardized.size() && !std::isnan(e.fit.standardized[k])) {
                out << format_double(e.fit.standardized[k]);
            }
            out << '\n';
        }
    }
}

// --- correlation ----------------------------------------------------------------

double correlation(const std::vector<double>& x, const std::vector<double>& y, CorrelationMethod method)
{
    if (x.size() != y.size()) throw Error("correlation: input lengths differ");
    if (x.size() < 3) throw Error("correlation: need at least 3 observations");

    const std::vector<double>* px = &x;
    const std::vector<double>* py = &y;
    std::vector<double> rx, ry;
    if (method == CorrelationMethod::Spearman) {
        rx = average_ranks(x);
        ry = average_ranks(y);
        px = &rx;
        py = &ry;
    }

    const std::size_t n = px->size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += (*px)[i];
        my += (*py)[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = (*px)[i] - mx, dy = (*py)[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw Error("correlation: zero variance input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<CorrelationSweepRow> sweep_correlation_over_weeks(
    const std::map<std::string, double>& response,
    const std::vector<std::pair<Date, std::map<std::string, double>>>& weekly_mobility,
    const std::map<std::string, double>& distance, const std::vector<CorrelationMethod>& methods)
{
    std::vector<std::pair<Date, std::map<std::string, double>>> ordered = weekly_mobility;
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<CorrelationSweepRow> out;
    for (const auto& [week_start, mobility] : ordered) {
        // Shared region set, sorted, so every week correlates aligned vectors.
        std::vector<double> resp, mob, dist;
        for (const auto& [region, value] : response) {
            auto m = mobility.find(region);
            auto d = distance.find(region);
            if (m == mobility.end() || d == distance.end()) continue;
            resp.push_back(value);
            mob.push_back(m->second);
            dist.push_back(d->second);
        }
        for (CorrelationMethod method : methods) {
            CorrelationSweepRow row;
            row.week_start = week_start;
            row.method = method;
            row.n_regions = static_cast<long>(resp.size());
            // degenerate weeks become NaN markers, never errors
            auto safe = [&](const std::vector<double>& x, const std::vector<double>& y) {
                try {
                    return correlation(x, y, method);
                }
                catch (const Error&) {
                    return std::numeric_limits<double>::quiet_NaN();
                }
            };
            row.rho_mobility = safe(resp, mob);
            row.rho_distance = safe(resp, dist);
            out.push_back(row);
        }
    }
    return out;
}

// --- input helpers ---------------------------------------------------------------

std::vector<IgGRecord> read_igg_csv(std::istream& in)
{
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw Error("IgG CSV: empty input");
    if (fields.size() != 3 || fields[0] != "region" || fields[1] != "positives" || fields[2] != "tested")
        throw Error("IgG CSV: expected header 'region,positives,tested'");
    std::vector<IgGRecord> out;
    while (reader.next(fields)) {
        const std::string where = "IgG line " + std::to_string(reader.line_number());
        if (fields.size() != 3) throw Error(where + ": expected 3 fields");
        IgGRecord rec;
        rec.region = fields[0];
        rec.positives = parse_double(fields[1], where + ", positives");
        rec.tested = parse_double(fields[2], where + ", tested");
        if (rec.positives < 0 || rec.tested < 0) throw Error(where + ": negative count");
        out.push_back(std::move(rec));
    }
    return out;
}

std::map<std::string, double> mobility_from_seed(const odm::ConnectivityMatrix& matrix, const std::string& seed_group)
{
    auto it = std::find(matrix.groups.begin(), matrix.groups.end(), seed_group);
    if (it == matrix.groups.end()) throw Error("seed group " + seed_group + " not in connectivity matrix");
    const std::size_t s = static_cast<std::size_t>(it - matrix.groups.begin());
    std::map<std::string, double> out;
    for (std::size_t b = 0; b < matrix.groups.size(); ++b) out[matrix.groups[b]] = matrix.at(s, b);
    return out;
}

std::map<std::string, double> distances_from_seed(const odm::RegionRegistry& registry, const std::string& seed_region)
{
    // Population-weighted group centroids; equals the region itself under
    // the identity partition.
    struct Acc {
        double lat = 0, lon = 0, weight = 0;
    };
    std::map<std::string, Acc> acc;
    for (const odm::Region& r : registry.regions()) {
        const std::string& g = r.group_id.empty() ? r.id : r.group_id;
        const double w = r.population > 0 ? r.population : 1.0;
        acc[g].lat += w * r.latitude;
        acc[g].lon += w * r.longitude;
        acc[g].weight += w;
    }
    const std::uint32_t seed_index = registry.index_of(seed_region);
    const std::string seed_group = registry.groups()[registry.group_of(seed_index)];

    auto centroid = [&acc](const std::string& g) {
        const Acc& a = acc.at(g);
        odm::Region r;
        r.latitude = a.lat / a.weight;
        r.longitude = a.lon / a.weight;
        return r;
    };
    const odm::Region seed_centroid = centroid(seed_group);

    std::map<std::string, double> out;
    for (const auto& [g, a] : acc) out[g] = odm::region_distance(seed_centroid, centroid(g));
    return out;
}

} // namespace mobkit::regress
