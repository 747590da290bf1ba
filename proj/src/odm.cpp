#include "mobkit/odm.hpp"

#include "mobkit/csv.hpp"
#include "mobkit/error.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace mobkit::odm {

namespace {

// Packed duplicate key: 24-bit biased day, 20-bit origin, 20-bit destination.
std::uint64_t record_key(const ODMRecord& r)
{
    const std::uint64_t day = static_cast<std::uint64_t>(r.date.days() + (1 << 23)) & 0xFFFFFFull;
    return (day << 40) | (static_cast<std::uint64_t>(r.origin) << 20) | r.destination;
}

} // namespace

ODMSeries::ODMSeries(const RegionRegistry& registry, std::vector<ODMRecord> records)
    : registry_(&registry), records_(std::move(records))
{
    if (records_.empty()) throw Error("ODM series: no records and no explicit date range");
    Date lo = records_.front().date, hi = records_.front().date;
    for (const ODMRecord& r : records_) {
        lo = std::min(lo, r.date);
        hi = std::max(hi, r.date);
    }
    range_ = {lo, hi};
    sort_and_check();
}

ODMSeries::ODMSeries(const RegionRegistry& registry, std::vector<ODMRecord> records, DateRange range)
    : registry_(&registry), records_(std::move(records)), range_(range)
{
    if (range_.start > range_.end) throw Error("ODM series: inverted date range");
    for (const ODMRecord& r : records_) {
        if (!range_.contains(r.date)) throw Error("ODM series: record date " + r.date.to_string() + " outside range");
    }
    sort_and_check();
}

void ODMSeries::sort_and_check()
{
    if (registry_->size() >= (1u << 20)) throw Error("ODM series: registry too large (max 2^20 regions)");
    for (const ODMRecord& r : records_) {
        if (r.origin >= registry_->size() || r.destination >= registry_->size())
            throw Error("ODM series: record references region index outside registry");
        if (r.count < 0.0) throw Error("ODM series: negative count");
    }
    const RegionRegistry& reg = *registry_;
    std::sort(records_.begin(), records_.end(), [&reg](const ODMRecord& a, const ODMRecord& b) {
        if (a.date != b.date) return a.date < b.date;
        if (a.origin != b.origin) return reg.lex_rank(a.origin) < reg.lex_rank(b.origin);
        return reg.lex_rank(a.destination) < reg.lex_rank(b.destination);
    });
    for (std::size_t i = 1; i < records_.size(); ++i) {
        const ODMRecord& a = records_[i - 1];
        const ODMRecord& b = records_[i];
        if (a.date == b.date && a.origin == b.origin && a.destination == b.destination) {
            throw Error("ODM series: duplicate key (" + a.date.to_string() + ", " + reg.at(a.origin).id + ", " +
                        reg.at(a.destination).id + ")");
        }
    }
}

double ODMSeries::total_count() const
{
    double total = 0.0;
    for (const ODMRecord& r : records_) total += r.count;
    return total;
}

ODMSeries parse_odm(std::istream& in, const RegionRegistry& registry)
{
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw Error("ODM: empty input");
    if (fields.size() != 4 || fields[0] != "date" || fields[1] != "origin" || fields[2] != "destination" ||
        fields[3] != "count") {
        throw Error("ODM: expected header 'date,origin,destination,count'");
    }

    std::vector<ODMRecord> records;
    std::unordered_set<std::uint64_t> seen;
    while (reader.next(fields)) {
        const std::string where = "ODM line " + std::to_string(reader.line_number());
        if (fields.size() != 4) throw Error(where + ": expected 4 fields, got " + std::to_string(fields.size()));
        ODMRecord r;
        try {
            r.date = Date::parse(fields[0]);
            r.origin = registry.index_of(fields[1]);
            r.destination = registry.index_of(fields[2]);
        }
        catch (const Error& e) {
            throw Error(where + ": " + e.what());
        }
        r.count = parse_double(fields[3], where + ", count");
        if (r.count < 0.0) throw Error(where + ": negative count " + fields[3]);
        if (!seen.insert(record_key(r)).second) {
            throw Error(where + ": duplicate key (" + fields[0] + ", " + fields[1] + ", " + fields[2] + ")");
        }
        records.push_back(r);
    }
    if (records.empty()) throw Error("ODM: no data rows");
    return ODMSeries(registry, std::move(records));
}

void serialize_odm(const ODMSeries& series, std::ostream& out)
{
    const RegionRegistry& reg = series.registry();
    out << "date,origin,destination,count\n";
    for (const ODMRecord& r : series.records()) {
        out << r.date.to_string() << ',' << reg.at(r.origin).id << ',' << reg.at(r.destination).id << ','
            << format_double(r.count) << '\n';
    }
}

ODMSeries apply_anonymity_threshold(const ODMSeries& series, double k)
{
    if (k < 0.0) throw Error("anonymity threshold must be nonnegative");
    std::vector<ODMRecord> kept;
    kept.reserve(series.records().size());
    for (const ODMRecord& r : series.records()) {
        if (r.count >= k) kept.push_back(r);
    }
    return ODMSeries(series.registry(), std::move(kept), series.date_range());
}

ReasonabilityReport reasonability_check(const ODMSeries& series, const ReasonabilityConfig& config)
{
    if (series.empty()) throw Error("reasonability check: empty series");
    ReasonabilityReport report;

    // Daily totals in chronological order (records are sorted).
    std::map<Date, double> totals;
    std::size_t nonzero_records = 0;
    for (const ODMRecord& r : series.records()) {
        totals[r.date] += r.count;
        if (r.count > 0.0) ++nonzero_records;
    }

    for (Date d = series.date_range().start; d <= series.date_range().end; ++d) {
        if (!totals.count(d)) report.missing_dates.push_back(d);
    }

    std::vector<std::pair<Date, double>> ordered(totals.begin(), totals.end());
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        const std::size_t window = std::min<std::size_t>(i, static_cast<std::size_t>(config.trailing_window));
        if (window < static_cast<std::size_t>(config.min_history)) continue;
        double mean = 0.0;
        for (std::size_t j = i - window; j < i; ++j) mean += ordered[j].second;
        mean /= static_cast<double>(window);
        const double total = ordered[i].second;
        if (mean > 0.0 && (total > config.max_volume_ratio * mean || total * config.max_volume_ratio < mean)) {
            report.volume_anomalies.push_back({ordered[i].first, total, mean});
        }
    }

    const double cube = static_cast<double>(series.date_range().length()) *
                        static_cast<double>(series.registry().size()) *
                        static_cast<double>(series.registry().size());
    report.zero_cell_share = cube > 0.0 ? 1.0 - static_cast<double>(nonzero_records) / cube : 0.0;
    report.zero_share_ok = report.zero_cell_share <= config.max_zero_share;
    return report;
}

std::string ReasonabilityReport::summary() const
{
    std::ostringstream out;
    out << "reasonability: " << (passed() ? "PASS" : "FAIL") << "; missing_dates=" << missing_dates.size()
        << "; volume_anomalies=" << volume_anomalies.size() << "; zero_cell_share=" << zero_cell_share
        << (zero_share_ok ? "" : " (above limit)");
    return out.str();
}

} // namespace mobkit::odm
