#pragma once

#include "mobkit/dates.hpp"
#include "mobkit/region.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mobkit::odm {

/// One origin-destination cell for one day. Counts are nonnegative reals:
/// upstream extrapolation can produce fractional movement counts.
struct ODMRecord {
    Date date;
    std::uint32_t origin;      // index into the registry
    std::uint32_t destination; // index into the registry
    double count = 0.0;
};

/// A validated batch of ODM records over an inclusive date range.
/// Records are kept sorted by (date, origin id, destination id): every
/// aggregation visits them in this order, which pins floating-point
/// summation order independently of input order or parallelism.
class ODMSeries {
public:
    ODMSeries(const RegionRegistry& registry, std::vector<ODMRecord> records);
    ODMSeries(const RegionRegistry& registry, std::vector<ODMRecord> records, DateRange range);

    const RegionRegistry& registry() const { return *registry_; }
    const std::vector<ODMRecord>& records() const { return records_; }
    const DateRange& date_range() const { return range_; }
    bool empty() const { return records_.empty(); }

    double total_count() const;

private:
    void sort_and_check();

    const RegionRegistry* registry_;
    std::vector<ODMRecord> records_;
    DateRange range_;
};

/// Reads `date,origin,destination,count` CSV. Rejects malformed rows,
/// unknown region ids, negative counts and duplicate (date,origin,
/// destination) keys, reporting the offending line number.
ODMSeries parse_odm(std::istream& in, const RegionRegistry& registry);

/// Inverse of parse_odm; emits records in their canonical order.
void serialize_odm(const ODMSeries& series, std::ostream& out);

/// Drops every record with count < k (anonymity threshold). k = 0 keeps
/// everything. The date range is preserved even if edge days empty out.
ODMSeries apply_anonymity_threshold(const ODMSeries& series, double k);

struct ReasonabilityConfig {
    double max_volume_ratio = 3.0; // flag day if total > ratio*mean or < mean/ratio
    int trailing_window = 7;       // days of history for the trailing mean
    int min_history = 3;           // anomaly check needs at least this many prior days
    double max_zero_share = 0.99;  // of the dense day x origin x destination cube
};

struct VolumeAnomaly {
    Date date;
    double total;
    double trailing_mean;
};

/// Report-only output of the ingest sanity test; never mutates data.
struct ReasonabilityReport {
    std::vector<Date> missing_dates;
    std::vector<VolumeAnomaly> volume_anomalies;
    double zero_cell_share = 0.0;
    bool zero_share_ok = true;

    bool passed() const { return missing_dates.empty() && volume_anomalies.empty() && zero_share_ok; }
    std::string summary() const;
};

ReasonabilityReport reasonability_check(const ODMSeries& series, const ReasonabilityConfig& config = {});

} // namespace mobkit::odm
