#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace mobkit {

/// Calendar day stored as days since 1970-01-01 (proleptic Gregorian).
/// Cheap value type; arithmetic in whole days.
class Date {
public:
    Date() = default;
    explicit Date(std::int64_t days_since_epoch) : days_(days_since_epoch) {}
    Date(int year, int month, int day);

    static Date parse(const std::string& iso); // "YYYY-MM-DD"
    std::string to_string() const;

    std::int64_t days() const { return days_; }
    int weekday() const; // 0 = Monday .. 6 = Sunday

    Date operator+(std::int64_t d) const { return Date(days_ + d); }
    Date operator-(std::int64_t d) const { return Date(days_ - d); }
    std::int64_t operator-(Date other) const { return days_ - other.days_; }
    Date& operator++() { ++days_; return *this; }

    auto operator<=>(const Date&) const = default;

private:
    std::int64_t days_ = 0;
};

/// Inclusive day interval [start, end].
struct DateRange {
    Date start;
    Date end;

    bool contains(Date d) const { return start <= d && d <= end; }
    bool contains(const DateRange& r) const { return start <= r.start && r.end <= end; }
    std::int64_t length() const { return end - start + 1; }
};

/// Consecutive 7-day windows covering `range`; the last one may be shorter.
std::vector<DateRange> weekly_periods(const DateRange& range);

} // namespace mobkit
