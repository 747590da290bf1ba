#include "mobkit/dates.hpp"

#include "mobkit/error.hpp"

#include <array>
#include <cstdio>

namespace mobkit {

namespace {

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(int y, int m, int d)
{
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe     = static_cast<unsigned>(y - era * 400);
    const unsigned doy     = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe     = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d)
{
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe     = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe     = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr  = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy     = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp      = (5 * doy + 2) / 153;
    d                      = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m                      = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y                      = static_cast<int>(yr + (m <= 2));
}

bool valid_ymd(int y, int m, int d)
{
    if (m < 1 || m > 12 || d < 1) return false;
    static constexpr std::array<int, 12> len = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int max_d = len[m - 1];
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    if (m == 2 && leap) max_d = 29;
    return d <= max_d;
}

} // namespace

Date::Date(int year, int month, int day)
{
    if (!valid_ymd(year, month, day)) {
        throw Error("invalid calendar date: " + std::to_string(year) + "-" + std::to_string(month) + "-" +
                    std::to_string(day));
    }
    days_ = days_from_civil(year, month, day);
}

Date Date::parse(const std::string& iso)
{
    int y = 0, m = 0, d = 0;
    char trail = 0;
    if (std::sscanf(iso.c_str(), "%d-%d-%d%c", &y, &m, &d, &trail) != 3 || iso.size() != 10 || iso[4] != '-' ||
        iso[7] != '-') {
        throw Error("malformed date '" + iso + "', expected YYYY-MM-DD");
    }
    return Date(y, m, d);
}

std::string Date::to_string() const
{
    int y, m, d;
    civil_from_days(days_, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
    return buf;
}

int Date::weekday() const
{
    // 1970-01-01 was a Thursday.
    std::int64_t wd = (days_ + 3) % 7;
    if (wd < 0) wd += 7;
    return static_cast<int>(wd);
}

std::vector<DateRange> weekly_periods(const DateRange& range)
{
    std::vector<DateRange> out;
    for (Date s = range.start; s <= range.end; s = s + 7) {
        Date e = s + 6;
        if (e > range.end) e = range.end;
        out.push_back({s, e});
    }
    return out;
}

} // namespace mobkit
