#ifndef AIRTEMP_CORE_TIME_UTILS_HPP
#define AIRTEMP_CORE_TIME_UTILS_HPP

#include <string>

namespace airtemp {

/// One UTC hour on the civil calendar.
struct UtcHour {
    int year = 1970;
    int month = 1; // 1..12
    int day = 1;   // 1..31
    int hour = 0;  // 0..23

    bool operator==(const UtcHour&) const = default;
    bool operator<(const UtcHour& o) const;
};

bool is_leap_year(int year);
int days_in_year(int year);
int days_in_month(int year, int month);

/// 0-based day-of-year index.
int day_of_year(int year, int month, int day);

/// Inverse of day_of_year at a given hour.
UtcHour from_day_of_year(int year, int doy0, int hour);

/// "YYYY-MM-DDTHH:00:00Z"
std::string format_iso_hour(const UtcHour& t);

/// Strict parse of an ISO 8601 timestamp truncated to the hour. Accepts
/// "YYYY-MM-DDTHH:MM" and "YYYY-MM-DDTHH:MM:SS" with optional trailing "Z";
/// minutes and seconds must be zero. Throws DataError otherwise.
UtcHour parse_iso_hour(const std::string& s);

} // namespace airtemp

#endif
