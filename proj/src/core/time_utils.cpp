#include "airtemp/core/time_utils.hpp"

#include <cstdio>
#include <tuple>

#include "airtemp/core/errors.hpp"

namespace airtemp {

bool UtcHour::operator<(const UtcHour& o) const {
    return std::tie(year, month, day, hour) < std::tie(o.year, o.month, o.day, o.hour);
}

bool is_leap_year(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int days_in_year(int year) {
    return is_leap_year(year) ? 366 : 365;
}

int days_in_month(int year, int month) {
    static const int lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month < 1 || month > 12) throw DataError("month out of range: " + std::to_string(month));
    if (month == 2 && is_leap_year(year)) return 29;
    return lengths[month - 1];
}

int day_of_year(int year, int month, int day) {
    if (day < 1 || day > days_in_month(year, month)) {
        throw DataError("day out of range: " + std::to_string(day));
    }
    int doy = day - 1;
    for (int m = 1; m < month; ++m) doy += days_in_month(year, m);
    return doy;
}

UtcHour from_day_of_year(int year, int doy0, int hour) {
    if (doy0 < 0 || doy0 >= days_in_year(year)) {
        throw DataError("day-of-year out of range: " + std::to_string(doy0));
    }
    if (hour < 0 || hour > 23) throw DataError("hour out of range: " + std::to_string(hour));
    UtcHour t;
    t.year = year;
    t.hour = hour;
    int rem = doy0;
    for (int m = 1; m <= 12; ++m) {
        const int len = days_in_month(year, m);
        if (rem < len) {
            t.month = m;
            t.day = rem + 1;
            return t;
        }
        rem -= len;
    }
    throw DataError("unreachable day-of-year state");
}

std::string format_iso_hour(const UtcHour& t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:00:00Z", t.year, t.month, t.day, t.hour);
    return buf;
}

UtcHour parse_iso_hour(const std::string& s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    char tail[4] = {0};
    int fields = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%1s", &y, &mo, &d, &h, &mi, &se, tail);
    if (fields < 5) {
        fields = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d%1s", &y, &mo, &d, &h, &mi, tail);
        se = 0;
        if (fields < 5) throw DataError("unparseable timestamp '" + s + "'");
        if (fields == 6 && tail[0] != 'Z') throw DataError("unparseable timestamp '" + s + "'");
    } else if (fields == 7 && tail[0] != 'Z') {
        throw DataError("unparseable timestamp '" + s + "'");
    }
    if (mi != 0 || se != 0) {
        throw DataError("timestamp '" + s + "' is not on an exact hour boundary");
    }
    if (mo < 1 || mo > 12 || d < 1 || d > days_in_month(y, mo) || h < 0 || h > 23) {
        throw DataError("timestamp '" + s + "' has out-of-range fields");
    }
    return UtcHour{y, mo, d, h};
}

} // namespace airtemp
