#ifndef MG_CLOCK_HPP
#define MG_CLOCK_HPP

#include <cstdint>

namespace mg {

/// Calendar helpers on naive-UTC epochs (no timezone or DST handling).

/// Proleptic Gregorian date from days since 1970-01-01.
struct CivilDate {
    int year;
    unsigned month;  // 1..12
    unsigned day;    // 1..31
};

inline CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {static_cast<int>(y + (m <= 2)), m, d};
}

inline bool is_leap_year(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

/// Hour of day in [0, 24); fractional for sub-hourly epochs.
inline double hour_of_day(std::int64_t epoch) {
    std::int64_t sec = epoch % 86400;
    if (sec < 0) sec += 86400;
    return static_cast<double>(sec) / 3600.0;
}

/// Day of year, 1..366.
inline int day_of_year(std::int64_t epoch) {
    std::int64_t days = epoch / 86400;
    if (epoch % 86400 < 0) --days;
    const CivilDate d = civil_from_days(days);
    static const int before_month[12] = {0,   31,  59,  90,  120, 151,
                                         181, 212, 243, 273, 304, 334};
    int doy = before_month[d.month - 1] + static_cast<int>(d.day);
    if (d.month > 2 && is_leap_year(d.year)) ++doy;
    return doy;
}

}  // namespace mg

#endif  // MG_CLOCK_HPP
