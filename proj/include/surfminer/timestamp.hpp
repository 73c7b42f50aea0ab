#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

// Calendar timestamps as they appear in the logs: a DD/MM/YYYY date and a
// HH:MM:SS:mmm time. Everything downstream works with milliseconds since
// the Unix epoch; the civil conversions below are the usual
// days-from-civil arithmetic (proleptic Gregorian).

namespace surfminer {

inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);             // [0, 399]
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u + static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;            // [0, 146096]
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);          // [0, 146096]
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);          // [0, 365]
    const unsigned mp = (5 * doy + 2) / 153;                               // [0, 11]
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    y = static_cast<int>(yy + (m <= 2));
}

struct Timestamp {
    int year = 1970;
    int month = 1;
    int day = 1;
    int hour = 0;
    int minute = 0;
    int second = 0;
    int millisecond = 0;

    std::int64_t epoch_ms() const {
        std::int64_t days = days_from_civil(year, month, day);
        return ((days * 24 + hour) * 60 + minute) * 60000 + second * 1000 + millisecond;
    }

    bool operator==(const Timestamp& o) const = default;
};

inline Timestamp timestamp_from_epoch_ms(std::int64_t ms) {
    std::int64_t days = ms / 86400000;
    std::int64_t rem = ms % 86400000;
    if (rem < 0) {
        rem += 86400000;
        --days;
    }
    Timestamp t;
    civil_from_days(days, t.year, t.month, t.day);
    t.millisecond = static_cast<int>(rem % 1000);
    rem /= 1000;
    t.second = static_cast<int>(rem % 60);
    rem /= 60;
    t.minute = static_cast<int>(rem % 60);
    t.hour = static_cast<int>(rem / 60);
    return t;
}

inline bool valid_date(int y, int m, int d) {
    if (y < 1 || m < 1 || m > 12 || d < 1) return false;
    static const int md[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int limit = md[m - 1];
    if (m == 2 && (y % 4 == 0 && (y % 100 != 0 || y % 400 == 0))) limit = 29;
    return d <= limit;
}

inline bool valid_time(int h, int mi, int s, int ms) {
    return h >= 0 && h <= 23 && mi >= 0 && mi <= 59 && s >= 0 && s <= 59 && ms >= 0 && ms <= 999;
}

inline std::string format_date(const Timestamp& t) {
    char buf[40];  // roomy enough for any int year, keeps -Wformat quiet
    std::snprintf(buf, sizeof buf, "%02d/%02d/%04d", t.day, t.month, t.year);
    return buf;
}

inline std::string format_time(const Timestamp& t) {
    char buf[40];  // roomy enough for any int fields, keeps -Wformat quiet
    std::snprintf(buf, sizeof buf, "%02d:%02d:%02d:%03d", t.hour, t.minute, t.second, t.millisecond);
    return buf;
}

}  // namespace surfminer
