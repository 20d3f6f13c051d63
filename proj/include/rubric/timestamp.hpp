#pragma once

#include "rubric/error.hpp"

#include <chrono>
#include <compare>
#include <cstdio>
#include <string>
#include <string_view>

namespace rubric {

// UTC instant with one-second resolution, rendered as "YYYY-MM-DDTHH:MM:SSZ".
class Timestamp {
public:
    using Clock = std::chrono::system_clock;

    Timestamp() = default;
    explicit Timestamp(std::chrono::sys_seconds tp) : m_tp(tp) {}

    static Timestamp now() {
        return Timestamp(std::chrono::time_point_cast<std::chrono::seconds>(Clock::now()));
    }

    static Timestamp from_unix(std::int64_t seconds) {
        return Timestamp(std::chrono::sys_seconds(std::chrono::seconds(seconds)));
    }

    static Timestamp parse(std::string_view text) {
        int y = 0;
        unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
        char tail = 0;
        const std::string buf(text);
        if (buf.size() != 20 ||
            std::sscanf(buf.c_str(), "%4d-%2u-%2uT%2u:%2u:%2u%c", &y, &mo, &d, &h, &mi, &s, &tail) != 7 ||
            tail != 'Z') {
            throw Error(Errc::ParseError, "timestamp must look like 2021-01-31T12:00:00Z, got '" + buf + "'");
        }
        const std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(mo),
                                              std::chrono::day(d)};
        if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
            throw Error(Errc::ParseError, "timestamp out of range: '" + buf + "'");
        }
        const auto tp = std::chrono::sys_days(ymd) + std::chrono::hours(h) + std::chrono::minutes(mi) +
                        std::chrono::seconds(s);
        return Timestamp(tp);
    }

    std::string to_string() const {
        const auto days = std::chrono::floor<std::chrono::days>(m_tp);
        const std::chrono::year_month_day ymd{days};
        const std::chrono::hh_mm_ss hms{m_tp - days};
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                      static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                      static_cast<int>(hms.seconds().count()));
        return buf;
    }

    std::int64_t unix_seconds() const { return m_tp.time_since_epoch().count(); }
    std::chrono::sys_seconds time_point() const { return m_tp; }

    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;

private:
    std::chrono::sys_seconds m_tp{};
};

}  // namespace rubric
