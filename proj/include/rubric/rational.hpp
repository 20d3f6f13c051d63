#pragma once

#include "rubric/error.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>

namespace rubric {

// Exact rational arithmetic for weights and aggregated scores.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Canonical text form: "p/q" in lowest terms, or "p" when q == 1.
inline std::string to_string(const Rational& r) {
    const BigInt num = boost::multiprecision::numerator(r);
    const BigInt den = boost::multiprecision::denominator(r);
    if (den == 1) {
        return num.str();
    }
    return num.str() + "/" + den.str();
}

namespace detail {

inline bool all_digits(std::string_view s) {
    if (s.empty()) {
        return false;
    }
    for (char c : s) {
        if (c < '0' || c > '9') {
            return false;
        }
    }
    return true;
}

}  // namespace detail

// Accepts "3", "-3", "5/4" and plain decimals like "0.25". Decimals are read
// exactly (0.1 is 1/10, not the nearest double).
inline Rational parse_rational(std::string_view text) {
    auto fail = [&] {
        return Error(Errc::ParseError, "not a rational number: '" + std::string(text) + "'");
    };
    std::string_view s = text;
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    Rational value;
    if (const auto slash = s.find('/'); slash != std::string_view::npos) {
        const auto num = s.substr(0, slash);
        const auto den = s.substr(slash + 1);
        if (!detail::all_digits(num) || !detail::all_digits(den)) {
            throw fail();
        }
        const BigInt d(std::string{den});
        if (d == 0) {
            throw fail();
        }
        value = Rational(BigInt(std::string{num}), d);
    } else if (const auto dot = s.find('.'); dot != std::string_view::npos) {
        const auto whole = s.substr(0, dot);
        const auto frac = s.substr(dot + 1);
        if ((!whole.empty() && !detail::all_digits(whole)) || !detail::all_digits(frac)) {
            throw fail();
        }
        BigInt scale = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) {
            scale *= 10;
        }
        const BigInt w = whole.empty() ? BigInt(0) : BigInt(std::string{whole});
        value = Rational(w * scale + BigInt(std::string{frac}), scale);
    } else {
        if (!detail::all_digits(s)) {
            throw fail();
        }
        value = Rational(BigInt(std::string{s}));
    }
    return negative ? Rational(-value) : value;
}

// Decimal rendering with round-half-up (away from zero for the half case on
// non-negative values, which is the only case aggregation produces).
inline std::string to_decimal_string(const Rational& r, int places = 2) {
    BigInt scale = 1;
    for (int i = 0; i < places; ++i) {
        scale *= 10;
    }
    const BigInt num = boost::multiprecision::numerator(r);
    const BigInt den = boost::multiprecision::denominator(r);
    const bool negative = num < 0;
    const BigInt abs_num = negative ? BigInt(-num) : num;
    // floor((2*num*scale + den) / (2*den)) is round-half-up of num*scale/den.
    const BigInt scaled = (2 * abs_num * scale + den) / (2 * den);
    std::string digits = scaled.str();
    if (places > 0) {
        if (digits.size() <= static_cast<std::size_t>(places)) {
            digits.insert(0, static_cast<std::size_t>(places) + 1 - digits.size(), '0');
        }
        digits.insert(digits.size() - static_cast<std::size_t>(places), ".");
    }
    return (negative && scaled != 0 ? "-" : "") + digits;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace rubric
