#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace pipelat {

// Exact rational used for every analysis-side time value, data size and
// bandwidth. Simulation converts to integer ticks before running.
using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

/// Parses "3", "-0.25", "1.5e-3" or "7/20" exactly. Throws std::invalid_argument.
Rational parse_rational(std::string_view text);

/// Terminating decimals print as decimals ("0.25"), anything else as "p/q".
std::string to_string(const Rational& value);

double to_double(const Rational& value);

Integer floor_integer(const Rational& value);
Integer ceil_integer(const Rational& value);

/// Largest multiple of `step` that is <= value. `step` must be positive.
Rational floor_to(const Rational& value, const Rational& step);

/// Greatest rational g such that every input is an integer multiple of g.
/// Zero inputs are ignored; returns 0 when all inputs are zero.
Rational rational_gcd(const Rational& a, const Rational& b);

/// Converts to int64, throwing std::overflow_error if the value is not an
/// integer or does not fit.
std::int64_t to_int64(const Rational& value);

}  // namespace pipelat
