#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace rumin {

/// Exact rational scalar used throughout the symbolic layer.
using Rational = mpq_class;

inline double to_double(const Rational& q) { return q.get_d(); }

inline bool is_zero(const Rational& q) { return sgn(q) == 0; }

/// Parses "p", "-p" or "p/q"; the result is canonicalized.
Rational parse_rational(std::string_view text);

std::string to_string(const Rational& q);

/// Integer power with a nonnegative exponent.
Rational pow(const Rational& base, unsigned exponent);

}  // namespace rumin
