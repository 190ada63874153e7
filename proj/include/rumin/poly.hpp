#pragma once

#include "rumin/rational.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>

namespace rumin {

/// Largest number of coordinates a polynomial may depend on (n <= 7).
inline constexpr int kMaxVars = 15;

/// Exponent vector of a monomial in (x_1..x_n, y_1..y_n, t).
class Monomial {
public:
    Monomial() { exps_.fill(0); }

    static Monomial variable(int var, unsigned power = 1);

    unsigned operator[](int var) const { return exps_[static_cast<std::size_t>(var)]; }
    void set(int var, unsigned power);

    unsigned total_degree() const;
    Monomial operator*(const Monomial& other) const;

    auto operator<=>(const Monomial&) const = default;

private:
    std::array<std::uint8_t, kMaxVars> exps_{};
};

/// Exact multivariate polynomial with rational coefficients, stored sparsely.
///
/// Variable indices follow the coordinate order of a point of H^n:
/// x_i has index i-1, y_i has index n+i-1 and t has index 2n.
class PolyScalar {
public:
    using Terms = std::map<Monomial, Rational>;

    PolyScalar() = default;
    explicit PolyScalar(int num_vars) : num_vars_(num_vars) {}
    PolyScalar(int num_vars, const Rational& constant);

    static PolyScalar variable(int num_vars, int var);
    static PolyScalar monomial(int num_vars, const Monomial& m, const Rational& c);

    int num_vars() const { return num_vars_; }
    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    Rational coefficient(const Monomial& m) const;
    void add_term(const Monomial& m, const Rational& c);

    PolyScalar& operator+=(const PolyScalar& other);
    PolyScalar& operator-=(const PolyScalar& other);
    PolyScalar& operator*=(const Rational& c);
    PolyScalar operator-() const;

    friend PolyScalar operator+(PolyScalar a, const PolyScalar& b) { return a += b; }
    friend PolyScalar operator-(PolyScalar a, const PolyScalar& b) { return a -= b; }
    friend PolyScalar operator*(PolyScalar a, const Rational& c) { return a *= c; }
    friend PolyScalar operator*(const Rational& c, PolyScalar a) { return a *= c; }
    friend PolyScalar operator*(const PolyScalar& a, const PolyScalar& b);
    friend bool operator==(const PolyScalar& a, const PolyScalar& b) { return a.terms_ == b.terms_; }

    /// Partial derivative with respect to coordinate `var`.
    PolyScalar derivative(int var) const;
    /// Multiplication by the coordinate `var`.
    PolyScalar times_variable(int var) const;

    unsigned total_degree() const;

    /// Substitutes coordinate values; `point.size()` must equal num_vars().
    Rational evaluate(std::span<const Rational> point) const;
    double evaluate(std::span<const double> point) const;

    /// f(lambda x, lambda y, lambda^2 t) for a polynomial on H^n with 2n+1 variables.
    PolyScalar dilate(const Rational& lambda) const;

    /// Weighted degree (x, y weight 1, t weight 2) when all terms share it; -1 otherwise.
    int homogeneous_weight() const;

    PolyScalar pow(unsigned k) const;

private:
    int num_vars_ = 0;
    Terms terms_;
};

std::string to_string(const PolyScalar& p);

}  // namespace rumin
