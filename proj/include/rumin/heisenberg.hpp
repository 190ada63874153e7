#pragma once

#include "rumin/poly.hpp"
#include "rumin/rational.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

/// Group-theoretic and differential primitives of the Heisenberg group H^n in
/// exponential coordinates (x, y, t) with the group law
///   p.q = (x+x', y+y', t+t' + 1/2 sum_j (x_j y'_j - y_j x'_j)).
namespace rumin::heisenberg {

/// Point of H^n. Exact rational coordinates.
struct Point {
    std::vector<Rational> x;
    std::vector<Rational> y;
    Rational t;

    static Point identity(int n);

    int dimension() const { return static_cast<int>(x.size()); }
    /// Flattened coordinates (x_1..x_n, y_1..y_n, t).
    std::vector<Rational> coordinates() const;

    friend bool operator==(const Point&, const Point&) = default;
};

Point group_mul(const Point& p, const Point& q);
Point group_inv(const Point& p);

/// delta_lambda(x, y, t) = (lambda x, lambda y, lambda^2 t); lambda must be positive.
Point dilate(const Rational& lambda, const Point& p);

/// Fourth power of the Koranyi gauge, |(x,y)|^4 + 16 t^2, exact.
Rational koranyi_norm4(const Point& p);
double koranyi_norm(const Point& p);
/// Gauge distance d(p, q) = rho(p^{-1} q).
double gauge_distance(const Point& p, const Point& q);

/// rho^4 as a polynomial in the 2n+1 coordinates.
PolyScalar gauge_norm4_poly(int n);
/// (1 - rho^4 / radius^4)^k: a polynomial that is C^{k-1} once cut off outside B(e, radius).
PolyScalar gauge_bump(int n, const Rational& radius, unsigned k);

/// Floating-point versions on flattened coordinates, used by the grid layer.
double koranyi_norm(std::span<const double> coords);
void group_mul(std::span<const double> p, std::span<const double> q, std::span<double> out);

/// Homogeneous dimension Q = 2n + 2.
inline int homogeneous_dimension(int n) { return 2 * n + 2; }

/// Exponents (i_1..i_{2n+1}) of the ordered product W_1^{i_1} ... W_{2n+1}^{i_{2n+1}}.
class MultiIndex {
public:
    MultiIndex() { exps_.fill(0); }
    explicit MultiIndex(std::span<const unsigned> exps);

    static MultiIndex unit(int field, int n);

    unsigned operator[](int field) const { return exps_[static_cast<std::size_t>(field)]; }
    void set(int field, unsigned power);

    /// |I| = sum of exponents.
    unsigned order() const;
    /// d(I): horizontal exponents count once, the T exponent twice.
    unsigned homogeneity(int n) const;

    auto operator<=>(const MultiIndex&) const = default;

private:
    std::array<std::uint8_t, kMaxVars> exps_{};
};

/// Applies the left-invariant field W_j (1-based: W_i = X_i, W_{n+i} = Y_i, W_{2n+1} = T).
PolyScalar apply_field(int n, int j, const PolyScalar& f);

/// Applies W^I = W_1^{i_1} ... W_{2n+1}^{i_{2n+1}}; the rightmost factor acts first.
PolyScalar apply_multi_index(int n, const MultiIndex& index, const PolyScalar& f);

/// f o tau_q, i.e. p -> f(q.p).
PolyScalar left_translate(int n, const PolyScalar& f, const Point& q);

/// Noncommutative polynomial in W_1..W_{2n+1}, kept in the ordered (PBW) normal form
/// sum_I c_I W^I. Composition uses [X_i, Y_i] = T with T central.
class FieldOperator {
public:
    using Terms = std::map<MultiIndex, Rational>;

    FieldOperator() = default;
    explicit FieldOperator(int n) : n_(n) {}

    static FieldOperator identity(int n);
    static FieldOperator scalar(int n, const Rational& c);
    static FieldOperator field(int n, int j);

    int n() const { return n_; }
    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    void add_term(const MultiIndex& index, const Rational& c);

    FieldOperator& operator+=(const FieldOperator& other);
    FieldOperator& operator-=(const FieldOperator& other);
    FieldOperator& operator*=(const Rational& c);
    FieldOperator operator-() const;

    friend FieldOperator operator+(FieldOperator a, const FieldOperator& b) { return a += b; }
    friend FieldOperator operator-(FieldOperator a, const FieldOperator& b) { return a -= b; }
    friend FieldOperator operator*(FieldOperator a, const Rational& c) { return a *= c; }
    friend FieldOperator operator*(const Rational& c, FieldOperator a) { return a *= c; }
    /// Composition: (a * b) u = a(b(u)).
    friend FieldOperator operator*(const FieldOperator& a, const FieldOperator& b);
    friend bool operator==(const FieldOperator& a, const FieldOperator& b) {
        return a.terms_ == b.terms_;
    }

    /// W_j o this.
    FieldOperator apply_field(int j) const;

    /// Formal L^2 adjoint; each W_j is skew-adjoint.
    FieldOperator adjoint() const;

    PolyScalar apply(const PolyScalar& f) const;

    /// Homogeneity weight shared by all terms, or -1 (mixed) / 0 for the zero operator.
    int weight() const;
    /// Highest d(I) across terms.
    unsigned max_weight() const;

private:
    int n_ = 0;
    Terms terms_;
};

std::string to_string(const FieldOperator& op);

/// Distinct orderings of the horizontal letters of W^I as words of 1-based field indices,
/// leftmost letter first. T is central and is left out.
std::vector<std::vector<int>> letter_orderings(int n, const MultiIndex& index);

/// sym(I): the average over letter_orderings(I) of the ordered products, times
/// T^{i_{2n+1}}. Each sym(I) satisfies sym(I)^* = (-1)^{|I|} sym(I).
FieldOperator symmetrized(int n, const MultiIndex& index);

/// Coordinates in the symmetrized basis: op = sum_I c_I sym(I).
std::map<MultiIndex, Rational> symmetric_coordinates(const FieldOperator& op);

}  // namespace rumin::heisenberg
