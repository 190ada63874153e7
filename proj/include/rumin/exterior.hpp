#pragma once

#include "rumin/heisenberg.hpp"
#include "rumin/poly.hpp"
#include "rumin/rational.hpp"

#include <bit>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

/// Exterior algebra over the left-invariant coframe {dx_1..dx_n, dy_1..dy_n, theta} of H^n.
///
/// A basis covector dx_{i_1} ^ ... ^ dx_{i_h} is encoded as a bit mask over the 2n+1
/// coframe slots: slot i-1 is dx_i, slot n+i-1 is dy_i and slot 2n is theta. Increasing
/// slot order is the canonical wedge order, so dV = dx_1^...^dx_n^dy_1^...^dy_n^theta.
namespace rumin::exterior {

using Mask = std::uint32_t;

inline int mask_degree(Mask m) { return std::popcount(m); }
inline Mask theta_slot(int n) { return Mask{1} << (2 * n); }
inline Mask volume_mask(int n) { return (Mask{1} << (2 * n + 1)) - 1; }
inline bool has_theta(int n, Mask m) { return (m & theta_slot(n)) != 0; }
/// Weight of a basis covector under dilations: 1 per horizontal slot, 2 for theta.
inline int mask_weight(int n, Mask m) { return mask_degree(m) + (has_theta(n, m) ? 1 : 0); }

/// Sign of e_a ^ e_b relative to e_{a|b}; zero when the masks overlap.
int wedge_sign(Mask a, Mask b);

/// All masks of the given degree in lexicographic order of their slot tuples.
std::vector<Mask> basis_masks(int n, int degree);

std::string mask_name(int n, Mask m);

/// Coefficient-ring hooks. A coefficient type must be an abelian group with rational
/// scaling; `apply_field` is only required by the exterior derivative.
template <class C>
struct CoeffTraits;

template <>
struct CoeffTraits<Rational> {
    static Rational zero(int) { return 0; }
    static bool is_zero(const Rational& c) { return rumin::is_zero(c); }
};

template <>
struct CoeffTraits<PolyScalar> {
    static PolyScalar zero(int n) { return PolyScalar(2 * n + 1); }
    static bool is_zero(const PolyScalar& c) { return c.is_zero(); }
    static PolyScalar apply_field(int n, int j, const PolyScalar& c) {
        return heisenberg::apply_field(n, j, c);
    }
};

template <>
struct CoeffTraits<heisenberg::FieldOperator> {
    static heisenberg::FieldOperator zero(int n) { return heisenberg::FieldOperator(n); }
    static bool is_zero(const heisenberg::FieldOperator& c) { return c.is_zero(); }
    static heisenberg::FieldOperator apply_field(int, int j, const heisenberg::FieldOperator& c) {
        return c.apply_field(j);
    }
};

/// Homogeneous differential form of fixed degree with coefficients in C.
template <class C>
class Form {
public:
    using Terms = std::map<Mask, C>;

    Form() = default;
    Form(int n, int degree) : n_(n), degree_(degree) {
        if (degree < 0 || degree > 2 * n + 1) throw std::out_of_range("form degree out of range");
    }

    static Form basis(int n, Mask m, const C& c) {
        Form f(n, mask_degree(m));
        f.add(m, c);
        return f;
    }

    int n() const { return n_; }
    int degree() const { return degree_; }
    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    C coefficient(Mask m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? CoeffTraits<C>::zero(n_) : it->second;
    }

    void add(Mask m, const C& c) {
        if (mask_degree(m) != degree_) throw std::invalid_argument("term degree mismatch");
        if (CoeffTraits<C>::is_zero(c)) return;
        auto [it, inserted] = terms_.try_emplace(m, c);
        if (!inserted) {
            it->second += c;
            if (CoeffTraits<C>::is_zero(it->second)) terms_.erase(it);
        }
    }

    Form& operator+=(const Form& other) {
        check_compatible(other);
        for (const auto& [m, c] : other.terms_) add(m, c);
        return *this;
    }
    Form& operator-=(const Form& other) {
        check_compatible(other);
        for (const auto& [m, c] : other.terms_) add(m, -c);
        return *this;
    }
    Form& operator*=(const Rational& s) {
        if (rumin::is_zero(s)) {
            terms_.clear();
            return *this;
        }
        for (auto& [m, c] : terms_) c *= s;
        return *this;
    }
    Form operator-() const {
        Form r = *this;
        for (auto& [m, c] : r.terms_) c = -c;
        return r;
    }

    friend Form operator+(Form a, const Form& b) { return a += b; }
    friend Form operator-(Form a, const Form& b) { return a -= b; }
    friend Form operator*(Form a, const Rational& s) { return a *= s; }
    friend Form operator*(const Rational& s, Form a) { return a *= s; }
    friend bool operator==(const Form& a, const Form& b) {
        return a.n_ == b.n_ && a.degree_ == b.degree_ && a.terms_ == b.terms_;
    }

private:
    void check_compatible(const Form& other) const {
        if (n_ != other.n_ || degree_ != other.degree_) {
            throw std::invalid_argument("forms of different shape");
        }
    }

    int n_ = 0;
    int degree_ = 0;
    Terms terms_;
};

using PolyForm = Form<PolyScalar>;
using ConstForm = Form<Rational>;
using OperatorForm = Form<heisenberg::FieldOperator>;

/// Constant-coefficient form a applied by wedge from the left: a ^ b.
template <class C>
Form<C> wedge(const ConstForm& a, const Form<C>& b) {
    const int n = b.n();
    Form<C> out(n, std::min(a.degree() + b.degree(), 2 * n + 1));
    if (a.degree() + b.degree() > 2 * n + 1) return out;
    for (const auto& [ma, ca] : a.terms()) {
        for (const auto& [mb, cb] : b.terms()) {
            int s = wedge_sign(ma, mb);
            if (s == 0) continue;
            out.add(ma | mb, cb * Rational(ca * s));
        }
    }
    return out;
}

/// Wedge product of polynomial forms.
PolyForm wedge(const PolyForm& a, const PolyForm& b);
ConstForm wedge(const ConstForm& a, const ConstForm& b);

/// Hodge star for the orthonormal coframe and volume dV: e_I ^ *e_I = dV.
template <class C>
Form<C> hodge_star(const Form<C>& a) {
    const int n = a.n();
    const Mask all = volume_mask(n);
    Form<C> out(n, 2 * n + 1 - a.degree());
    for (const auto& [m, c] : a.terms()) {
        const Mask comp = all & ~m;
        out.add(comp, c * Rational(wedge_sign(m, comp)));
    }
    return out;
}

/// Pointwise inner product making the coframe orthonormal.
PolyScalar inner(const PolyForm& a, const PolyForm& b);
Rational inner(const ConstForm& a, const ConstForm& b);

/// dtheta, derived by differentiating theta = dt - 1/2 sum_j (x_j dy_j - y_j dx_j)
/// in coordinates and re-expressing the result in the left-invariant coframe.
const ConstForm& contact_differential(int n);

/// Exterior derivative in the left-invariant coframe: df = sum_j (W_j f) e^j and
/// d(e^J ^ theta) = (-1)^{|J|} e^J ^ dtheta.
template <class C>
Form<C> de_rham_d(const Form<C>& a) {
    const int n = a.n();
    if (a.degree() == 2 * n + 1) return Form<C>(n, 2 * n + 1);
    Form<C> out(n, a.degree() + 1);
    const ConstForm& dtheta = contact_differential(n);
    for (const auto& [m, c] : a.terms()) {
        for (int j = 1; j <= 2 * n + 1; ++j) {
            const Mask e = Mask{1} << (j - 1);
            int s = wedge_sign(e, m);
            if (s == 0) continue;
            C w = CoeffTraits<C>::apply_field(n, j, c);
            if (CoeffTraits<C>::is_zero(w)) continue;
            out.add(e | m, w * Rational(s));
        }
        if (has_theta(n, m)) {
            const Mask rest = m & ~theta_slot(n);
            const Rational sign = (mask_degree(rest) % 2 == 0) ? 1 : -1;
            // e^J ^ dtheta
            for (const auto& [mt, ct] : dtheta.terms()) {
                int s = wedge_sign(rest, mt);
                if (s == 0) continue;
                out.add(rest | mt, c * Rational(sign * ct * s));
            }
        }
    }
    return out;
}

/// Matrix of the Lefschetz map L = dtheta ^ . from degree h to h+2 on the full
/// exterior algebra, columns indexed by basis_masks(n, h).
struct LefschetzTable {
    std::vector<Mask> source;
    std::vector<Mask> target;
    std::vector<std::vector<Rational>> entries;  // [target][source]
};
const LefschetzTable& lefschetz_table(int n, int h);

template <class C>
Form<C> lefschetz(const Form<C>& a) {
    return wedge(contact_differential(a.n()), a);
}

/// Metric adjoint of lefschetz(): <L a, b> = <a, Lambda b>.
template <class C>
Form<C> lefschetz_adjoint(const Form<C>& b) {
    const int n = b.n();
    // Lambda vanishes below degree 2; the zero 0-form stands in for the empty result.
    if (b.degree() < 2) return Form<C>(n, 0);
    const LefschetzTable& table = lefschetz_table(n, b.degree() - 2);
    Form<C> out(n, b.degree() - 2);
    for (std::size_t r = 0; r < table.target.size(); ++r) {
        auto it = b.terms().find(table.target[r]);
        if (it == b.terms().end()) continue;
        for (std::size_t s = 0; s < table.source.size(); ++s) {
            const Rational& v = table.entries[r][s];
            if (rumin::is_zero(v)) continue;
            out.add(table.source[s], it->second * v);
        }
    }
    return out;
}

/// Pullback by the dilation delta_lambda.
PolyForm dilation_pullback(const Rational& lambda, const PolyForm& a);

/// Splits a = beta + theta ^ gamma into horizontal forms beta (degree h) and gamma (degree h-1).
template <class C>
std::pair<Form<C>, Form<C>> split_theta(const Form<C>& a) {
    const int n = a.n();
    const int h = a.degree();
    Form<C> beta(n, std::min(h, 2 * n));
    Form<C> gamma(n, std::max(h - 1, 0));
    for (const auto& [m, c] : a.terms()) {
        if (has_theta(n, m)) {
            const Mask rest = m & ~theta_slot(n);
            // e^J ^ theta = (-1)^{|J|} theta ^ e^J
            gamma.add(rest, mask_degree(rest) % 2 == 0 ? c : C(-c));
        } else {
            beta.add(m, c);
        }
    }
    return {beta, gamma};
}

/// theta ^ gamma for a horizontal form gamma.
template <class C>
Form<C> theta_wedge(const Form<C>& gamma) {
    const int n = gamma.n();
    Form<C> out(n, gamma.degree() + 1);
    for (const auto& [m, c] : gamma.terms()) {
        if (has_theta(n, m)) continue;
        out.add(m | theta_slot(n), mask_degree(m) % 2 == 0 ? c : C(-c));
    }
    return out;
}

/// Multiplies every coefficient by a polynomial.
PolyForm multiply(const PolyScalar& f, const PolyForm& a);

/// Constant basis covector as a polynomial form.
PolyForm basis_form(int n, Mask m, const Rational& c = 1);

/// Human-readable, exactly round-tripping text format:
///   form n=<n> degree=<h>
///   dx1^dy1 : <polynomial>
std::string to_text(const PolyForm& a);
PolyForm parse_form(std::string_view text);
PolyScalar parse_poly(std::string_view text, int n);

}  // namespace rumin::exterior
