#pragma once

#include "rumin/exterior.hpp"
#include "rumin/heisenberg.hpp"
#include "rumin/linalg.hpp"

#include <cstddef>
#include <string>
#include <vector>

/// The Rumin complex (E_0, d_c) of H^n built from the contact structure:
///  - E_0^h is the primitive horizontal h-covectors (ker Lambda) for h <= n and
///    theta ^ ker L on horizontal (h-1)-covectors for h >= n+1;
///  - Pi_E = Id - Q d - d Q with Q(beta + theta^gamma) = theta ^ L^+ beta, where L^+ is the
///    Moore-Penrose inverse of the Lefschetz map on horizontal covectors;
///  - d_c = Pi_E0 d Pi_E Pi_E0 and d_c^* = (-1)^h * d_c *.
namespace rumin::complex {

using exterior::ConstForm;
using exterior::Form;
using exterior::Mask;
using exterior::PolyForm;
using heisenberg::FieldOperator;

inline constexpr int kDefaultMaxN = 3;

/// Orthogonal basis of E_0^h with rational entries. Elements are pairwise orthogonal;
/// `norms2[i]` is the squared length of `elements[i]` (normalizing would leave Q).
struct RuminBasis {
    int n = 0;
    int h = 0;
    std::vector<ConstForm> elements;
    std::vector<Rational> norms2;

    std::size_t dim() const { return elements.size(); }
};

/// Cached basis of E_0^h; throws for h outside [0, 2n+1] or n > n_max.
const RuminBasis& build_basis(int n, int h, int n_max = kDefaultMaxN);

/// Horizontal covector masks of degree k (no theta slot), lexicographic.
std::vector<Mask> horizontal_masks(int n, int k);

/// Lefschetz map on horizontal covectors Lambda^k -> Lambda^{k+2} and its pseudo-inverse.
struct HorizontalLefschetz {
    std::vector<Mask> source;  // degree k
    std::vector<Mask> target;  // degree k+2
    linalg::Matrix map;        // target x source
    linalg::Matrix pinv;       // source x target
};
const HorizontalLefschetz& horizontal_lefschetz(int n, int k);

/// Rumin form: coefficient vector over a fixed E_0^h basis.
template <class C>
struct RuminForm {
    const RuminBasis* basis = nullptr;
    std::vector<C> coefficients;

    int n() const { return basis->n; }
    int degree() const { return basis->h; }
    bool is_zero() const {
        for (const auto& c : coefficients)
            if (!exterior::CoeffTraits<C>::is_zero(c)) return false;
        return true;
    }
    friend bool operator==(const RuminForm& a, const RuminForm& b) {
        return a.basis == b.basis && a.coefficients == b.coefficients;
    }
};
using PolyRuminForm = RuminForm<PolyScalar>;

namespace detail {

template <class C>
C pair_with(const Form<C>& a, const ConstForm& e) {
    C acc = exterior::CoeffTraits<C>::zero(a.n());
    for (const auto& [m, c] : e.terms()) {
        auto it = a.terms().find(m);
        if (it != a.terms().end()) acc += it->second * c;
    }
    return acc;
}

template <class C>
Form<C> embed(int n, const ConstForm& e, const C& c) {
    Form<C> out(n, e.degree());
    for (const auto& [m, v] : e.terms()) out.add(m, c * v);
    return out;
}

// Applies a rational matrix (rows: `target` masks, cols: `source` masks) to a form.
template <class C>
Form<C> apply_matrix(int n, int target_degree, const std::vector<Mask>& target,
                     const std::vector<Mask>& source, const linalg::Matrix& mat, const Form<C>& a) {
    Form<C> out(n, target_degree);
    for (std::size_t s = 0; s < source.size(); ++s) {
        auto it = a.terms().find(source[s]);
        if (it == a.terms().end()) continue;
        for (std::size_t r = 0; r < target.size(); ++r) {
            const Rational& v = mat(r, s);
            if (is_zero(v)) continue;
            out.add(target[r], it->second * v);
        }
    }
    return out;
}

}  // namespace detail

/// Orthogonal projection onto E_0^h, returned as a form.
template <class C>
Form<C> project_E0(const Form<C>& a) {
    const RuminBasis& basis = build_basis(a.n(), a.degree(), a.n());
    Form<C> out(a.n(), a.degree());
    for (std::size_t i = 0; i < basis.dim(); ++i) {
        C c = detail::pair_with(a, basis.elements[i]);
        if (exterior::CoeffTraits<C>::is_zero(c)) continue;
        c *= Rational(1 / basis.norms2[i]);
        out += detail::embed(a.n(), basis.elements[i], c);
    }
    return out;
}

/// Orthogonal projection onto E_0^h, returned as coefficients.
template <class C>
RuminForm<C> proj_E0(const Form<C>& a) {
    const RuminBasis& basis = build_basis(a.n(), a.degree(), a.n());
    RuminForm<C> out{&basis, {}};
    out.coefficients.reserve(basis.dim());
    for (std::size_t i = 0; i < basis.dim(); ++i) {
        C c = detail::pair_with(a, basis.elements[i]);
        c *= Rational(1 / basis.norms2[i]);
        out.coefficients.push_back(std::move(c));
    }
    return out;
}

template <class C>
Form<C> to_form(const RuminForm<C>& a) {
    const int n = a.n();
    Form<C> out(n, a.degree());
    for (std::size_t i = 0; i < a.coefficients.size(); ++i) {
        out += detail::embed(n, a.basis->elements[i], a.coefficients[i]);
    }
    return out;
}

/// Q(beta + theta ^ gamma) = theta ^ L^+ beta; lowers the degree by one.
template <class C>
Form<C> contact_homotopy(const Form<C>& a) {
    const int n = a.n();
    const int h = a.degree();
    if (h < 2) return Form<C>(n, std::max(h - 1, 0));
    auto [beta, gamma] = exterior::split_theta(a);
    const HorizontalLefschetz& lef = horizontal_lefschetz(n, h - 2);
    Form<C> lb = detail::apply_matrix(n, h - 2, lef.source, lef.target, lef.pinv, beta);
    return exterior::theta_wedge(lb);
}

/// Rumin's projection Pi_E = Id - Q d - d Q.
template <class C>
Form<C> proj_E(const Form<C>& a) {
    const int n = a.n();
    const int h = a.degree();
    Form<C> out = a;
    if (h < 2 * n + 1) out -= contact_homotopy(exterior::de_rham_d(a));
    if (h >= 2) out -= exterior::de_rham_d(contact_homotopy(a));
    return out;
}

/// d_c = Pi_E0 d Pi_E Pi_E0. The input is projected onto E_0 first; the top degree maps to
/// the zero top form (there is no degree 2n+2).
template <class C>
Form<C> d_c(const Form<C>& a) {
    const int n = a.n();
    if (a.degree() == 2 * n + 1) return Form<C>(n, 2 * n + 1);
    return project_E0(exterior::de_rham_d(proj_E(project_E0(a))));
}

/// d_c^* = (-1)^h * d_c *; degree 0 maps to the zero 0-form.
template <class C>
Form<C> d_c_star(const Form<C>& a) {
    const int n = a.n();
    const int h = a.degree();
    if (h == 0) return Form<C>(n, 0);
    Form<C> r = exterior::hodge_star(d_c(exterior::hodge_star(project_E0(a))));
    return h % 2 == 0 ? r : -r;
}

template <class C>
RuminForm<C> d_c(const RuminForm<C>& a) {
    return proj_E0(d_c(to_form(a)));
}

template <class C>
RuminForm<C> d_c_star(const RuminForm<C>& a) {
    return proj_E0(d_c_star(to_form(a)));
}

/// Matrix of left-invariant operators between coefficient vectors over E_0 bases.
class LeftInvariantOperator {
public:
    LeftInvariantOperator() = default;
    LeftInvariantOperator(int n, int source_degree, int target_degree);

    int n() const { return n_; }
    int source_degree() const { return source_; }
    int target_degree() const { return target_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    FieldOperator& at(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }
    const FieldOperator& at(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }

    bool is_zero() const;
    /// Common homogeneity of all nonzero entries; -1 if mixed, 0 if the operator vanishes.
    int weight() const;

    /// (a * b) = a after b.
    friend LeftInvariantOperator operator*(const LeftInvariantOperator& a,
                                           const LeftInvariantOperator& b);
    friend LeftInvariantOperator operator+(const LeftInvariantOperator& a,
                                           const LeftInvariantOperator& b);
    friend LeftInvariantOperator operator-(const LeftInvariantOperator& a,
                                           const LeftInvariantOperator& b);
    friend bool operator==(const LeftInvariantOperator& a, const LeftInvariantOperator& b) {
        return a.n_ == b.n_ && a.source_ == b.source_ && a.target_ == b.target_ &&
               a.entries_ == b.entries_;
    }

    /// Formal L^2 adjoint with respect to the pointwise inner product on E_0.
    LeftInvariantOperator formal_adjoint() const;

    PolyRuminForm apply(const PolyRuminForm& a) const;

private:
    int n_ = 0;
    int source_ = 0;
    int target_ = 0;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<FieldOperator> entries_;
};

/// d_c: E_0^h -> E_0^{h+1} extracted by running the symbolic pipeline on operator-valued
/// coefficients. For h = 2n+1 the result has zero rows.
const LeftInvariantOperator& d_c_operator(int n, int h);
/// d_c^*: E_0^h -> E_0^{h-1} as (-1)^h * d_c *.
const LeftInvariantOperator& d_c_star_operator(int n, int h);
/// Rumin Laplacian Delta_{H,h}: order 2 off the middle degrees, order 4 at h = n, n+1.
const LeftInvariantOperator& laplacian(int n, int h);

/// Matrix of field operators between full h-forms; rows and columns follow
/// exterior::basis_masks(n, degree).
struct FormOperator {
    int n = 0;
    int source_degree = 0;
    int target_degree = 0;
    std::vector<Mask> source;
    std::vector<Mask> target;
    std::vector<FieldOperator> entries;  // row-major, target x source

    const FieldOperator& at(std::size_t r, std::size_t c) const { return entries[r * source.size() + c]; }
};
/// Pi_E on full h-forms (order <= 1).
const FormOperator& proj_E_operator(int n, int h);

/// Order of Delta_{H,h} with respect to dilations.
inline int laplacian_order(int n, int h) { return (h == n || h == n + 1) ? 4 : 2; }
/// Homogeneity weight of d_c on E_0^h.
inline int d_c_weight(int n, int h) { return h == n ? 2 : 1; }

/// Differential operator with polynomial coefficients, sum_I f_I(p) W^I.
struct VariableOperator {
    int n = 0;
    std::map<heisenberg::MultiIndex, PolyScalar> terms;

    void add(const heisenberg::MultiIndex& index, const PolyScalar& f);
    PolyScalar apply(const PolyScalar& u) const;
    /// Largest |I| with a nonzero coefficient (0 for multiplication operators).
    unsigned order() const;
    bool is_zero() const { return terms.empty(); }
};

struct VariableOperatorMatrix {
    int n = 0;
    int source_degree = 0;
    int target_degree = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<VariableOperator> entries;

    VariableOperator& at(std::size_t r, std::size_t c) { return entries[r * cols + c]; }
    const VariableOperator& at(std::size_t r, std::size_t c) const { return entries[r * cols + c]; }
    PolyRuminForm apply(const PolyRuminForm& a) const;
    unsigned order() const;
    bool is_zero() const;
};

/// [D, zeta] for a left-invariant operator matrix D, by the Leibniz rule for words of
/// derivations.
VariableOperatorMatrix commutator(const LeftInvariantOperator& op, const PolyScalar& zeta);

/// Split of [d_c, zeta] on E_0^h into its order-zero part P0 and first-order part P1.
struct LeibnizSplit {
    VariableOperatorMatrix order_zero;
    VariableOperatorMatrix first_order;
};
LeibnizSplit leibniz_decompose(const PolyScalar& zeta, int n, int h);

/// [d_c, zeta] alpha computed directly as d_c(zeta alpha) - zeta d_c alpha.
PolyRuminForm commutator_action(const PolyScalar& zeta, const PolyRuminForm& alpha);

/// Coefficient-wise multiplication of a Rumin form by a polynomial.
PolyRuminForm multiply(const PolyScalar& f, const PolyRuminForm& a);

PolyRuminForm zero_form(int n, int h);

std::string describe(const RuminBasis& basis);

}  // namespace rumin::complex
