#pragma once

// Independent reference computations shared by the unit tests. Nothing here calls the
// library's differentiation or exterior-algebra code.

#include "rumin/heisenberg.hpp"
#include "rumin/poly.hpp"

#include <functional>
#include <random>
#include <vector>

namespace oracle {

using rumin::Rational;

/// a/b in canonical form (mpq_class does not canonicalize on construction).
inline Rational frac(long a, long b) {
    Rational r(a, b);
    r.canonicalize();
    return r;
}

/// Lagrange weights w_j with g'(0) = sum_j w_j g(j) for polynomials of degree <= k.
inline std::vector<Rational> derivative_weights(int k) {
    std::vector<Rational> w(k + 1, 0);
    for (int j = 0; j <= k; ++j) {
        Rational sum = 0;
        for (int skip = 0; skip <= k; ++skip) {
            if (skip == j) continue;
            Rational prod = frac(1, j - skip);
            for (int m = 0; m <= k; ++m) {
                if (m == j || m == skip) continue;
                prod *= frac(-m, j - m);
            }
            sum += prod;
        }
        w[j] = sum;
    }
    return w;
}

/// Exact derivative at s = 0 of a polynomial curve s -> g(s) of degree <= k.
inline Rational derivative_at_zero(const std::function<Rational(const Rational&)>& g, int k) {
    auto w = derivative_weights(k);
    Rational acc = 0;
    for (int j = 0; j <= k; ++j) acc += w[j] * g(Rational(j));
    return acc;
}

/// Group law written out directly from its definition.
inline std::vector<Rational> mul(int n, const std::vector<Rational>& p, const std::vector<Rational>& q) {
    std::vector<Rational> r(2 * n + 1);
    for (int i = 0; i < 2 * n; ++i) r[i] = p[i] + q[i];
    Rational omega = 0;
    for (int j = 0; j < n; ++j) omega += p[j] * q[n + j] - p[n + j] * q[j];
    r[2 * n] = p[2 * n] + q[2 * n] + omega / 2;
    return r;
}

/// W_j f(p) = d/ds f(p . exp(s e_j)) at s = 0, j 1-based.
inline Rational field_derivative(int n, int j, const rumin::PolyScalar& f, const std::vector<Rational>& p) {
    const int k = static_cast<int>(f.total_degree()) * 2 + 1;
    return derivative_at_zero(
        [&](const Rational& s) {
            std::vector<Rational> e(2 * n + 1, 0);
            e[j - 1] = s;
            return f.evaluate(mul(n, p, e));
        },
        k);
}

inline rumin::PolyScalar random_poly(std::mt19937_64& rng, int n, unsigned max_deg, int terms) {
    const int vars = 2 * n + 1;
    std::uniform_int_distribution<int> coef(-4, 4);
    std::uniform_int_distribution<unsigned> deg(0, max_deg);
    std::uniform_int_distribution<int> var(0, vars - 1);
    rumin::PolyScalar p(vars);
    for (int k = 0; k < terms; ++k) {
        rumin::Monomial m;
        unsigned d = deg(rng);
        for (unsigned i = 0; i < d; ++i) {
            int v = var(rng);
            m.set(v, m[v] + 1);
        }
        p.add_term(m, frac(coef(rng), 1 + (k % 2)));
    }
    return p;
}

inline std::vector<Rational> random_point(std::mt19937_64& rng, int n) {
    std::uniform_int_distribution<int> d(-6, 6);
    std::vector<Rational> pt;
    for (int i = 0; i < 2 * n + 1; ++i) pt.push_back(frac(d(rng), 4));
    return pt;
}

}  // namespace oracle
