#include "doctest.h"

#include "oracles.hpp"
#include "rumin/exterior.hpp"
#include "rumin/poly.hpp"

#include <random>
#include <vector>

using rumin::Monomial;
using rumin::PolyScalar;
using rumin::Rational;

namespace {

PolyScalar random_poly(std::mt19937_64& rng, int vars, unsigned max_deg, int terms) {
    std::uniform_int_distribution<int> coef(-5, 5);
    std::uniform_int_distribution<unsigned> deg(0, max_deg);
    std::uniform_int_distribution<int> var(0, vars - 1);
    PolyScalar p(vars);
    for (int k = 0; k < terms; ++k) {
        Monomial m;
        unsigned d = deg(rng);
        for (unsigned i = 0; i < d; ++i) {
            int v = var(rng);
            m.set(v, m[v] + 1);
        }
        p.add_term(m, oracle::frac(coef(rng), 1 + (k % 3)));
    }
    return p;
}

std::vector<Rational> random_point(std::mt19937_64& rng, int vars) {
    std::uniform_int_distribution<int> d(-7, 7);
    std::vector<Rational> pt;
    for (int i = 0; i < vars; ++i) pt.push_back(oracle::frac(d(rng), 3));
    return pt;
}

}  // namespace

TEST_CASE("ring operations agree with pointwise evaluation") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        PolyScalar a = random_poly(rng, 3, 4, 6);
        PolyScalar b = random_poly(rng, 3, 3, 5);
        auto pt = random_point(rng, 3);
        Rational va = a.evaluate(pt), vb = b.evaluate(pt);
        CHECK((a + b).evaluate(pt) == va + vb);
        CHECK((a - b).evaluate(pt) == va - vb);
        CHECK((a * b).evaluate(pt) == va * vb);
        CHECK(a.pow(3).evaluate(pt) == va * va * va);
    }
}

TEST_CASE("derivative matches the exact difference quotient of a polynomial") {
    // g'(0) = sum_j w_j g(j) for polynomials of degree <= k, independent of derivative().
    std::mt19937_64 rng(5);
    const int k = 6;
    const std::vector<Rational> w = oracle::derivative_weights(k);
    for (int trial = 0; trial < 20; ++trial) {
        PolyScalar p = random_poly(rng, 3, k, 8);
        auto pt = random_point(rng, 3);
        for (int v = 0; v < 3; ++v) {
            Rational oracle = 0;
            for (int j = 0; j <= k; ++j) {
                auto q = pt;
                q[v] += j;
                oracle += w[j] * p.evaluate(q);
            }
            CHECK(p.derivative(v).evaluate(pt) == oracle);
        }
    }
}

TEST_CASE("dilation scales weighted homogeneous parts") {
    PolyScalar x = PolyScalar::variable(3, 0);
    PolyScalar t = PolyScalar::variable(3, 2);
    PolyScalar p = x * x * t;
    CHECK(p.homogeneous_weight() == 4);
    CHECK(p.dilate(Rational(3)) == p * Rational(81));
    CHECK((p + x).homogeneous_weight() == -1);
}

TEST_CASE("text round trip") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        PolyScalar p = random_poly(rng, 3, 4, 6);
        CHECK(rumin::exterior::parse_poly(rumin::to_string(p), 1) == p);
    }
    CHECK(rumin::parse_rational("-6/4") == Rational(-3, 2));
}
