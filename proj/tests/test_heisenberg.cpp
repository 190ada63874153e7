#include "doctest.h"

#include "oracles.hpp"
#include "rumin/heisenberg.hpp"

#include <cmath>
#include <random>

using namespace rumin;
using namespace rumin::heisenberg;

namespace {

Point to_point(int n, const std::vector<Rational>& c) {
    Point p = Point::identity(n);
    for (int i = 0; i < n; ++i) {
        p.x[i] = c[i];
        p.y[i] = c[n + i];
    }
    p.t = c[2 * n];
    return p;
}

}  // namespace

TEST_CASE("group law matches the direct formula and is a group") {
    std::mt19937_64 rng(1);
    for (int n = 1; n <= 3; ++n) {
        for (int trial = 0; trial < 20; ++trial) {
            auto a = oracle::random_point(rng, n);
            auto b = oracle::random_point(rng, n);
            auto c = oracle::random_point(rng, n);
            Point p = to_point(n, a), q = to_point(n, b), r = to_point(n, c);
            CHECK(group_mul(p, q).coordinates() == oracle::mul(n, a, b));
            CHECK(group_mul(group_mul(p, q), r) == group_mul(p, group_mul(q, r)));
            CHECK(group_mul(p, group_inv(p)) == Point::identity(n));
            CHECK(group_mul(group_inv(p), p) == Point::identity(n));
            // dilations are automorphisms
            Rational lam(5, 3);
            CHECK(dilate(lam, group_mul(p, q)) == group_mul(dilate(lam, p), dilate(lam, q)));
        }
    }
}

TEST_CASE("gauge is homogeneous and the distance is left invariant") {
    std::mt19937_64 rng(2);
    const int n = 2;
    for (int trial = 0; trial < 20; ++trial) {
        Point p = to_point(n, oracle::random_point(rng, n));
        Point q = to_point(n, oracle::random_point(rng, n));
        Point g = to_point(n, oracle::random_point(rng, n));
        Rational lam(7, 2);
        CHECK(koranyi_norm4(dilate(lam, p)) == pow(lam, 4) * koranyi_norm4(p));
        CHECK(koranyi_norm4(group_inv(p)) == koranyi_norm4(p));
        CHECK(gauge_distance(group_mul(g, p), group_mul(g, q)) ==
              doctest::Approx(gauge_distance(p, q)).epsilon(1e-12));
        // the Koranyi gauge satisfies the triangle inequality
        CHECK(gauge_distance(p, q) <= gauge_distance(p, g) + gauge_distance(g, q) + 1e-12);
    }
    CHECK_THROWS(dilate(Rational(0), Point::identity(1)));
}

TEST_CASE("left-invariant fields are derivatives along right translation") {
    std::mt19937_64 rng(3);
    for (int n = 1; n <= 2; ++n) {
        for (int trial = 0; trial < 10; ++trial) {
            PolyScalar f = oracle::random_poly(rng, n, 4, 6);
            auto pt = oracle::random_point(rng, n);
            for (int j = 1; j <= 2 * n + 1; ++j) {
                CHECK(apply_field(n, j, f).evaluate(pt) == oracle::field_derivative(n, j, f, pt));
            }
        }
    }
}

TEST_CASE("fields commute with left translations") {
    std::mt19937_64 rng(4);
    const int n = 1;
    for (int trial = 0; trial < 10; ++trial) {
        PolyScalar f = oracle::random_poly(rng, n, 3, 5);
        Point q = to_point(n, oracle::random_point(rng, n));
        for (int j = 1; j <= 3; ++j) {
            CHECK(apply_field(n, j, left_translate(n, f, q)) == left_translate(n, apply_field(n, j, f), q));
        }
    }
}

TEST_CASE("commutation relations and ordered products") {
    for (int n = 1; n <= 3; ++n) {
        for (int i = 1; i <= n; ++i) {
            FieldOperator X = FieldOperator::field(n, i);
            FieldOperator Y = FieldOperator::field(n, n + i);
            FieldOperator T = FieldOperator::field(n, 2 * n + 1);
            CHECK(X * Y - Y * X == T);
            CHECK(X * T == T * X);
            CHECK(X.weight() == 1);
            CHECK(T.weight() == 2);
            CHECK((X * Y).adjoint() == Y * X);
        }
    }
    // Composite operators act as compositions of single fields.
    std::mt19937_64 rng(9);
    const int n = 2;
    FieldOperator A = FieldOperator::field(n, 3) * FieldOperator::field(n, 1) * FieldOperator::field(n, 4) +
                      FieldOperator::field(n, 5) * Rational(2);
    for (int trial = 0; trial < 10; ++trial) {
        PolyScalar f = oracle::random_poly(rng, n, 4, 6);
        PolyScalar direct = apply_field(n, 3, apply_field(n, 1, apply_field(n, 4, f))) +
                            apply_field(n, 5, f) * Rational(2);
        CHECK(A.apply(f) == direct);
    }
}

TEST_CASE("formal adjoint reverses compositions") {
    const int n = 1;
    FieldOperator X = FieldOperator::field(n, 1), Y = FieldOperator::field(n, 2);
    FieldOperator T = FieldOperator::field(n, 3);
    FieldOperator A = X * X * Y + T * Y;
    FieldOperator B = Y * T + X;
    CHECK((A * B).adjoint() == B.adjoint() * A.adjoint());
    CHECK(A.adjoint().adjoint() == A);
}

TEST_CASE("homogeneous dimension") {
    CHECK(homogeneous_dimension(1) == 4);
    CHECK(homogeneous_dimension(3) == 8);
}

TEST_CASE("symmetrized words are self-adjoint up to sign and span the operators") {
    const int n = 1;
    FieldOperator X = FieldOperator::field(n, 1), Y = FieldOperator::field(n, 2);
    MultiIndex xy;
    xy.set(0, 1);
    xy.set(1, 1);
    CHECK(symmetrized(n, xy) == (X * Y + Y * X) * Rational(1, 2));
    CHECK(letter_orderings(n, xy).size() == 2);
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> coef(-3, 3);
    for (int trial = 0; trial < 10; ++trial) {
        FieldOperator op(n);
        for (unsigned a = 0; a <= 2; ++a)
            for (unsigned b = 0; b <= 2; ++b)
                for (unsigned c = 0; c <= 1; ++c) {
                    MultiIndex m;
                    m.set(0, a);
                    m.set(1, b);
                    m.set(2, c);
                    op.add_term(m, coef(rng));
                }
        FieldOperator rebuilt(n);
        for (const auto& [m, c] : symmetric_coordinates(op)) {
            FieldOperator s = symmetrized(n, m);
            CHECK(s.adjoint() == (m.order() % 2 == 0 ? s : -s));
            rebuilt += s * c;
        }
        CHECK(rebuilt == op);
    }
}

TEST_CASE("gauge polynomial and bump") {
    std::mt19937_64 rng(41);
    for (int n = 1; n <= 2; ++n) {
        const PolyScalar g4 = gauge_norm4_poly(n);
        CHECK(g4.homogeneous_weight() == 4);
        for (int s = 0; s < 10; ++s) {
            auto c = oracle::random_point(rng, n);
            CHECK(g4.evaluate(std::span<const Rational>(c)) == koranyi_norm4(to_point(n, c)));
        }
        const PolyScalar b = gauge_bump(n, Rational(2), 3);
        std::vector<Rational> e(2 * n + 1, Rational(0));
        CHECK(b.evaluate(std::span<const Rational>(e)) == 1);
        // vanishes on the sphere rho = 2: x1 = 2
        e[0] = 2;
        CHECK(b.evaluate(std::span<const Rational>(e)) == 0);
    }
    CHECK_THROWS(gauge_bump(1, Rational(0), 2));
}
