#include "doctest.h"

#include "oracles.hpp"
#include "rumin/grid.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace rumin;
using namespace rumin::grid;
using complex::build_basis;
using complex::zero_form;

namespace {

// Polynomial with degree <= 2 in each variable separately.
PolyScalar biquadratic(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> coef(-4, 4);
    std::uniform_int_distribution<unsigned> e(0, 2);
    PolyScalar p(3);
    for (int k = 0; k < 6; ++k) {
        Monomial m;
        for (int v = 0; v < 3; ++v) m.set(v, e(rng));
        p.add_term(m, oracle::frac(coef(rng), 2));
    }
    return p;
}

// bump(rho < radius) times a random cubic in every component.
PolyRuminForm bump_form(std::mt19937_64& rng, int h, const Rational& radius = Rational(1)) {
    const PolyScalar bump = heisenberg::gauge_bump(1, radius, 6);
    PolyRuminForm a = zero_form(1, h);
    for (auto& c : a.coefficients) c = bump * oracle::random_poly(rng, 1, 3, 4);
    return a;
}

GridField sample(const PolyScalar& f, const GridSpec& s, double radius = 0.0) { return discretize(f, s, radius); }

double max_diff(const GridField& a, const GridField& b, const Mask& mask = {}) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (mask.empty() || mask[i]) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_abs(const GridRuminForm& a, const Mask& mask = {}) {
    double m = 0.0;
    for (const auto& c : a.components)
        for (std::size_t i = 0; i < c.size(); ++i)
            if (mask.empty() || mask[i]) m = std::max(m, std::abs(c[i]));
    return m;
}

double dot(const GridRuminForm& a, const GridRuminForm& b) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.components.size(); ++c)
        for (std::size_t i = 0; i < a.components[c].size(); ++i)
            s += to_double(a.basis->norms2[c]) * a.components[c][i] * b.components[c][i];
    return s;
}

GridRuminForm random_grid_form(std::mt19937_64& rng, int h, const GridSpec& s) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GridRuminForm a = GridRuminForm::zero(build_basis(1, h), s);
    for (auto& c : a.components)
        for (auto& v : c.data()) v = u(rng);
    return a;
}

}  // namespace

TEST_CASE("lattice layout") {
    const GridSpec s = GridSpec::standard();
    CHECK(s.count == std::array<std::size_t, 3>{65, 65, 65});
    CHECK(s.step[0] == doctest::Approx(1.0 / 16));
    CHECK(s.step[2] == doctest::Approx(1.0 / 64));
    CHECK(s.coord(0, 32) == doctest::Approx(0.0));
    CHECK(s.index(0, 0, 1) == 1);
    CHECK(s.index(0, 1, 0) == 65);
    CHECK(s.index(1, 0, 0) == 65 * 65);
    CHECK(s.resolution() == doctest::Approx(0.25));
    const GridSpec r = s.refined();
    CHECK(r.count[0] == 129);
    CHECK(r.coord(0, 128) == doctest::Approx(2.0));
    CHECK_THROWS(GridSpec::centered({1, 1, 1}, {8, 9, 9}));
    GridSpec bad = s;
    bad.n = 2;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("discretize") {
    const GridSpec s = GridSpec::centered({1, 1, 1}, {9, 9, 9});
    CHECK(sample(PolyScalar(3), s).max_abs() == 0.0);
    GridField c = sample(PolyScalar(3, Rational(3)), s);
    for (double v : c.data()) CHECK(v == 3.0);
    GridField x = sample(PolyScalar::variable(3, 0), s);
    for (std::size_t i = 0; i < 9; ++i) CHECK(x.at(i, 2, 3) == -x.at(8 - i, 2, 3));

    std::mt19937_64 rng(3);
    for (int k = 0; k < 5; ++k) {
        PolyScalar f = oracle::random_poly(rng, 1, 4, 5);
        GridField g = sample(f, s);
        for (std::size_t i = 0; i < 9; i += 3) {
            const double p[3] = {s.coord(0, i), s.coord(1, 8 - i), s.coord(2, 4)};
            CHECK(g.at(i, 8 - i, 4) == doctest::Approx(f.evaluate(std::span<const double>(p, 3))));
        }
    }
    // support cutoff
    GridField cut = sample(PolyScalar(3, Rational(1)), s, 0.5);
    CHECK(cut.at(4, 4, 4) == 1.0);
    CHECK(cut.at(0, 0, 0) == 0.0);
}

TEST_CASE("fields are exact on biquadratic samples") {
    const GridSpec s = GridSpec::centered({1, 1.5, 0.5}, {9, 11, 7});
    GridField x1 = sample(PolyScalar::variable(3, 0), s);
    for (auto b : {Boundary::OneSided}) {
        GridField one = apply_field(1, x1, b);
        for (double v : one.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-13));
    }
    std::mt19937_64 rng(5);
    for (int k = 0; k < 10; ++k) {
        PolyScalar f = biquadratic(rng);
        GridField g = sample(f, s);
        for (int j = 1; j <= 3; ++j) {
            GridField exact = sample(heisenberg::apply_field(1, j, f), s);
            CHECK(max_diff(apply_field(j, g, Boundary::OneSided), exact) < 1e-11);
            // zero extension only differs on the faces
            CHECK(max_diff(apply_field(j, g, Boundary::ZeroExtension), exact, interior_mask(s, 1)) < 1e-11);
        }
    }
}

TEST_CASE("discrete operators expand into symmetrized words") {
    std::mt19937_64 rng(6);
    const auto& lap = complex::laplacian(1, 0);
    const auto& d1 = complex::d_c_operator(1, 1);
    for (const auto* op : {&lap.at(0, 0), &d1.at(0, 0), &d1.at(0, 1)}) {
        DiscreteOperator disc(*op);
        CHECK_FALSE(disc.is_zero());
        for (int k = 0; k < 3; ++k) {
            PolyScalar f = oracle::random_poly(rng, 1, 4, 5);
            PolyScalar words(3);
            for (const auto& w : disc.words()) {
                PolyScalar g = f;
                for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) g = heisenberg::apply_field(1, *it, g);
                words += g * Rational(w.coef);
            }
            const double p[3] = {0.3, -0.7, 0.2};
            CHECK(words.evaluate(std::span<const double>(p, 3)) ==
                  doctest::Approx(op->apply(f).evaluate(std::span<const double>(p, 3))));
        }
    }
    CHECK(DiscreteOperator(heisenberg::FieldOperator(1)).is_zero());
}

TEST_CASE("zero extension makes d_c and d_c^* exact discrete adjoints") {
    const GridSpec s = GridSpec::centered({1, 1, 0.5}, {9, 11, 13});
    std::mt19937_64 rng(7);
    for (int h = 0; h < 3; ++h) {
        GridRuminForm a = random_grid_form(rng, h, s);
        GridRuminForm b = random_grid_form(rng, h + 1, s);
        const double lhs = dot(d_c(a, Boundary::ZeroExtension), b);
        const double rhs = dot(a, d_c_star(b, Boundary::ZeroExtension));
        CHECK(std::abs(lhs - rhs) <= 1e-11 * (std::abs(lhs) + 1.0));
    }
    // the Laplacian is symmetric
    for (int h = 0; h <= 3; ++h) {
        GridRuminForm a = random_grid_form(rng, h, s);
        GridRuminForm b = random_grid_form(rng, h, s);
        const auto& lap = complex::laplacian(1, h);
        const double lhs = dot(apply_operator(lap, a, Boundary::ZeroExtension), b);
        const double rhs = dot(a, apply_operator(lap, b, Boundary::ZeroExtension));
        CHECK(std::abs(lhs - rhs) <= 1e-10 * (std::abs(lhs) + 1.0));
    }
}

TEST_CASE("closed polynomial data has zero discrete d_c") {
    const GridSpec s = GridSpec::centered({1, 1, 0.5}, {9, 9, 9});
    PolyRuminForm c = zero_form(1, 1);
    c.coefficients[0] = PolyScalar(3, Rational(2));
    c.coefficients[1] = PolyScalar(3, Rational(-1));
    CHECK(max_abs(d_c(discretize(c, s))) < 1e-10);
    // d_c of a linear function is constant
    GridRuminForm lin = discretize(zero_form(1, 0), s);
    lin.components[0] = sample(PolyScalar::variable(3, 0), s);
    GridRuminForm g = d_c(lin);
    PolyRuminForm x1 = zero_form(1, 0);
    x1.coefficients[0] = PolyScalar::variable(3, 0);
    const PolyRuminForm exact = complex::d_c(x1);
    for (std::size_t k = 0; k < 2; ++k)
        CHECK(max_diff(g.components[k], sample(exact.coefficients[k], s)) < 1e-12);
}

TEST_CASE("grid d_c converges to the symbolic d_c at second order") {
    std::mt19937_64 rng(8);
    const GridSpec coarse = GridSpec::standard(33);
    const GridSpec fine = coarse.refined();
    for (int h : {0, 2}) {
        PolyRuminForm a = bump_form(rng, h);
        PolyRuminForm exact = complex::d_c(a);
        double err[2];
        int i = 0;
        for (const GridSpec* s : {&coarse, &fine}) {
            GridRuminForm g = d_c(discretize(a, *s, 1.0)) - discretize(exact, *s, 1.0);
            err[i++] = max_abs(g);
        }
        const double ratio = err[0] / err[1];
        MESSAGE("h=", h, " grid d_c error ", err[0], " -> ", err[1], " ratio ", ratio);
        CHECK(ratio > 3.0);
        CHECK(ratio < 5.0);
    }
}

TEST_CASE("discrete d_c o d_c vanishes at second order") {
    std::mt19937_64 rng(9);
    const GridSpec coarse = GridSpec::standard(65);
    const GridSpec fine = coarse.refined();
    for (int h : {0, 1}) {
        PolyRuminForm a = bump_form(rng, h);
        double res[2];
        int i = 0;
        for (const GridSpec* s : {&coarse, &fine}) {
            GridRuminForm g = d_c(d_c(discretize(a, *s, 1.0)));
            res[i++] = max_abs(g, interior_mask(*s, 4));
        }
        MESSAGE("h=", h, " d_c^2 residual ", res[0], " -> ", res[1], " ratio ", res[0] / res[1]);
        CHECK(res[0] / res[1] > 3.0);
        CHECK(res[0] / res[1] < 5.0);
    }
}

TEST_CASE("discrete integration by parts") {
    std::mt19937_64 rng(10);
    const GridSpec s = GridSpec::centered({1.5, 1.5, 0.5}, {25, 25, 33});
    for (int h = 0; h <= 2; ++h) {
        GridRuminForm a = discretize(bump_form(rng, h), s, 1.0);
        GridRuminForm phi = discretize(bump_form(rng, 2 - h), s, 1.0);
        const double lhs = integrate_wedge(d_c(a), phi);
        // Stokes sign for alpha of degree h
        const double rhs = (h % 2 == 0 ? -1.0 : 1.0) * integrate_wedge(a, d_c(phi));
        const double scale = norm(a, 2) * norm(phi, 2);
        CHECK(std::abs(lhs - rhs) < 1e-10 * scale);
        CHECK(std::abs(lhs) > 1e-6 * scale);
    }
    GridRuminForm zero = GridRuminForm::zero(build_basis(1, 1), s);
    CHECK(integrate_wedge(zero, discretize(bump_form(rng, 2), s, 1.0)) == 0.0);
    CHECK_THROWS(integrate_wedge(zero, zero));
}

TEST_CASE("closed pairs integrate to zero") {
    std::mt19937_64 rng(11);
    const GridSpec s = GridSpec::centered({1.5, 1.5, 0.5}, {25, 25, 33});
    for (int k = 0; k < 3; ++k) {
        GridRuminForm alpha = discretize(complex::d_c(bump_form(rng, 0)), s, 1.0);
        GridRuminForm omega = discretize(complex::d_c(bump_form(rng, 1)), s, 1.0);
        const double pairing = integrate_wedge(alpha, omega);
        CHECK(std::abs(pairing) < 1e-3 * norm(alpha, 2) * norm(omega, 2));
        // non-closed alpha against the exact omega = d_c * d_c alpha pairs to +-||d_c alpha||^2
        const PolyRuminForm open = bump_form(rng, 1);
        const PolyRuminForm partner =
            complex::d_c(complex::proj_E0(exterior::hodge_star(complex::to_form(complex::d_c(open)))));
        GridRuminForm a2 = discretize(open, s, 1.0);
        GridRuminForm w2 = discretize(partner, s, 1.0);
        CHECK(std::abs(integrate_wedge(a2, w2)) > 1e-2 * norm(a2, 2) * norm(w2, 2));
    }
}

TEST_CASE("norms") {
    const GridSpec s = GridSpec::centered({1, 1, 0.5}, {9, 9, 9});
    GridField zero(s);
    CHECK(norm(zero, 2) == 0.0);
    GridField one = sample(PolyScalar(3, Rational(1)), s);
    const double vol = 2.0 * 2.0 * 1.0 * std::pow(9.0 / 8.0, 3);
    CHECK(norm(one, 1) == doctest::Approx(vol));
    CHECK(norm(one, 2) == doctest::Approx(std::sqrt(vol)));
    CHECK(norm(one, INFINITY) == 1.0);
    CHECK(integrate(one) == doctest::Approx(vol));
    CHECK_THROWS(norm(one, 0.5));

    std::mt19937_64 rng(12);
    GridRuminForm a = discretize(bump_form(rng, 1), s, 1.0);
    for (double p : {1.0, 2.0, 4.0, double(INFINITY)}) {
        CHECK(norm(a * 3.0, p) == doctest::Approx(3.0 * norm(a, p)));
        CHECK(bl_norm(a * -2.0, p) == doctest::Approx(2.0 * bl_norm(a, p)));
    }
    // pointwise length
    GridField len = pointwise_norm(a);
    const std::size_t i = s.index(4, 5, 3);
    CHECK(len[i] == doctest::Approx(std::hypot(a.components[0][i], a.components[1][i])));
    Mask ball = ball_mask(s, 1.0);
    CHECK(ball[s.index(4, 4, 4)] == 1);
    CHECK(ball[s.index(0, 4, 4)] == 0);
    CHECK(norm(a, 2, ball) == doctest::Approx(norm(a, 2)));
}

TEST_CASE("Haar measure: Riemann sums are left invariant") {
    std::mt19937_64 rng(13);
    const GridSpec s = GridSpec::centered({1, 1, 0.375}, {49, 49, 73});
    const PolyScalar f =
        heisenberg::gauge_bump(1, Rational(1, 2), 6) * (oracle::random_poly(rng, 1, 2, 3) + PolyScalar(3, Rational(3)));
    const double base = integrate(sample(f, s, 0.5));
    heisenberg::Point q = heisenberg::Point::identity(1);
    q.x[0] = oracle::frac(1, 3);
    q.y[0] = oracle::frac(-1, 4);
    q.t = oracle::frac(1, 16);
    // f o tau_q vanishes outside the translated ball, which fits inside the box
    const PolyScalar g = heisenberg::left_translate(1, f, q);
    GridField gs(s);
    for (std::size_t i = 0; i < s.count[0]; ++i)
        for (std::size_t j = 0; j < s.count[1]; ++j)
            for (std::size_t k = 0; k < s.count[2]; ++k) {
                const double c[3] = {s.coord(0, i), s.coord(1, j), s.coord(2, k)};
                double qp[3];
                const double qd[3] = {q.x[0].get_d(), q.y[0].get_d(), q.t.get_d()};
                heisenberg::group_mul(qd, c, qp);
                if (heisenberg::koranyi_norm(qp) >= 0.5) continue;
                gs.at(i, j, k) = g.evaluate(std::span<const double>(c, 3));
            }
    MESSAGE("Haar: ", integrate(gs), " vs ", base);
    CHECK(std::abs(integrate(gs) - base) < 1e-4 * std::abs(base));
}

TEST_CASE("interpolation is exact on trilinear functions") {
    const GridSpec s = GridSpec::centered({1, 1, 1}, {5, 7, 9});
    GridField f(s);
    auto lin = [](double x, double y, double t) { return 1 + 2 * x - y + 3 * t + x * y - x * y * t; };
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 7; ++j)
            for (std::size_t k = 0; k < 9; ++k) f.at(i, j, k) = lin(s.coord(0, i), s.coord(1, j), s.coord(2, k));
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int k = 0; k < 20; ++k) {
        const double x = u(rng), y = u(rng), t = u(rng);
        CHECK(interpolate(f, x, y, t) == doctest::Approx(lin(x, y, t)));
    }
    // cubic in t away from the t faces
    auto cub = [](double x, double y, double t) { return (1 + x - 2 * x * y) * (2 - t + 3 * t * t - 4 * t * t * t); };
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 7; ++j)
            for (std::size_t k = 0; k < 9; ++k) f.at(i, j, k) = cub(s.coord(0, i), s.coord(1, j), s.coord(2, k));
    for (int k = 0; k < 20; ++k) {
        const double x = u(rng), y = u(rng), t = 0.7 * u(rng);
        CHECK(interpolate_cubic_t(f, x, y, t) == doctest::Approx(cub(x, y, t)));
    }
    bool outside = false;
    CHECK(interpolate(f, 1.5, 0, 0, &outside) == 0.0);
    CHECK(outside);
}

TEST_CASE("mollifier") {
    const GridSpec s = GridSpec::centered({2, 2, 1}, {33, 33, 33});
    const double eps = 2.0 * s.resolution();
    CHECK(eps == doctest::Approx(1.0));
    GridField j = mollifier(s, eps);
    double mass = 0.0;
    for (double v : j.data()) mass += v;
    CHECK(mass * j.spec().cell_volume() == doctest::Approx(1.0));
    // symmetric under p -> p^{-1}
    const auto& js = j.spec();
    for (std::size_t i = 0; i < js.count[0]; ++i)
        CHECK(j.at(i, 1, 2) == j.at(js.count[0] - 1 - i, js.count[1] - 2, js.count[2] - 3));
    CHECK_THROWS(mollify(sample(PolyScalar(3, Rational(1)), s), 0.5 * s.resolution()));

    // constants are preserved away from the faces
    ConvolutionStats stats;
    GridField c = mollify(sample(PolyScalar(3, Rational(2)), s), eps, &stats);
    // B(e, 1/2) is far enough from the faces that every q^{-1} p stays in the box
    Mask inner = ball_mask(s, 0.5);
    for (std::size_t i = 0; i < c.size(); ++i)
        if (inner[i]) CHECK(c[i] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(stats.clipped_placements > 0);
}

TEST_CASE("convolution commutes with left-invariant fields") {
    std::mt19937_64 rng(15);
    const GridSpec coarse = GridSpec::centered({1.5, 1.5, 0.5}, {33, 33, 33});
    const PolyScalar gp = heisenberg::gauge_bump(1, Rational(1, 2), 6) * oracle::random_poly(rng, 1, 2, 3);
    const PolyScalar fp = heisenberg::gauge_bump(1, Rational(1, 2), 6);
    double err[2];
    int idx = 0;
    for (const GridSpec& s : {coarse, coarse.refined()}) {
        GridField f = sample(fp, s, 0.5);
        GridField g = sample(gp, s, 0.5);
        ConvolutionStats stats;
        GridField fg = group_convolve(f, g, &stats);
        GridField lhs = apply_field(1, fg, Boundary::OneSided);
        GridField rhs = group_convolve(f, apply_field(1, g, Boundary::OneSided));
        err[idx++] = max_diff(lhs, rhs) / rhs.max_abs();
        CHECK(stats.clipped_placements == 0);
    }
    MESSAGE("X(f*g) - f*Xg: ", err[0], " -> ", err[1]);
    CHECK(err[1] < 0.1);
    CHECK(err[0] / err[1] > 3.0);
}

TEST_CASE("grid files round trip") {
    std::mt19937_64 rng(16);
    const GridSpec s = GridSpec::centered({1, 1, 0.5}, {9, 11, 7});
    const auto dir = std::filesystem::temp_directory_path() / "rumin_grid_io";
    std::filesystem::create_directories(dir);
    GridRuminForm a = random_grid_form(rng, 2, s);
    write_form((dir / "a.json").string(), a);
    GridRuminForm b = read_form((dir / "a.json").string());
    CHECK(b.basis == a.basis);
    CHECK(b.spec == a.spec);
    for (std::size_t c = 0; c < 2; ++c) CHECK(b.components[c].data() == a.components[c].data());
    write_field((dir / "f.json").string(), a.components[0]);
    CHECK(read_field((dir / "f.json").string()).data() == a.components[0].data());
    CHECK_THROWS(read_form((dir / "f.json").string()));
    CHECK_THROWS(read_form((dir / "missing.json").string()));
    write_norms_csv((dir / "n.csv").string(), {{"a", &a}});
    std::ifstream csv(dir / "n.csv");
    std::string header, row;
    std::getline(csv, header);
    std::getline(csv, row);
    CHECK(header == "name,degree,nx,ny,nt,L1,L2,L4,Linf,bl_4/3,bl_4");
    CHECK(row.rfind("a,2,9,11,7,", 0) == 0);
    const double l2 = std::stod(row.substr(row.find(',', 11) + 1));
    CHECK(l2 == doctest::Approx(norm(a, 2.0)).epsilon(1e-10));
    std::filesystem::remove_all(dir);
}

TEST_CASE("embedding ratio is dilation invariant") {
    // ||u||_{L^4} / sum_j ||W_j u||_{L^2} is invariant under u -> u o delta_lambda on H^1
    std::mt19937_64 rng(17);
    const GridSpec s = GridSpec::centered({1.5, 1.5, 0.5}, {49, 49, 65});
    const PolyScalar poly = oracle::random_poly(rng, 1, 2, 3) + PolyScalar(3, Rational(3));
    double ratio[2];
    int i = 0;
    for (const Rational& r : {Rational(1), Rational(3, 4)}) {
        const PolyScalar f = heisenberg::gauge_bump(1, r, 6) * poly.dilate(Rational(1) / r);
        GridRuminForm u = GridRuminForm::zero(build_basis(1, 0), s);
        u.components[0] = sample(f, s, r.get_d());
        ratio[i++] = norm(u, 4) / bl_norm(u, 2);
    }
    CHECK(ratio[0] == doctest::Approx(ratio[1]).epsilon(0.02));
}
