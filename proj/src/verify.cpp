#include "rumin/verify.hpp"

#include "rumin/linalg.hpp"

namespace rumin::verify {

using namespace complex;
using exterior::basis_masks;
using exterior::has_theta;

void Check::record(bool ok, const std::string& what) {
    ++cases;
    if (!ok && passed) {
        passed = false;
        detail = "first failure: " + what;
    }
}

PolyScalar random_poly(std::mt19937_64& rng, int n, unsigned max_degree, int terms) {
    const int vars = 2 * n + 1;
    std::uniform_int_distribution<int> num(-5, 5);
    std::uniform_int_distribution<int> den(1, 3);
    std::uniform_int_distribution<unsigned> deg(0, max_degree);
    std::uniform_int_distribution<int> var(0, vars - 1);
    PolyScalar p(vars);
    for (int k = 0; k < terms; ++k) {
        Monomial m;
        const unsigned d = deg(rng);
        for (unsigned i = 0; i < d; ++i) {
            const int v = var(rng);
            m.set(v, m[v] + 1);
        }
        Rational c(num(rng), den(rng));
        c.canonicalize();
        p.add_term(m, c);
    }
    return p;
}

PolyRuminForm random_rumin_form(std::mt19937_64& rng, int n, int h, unsigned max_degree, int terms) {
    PolyRuminForm a = zero_form(n, h);
    for (auto& c : a.coefficients) c = random_poly(rng, n, max_degree, terms);
    return a;
}

PolyForm random_full_form(std::mt19937_64& rng, int n, int h, unsigned max_degree, int terms) {
    PolyForm f(n, h);
    for (Mask m : basis_masks(n, h)) f.add(m, random_poly(rng, n, max_degree, terms));
    return f;
}

std::size_t lefschetz_kernel_dimension(int n, int h) {
    // E_0^h is ker Lambda on horizontal h-covectors for h <= n and theta ^ ker L on
    // horizontal (h-1)-covectors above
    const int k = h <= n ? h : h - 1;
    std::vector<Mask> src;
    for (Mask m : basis_masks(n, k))
        if (!has_theta(n, m)) src.push_back(m);
    const int tk = h <= n ? k - 2 : k + 2;
    if (tk < 0 || tk > 2 * n) return src.size();
    std::vector<Mask> tgt;
    for (Mask m : basis_masks(n, tk))
        if (!has_theta(n, m)) tgt.push_back(m);
    linalg::Matrix mat(tgt.size(), src.size());
    for (std::size_t s = 0; s < src.size(); ++s) {
        const ConstForm e = ConstForm::basis(n, src[s], 1);
        const ConstForm img = h <= n ? exterior::lefschetz_adjoint(e) : exterior::lefschetz(e);
        for (std::size_t r = 0; r < tgt.size(); ++r) mat(r, s) = img.coefficient(tgt[r]);
    }
    return src.size() - linalg::rank(mat);
}

namespace {

std::string where(int n, int h) { return "n=" + std::to_string(n) + " h=" + std::to_string(h); }

PolyRuminForm minus(PolyRuminForm a, const PolyRuminForm& b) {
    for (std::size_t i = 0; i < a.coefficients.size(); ++i) a.coefficients[i] -= b.coefficients[i];
    return a;
}

}  // namespace

Check chain_property(int n, std::size_t samples, unsigned max_degree, std::uint64_t seed) {
    Check c{"d_c o d_c = 0, n=" + std::to_string(n), true, 0, {}};
    std::mt19937_64 rng(seed);
    for (int h = 0; h + 2 <= 2 * n + 1; ++h)
        for (std::size_t s = 0; s < samples; ++s) {
            const PolyRuminForm a = random_rumin_form(rng, n, h, max_degree);
            c.record(d_c(d_c(a)).is_zero(), where(n, h));
        }
    return c;
}

Check star_identities(int n, std::size_t samples, unsigned max_degree, std::uint64_t seed) {
    Check c{"star and adjoint identities, n=" + std::to_string(n), true, 0, {}};
    std::mt19937_64 rng(seed);
    for (int h = 0; h <= 2 * n + 1; ++h) {
        for (std::size_t s = 0; s < samples; ++s) {
            const PolyForm a = random_full_form(rng, n, h, max_degree);
            c.record(exterior::hodge_star(exterior::hodge_star(a)) == a, "** " + where(n, h));
        }
        if (h >= 1) {
            // (-1)^h * d_c * (the pipeline) against the formal adjoint of the extracted d_c
            const LeftInvariantOperator adjoint = d_c_operator(n, h - 1).formal_adjoint();
            for (std::size_t s = 0; s < samples; ++s) {
                const PolyRuminForm a = random_rumin_form(rng, n, h, max_degree);
                c.record(d_c_star(a) == adjoint.apply(a), "d_c^* " + where(n, h));
            }
        }
        const RuminBasis& b = build_basis(n, h);
        const RuminBasis& dual = build_basis(n, 2 * n + 1 - h);
        c.record(b.dim() == dual.dim(), "dual dimension " + where(n, h));
        for (std::size_t i = 0; i < b.dim() && i < dual.dim(); ++i) {
            const ConstForm s = exterior::hodge_star(b.elements[i]);
            c.record(s == dual.elements[i] && project_E0(s) == s, "basis star " + where(n, h));
        }
    }
    return c;
}

Check proj_E_contract(int n, std::size_t samples, unsigned max_degree, std::uint64_t seed) {
    Check c{"Pi_E contract, n=" + std::to_string(n), true, 0, {}};
    std::mt19937_64 rng(seed);
    for (int h = 0; h <= 2 * n + 1; ++h)
        for (std::size_t s = 0; s < samples; ++s) {
            const PolyForm a = random_full_form(rng, n, h, max_degree);
            const PolyForm pa = proj_E(a);
            if (h < 2 * n + 1) c.record(exterior::de_rham_d(pa) == proj_E(exterior::de_rham_d(a)), "d Pi_E " + where(n, h));
            const PolyForm a0 = project_E0(a);
            c.record(project_E0(proj_E(a0)) == a0, "Pi_E0 Pi_E Pi_E0 " + where(n, h));
            c.record(proj_E(project_E0(pa)) == pa, "Pi_E Pi_E0 Pi_E " + where(n, h));
        }
    return c;
}

Check basis_dimensions(int n) {
    Check c{"E_0 dimensions, n=" + std::to_string(n), true, 0, {}};
    for (int h = 0; h <= 2 * n + 1; ++h) {
        const std::size_t d = build_basis(n, h).dim();
        c.record(d == lefschetz_kernel_dimension(n, h), where(n, h));
        c.record(d == build_basis(n, 2 * n + 1 - h).dim(), "duality " + where(n, h));
    }
    if (n == 1) {
        std::vector<std::size_t> profile;
        for (int h = 0; h <= 3; ++h) profile.push_back(build_basis(1, h).dim());
        c.record(profile == std::vector<std::size_t>{1, 2, 2, 1}, "profile (1,2,2,1)");
    }
    return c;
}

Check leibniz_structure(int n, std::size_t samples, std::uint64_t seed) {
    Check c{"Leibniz structure, n=" + std::to_string(n), true, 0, {}};
    std::mt19937_64 rng(seed);
    for (int h = 0; h <= 2 * n; ++h)
        for (std::size_t s = 0; s < samples; ++s) {
            const PolyScalar zeta = random_poly(rng, n, 3, 3);
            const PolyScalar u = random_poly(rng, n, 2, 3);
            const PolyRuminForm a = random_rumin_form(rng, n, h, 2);
            if (h != n) {
                c.record(commutator_action(zeta, multiply(u, a)) == multiply(u, commutator_action(zeta, a)), where(n, h));
            } else {
                auto twice = [&](const PolyRuminForm& b) {
                    return minus(commutator_action(zeta, multiply(u, b)), multiply(u, commutator_action(zeta, b)));
                };
                const PolyScalar v = random_poly(rng, n, 2, 2);
                c.record(twice(multiply(v, a)) == multiply(v, twice(a)), where(n, h));
            }
        }
    return c;
}

Check laplacian_commutation(int n) {
    Check c{"d_c and Laplacian commutation, n=" + std::to_string(n), true, 0, {}};
    auto d = [n](int h) -> const LeftInvariantOperator& { return d_c_operator(n, h); };
    auto ds = [n](int h) -> const LeftInvariantOperator& { return d_c_star_operator(n, h); };
    auto lap = [n](int h) -> const LeftInvariantOperator& { return laplacian(n, h); };
    for (int h = 0; h <= 2 * n; ++h) {
        if (h == n - 1 || h == n + 1) continue;
        c.record(d(h) * lap(h) == lap(h + 1) * d(h), "i) " + where(n, h));
    }
    c.record(d(n - 1) * ds(n) * d(n - 1) * lap(n - 1) == lap(n) * d(n - 1), "ii)");
    c.record(d(n + 1) * lap(n + 1) == d(n + 1) * ds(n + 2) * lap(n + 2) * d(n + 1), "iii)");
    c.record(d(n - 1) * ds(n) * lap(n) == lap(n) * d(n - 1) * ds(n), "iv)");
    return c;
}

Check dilation_homogeneity(int n, std::size_t samples, unsigned max_degree, std::uint64_t seed) {
    Check c{"dilation homogeneity, n=" + std::to_string(n), true, 0, {}};
    std::mt19937_64 rng(seed);
    const Rational lambda(3, 2);
    for (int h = 0; h <= 2 * n; ++h) {
        const int w = d_c_weight(n, h);
        c.record(d_c_operator(n, h).weight() == w, "operator weight " + where(n, h));
        const Rational factor = pow(lambda, static_cast<unsigned>(w));
        for (std::size_t s = 0; s < samples; ++s) {
            const PolyRuminForm a = random_rumin_form(rng, n, h, max_degree);
            PolyRuminForm sub = a;
            for (auto& k : sub.coefficients) k = k.dilate(lambda);
            PolyRuminForm rhs = d_c(a);
            for (auto& k : rhs.coefficients) k = k.dilate(lambda) * factor;
            c.record(d_c(sub) == rhs, where(n, h));
        }
    }
    return c;
}

}  // namespace rumin::verify
