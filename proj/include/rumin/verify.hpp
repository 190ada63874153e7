#pragma once

#include "rumin/rumin.hpp"

#include <cstdint>
#include <random>
#include <string>

/// Exact algebraic self-checks of the symbolic Rumin complex on random polynomial forms.
/// Each check reports how many cases it ran and the first failure, if any.
namespace rumin::verify {

using complex::PolyRuminForm;
using exterior::PolyForm;

struct Check {
    std::string name;
    bool passed = true;
    std::size_t cases = 0;
    std::string detail;

    void record(bool ok, const std::string& what);
};

/// Random polynomial in 2n+1 variables: `terms` monomials of total degree <= max_degree with
/// small rational coefficients.
PolyScalar random_poly(std::mt19937_64& rng, int n, unsigned max_degree, int terms);
PolyRuminForm random_rumin_form(std::mt19937_64& rng, int n, int h, unsigned max_degree, int terms = 3);
PolyForm random_full_form(std::mt19937_64& rng, int n, int h, unsigned max_degree, int terms = 2);

/// dim of ker Lambda (h <= n) or ker L (h > n) on horizontal covectors, by exact rank.
std::size_t lefschetz_kernel_dimension(int n, int h);

/// d_c o d_c = 0 on `samples` random forms per degree.
Check chain_property(int n, std::size_t samples, unsigned max_degree, std::uint64_t seed);
/// ** = Id, d_c^* = (-1)^h * d_c * against the formal adjoint of d_c, and * E_0^h = E_0^{2n+1-h}
/// element by element.
Check star_identities(int n, std::size_t samples, unsigned max_degree, std::uint64_t seed);
/// d Pi_E = Pi_E d, Pi_E0 Pi_E Pi_E0 = Pi_E0 and Pi_E Pi_E0 Pi_E = Pi_E.
Check proj_E_contract(int n, std::size_t samples, unsigned max_degree, std::uint64_t seed);
/// dim E_0^h against lefschetz_kernel_dimension and the duality h <-> 2n+1-h.
Check basis_dimensions(int n);
/// For h != n, [d_c, zeta](u alpha) = u [d_c, zeta] alpha; for h = n, [[d_c, zeta], u] is
/// multiplication by a function matrix.
Check leibniz_structure(int n, std::size_t samples, std::uint64_t seed);
/// The four commutation identities between d_c, d_c^* and the Laplacians, as operator
/// identities (see the README for the index convention of the middle-degree ones).
Check laplacian_commutation(int n);
/// d_c(a o delta_lambda) = lambda^w (d_c a) o delta_lambda coefficient-wise, with w = 1 off the
/// middle degree and w = 2 at h = n, and the same weight read off the operator matrix.
Check dilation_homogeneity(int n, std::size_t samples, unsigned max_degree, std::uint64_t seed);

}  // namespace rumin::verify
