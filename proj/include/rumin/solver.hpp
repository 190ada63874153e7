#pragma once

#include "rumin/grid.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

/// Primitives of d_c-exact forms on H^1 grids: the averaged cone homotopy K and the global
/// route phi = d_c^* Delta^{-1} omega.
namespace rumin::solver {

using grid::Boundary;
using grid::GridField;
using grid::GridRuminForm;
using grid::GridSpec;
using grid::Mask;

/// Kernel of type mu on H^n: homogeneous of degree mu - Q away from the identity.
struct KernelSpec {
    int n = 1;
    double mu = 0.0;
    std::function<double(std::span<const double>)> evaluate;

    /// Largest relative defect |K(delta_r p) - r^{mu-Q} K(p)| / |r^{mu-Q} K(p)| over random
    /// p (gauge in [1/4, 4]) and r in [1/8, 8].
    double homogeneity_defect(std::uint64_t seed, int samples) const;
};
/// rho^{2-Q}, the fundamental solution of the sub-Laplacian up to its constant (type 2).
KernelSpec fundamental_solution_kernel(int n);
/// W_j rho^{2-Q} for a horizontal field (type 1).
KernelSpec horizontal_derivative_kernel(int n, int j);

/// max |Delta_0 u| / max |X^2 u| over the annulus r_in < rho < r_out for u = rho^{2-Q}
/// sampled on the lattice (one-sided stencils; the annulus must avoid the faces).
double fundamental_solution_residual(const GridSpec& spec, double r_in, double r_out);

// ---------------------------------------------------------------------------
// Laplacian inverse

struct LaplacianOptions {
    double tol = 1e-6;              // relative residual ||Delta u - alpha||_2 / ||alpha||_2
    std::size_t max_iter = 4;       // refinement sweeps (each sweep is one exact mode solve)
    std::size_t cache_bytes = 1ull << 30;  // keep factorizations below this estimate
    double padding = 1.0;           // x and y half-widths of the solve box, relative to the input box
};

struct LaplacianStats {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Zero-Dirichlet inverse of the discrete Delta_{H,h} on a box (n = 1). The discrete Laplacian
/// is the composition of the zero-extension realizations of d_c and d_c^*, so it is symmetric
/// positive definite. The t-axis is diagonalized exactly (sine modes of the zero-extension
/// central difference); each mode is a sparse Hermitian system in (x, y) solved by sparse
/// Cholesky (CHOLMOD). The solve box is the input box with x, y half-widths scaled by
/// `padding` at the same step; if the t count is odd, one zero layer is appended on the +t
/// side so that no mode is singular.
class LaplacianInverse {
public:
    LaplacianInverse(const GridSpec& spec, int h, LaplacianOptions options = {});
    ~LaplacianInverse();
    LaplacianInverse(const LaplacianInverse&) = delete;
    LaplacianInverse& operator=(const LaplacianInverse&) = delete;

    int degree() const;
    const GridSpec& spec() const;
    /// Lattice the solve runs on (padded, even t count).
    const GridSpec& solver_spec() const;

    GridRuminForm solve(const GridRuminForm& alpha, LaplacianStats* stats = nullptr) const;
    std::vector<GridRuminForm> solve(const std::vector<GridRuminForm>& alpha,
                                     std::vector<LaplacianStats>* stats = nullptr) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// The discrete Laplacian used by the solver, applied matrix-free.
GridRuminForm apply_laplacian(const GridRuminForm& u);

GridRuminForm laplacian_inverse(const GridRuminForm& alpha, LaplacianOptions options = {},
                                LaplacianStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Homotopy

struct HomotopyOptions {
    double radius = 1.0;           // B = B(e, radius): where K omega is returned
    double lambda = 2.0;           // B_lambda, intersected with the box, for the closedness check
    double weight_fraction = 0.5;  // base points weighted by a bump on B(e, fraction * radius)
    unsigned weight_power = 4;
    double closed_tol = 0.1;       // see closedness(); checked only if check_closed
    bool check_closed = true;
};

struct HomotopyStats {
    double closedness = 0.0;
    std::size_t base_points = 0;
    std::size_t output_points = 0;
};

/// Relative discrete closedness on U = B(e, radius) away from the faces:
/// ||d_c omega||_{L^2(U)} divided by the L^2(U) size of all horizontal derivatives of omega of
/// the order of d_c (W_j omega, or W_j W_k omega in degree n). Scale invariant; zero for
/// top-degree forms. For sampled exact forms it is O(mesh^2), not zero.
double closedness(const GridRuminForm& omega, double radius);

/// K = Pi_E0 Pi_E K_Euc Pi_E with K_Euc the cone homotopy averaged over base points in
/// B(e, fraction * radius). K_Euc uses 16-point Gauss-Legendre in the cone parameter and a
/// lattice sum over base points; off-lattice values are interpolated by four-point Lagrange
/// stencils on each axis, separably. The result is computed on the bounding box of
/// B(e, radius) plus a margin of four cells and is zero elsewhere.
GridRuminForm il_homotopy(const GridRuminForm& omega, const HomotopyOptions& options = {},
                          HomotopyStats* stats = nullptr);

/// Cone homotopy of a single coordinate-basis h-form field set (exposed for tests): components
/// follow exterior::basis_masks(1, h) with the theta slot read as dt. Returns the coordinate
/// (h-1)-form, averaged over the given base points and weights, on the whole lattice.
std::vector<GridField> cone_homotopy(const std::vector<GridField>& beta, int h,
                                     const std::vector<std::array<double, 3>>& base_points,
                                     const std::vector<double>& weights);

// ---------------------------------------------------------------------------
// Primitive

enum class Method { Homotopy, Laplacian };
std::string to_string(Method m);
Method parse_method(const std::string& s);

struct SolveOptions {
    Method method = Method::Homotopy;
    HomotopyOptions homotopy;
    LaplacianOptions laplacian;
};

struct SolveReport {
    std::string method;
    int degree = 0;
    double residual_LQ = 0.0;       // ||d_c phi - omega||_{L^Q} / ||omega||_{L^Q}
    double residual_L2 = 0.0;
    double natural_exponent = 0.0;  // Q, or Q/2 in degree n+1
    double residual_natural = 0.0;
    double closedness = 0.0;
    double laplacian_residual = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
    GridSpec mesh;
    double seconds = 0.0;
    std::string message;
};

/// Region where reconstruction residuals are measured: B(e, radius) for the homotopy, the
/// interior at four cells from the faces for the Laplacian route.
Mask residual_region(const GridSpec& spec, Method method, double radius);

/// Residual norms of d_c phi - omega on `region`.
void fill_residuals(const GridRuminForm& phi, const GridRuminForm& omega, const Mask& region, SolveReport& report);

std::pair<GridRuminForm, SolveReport> solve_primitive(const GridRuminForm& omega, const SolveOptions& options = {});
/// The Laplacian route with a prepared inverse for degree omega.degree() (reused across trials).
std::pair<GridRuminForm, SolveReport> solve_primitive(const GridRuminForm& omega, const LaplacianInverse& inverse);

// ---------------------------------------------------------------------------
// Commutation with Delta^{-1}

struct CommutationReport {
    int degree = 0;
    std::string identity;
    double lhs_norm = 0.0;
    double rhs_norm = 0.0;
    double relative_difference = 0.0;  // ||lhs - rhs||_2 / ||lhs||_2 on the region
};

/// Gauge ball centered at the identity with half the radius of the largest one inside the box,
/// minus four cells at the faces.
Mask commutation_region(const GridSpec& spec);

/// Evaluates both sides numerically on commutation_region (zero-Dirichlet inverses on a box
/// differ from the whole-space ones by boundary layers; the region stays away from them):
///  h = 1: d_c Delta_1^{-1} alpha            vs  Delta_2^{-1} d_c alpha
///  h = 0: d_c Delta_0^{-1} alpha            vs  d_c d_c^* Delta_1^{-1} d_c alpha
/// (h = 0 is an excluded degree for the first form on H^1; the second one holds there).
CommutationReport commutation_check(const GridRuminForm& alpha, LaplacianOptions options = {});

}  // namespace rumin::solver
