#pragma once

#include "rumin/heisenberg.hpp"
#include "rumin/poly.hpp"
#include "rumin/rumin.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

/// Floating-point realization of scalars and Rumin forms of H^1 on a uniform (x, y, t)
/// lattice. Samples are stored row-major in (x, y, t), t fastest.
namespace rumin::grid {

using complex::PolyRuminForm;
using complex::RuminBasis;

/// How difference stencils treat the edge of the lattice.
///  - OneSided: second-order one-sided stencils at the boundary (default).
///  - ZeroExtension: samples outside the lattice are zero, so every difference operator is
///    exactly skew-adjoint. The solver works in this mode (zero Dirichlet data).
enum class Boundary { OneSided, ZeroExtension };

struct GridSpec {
    int n = 1;
    std::array<double, 3> lower{};
    std::array<double, 3> step{};
    std::array<std::size_t, 3> count{};

    /// Lattice centered at the identity with the given half-widths; counts must be odd.
    static GridSpec centered(const std::array<double, 3>& half_widths, const std::array<std::size_t, 3>& points);
    /// The default experiment lattice: half-widths (2, 2, 1/2) with `points` samples per axis.
    static GridSpec standard(std::size_t points = 65);

    std::size_t size() const { return count[0] * count[1] * count[2]; }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
        return (i * count[1] + j) * count[2] + k;
    }
    double coord(int axis, std::size_t i) const { return lower[axis] + static_cast<double>(i) * step[axis]; }
    double cell_volume() const { return step[0] * step[1] * step[2]; }
    /// Gauge size of one cell, max(h_x, h_y, 2 sqrt(h_t)).
    double resolution() const;
    /// Same box, mesh halved (2N-1 points per axis).
    GridSpec refined() const;

    /// Throws unless n = 1, every axis has >= 5 points and the steps are positive.
    void validate() const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

class GridField {
public:
    GridField() = default;
    explicit GridField(const GridSpec& spec) : spec_(spec), data_(spec.size(), 0.0) {}
    GridField(const GridSpec& spec, std::vector<double> data);

    const GridSpec& spec() const { return spec_; }
    std::size_t size() const { return data_.size(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) { return data_[spec_.index(i, j, k)]; }
    double at(std::size_t i, std::size_t j, std::size_t k) const { return data_[spec_.index(i, j, k)]; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    GridField& operator+=(const GridField& other);
    GridField& operator-=(const GridField& other);
    GridField& operator*=(double s);
    friend GridField operator+(GridField a, const GridField& b) { return a += b; }
    friend GridField operator-(GridField a, const GridField& b) { return a -= b; }
    friend GridField operator*(GridField a, double s) { return a *= s; }
    friend GridField operator*(double s, GridField a) { return a *= s; }

    /// this += s * other
    void axpy(double s, const GridField& other);
    double max_abs() const;

private:
    GridSpec spec_;
    std::vector<double> data_;
};

struct GridRuminForm {
    const RuminBasis* basis = nullptr;
    GridSpec spec;
    std::vector<GridField> components;

    int degree() const { return basis->h; }
    static GridRuminForm zero(const RuminBasis& basis, const GridSpec& spec);

    GridRuminForm& operator+=(const GridRuminForm& other);
    GridRuminForm& operator-=(const GridRuminForm& other);
    GridRuminForm& operator*=(double s);
    friend GridRuminForm operator+(GridRuminForm a, const GridRuminForm& b) { return a += b; }
    friend GridRuminForm operator-(GridRuminForm a, const GridRuminForm& b) { return a -= b; }
    friend GridRuminForm operator*(GridRuminForm a, double s) { return a *= s; }
    friend GridRuminForm operator*(double s, GridRuminForm a) { return a *= s; }
};

/// 0/1 sample mask; an empty mask means "everywhere".
using Mask = std::vector<std::uint8_t>;
/// Points at index distance >= margin from every face of the lattice.
Mask interior_mask(const GridSpec& spec, std::size_t margin);
/// Points with Koranyi gauge < radius.
Mask ball_mask(const GridSpec& spec, double radius);
Mask intersect(const Mask& a, const Mask& b);

/// Polynomial flattened for fast floating-point evaluation on lattices.
class CompiledPoly {
public:
    explicit CompiledPoly(const PolyScalar& p);
    double operator()(double x, double y, double t) const;

private:
    struct Term {
        std::array<unsigned, 3> exps;
        double coef;
    };
    std::vector<Term> terms_;
    std::array<unsigned, 3> max_exp_{};
};

/// Samples a polynomial. With support_radius > 0 the samples outside the gauge ball of that
/// radius are set to zero (used for polynomial-times-bump data that vanishes there).
GridField discretize(const PolyScalar& f, const GridSpec& spec, double support_radius = 0.0);
GridRuminForm discretize(const PolyRuminForm& a, const GridSpec& spec, double support_radius = 0.0);

/// Central difference along an axis (0 = x, 1 = y, 2 = t).
GridField difference(const GridField& u, int axis, Boundary boundary);
/// Discrete left-invariant field W_j (1-based): X = D_x - y/2 D_t, Y = D_y + x/2 D_t, T = D_t.
GridField apply_field(int j, const GridField& u, Boundary boundary);

/// Discrete realization of a polynomial in the fields. The operator is expanded in the
/// symmetrized basis and each sym(I) is the average of its letter orderings applied with
/// discrete fields. With ZeroExtension this makes the discrete adjoint of the realization of
/// P exactly the realization of the formal adjoint P^*.
class DiscreteOperator {
public:
    DiscreteOperator() = default;
    explicit DiscreteOperator(const heisenberg::FieldOperator& op);

    bool is_zero() const { return words_.empty(); }
    /// `cache` memoizes word suffixes applied to the same input field.
    GridField apply(const GridField& u, Boundary boundary, std::map<std::vector<int>, GridField>& cache) const;
    GridField apply(const GridField& u, Boundary boundary) const;

    struct Word {
        double coef;
        std::vector<int> letters;  // leftmost first; the rightmost letter acts first
    };
    const std::vector<Word>& words() const { return words_; }

private:
    std::vector<Word> words_;
};

/// Grid realization of a left-invariant operator matrix.
class DiscreteMatrix {
public:
    DiscreteMatrix() = default;
    explicit DiscreteMatrix(const complex::LeftInvariantOperator& op);

    const complex::LeftInvariantOperator& symbolic() const { return *op_; }
    GridRuminForm apply(const GridRuminForm& a, Boundary boundary) const;
    const DiscreteOperator& entry(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

private:
    const complex::LeftInvariantOperator* op_ = nullptr;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<DiscreteOperator> entries_;
};

/// Grid realization of a rectangular matrix of field operators (row-major entries) acting on
/// vectors of fields, e.g. Pi_E on full forms.
class DiscreteBlock {
public:
    DiscreteBlock() = default;
    DiscreteBlock(std::size_t rows, std::size_t cols, const std::vector<heisenberg::FieldOperator>& entries);

    std::vector<GridField> apply(const std::vector<GridField>& in, Boundary boundary) const;
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<DiscreteOperator> entries_;
};

GridRuminForm apply_operator(const complex::LeftInvariantOperator& op, const GridRuminForm& a,
                             Boundary boundary = Boundary::OneSided);
/// Discrete d_c and d_c^* on E_0^h (cached realizations of the symbolic matrices).
GridRuminForm d_c(const GridRuminForm& a, Boundary boundary = Boundary::OneSided);
GridRuminForm d_c_star(const GridRuminForm& a, Boundary boundary = Boundary::OneSided);

/// Pointwise length |a|(p) with respect to the (orthogonal) basis norms.
GridField pointwise_norm(const GridRuminForm& a);
/// Riemann-sum L^p norm; p = infinity gives the max norm. `mask` restricts the domain.
double norm(const GridField& u, double p, const Mask& mask = {});
double norm(const GridRuminForm& a, double p, const Mask& mask = {});
/// Beppo Levi norm sum_j ||W_j a||_p over the horizontal fields.
double bl_norm(const GridRuminForm& a, double p, const Mask& mask = {}, Boundary boundary = Boundary::OneSided);
double integrate(const GridField& u, const Mask& mask = {});

/// Riemann sum of the top coefficient of alpha ^ phi.
double integrate_wedge(const GridRuminForm& alpha, const GridRuminForm& phi);

/// Interpolation stencil along one axis: `width` consecutive samples from `first`.
struct AxisStencil {
    std::size_t first = 0;
    int width = 0;
    double w[4] = {0, 0, 0, 0};
};
/// Linear (two-point) or four-point Lagrange stencil at coordinate v; cubic falls back to
/// linear in the outermost cells. Returns false outside the lattice.
bool axis_stencil(const GridSpec& spec, int axis, double v, bool cubic, AxisStencil& out);

/// Trilinear interpolation; returns 0 and sets `outside` for points beyond the lattice.
double interpolate(const GridField& u, double x, double y, double t, bool* outside = nullptr);
/// Linear in x and y, four-point Lagrange in t (falls back to linear next to the t faces).
double interpolate_cubic_t(const GridField& u, double x, double y, double t, bool* outside = nullptr);

struct ConvolutionStats {
    // samples q of f whose translate q . supp(g) leaves the output lattice (result truncated there)
    std::size_t clipped_placements = 0;
};

/// (f * g)(p) = sum_q f(q) g(q^{-1} p) |cell|, q over the nonzero samples of f, g interpolated
/// on its own lattice with interpolate_cubic_t (zero outside it). The result lives on f's lattice.
GridField group_convolve(const GridField& f, const GridField& g, ConvolutionStats* stats = nullptr);

/// Sampled mollifier J_eps = eps^{-Q} J o delta_{1/eps}, J = c (1 - rho^4)^4 on the unit
/// gauge ball, normalized so that the discrete sum is one. Sampled on the lattice offsets of
/// `spec` (same steps, centered at the identity).
GridField mollifier(const GridSpec& spec, double eps);
/// J_eps * a componentwise (the kernel on the left, so left-invariant operators commute
/// with it). Requires eps >= 2 * spec.resolution().
GridRuminForm mollify(const GridRuminForm& a, double eps, ConvolutionStats* stats = nullptr);
GridField mollify(const GridField& u, double eps, ConvolutionStats* stats = nullptr);

/// Binary + JSON serialization: `<path>` is the JSON header and `<path>.bin` the raw
/// little-endian float64 samples, components concatenated.
void write_form(const std::string& path, const GridRuminForm& a);
GridRuminForm read_form(const std::string& path);

/// One CSV row per form: name, degree, lattice counts, L^1, L^2, L^4, sup and Beppo Levi
/// (p = 4/3, 4) norms.
struct NamedForm {
    std::string name;
    const GridRuminForm* form = nullptr;
};
void write_norms_csv(const std::string& path, const std::vector<NamedForm>& forms);
void write_field(const std::string& path, const GridField& u);
GridField read_field(const std::string& path);

}  // namespace rumin::grid
