#include "rumin/solver.hpp"

#include "rumin/exterior.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/CholmodSupport>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>

namespace rumin::solver {

namespace {

using Cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<Cplx>;
using Vec = Eigen::VectorXcd;
using Factor = Eigen::CholmodSupernodalLLT<SpMat, Eigen::Lower>;
using complex::RuminBasis;
using exterior::basis_masks;
using ExtMask = exterior::Mask;

constexpr int kN = 1;

void require_h1(const GridSpec& spec) {
    spec.validate();
    if (spec.n != 1) throw std::invalid_argument("the solver is implemented for n = 1 only");
}

double sq_norm(const GridRuminForm& a, const Mask& mask = {}) {
    double acc = 0.0;
    for (const auto& c : a.components)
        for (std::size_t i = 0; i < c.size(); ++i)
            if (mask.empty() || mask[i]) acc += c[i] * c[i];
    return acc;
}

}  // namespace

// ---------------------------------------------------------------------------
// Kernels

double KernelSpec::homogeneity_defect(std::uint64_t seed, int samples) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::uniform_real_distribution<double> log_gauge(std::log(0.25), std::log(4.0));
    std::uniform_real_distribution<double> log_r(std::log(0.125), std::log(8.0));
    const int dim = 2 * n + 1;
    const double Q = heisenberg::homogeneous_dimension(n);
    double worst = 0.0;
    std::vector<double> p(dim), q(dim);
    for (int s = 0; s < samples; ++s) {
        for (auto& v : p) v = coord(rng);
        const double rho = heisenberg::koranyi_norm(std::span<const double>(p));
        if (rho < 1e-6) continue;
        // rescale to the requested gauge
        const double lam = std::exp(log_gauge(rng)) / rho;
        for (int i = 0; i < 2 * n; ++i) p[i] *= lam;
        p[2 * n] *= lam * lam;
        const double r = std::exp(log_r(rng));
        for (int i = 0; i < 2 * n; ++i) q[i] = r * p[i];
        q[2 * n] = r * r * p[2 * n];
        const double expected = std::pow(r, mu - Q) * evaluate(p);
        const double got = evaluate(q);
        const double scale = std::abs(expected);
        if (scale < 1e-300) {
            worst = std::max(worst, std::abs(got) > 1e-300 ? 1.0 : 0.0);
            continue;
        }
        worst = std::max(worst, std::abs(got - expected) / scale);
    }
    return worst;
}

KernelSpec fundamental_solution_kernel(int n) {
    const double Q = heisenberg::homogeneous_dimension(n);
    KernelSpec k;
    k.n = n;
    k.mu = 2.0;
    k.evaluate = [Q](std::span<const double> p) { return std::pow(heisenberg::koranyi_norm(p), 2.0 - Q); };
    return k;
}

KernelSpec horizontal_derivative_kernel(int n, int j) {
    if (j < 1 || j > 2 * n) throw std::out_of_range("horizontal field index out of range");
    const double Q = heisenberg::homogeneous_dimension(n);
    KernelSpec k;
    k.n = n;
    k.mu = 1.0;
    k.evaluate = [n, j, Q](std::span<const double> p) {
        double z2 = 0.0;
        for (int i = 0; i < 2 * n; ++i) z2 += p[i] * p[i];
        const double t = p[2 * n];
        const double r4 = z2 * z2 + 16.0 * t * t;
        // W_j rho^4: X_i -> 4|z|^2 x_i - 16 y_i t, Y_i -> 4|z|^2 y_i + 16 x_i t
        const int i = (j - 1) % n;
        const double x = p[i], y = p[n + i];
        const double w = j <= n ? 4.0 * z2 * x - 16.0 * y * t : 4.0 * z2 * y + 16.0 * x * t;
        const double e = (2.0 - Q) / 4.0;
        return e * std::pow(r4, e - 1.0) * w;
    };
    return k;
}

double fundamental_solution_residual(const GridSpec& spec, double r_in, double r_out) {
    require_h1(spec);
    if (!(r_in > 0.0 && r_out > r_in)) throw std::invalid_argument("annulus radii must satisfy 0 < r_in < r_out");
    GridField u(spec);
    for (std::size_t i = 0; i < spec.count[0]; ++i)
        for (std::size_t j = 0; j < spec.count[1]; ++j)
            for (std::size_t k = 0; k < spec.count[2]; ++k) {
                const double p[3] = {spec.coord(0, i), spec.coord(1, j), spec.coord(2, k)};
                const double rho = heisenberg::koranyi_norm(std::span<const double>(p, 3));
                u.at(i, j, k) = rho > 0.0 ? 1.0 / (rho * rho) : 0.0;
            }
    const GridField xx = grid::apply_field(1, grid::apply_field(1, u, Boundary::OneSided), Boundary::OneSided);
    const GridField yy = grid::apply_field(2, grid::apply_field(2, u, Boundary::OneSided), Boundary::OneSided);
    Mask annulus = grid::ball_mask(spec, r_out);
    const Mask inner = grid::ball_mask(spec, r_in);
    for (std::size_t i = 0; i < annulus.size(); ++i) annulus[i] = annulus[i] && !inner[i];
    annulus = grid::intersect(annulus, grid::interior_mask(spec, 2));
    double lap = 0.0, second = 0.0;
    for (std::size_t i = 0; i < annulus.size(); ++i) {
        if (!annulus[i]) continue;
        lap = std::max(lap, std::abs(xx[i] + yy[i]));
        second = std::max(second, std::abs(xx[i]));
    }
    if (second == 0.0) throw std::invalid_argument("annulus contains no interior lattice points");
    return lap / second;
}

// ---------------------------------------------------------------------------
// Laplacian

GridRuminForm apply_laplacian(const GridRuminForm& u) {
    require_h1(u.spec);
    const int h = u.degree();
    const auto ze = Boundary::ZeroExtension;
    GridRuminForm out = GridRuminForm::zero(*u.basis, u.spec);
    if (h >= 1) {
        GridRuminForm down = grid::d_c(grid::d_c_star(u, ze), ze);
        if (h == kN) down = grid::d_c(grid::d_c_star(down, ze), ze);
        out += down;
    }
    if (h <= 2 * kN) {
        GridRuminForm up = grid::d_c_star(grid::d_c(u, ze), ze);
        if (h == kN + 1) up = grid::d_c_star(grid::d_c(up, ze), ze);
        out += up;
    }
    return out;
}

struct LaplacianInverse::Impl {
    GridSpec spec;
    GridSpec sspec;
    int h = 0;
    LaplacianOptions options;
    const RuminBasis* basis = nullptr;
    std::size_t nx = 0, ny = 0, nt = 0, M = 0, dim = 0, modes = 0;
    std::vector<double> mu;
    std::vector<double> sines;  // sines[(j - 1) * modes + (k - 1)] = sin(j k pi / (nt + 1))
    SpMat Dx, Dy, Xc, Yc;
    grid::DiscreteMatrix down, up;
    bool has_down = false, has_up = false;

    mutable std::mutex mutex;
    mutable std::vector<std::unique_ptr<Factor>> factors;
    mutable int cache_state = -1;  // -1 undecided, 0 refactor every pass, 1 keep all

    SpMat realize(const grid::DiscreteOperator& op, double m) const {
        const SpMat X = Dx - Cplx(0.0, 0.5 * m) * Yc;
        const SpMat Y = Dy + Cplx(0.0, 0.5 * m) * Xc;
        SpMat acc(M, M);
        for (const auto& w : op.words()) {
            Cplx scalar = w.coef;
            SpMat prod;
            bool started = false;
            for (int letter : w.letters) {
                if (letter == 3) {
                    scalar *= Cplx(0.0, m);
                    continue;
                }
                const SpMat& L = letter == 1 ? X : Y;
                if (!started) {
                    prod = L;
                    started = true;
                } else {
                    prod = SpMat(prod * L);
                }
            }
            if (!started) {
                prod.resize(M, M);
                prod.setIdentity();
            }
            acc += scalar * prod;
        }
        return acc;
    }

    SpMat realize(const grid::DiscreteMatrix& dm, double m) const {
        std::vector<Eigen::Triplet<Cplx>> trips;
        for (std::size_t r = 0; r < dm.rows(); ++r)
            for (std::size_t c = 0; c < dm.cols(); ++c) {
                const auto& e = dm.entry(r, c);
                if (e.is_zero()) continue;
                const SpMat blk = realize(e, m);
                for (int col = 0; col < blk.outerSize(); ++col)
                    for (SpMat::InnerIterator it(blk, col); it; ++it)
                        trips.emplace_back(static_cast<int>(r * M + it.row()), static_cast<int>(c * M + it.col()), it.value());
            }
        SpMat out(dm.rows() * M, dm.cols() * M);
        out.setFromTriplets(trips.begin(), trips.end());
        return out;
    }

    SpMat mode_matrix(double m) const {
        SpMat A(dim * M, dim * M);
        if (has_down) {
            const SpMat D = realize(down, m);
            const SpMat Dh = D.adjoint();
            SpMat L = D * Dh;
            if (h == kN) L = SpMat(L * L);
            A += L;
        }
        if (has_up) {
            const SpMat D = realize(up, m);
            const SpMat Dh = D.adjoint();
            SpMat U = Dh * D;
            if (h == kN + 1) U = SpMat(U * U);
            A += U;
        }
        A.prune(Cplx(0.0, 0.0), 0.0);
        return A;
    }

    std::unique_ptr<Factor> factor(std::size_t k) const {
        auto f = std::make_unique<Factor>();
        f->compute(mode_matrix(mu[k]));
        if (f->info() != Eigen::Success) throw std::runtime_error("sparse factorization of a Laplacian mode failed");
        return f;
    }

    std::vector<Vec> forward(const std::vector<GridField>& comps) const {
        std::vector<Vec> hat(modes, Vec::Zero(static_cast<Eigen::Index>(dim * M)));
        const double scale = 2.0 / static_cast<double>(nt + 1);
        std::vector<double> re(modes), im(modes);
        for (std::size_t c = 0; c < dim; ++c) {
            const double* data = comps[c].data().data();
            for (std::size_t l = 0; l < M; ++l) {
                const double* u = data + l * nt;
                std::fill(re.begin(), re.end(), 0.0);
                std::fill(im.begin(), im.end(), 0.0);
                for (std::size_t j = 1; j <= nt; ++j) {
                    const double v = u[j - 1];
                    if (v == 0.0) continue;
                    const double* s = &sines[(j - 1) * modes];
                    // (-i)^j
                    switch (j % 4) {
                        case 1: for (std::size_t k = 0; k < modes; ++k) im[k] -= s[k] * v; break;
                        case 2: for (std::size_t k = 0; k < modes; ++k) re[k] -= s[k] * v; break;
                        case 3: for (std::size_t k = 0; k < modes; ++k) im[k] += s[k] * v; break;
                        default: for (std::size_t k = 0; k < modes; ++k) re[k] += s[k] * v; break;
                    }
                }
                for (std::size_t k = 0; k < modes; ++k) hat[k][static_cast<Eigen::Index>(c * M + l)] = scale * Cplx(re[k], im[k]);
            }
        }
        return hat;
    }

    std::vector<GridField> inverse(const std::vector<Vec>& hat) const {
        std::vector<GridField> out(dim, GridField(sspec));
        for (std::size_t c = 0; c < dim; ++c) {
            double* data = out[c].data().data();
            for (std::size_t l = 0; l < M; ++l) {
                double* u = data + l * nt;
                for (std::size_t j = 1; j <= nt; ++j) {
                    const double* s = &sines[(j - 1) * modes];
                    double acc = 0.0;
                    for (std::size_t k = 0; k < modes; ++k) {
                        const Cplx z = hat[k][static_cast<Eigen::Index>(c * M + l)];
                        // Re(z i^j)
                        double r = 0.0;
                        switch (j % 4) {
                            case 1: r = -z.imag(); break;
                            case 2: r = -z.real(); break;
                            case 3: r = z.imag(); break;
                            default: r = z.real(); break;
                        }
                        acc += r * s[k];
                    }
                    u[j - 1] = 2.0 * acc;
                }
            }
        }
        return out;
    }

    std::array<std::size_t, 2> pad{};  // extra points on each side in x and y

    GridRuminForm embed(const GridRuminForm& a) const {
        if (!(a.spec == spec)) throw std::invalid_argument("form lattice differs from the solver lattice");
        if (a.degree() != h) throw std::invalid_argument("form degree differs from the solver degree");
        if (sspec == spec) return a;
        GridRuminForm out = GridRuminForm::zero(*basis, sspec);
        for (std::size_t c = 0; c < dim; ++c)
            for (std::size_t i = 0; i < spec.count[0]; ++i)
                for (std::size_t j = 0; j < spec.count[1]; ++j)
                    std::copy_n(a.components[c].data().data() + spec.index(i, j, 0), spec.count[2], &out.components[c].at(i + pad[0], j + pad[1], 0));
        return out;
    }

    GridRuminForm restrict(const GridRuminForm& a) const {
        if (sspec == spec) return a;
        GridRuminForm out = GridRuminForm::zero(*basis, spec);
        for (std::size_t c = 0; c < dim; ++c)
            for (std::size_t i = 0; i < spec.count[0]; ++i)
                for (std::size_t j = 0; j < spec.count[1]; ++j)
                    std::copy_n(a.components[c].data().data() + sspec.index(i + pad[0], j + pad[1], 0), spec.count[2], &out.components[c].at(i, j, 0));
        return out;
    }

    // One pass: exact mode solves for every right-hand side.
    std::vector<std::vector<GridField>> solve_modes(const std::vector<std::vector<GridField>>& rhs) const {
        std::vector<std::vector<Vec>> hat;
        for (const auto& r : rhs) hat.push_back(forward(r));
        std::lock_guard lock(mutex);
        for (std::size_t k = 0; k < modes; ++k) {
            std::unique_ptr<Factor> local;
            const Factor* f = nullptr;
            if (cache_state == 1 && factors[k]) {
                f = factors[k].get();
            } else {
                local = factor(k);
                if (cache_state == -1) {
                    const auto nnz = static_cast<std::size_t>(local->cholmod().lnz);
                    const std::size_t bytes = nnz * (sizeof(Cplx) + sizeof(int)) * modes;
                    cache_state = bytes <= options.cache_bytes ? 1 : 0;
                    if (cache_state == 1) factors.resize(modes);
                }
                f = local.get();
                if (cache_state == 1) {
                    factors[k] = std::move(local);
                    f = factors[k].get();
                }
            }
            for (auto& hk : hat) hk[k] = f->solve(hk[k]);
        }
        std::vector<std::vector<GridField>> out;
        for (const auto& hk : hat) out.push_back(inverse(hk));
        return out;
    }
};

LaplacianInverse::LaplacianInverse(const GridSpec& spec, int h, LaplacianOptions options)
    : impl_(std::make_unique<Impl>()) {
    require_h1(spec);
    if (h < 0 || h > 2 * kN + 1) throw std::out_of_range("form degree out of range");
    Impl& m = *impl_;
    m.spec = spec;
    if (!(options.padding >= 1.0)) throw std::invalid_argument("padding must be >= 1");
    m.sspec = spec;
    for (int a = 0; a < 2; ++a) {
        const double half = 0.5 * static_cast<double>(spec.count[a] - 1);
        m.pad[a] = static_cast<std::size_t>(std::lround(half * (options.padding - 1.0)));
        m.sspec.count[a] += 2 * m.pad[a];
        m.sspec.lower[a] -= static_cast<double>(m.pad[a]) * spec.step[a];
    }
    if (spec.count[2] % 2 == 1) m.sspec.count[2] += 1;
    m.h = h;
    m.options = options;
    m.basis = &complex::build_basis(kN, h);
    m.nx = m.sspec.count[0];
    m.ny = m.sspec.count[1];
    m.nt = m.sspec.count[2];
    m.M = m.nx * m.ny;
    m.dim = m.basis->dim();
    m.modes = m.nt / 2;
    const double theta = std::numbers::pi / static_cast<double>(m.nt + 1);
    for (std::size_t k = 1; k <= m.modes; ++k) m.mu.push_back(std::cos(theta * static_cast<double>(k)) / spec.step[2]);
    m.sines.resize(m.nt * m.modes);
    for (std::size_t j = 1; j <= m.nt; ++j)
        for (std::size_t k = 1; k <= m.modes; ++k)
            m.sines[(j - 1) * m.modes + (k - 1)] = std::sin(theta * static_cast<double>(j * k));

    // central differences with zero extension in the (x, y) plane, index i * ny + j
    std::vector<Eigen::Triplet<Cplx>> tx, ty, cx, cy;
    const double ix = 0.5 / spec.step[0], iy = 0.5 / spec.step[1];
    for (std::size_t i = 0; i < m.nx; ++i)
        for (std::size_t j = 0; j < m.ny; ++j) {
            const int row = static_cast<int>(i * m.ny + j);
            if (i + 1 < m.nx) tx.emplace_back(row, static_cast<int>((i + 1) * m.ny + j), ix);
            if (i > 0) tx.emplace_back(row, static_cast<int>((i - 1) * m.ny + j), -ix);
            if (j + 1 < m.ny) ty.emplace_back(row, row + 1, iy);
            if (j > 0) ty.emplace_back(row, row - 1, -iy);
            cx.emplace_back(row, row, m.sspec.coord(0, i));
            cy.emplace_back(row, row, m.sspec.coord(1, j));
        }
    auto build = [&](SpMat& A, const std::vector<Eigen::Triplet<Cplx>>& t) {
        A.resize(static_cast<Eigen::Index>(m.M), static_cast<Eigen::Index>(m.M));
        A.setFromTriplets(t.begin(), t.end());
    };
    build(m.Dx, tx);
    build(m.Dy, ty);
    build(m.Xc, cx);
    build(m.Yc, cy);

    if (h >= 1) {
        m.down = grid::DiscreteMatrix(complex::d_c_operator(kN, h - 1));
        m.has_down = true;
    }
    if (h <= 2 * kN) {
        m.up = grid::DiscreteMatrix(complex::d_c_operator(kN, h));
        m.has_up = true;
    }
}

LaplacianInverse::~LaplacianInverse() = default;

int LaplacianInverse::degree() const { return impl_->h; }
const GridSpec& LaplacianInverse::spec() const { return impl_->spec; }
const GridSpec& LaplacianInverse::solver_spec() const { return impl_->sspec; }

GridRuminForm LaplacianInverse::solve(const GridRuminForm& alpha, LaplacianStats* stats) const {
    std::vector<LaplacianStats> st;
    auto out = solve(std::vector<GridRuminForm>{alpha}, stats ? &st : nullptr);
    if (stats) *stats = st.front();
    return std::move(out.front());
}

std::vector<GridRuminForm> LaplacianInverse::solve(const std::vector<GridRuminForm>& alpha,
                                                   std::vector<LaplacianStats>* stats) const {
    const Impl& m = *impl_;
    const std::size_t B = alpha.size();
    std::vector<GridRuminForm> rhs, u;
    std::vector<double> rhs_norm(B);
    std::vector<LaplacianStats> st(B);
    for (std::size_t b = 0; b < B; ++b) {
        rhs.push_back(m.embed(alpha[b]));
        rhs_norm[b] = std::sqrt(sq_norm(rhs[b]));
        u.push_back(GridRuminForm::zero(*m.basis, m.sspec));
    }
    std::vector<std::size_t> active;
    for (std::size_t b = 0; b < B; ++b) {
        if (rhs_norm[b] == 0.0) {
            st[b].converged = true;
            continue;
        }
        active.push_back(b);
    }
    std::vector<GridRuminForm> residual = rhs;
    const std::size_t max_iter = std::max<std::size_t>(1, m.options.max_iter);
    for (std::size_t iter = 1; iter <= max_iter && !active.empty(); ++iter) {
        std::vector<std::vector<GridField>> batch;
        for (auto b : active) batch.push_back(residual[b].components);
        auto corr = m.solve_modes(batch);
        std::vector<std::size_t> next;
        for (std::size_t a = 0; a < active.size(); ++a) {
            const std::size_t b = active[a];
            for (std::size_t c = 0; c < m.dim; ++c) u[b].components[c] += corr[a][c];
            residual[b] = rhs[b] - apply_laplacian(u[b]);
            st[b].iterations = iter;
            st[b].relative_residual = std::sqrt(sq_norm(residual[b])) / rhs_norm[b];
            st[b].converged = st[b].relative_residual <= m.options.tol;
            if (!st[b].converged) next.push_back(b);
        }
        active = std::move(next);
    }
    std::vector<GridRuminForm> out;
    for (auto& v : u) out.push_back(m.restrict(v));
    if (stats) *stats = std::move(st);
    return out;
}

GridRuminForm laplacian_inverse(const GridRuminForm& alpha, LaplacianOptions options, LaplacianStats* stats) {
    LaplacianInverse inv(alpha.spec, alpha.degree(), options);
    return inv.solve(alpha, stats);
}

// ---------------------------------------------------------------------------
// Homotopy

namespace {

// Coframe <-> coordinate basis of full h-forms: theta = dt + y/2 dx - x/2 dy.
struct BasisChange {
    std::vector<ExtMask> masks;
    // row-major masks x masks; empty polynomial entries are skipped
    std::vector<std::unique_ptr<grid::CompiledPoly>> to_coord, to_coframe;
};

exterior::PolyForm one_form_image(ExtMask slot, bool to_coord) {
    using exterior::basis_form;
    exterior::PolyForm f = basis_form(kN, slot);
    if (slot == exterior::theta_slot(kN)) {
        const PolyScalar x = PolyScalar::variable(3, 0), y = PolyScalar::variable(3, 1);
        const Rational half = to_coord ? Rational(1, 2) : Rational(-1, 2);
        f += exterior::multiply(y * half, basis_form(kN, 1));
        f -= exterior::multiply(x * half, basis_form(kN, 2));
    }
    return f;
}

const BasisChange& basis_change(int h) {
    static std::mutex mutex;
    static std::map<int, BasisChange> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(h);
    if (it != cache.end()) return it->second;
    BasisChange bc;
    bc.masks = basis_masks(kN, h);
    const std::size_t d = bc.masks.size();
    bc.to_coord.resize(d * d);
    bc.to_coframe.resize(d * d);
    for (int dir = 0; dir < 2; ++dir) {
        auto& table = dir == 0 ? bc.to_coord : bc.to_coframe;
        for (std::size_t c = 0; c < d; ++c) {
            exterior::PolyForm image = exterior::basis_form(kN, 0);
            for (int slot = 0; slot < 3; ++slot) {
                const ExtMask bit = ExtMask{1} << slot;
                if (bc.masks[c] & bit) image = exterior::wedge(image, one_form_image(bit, dir == 0));
            }
            for (std::size_t r = 0; r < d; ++r) {
                const PolyScalar p = image.coefficient(bc.masks[r]);
                if (!p.is_zero()) table[r * d + c] = std::make_unique<grid::CompiledPoly>(p);
            }
        }
    }
    return cache.emplace(h, std::move(bc)).first->second;
}

std::vector<GridField> change_basis(const std::vector<GridField>& in, int h, bool to_coord) {
    const BasisChange& bc = basis_change(h);
    const std::size_t d = bc.masks.size();
    const GridSpec& s = in.front().spec();
    std::vector<GridField> out(d, GridField(s));
    const auto& table = to_coord ? bc.to_coord : bc.to_coframe;
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) {
            const auto& p = table[r * d + c];
            if (!p) continue;
            for (std::size_t i = 0; i < s.count[0]; ++i)
                for (std::size_t j = 0; j < s.count[1]; ++j)
                    for (std::size_t k = 0; k < s.count[2]; ++k) {
                        const std::size_t idx = s.index(i, j, k);
                        const double v = in[c][idx];
                        if (v != 0.0) out[r][idx] += (*p)(s.coord(0, i), s.coord(1, j), s.coord(2, k)) * v;
                    }
        }
    return out;
}

const grid::DiscreteBlock& proj_E_block(int h) {
    static std::mutex mutex;
    static std::map<int, grid::DiscreteBlock> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(h);
    if (it == cache.end()) {
        const complex::FormOperator& op = complex::proj_E_operator(kN, h);
        if (op.source != basis_masks(kN, h) || op.target != basis_masks(kN, h))
            throw std::logic_error("Pi_E operator is not indexed by the standard basis");
        it = cache.emplace(h, grid::DiscreteBlock(op.target.size(), op.source.size(), op.entries)).first;
    }
    return it->second;
}

std::vector<GridField> lift(const GridRuminForm& a) {
    const auto masks = basis_masks(kN, a.degree());
    std::vector<GridField> out(masks.size(), GridField(a.spec));
    for (std::size_t i = 0; i < a.basis->dim(); ++i)
        for (const auto& [m, c] : a.basis->elements[i].terms()) {
            const auto pos = static_cast<std::size_t>(std::find(masks.begin(), masks.end(), m) - masks.begin());
            out[pos].axpy(to_double(c), a.components[i]);
        }
    return out;
}

GridRuminForm project(const std::vector<GridField>& full, int h, const GridSpec& spec) {
    const RuminBasis& basis = complex::build_basis(kN, h);
    const auto masks = basis_masks(kN, h);
    GridRuminForm out = GridRuminForm::zero(basis, spec);
    for (std::size_t i = 0; i < basis.dim(); ++i) {
        const double inv = 1.0 / to_double(basis.norms2[i]);
        for (const auto& [m, c] : basis.elements[i].terms()) {
            const auto pos = static_cast<std::size_t>(std::find(masks.begin(), masks.end(), m) - masks.begin());
            out.components[i].axpy(to_double(c) * inv, full[pos]);
        }
    }
    return out;
}

struct Box {
    std::array<std::size_t, 3> lo{}, hi{};  // inclusive
    std::size_t extent(int a) const { return hi[a] - lo[a] + 1; }
    std::size_t size() const { return extent(0) * extent(1) * extent(2); }
};

struct AxisPass {
    std::vector<grid::AxisStencil> st;
    std::vector<char> valid;
    std::size_t src_lo = 0, src_hi = 0;
    bool any = false;
};

AxisPass axis_pass(const GridSpec& s, int axis, const Box& box, double base, double scale) {
    AxisPass p;
    const std::size_t e = box.extent(axis);
    p.st.resize(e);
    p.valid.resize(e);
    p.src_lo = s.count[axis];
    for (std::size_t o = 0; o < e; ++o) {
        const double z = base + scale * (s.coord(axis, box.lo[axis] + o) - base);
        p.valid[o] = grid::axis_stencil(s, axis, z, true, p.st[o]);
        if (!p.valid[o]) continue;
        p.any = true;
        p.src_lo = std::min(p.src_lo, p.st[o].first);
        p.src_hi = std::max(p.src_hi, p.st[o].first + static_cast<std::size_t>(p.st[o].width) - 1);
    }
    return p;
}

std::vector<GridField> cone_on_box(const std::vector<GridField>& beta, int h,
                                   const std::vector<std::array<double, 3>>& bases,
                                   const std::vector<double>& weights, const Box& box) {
    if (h < 1 || h > 2 * kN + 1) throw std::out_of_range("cone homotopy needs 1 <= h <= 3");
    const auto src_masks = basis_masks(kN, h);
    const auto dst_masks = basis_masks(kN, h - 1);
    if (beta.size() != src_masks.size()) throw std::invalid_argument("cone homotopy input has the wrong size");
    if (bases.size() != weights.size()) throw std::invalid_argument("base points and weights differ in size");
    const GridSpec& s = beta.front().spec();

    struct Term {
        std::size_t src, dst;
        int axis;
        double sign;
    };
    std::vector<Term> terms;
    for (std::size_t a = 0; a < src_masks.size(); ++a) {
        int pos = 0;
        for (int r = 0; r < 3; ++r) {
            const ExtMask bit = ExtMask{1} << r;
            if (!(src_masks[a] & bit)) continue;
            const ExtMask rest = src_masks[a] & ~bit;
            const auto d = static_cast<std::size_t>(std::find(dst_masks.begin(), dst_masks.end(), rest) - dst_masks.begin());
            terms.push_back({a, d, r, pos % 2 == 0 ? 1.0 : -1.0});
            ++pos;
        }
    }
    std::vector<std::size_t> live;
    for (std::size_t a = 0; a < beta.size(); ++a)
        if (beta[a].max_abs() > 0.0) live.push_back(a);

    const std::size_t bx = box.extent(0), by = box.extent(1), bt = box.extent(2);
    std::vector<std::vector<double>> acc(dst_masks.size(), std::vector<double>(box.size(), 0.0));
    std::vector<std::vector<double>> val(beta.size());

    using GL = boost::math::quadrature::gauss<double, 16>;
    std::vector<double> nodes, node_w;
    for (std::size_t i = 0; i < GL::abscissa().size(); ++i) {
        const double x = GL::abscissa()[i], w = GL::weights()[i];
        nodes.push_back(0.5 * (1.0 + x));
        node_w.push_back(0.5 * w);
        if (x != 0.0) {
            nodes.push_back(0.5 * (1.0 - x));
            node_w.push_back(0.5 * w);
        }
    }

    std::vector<double> tmp1, tmp2;
    for (std::size_t b = 0; b < bases.size(); ++b) {
        const auto& base = bases[b];
        for (std::size_t q = 0; q < nodes.size(); ++q) {
            const double sc = nodes[q];
            const double factor = weights[b] * node_w[q] * std::pow(sc, h - 1);
            const AxisPass px = axis_pass(s, 0, box, base[0], sc);
            const AxisPass py = axis_pass(s, 1, box, base[1], sc);
            const AxisPass pt = axis_pass(s, 2, box, base[2], sc);
            if (!px.any || !py.any || !pt.any) continue;
            const std::size_t nxs = px.src_hi - px.src_lo + 1, nys = py.src_hi - py.src_lo + 1;
            for (auto a : live) {
                const double* F = beta[a].data().data();
                tmp1.assign(nxs * nys * bt, 0.0);
                for (std::size_t ix = 0; ix < nxs; ++ix)
                    for (std::size_t iy = 0; iy < nys; ++iy) {
                        const double* line = F + s.index(px.src_lo + ix, py.src_lo + iy, 0);
                        double* o = &tmp1[(ix * nys + iy) * bt];
                        for (std::size_t ot = 0; ot < bt; ++ot) {
                            if (!pt.valid[ot]) continue;
                            const auto& st = pt.st[ot];
                            double v = 0.0;
                            for (int c = 0; c < st.width; ++c) v += st.w[c] * line[st.first + c];
                            o[ot] = v;
                        }
                    }
                tmp2.assign(nxs * by * bt, 0.0);
                for (std::size_t ix = 0; ix < nxs; ++ix)
                    for (std::size_t oy = 0; oy < by; ++oy) {
                        if (!py.valid[oy]) continue;
                        const auto& st = py.st[oy];
                        double* o = &tmp2[(ix * by + oy) * bt];
                        for (int c = 0; c < st.width; ++c) {
                            const double* in = &tmp1[(ix * nys + (st.first + c - py.src_lo)) * bt];
                            for (std::size_t ot = 0; ot < bt; ++ot) o[ot] += st.w[c] * in[ot];
                        }
                    }
                auto& v = val[a];
                v.assign(box.size(), 0.0);
                for (std::size_t ox = 0; ox < bx; ++ox) {
                    if (!px.valid[ox]) continue;
                    const auto& st = px.st[ox];
                    for (int c = 0; c < st.width; ++c) {
                        const double* in = &tmp2[(st.first + c - px.src_lo) * by * bt];
                        double* o = &v[ox * by * bt];
                        for (std::size_t r = 0; r < by * bt; ++r) o[r] += st.w[c] * in[r];
                    }
                }
            }
            // contraction with p - b
            for (std::size_t ox = 0; ox < bx; ++ox) {
                const double vx = s.coord(0, box.lo[0] + ox) - base[0];
                for (std::size_t oy = 0; oy < by; ++oy) {
                    const double vy = s.coord(1, box.lo[1] + oy) - base[1];
                    for (std::size_t ot = 0; ot < bt; ++ot) {
                        const double vt = s.coord(2, box.lo[2] + ot) - base[2];
                        const double vv[3] = {vx, vy, vt};
                        const std::size_t o = (ox * by + oy) * bt + ot;
                        for (const auto& term : terms) {
                            if (val[term.src].empty()) continue;
                            acc[term.dst][o] += factor * term.sign * vv[term.axis] * val[term.src][o];
                        }
                    }
                }
            }
        }
    }
    std::vector<GridField> out(dst_masks.size(), GridField(s));
    for (std::size_t d = 0; d < dst_masks.size(); ++d)
        for (std::size_t ox = 0; ox < bx; ++ox)
            for (std::size_t oy = 0; oy < by; ++oy)
                for (std::size_t ot = 0; ot < bt; ++ot)
                    out[d].at(box.lo[0] + ox, box.lo[1] + oy, box.lo[2] + ot) = acc[d][(ox * by + oy) * bt + ot];
    return out;
}

}  // namespace

std::vector<GridField> cone_homotopy(const std::vector<GridField>& beta, int h,
                                     const std::vector<std::array<double, 3>>& base_points,
                                     const std::vector<double>& weights) {
    if (beta.empty()) throw std::invalid_argument("cone homotopy input is empty");
    const GridSpec& s = beta.front().spec();
    Box box;
    for (int a = 0; a < 3; ++a) box.hi[a] = s.count[a] - 1;
    return cone_on_box(beta, h, base_points, weights, box);
}

double closedness(const GridRuminForm& omega, double radius) {
    require_h1(omega.spec);
    const int h = omega.degree();
    if (h == 2 * kN + 1) return 0.0;
    const Mask region = grid::intersect(grid::ball_mask(omega.spec, radius), grid::interior_mask(omega.spec, 2));
    // scale: horizontal derivatives of omega of the order of d_c
    double scale = 0.0;
    for (int j = 1; j <= 2 * kN; ++j)
        for (const auto& c : omega.components) {
            const GridField w = grid::apply_field(j, c, Boundary::OneSided);
            if (complex::d_c_weight(kN, h) == 1) {
                scale += std::pow(grid::norm(w, 2.0, region), 2);
                continue;
            }
            for (int k = 1; k <= 2 * kN; ++k)
                scale += std::pow(grid::norm(grid::apply_field(k, w, Boundary::OneSided), 2.0, region), 2);
        }
    if (scale == 0.0) return 0.0;
    return grid::norm(grid::d_c(omega), 2.0, region) / std::sqrt(scale);
}

GridRuminForm il_homotopy(const GridRuminForm& omega, const HomotopyOptions& options, HomotopyStats* stats) {
    const GridSpec& s = omega.spec;
    require_h1(s);
    const int h = omega.degree();
    if (h < 1) throw std::invalid_argument("the homotopy acts on forms of degree >= 1");
    if (!(options.radius > 0.0) || !(options.weight_fraction > 0.0 && options.weight_fraction <= 1.0))
        throw std::invalid_argument("invalid homotopy radius or weight fraction");
    HomotopyStats st;
    st.closedness = closedness(omega, options.lambda * options.radius);
    if (options.check_closed && st.closedness > options.closed_tol)
        throw std::invalid_argument("form is not closed within the tolerance (closedness " +
                                    std::to_string(st.closedness) + ")");

    const double R = options.radius;
    Box box;
    const double half[3] = {R, R, 0.25 * R * R};
    for (int a = 0; a < 3; ++a) {
        const double lo = (-half[a] - s.lower[a]) / s.step[a] - 4.0;
        const double hi = (half[a] - s.lower[a]) / s.step[a] + 4.0;
        if (lo < 0.0 || hi > static_cast<double>(s.count[a] - 1))
            throw std::invalid_argument("the ball B(e, radius) plus margin does not fit in the lattice");
        box.lo[a] = static_cast<std::size_t>(std::floor(lo));
        box.hi[a] = static_cast<std::size_t>(std::ceil(hi));
    }

    // base points on a mesh-independent sub-lattice of B(e, fraction * R)
    const double rw = options.weight_fraction * R;
    const double sx = 0.5 * rw, stp = rw * rw / 8.0;
    std::vector<std::array<double, 3>> bases;
    std::vector<double> weights;
    double total = 0.0;
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j)
            for (int k = -2; k <= 2; ++k) {
                const double x = i * sx, y = j * sx, t = k * stp;
                const double z2 = x * x + y * y;
                const double r4 = (z2 * z2 + 16.0 * t * t) / std::pow(rw, 4);
                if (r4 >= 1.0) continue;
                const double w = std::pow(1.0 - r4, options.weight_power);
                bases.push_back({x, y, t});
                weights.push_back(w);
                total += w;
            }
    for (auto& w : weights) w /= total;

    std::vector<GridField> full = proj_E_block(h).apply(lift(omega), Boundary::OneSided);
    full = change_basis(full, h, true);
    std::vector<GridField> k = cone_on_box(full, h, bases, weights, box);
    k = change_basis(k, h - 1, false);
    if (h - 1 >= 1) k = proj_E_block(h - 1).apply(k, Boundary::OneSided);
    // the derivative in Pi_E is not meaningful across the edge of the box
    for (auto& f : k)
        for (std::size_t i = 0; i < s.count[0]; ++i)
            for (std::size_t j = 0; j < s.count[1]; ++j)
                for (std::size_t t = 0; t < s.count[2]; ++t) {
                    const bool inside = i >= box.lo[0] && i <= box.hi[0] && j >= box.lo[1] && j <= box.hi[1] &&
                                        t >= box.lo[2] && t <= box.hi[2];
                    if (!inside) f.at(i, j, t) = 0.0;
                }
    st.base_points = bases.size();
    st.output_points = box.size();
    if (stats) *stats = st;
    return project(k, h - 1, s);
}

// ---------------------------------------------------------------------------
// Primitive

std::string to_string(Method m) { return m == Method::Homotopy ? "homotopy" : "laplacian"; }

Method parse_method(const std::string& s) {
    if (s == "homotopy") return Method::Homotopy;
    if (s == "laplacian") return Method::Laplacian;
    throw std::invalid_argument("unknown method '" + s + "' (expected homotopy or laplacian)");
}

Mask residual_region(const GridSpec& spec, Method method, double radius) {
    if (method == Method::Homotopy) return grid::ball_mask(spec, radius);
    return grid::interior_mask(spec, 4);
}

void fill_residuals(const GridRuminForm& phi, const GridRuminForm& omega, const Mask& region, SolveReport& report) {
    const GridRuminForm r = grid::d_c(phi) - omega;
    const int h = omega.degree();
    const double Q = heisenberg::homogeneous_dimension(kN);
    auto rel = [&](double p) {
        const double d = grid::norm(omega, p, region);
        return d > 0.0 ? grid::norm(r, p, region) / d : grid::norm(r, p, region);
    };
    report.degree = h;
    report.residual_LQ = rel(Q);
    report.residual_L2 = rel(2.0);
    report.natural_exponent = h == kN + 1 ? Q / 2.0 : Q;
    report.residual_natural = rel(report.natural_exponent);
}

namespace {

GridRuminForm laplacian_primitive(const GridRuminForm& u) {
    const auto ze = Boundary::ZeroExtension;
    // in degree n the down part of the Laplacian is (d_c d_c^*)^2
    if (u.degree() == kN) return grid::d_c_star(grid::d_c(grid::d_c_star(u, ze), ze), ze);
    return grid::d_c_star(u, ze);
}

}  // namespace

std::pair<GridRuminForm, SolveReport> solve_primitive(const GridRuminForm& omega, const SolveOptions& options) {
    if (options.method == Method::Laplacian) {
        const auto start = std::chrono::steady_clock::now();
        LaplacianInverse inv(omega.spec, omega.degree(), options.laplacian);
        auto result = solve_primitive(omega, inv);
        result.second.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return result;
    }
    const auto start = std::chrono::steady_clock::now();
    SolveReport report;
    report.method = to_string(Method::Homotopy);
    report.mesh = omega.spec;
    HomotopyStats st;
    GridRuminForm phi = il_homotopy(omega, options.homotopy, &st);
    fill_residuals(phi, omega, residual_region(omega.spec, Method::Homotopy, options.homotopy.radius), report);
    report.closedness = st.closedness;
    report.iterations = 1;
    report.converged = true;
    report.message = "base points " + std::to_string(st.base_points);
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(phi), report};
}

std::pair<GridRuminForm, SolveReport> solve_primitive(const GridRuminForm& omega, const LaplacianInverse& inverse) {
    if (omega.degree() < 1) throw std::invalid_argument("a primitive needs a form of degree >= 1");
    if (inverse.degree() != omega.degree()) throw std::invalid_argument("inverse prepared for another degree");
    const auto start = std::chrono::steady_clock::now();
    SolveReport report;
    report.method = to_string(Method::Laplacian);
    report.mesh = omega.spec;
    LaplacianStats st;
    GridRuminForm u = inverse.solve(omega, &st);
    GridRuminForm phi = laplacian_primitive(u);
    fill_residuals(phi, omega, residual_region(omega.spec, Method::Laplacian, 0.0), report);
    report.closedness = closedness(omega, std::numeric_limits<double>::infinity());
    report.laplacian_residual = st.relative_residual;
    report.iterations = st.iterations;
    report.converged = st.converged;
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(phi), report};
}

// ---------------------------------------------------------------------------
// Commutation

Mask commutation_region(const GridSpec& spec) {
    double r = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double upper = spec.lower[a] + spec.step[a] * static_cast<double>(spec.count[a] - 1);
        const double d = std::min(-spec.lower[a], upper);
        if (d <= 0.0) throw std::invalid_argument("the identity is not inside the lattice");
        r = std::min(r, a == 2 ? 2.0 * std::sqrt(d) : d);
    }
    return grid::intersect(grid::ball_mask(spec, 0.5 * r), grid::interior_mask(spec, 4));
}

CommutationReport commutation_check(const GridRuminForm& alpha, LaplacianOptions options) {
    const GridSpec& s = alpha.spec;
    require_h1(s);
    const int h = alpha.degree();
    const auto ze = Boundary::ZeroExtension;
    CommutationReport rep;
    rep.degree = h;
    GridRuminForm lhs, rhs;
    if (h == 1) {
        rep.identity = "d_c Delta_1^{-1} = Delta_2^{-1} d_c";
        LaplacianInverse inv1(s, 1, options), inv2(s, 2, options);
        lhs = grid::d_c(inv1.solve(alpha), ze);
        rhs = inv2.solve(grid::d_c(alpha, ze));
    } else if (h == 0) {
        rep.identity = "d_c Delta_0^{-1} = d_c d_c^* Delta_1^{-1} d_c";
        LaplacianInverse inv0(s, 0, options), inv1(s, 1, options);
        lhs = grid::d_c(inv0.solve(alpha), ze);
        rhs = grid::d_c(grid::d_c_star(inv1.solve(grid::d_c(alpha, ze)), ze), ze);
    } else {
        throw std::invalid_argument("commutation check is implemented for h = 0 and h = 1");
    }
    const Mask region = commutation_region(s);
    rep.lhs_norm = std::sqrt(sq_norm(lhs, region));
    rep.rhs_norm = std::sqrt(sq_norm(rhs, region));
    const double diff = std::sqrt(sq_norm(lhs - rhs, region));
    rep.relative_difference = rep.lhs_norm > 0.0 ? diff / rep.lhs_norm : diff;
    return rep;
}

}  // namespace rumin::solver
