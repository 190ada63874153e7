#include "rumin/grid.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>

namespace rumin::grid {

using heisenberg::FieldOperator;
using heisenberg::MultiIndex;

// ---------------------------------------------------------------------------
// Lattice

GridSpec GridSpec::centered(const std::array<double, 3>& half_widths, const std::array<std::size_t, 3>& points) {
    GridSpec s;
    for (int a = 0; a < 3; ++a) {
        if (points[a] % 2 == 0) throw std::invalid_argument("centered lattice needs an odd point count");
        if (points[a] < 5) throw std::invalid_argument("lattice needs at least 5 points per axis");
        s.count[a] = points[a];
        s.lower[a] = -half_widths[a];
        s.step[a] = 2.0 * half_widths[a] / static_cast<double>(points[a] - 1);
    }
    s.validate();
    return s;
}

GridSpec GridSpec::standard(std::size_t points) {
    return centered({2.0, 2.0, 0.5}, {points, points, points});
}

double GridSpec::resolution() const {
    return std::max({step[0], step[1], 2.0 * std::sqrt(step[2])});
}

GridSpec GridSpec::refined() const {
    GridSpec s = *this;
    for (int a = 0; a < 3; ++a) {
        s.count[a] = 2 * count[a] - 1;
        s.step[a] = step[a] / 2.0;
    }
    return s;
}

void GridSpec::validate() const {
    if (n != 1) throw std::invalid_argument("grids are implemented for n = 1 only");
    for (int a = 0; a < 3; ++a) {
        if (count[a] < 5) throw std::invalid_argument("lattice needs at least 5 points per axis");
        if (!(step[a] > 0.0)) throw std::invalid_argument("lattice steps must be positive");
    }
}

GridField::GridField(const GridSpec& spec, std::vector<double> data) : spec_(spec), data_(std::move(data)) {
    if (data_.size() != spec_.size()) throw std::invalid_argument("sample count does not match the lattice");
}

namespace {

void check_same(const GridSpec& a, const GridSpec& b) {
    if (!(a == b)) throw std::invalid_argument("fields live on different lattices");
}

}  // namespace

GridField& GridField::operator+=(const GridField& other) {
    check_same(spec_, other.spec_);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

GridField& GridField::operator-=(const GridField& other) {
    check_same(spec_, other.spec_);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

GridField& GridField::operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
}

void GridField::axpy(double s, const GridField& other) {
    check_same(spec_, other.spec_);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
}

double GridField::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

GridRuminForm GridRuminForm::zero(const RuminBasis& basis, const GridSpec& spec) {
    return GridRuminForm{&basis, spec, std::vector<GridField>(basis.dim(), GridField(spec))};
}

GridRuminForm& GridRuminForm::operator+=(const GridRuminForm& other) {
    if (basis != other.basis) throw std::invalid_argument("forms of different degree");
    for (std::size_t i = 0; i < components.size(); ++i) components[i] += other.components[i];
    return *this;
}

GridRuminForm& GridRuminForm::operator-=(const GridRuminForm& other) {
    if (basis != other.basis) throw std::invalid_argument("forms of different degree");
    for (std::size_t i = 0; i < components.size(); ++i) components[i] -= other.components[i];
    return *this;
}

GridRuminForm& GridRuminForm::operator*=(double s) {
    for (auto& c : components) c *= s;
    return *this;
}

Mask interior_mask(const GridSpec& spec, std::size_t margin) {
    Mask m(spec.size(), 0);
    auto inside = [&](int a, std::size_t i) { return i >= margin && i + margin < spec.count[a]; };
    for (std::size_t i = 0; i < spec.count[0]; ++i)
        for (std::size_t j = 0; j < spec.count[1]; ++j)
            for (std::size_t k = 0; k < spec.count[2]; ++k)
                m[spec.index(i, j, k)] = inside(0, i) && inside(1, j) && inside(2, k);
    return m;
}

Mask ball_mask(const GridSpec& spec, double radius) {
    Mask m(spec.size(), 0);
    const double r4 = radius * radius * radius * radius;
    for (std::size_t i = 0; i < spec.count[0]; ++i)
        for (std::size_t j = 0; j < spec.count[1]; ++j)
            for (std::size_t k = 0; k < spec.count[2]; ++k) {
                const double x = spec.coord(0, i), y = spec.coord(1, j), t = spec.coord(2, k);
                const double z2 = x * x + y * y;
                m[spec.index(i, j, k)] = z2 * z2 + 16.0 * t * t < r4;
            }
    return m;
}

Mask intersect(const Mask& a, const Mask& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    Mask m(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) m[i] = a[i] && b[i];
    return m;
}

// ---------------------------------------------------------------------------
// Sampling

CompiledPoly::CompiledPoly(const PolyScalar& p) {
    if (p.num_vars() != 3 && !p.is_zero()) throw std::invalid_argument("grid polynomials have 3 variables");
    for (const auto& [m, c] : p.terms()) {
        Term t{{m[0], m[1], m[2]}, to_double(c)};
        for (int a = 0; a < 3; ++a) max_exp_[a] = std::max(max_exp_[a], t.exps[a]);
        terms_.push_back(t);
    }
}

double CompiledPoly::operator()(double x, double y, double t) const {
    if (terms_.empty()) return 0.0;
    // small power tables; degrees stay far below the fixed bound in practice
    constexpr unsigned kMax = 64;
    double px[kMax], py[kMax], pt[kMax];
    const double v[3] = {x, y, t};
    double* tables[3] = {px, py, pt};
    for (int a = 0; a < 3; ++a) {
        if (max_exp_[a] >= kMax) throw std::length_error("polynomial degree too large for evaluation");
        tables[a][0] = 1.0;
        for (unsigned e = 1; e <= max_exp_[a]; ++e) tables[a][e] = tables[a][e - 1] * v[a];
    }
    double acc = 0.0;
    for (const auto& term : terms_) acc += term.coef * px[term.exps[0]] * py[term.exps[1]] * pt[term.exps[2]];
    return acc;
}

GridField discretize(const PolyScalar& f, const GridSpec& spec, double support_radius) {
    spec.validate();
    GridField out(spec);
    if (f.is_zero()) return out;
    CompiledPoly poly(f);
    const double r4 = std::pow(support_radius, 4);
    for (std::size_t i = 0; i < spec.count[0]; ++i)
        for (std::size_t j = 0; j < spec.count[1]; ++j)
            for (std::size_t k = 0; k < spec.count[2]; ++k) {
                const double x = spec.coord(0, i), y = spec.coord(1, j), t = spec.coord(2, k);
                if (support_radius > 0.0) {
                    const double z2 = x * x + y * y;
                    if (z2 * z2 + 16.0 * t * t >= r4) continue;
                }
                out[spec.index(i, j, k)] = poly(x, y, t);
            }
    return out;
}

GridRuminForm discretize(const PolyRuminForm& a, const GridSpec& spec, double support_radius) {
    if (a.n() != 1) throw std::invalid_argument("grids are implemented for n = 1 only");
    GridRuminForm out{a.basis, spec, {}};
    for (const auto& c : a.coefficients) out.components.push_back(discretize(c, spec, support_radius));
    return out;
}

// ---------------------------------------------------------------------------
// Differences and fields

GridField difference(const GridField& u, int axis, Boundary boundary) {
    const GridSpec& s = u.spec();
    const std::size_t stride = axis == 0 ? s.count[1] * s.count[2] : (axis == 1 ? s.count[2] : 1);
    const std::size_t len = s.count[axis];
    if (len < 3) throw std::invalid_argument("lattice too small for the stencil");
    const double inv2h = 0.5 / s.step[axis];
    GridField out(s);
    const double* in = u.data().data();
    double* o = out.data().data();
    // Iterate over all lines parallel to `axis`.
    const std::size_t total = s.size();
    for (std::size_t base = 0; base < total; ++base) {
        // `base` is the first point of a line iff its coordinate along `axis` is zero
        if ((base / stride) % len != 0) continue;
        const double* l = in + base;
        double* ol = o + base;
        for (std::size_t i = 1; i + 1 < len; ++i) ol[i * stride] = (l[(i + 1) * stride] - l[(i - 1) * stride]) * inv2h;
        const std::size_t last = (len - 1) * stride;
        if (boundary == Boundary::OneSided) {
            ol[0] = (-3.0 * l[0] + 4.0 * l[stride] - l[2 * stride]) * inv2h;
            ol[last] = (3.0 * l[last] - 4.0 * l[last - stride] + l[last - 2 * stride]) * inv2h;
        } else {
            ol[0] = l[stride] * inv2h;
            ol[last] = -l[last - stride] * inv2h;
        }
    }
    return out;
}

GridField apply_field(int j, const GridField& u, Boundary boundary) {
    const GridSpec& s = u.spec();
    if (j == 3) return difference(u, 2, boundary);
    if (j != 1 && j != 2) throw std::out_of_range("field index out of range for n = 1");
    GridField out = difference(u, j - 1, boundary);
    GridField dt = difference(u, 2, boundary);
    // X = D_x - y/2 D_t ; Y = D_y + x/2 D_t
    const int coord_axis = j == 1 ? 1 : 0;
    const double sign = j == 1 ? -0.5 : 0.5;
    for (std::size_t i = 0; i < s.count[0]; ++i)
        for (std::size_t jj = 0; jj < s.count[1]; ++jj) {
            const double c = sign * (coord_axis == 0 ? s.coord(0, i) : s.coord(1, jj));
            const std::size_t row = s.index(i, jj, 0);
            for (std::size_t k = 0; k < s.count[2]; ++k) out[row + k] += c * dt[row + k];
        }
    return out;
}

DiscreteOperator::DiscreteOperator(const FieldOperator& op) {
    if (op.n() != 1 && !op.is_zero()) throw std::invalid_argument("grids are implemented for n = 1 only");
    const int n = 1;
    for (const auto& [index, c] : heisenberg::symmetric_coordinates(op)) {
        const auto orderings = heisenberg::letter_orderings(n, index);
        const double w = to_double(c) / static_cast<double>(orderings.size());
        for (auto word : orderings) {
            for (unsigned p = 0; p < index[2 * n]; ++p) word.push_back(2 * n + 1);
            words_.push_back(Word{w, std::move(word)});
        }
    }
}

GridField DiscreteOperator::apply(const GridField& u, Boundary boundary,
                                  std::map<std::vector<int>, GridField>& cache) const {
    // applies the suffix of a word, memoized
    auto suffix = [&](auto&& self, const std::vector<int>& letters) -> const GridField& {
        auto it = cache.find(letters);
        if (it != cache.end()) return it->second;
        if (letters.empty()) return cache.emplace(letters, u).first->second;
        std::vector<int> rest(letters.begin() + 1, letters.end());
        GridField inner = self(self, rest);
        return cache.emplace(letters, apply_field(letters.front(), inner, boundary)).first->second;
    };
    GridField out(u.spec());
    for (const auto& w : words_) out.axpy(w.coef, suffix(suffix, w.letters));
    return out;
}

GridField DiscreteOperator::apply(const GridField& u, Boundary boundary) const {
    std::map<std::vector<int>, GridField> cache;
    return apply(u, boundary, cache);
}

DiscreteMatrix::DiscreteMatrix(const complex::LeftInvariantOperator& op)
    : op_(&op), rows_(op.rows()), cols_(op.cols()) {
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) entries_.emplace_back(op.at(r, c));
}

GridRuminForm DiscreteMatrix::apply(const GridRuminForm& a, Boundary boundary) const {
    if (a.degree() != op_->source_degree()) throw std::invalid_argument("operator source degree mismatch");
    const RuminBasis& target = complex::build_basis(op_->n(), op_->target_degree());
    GridRuminForm out = GridRuminForm::zero(target, a.spec);
    for (std::size_t c = 0; c < cols_; ++c) {
        std::map<std::vector<int>, GridField> cache;
        for (std::size_t r = 0; r < rows_; ++r) {
            const DiscreteOperator& e = entry(r, c);
            if (e.is_zero()) continue;
            out.components[r] += e.apply(a.components[c], boundary, cache);
        }
    }
    return out;
}

DiscreteBlock::DiscreteBlock(std::size_t rows, std::size_t cols, const std::vector<FieldOperator>& entries)
    : rows_(rows), cols_(cols) {
    if (entries.size() != rows * cols) throw std::invalid_argument("operator block has the wrong number of entries");
    for (const auto& e : entries) entries_.emplace_back(e);
}

std::vector<GridField> DiscreteBlock::apply(const std::vector<GridField>& in, Boundary boundary) const {
    if (in.size() != cols_) throw std::invalid_argument("operator block source size mismatch");
    std::vector<GridField> out;
    for (std::size_t r = 0; r < rows_; ++r) out.emplace_back(in.empty() ? GridSpec{} : in.front().spec());
    for (std::size_t c = 0; c < cols_; ++c) {
        std::map<std::vector<int>, GridField> cache;
        for (std::size_t r = 0; r < rows_; ++r) {
            const DiscreteOperator& e = entries_[r * cols_ + c];
            if (e.is_zero()) continue;
            out[r] += e.apply(in[c], boundary, cache);
        }
    }
    return out;
}

GridRuminForm apply_operator(const complex::LeftInvariantOperator& op, const GridRuminForm& a, Boundary boundary) {
    return DiscreteMatrix(op).apply(a, boundary);
}

namespace {

const DiscreteMatrix& cached_matrix(bool star, int h) {
    static std::mutex mutex;
    static std::map<std::pair<bool, int>, DiscreteMatrix> cache;
    std::lock_guard lock(mutex);
    auto key = std::make_pair(star, h);
    auto it = cache.find(key);
    if (it == cache.end()) {
        const auto& op = star ? complex::d_c_star_operator(1, h) : complex::d_c_operator(1, h);
        it = cache.emplace(key, DiscreteMatrix(op)).first;
    }
    return it->second;
}

}  // namespace

GridRuminForm d_c(const GridRuminForm& a, Boundary boundary) {
    return cached_matrix(false, a.degree()).apply(a, boundary);
}

GridRuminForm d_c_star(const GridRuminForm& a, Boundary boundary) {
    return cached_matrix(true, a.degree()).apply(a, boundary);
}

// ---------------------------------------------------------------------------
// Norms and integrals

GridField pointwise_norm(const GridRuminForm& a) {
    GridField out(a.spec);
    for (std::size_t c = 0; c < a.components.size(); ++c) {
        const double w = to_double(a.basis->norms2[c]);
        const auto& d = a.components[c].data();
        for (std::size_t i = 0; i < d.size(); ++i) out[i] += w * d[i] * d[i];
    }
    for (auto& v : out.data()) v = std::sqrt(v);
    return out;
}

double norm(const GridField& u, double p, const Mask& mask) {
    if (!(p >= 1.0)) throw std::invalid_argument("norm exponent must be >= 1");
    const auto& d = u.data();
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i)
            if (mask.empty() || mask[i]) m = std::max(m, std::abs(d[i]));
        return m;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (mask.empty() || mask[i]) acc += std::pow(std::abs(d[i]), p);
    return std::pow(acc * u.spec().cell_volume(), 1.0 / p);
}

double norm(const GridRuminForm& a, double p, const Mask& mask) { return norm(pointwise_norm(a), p, mask); }

double bl_norm(const GridRuminForm& a, double p, const Mask& mask, Boundary boundary) {
    double total = 0.0;
    for (int j = 1; j <= 2; ++j) {
        GridRuminForm w = GridRuminForm::zero(*a.basis, a.spec);
        for (std::size_t c = 0; c < a.components.size(); ++c) w.components[c] = apply_field(j, a.components[c], boundary);
        total += norm(w, p, mask);
    }
    return total;
}

double integrate(const GridField& u, const Mask& mask) {
    double acc = 0.0;
    const auto& d = u.data();
    for (std::size_t i = 0; i < d.size(); ++i)
        if (mask.empty() || mask[i]) acc += d[i];
    return acc * u.spec().cell_volume();
}

double integrate_wedge(const GridRuminForm& alpha, const GridRuminForm& phi) {
    const int n = alpha.basis->n;
    if (alpha.degree() + phi.degree() != 2 * n + 1) throw std::invalid_argument("degrees are not complementary");
    check_same(alpha.spec, phi.spec);
    const exterior::Mask vol = exterior::volume_mask(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < alpha.components.size(); ++i)
        for (std::size_t k = 0; k < phi.components.size(); ++k) {
            const Rational w = exterior::wedge(alpha.basis->elements[i], phi.basis->elements[k]).coefficient(vol);
            if (is_zero(w)) continue;
            const auto& a = alpha.components[i].data();
            const auto& b = phi.components[k].data();
            double s = 0.0;
            for (std::size_t p = 0; p < a.size(); ++p) s += a[p] * b[p];
            acc += to_double(w) * s;
        }
    return acc * alpha.spec.cell_volume();
}

// ---------------------------------------------------------------------------
// Convolution

bool axis_stencil(const GridSpec& s, int axis, double v, bool cubic, AxisStencil& st) {
    const double r = (v - s.lower[axis]) / s.step[axis];
    const double last = static_cast<double>(s.count[axis] - 1);
    if (r < -1e-9 || r > last + 1e-9) return false;
    double fl = std::floor(r);
    if (fl >= last) fl = last - 1;
    if (fl < 0) fl = 0;
    const double f = std::clamp(r - fl, 0.0, 1.0);
    const auto i0 = static_cast<std::size_t>(fl);
    if (cubic && i0 >= 1 && i0 + 2 < s.count[axis]) {
        // Lagrange weights on nodes -1, 0, 1, 2
        st.first = i0 - 1;
        st.width = 4;
        st.w[0] = -f * (f - 1) * (f - 2) / 6;
        st.w[1] = (f + 1) * (f - 1) * (f - 2) / 2;
        st.w[2] = -(f + 1) * f * (f - 2) / 2;
        st.w[3] = (f + 1) * f * (f - 1) / 6;
    } else {
        st.first = i0;
        st.width = 2;
        st.w[0] = 1 - f;
        st.w[1] = f;
        st.w[2] = st.w[3] = 0.0;
    }
    return true;
}

namespace {

double interpolate_impl(const GridField& u, double x, double y, double t, bool cubic_t, bool* outside) {
    const GridSpec& s = u.spec();
    AxisStencil a[3];
    const double v[3] = {x, y, t};
    for (int k = 0; k < 3; ++k)
        if (!axis_stencil(s, k, v[k], k == 2 && cubic_t, a[k])) {
            if (outside != nullptr) *outside = true;
            return 0.0;
        }
    double acc = 0.0;
    for (int i = 0; i < a[0].width; ++i) {
        if (a[0].w[i] == 0.0) continue;
        for (int j = 0; j < a[1].width; ++j) {
            const double wij = a[0].w[i] * a[1].w[j];
            if (wij == 0.0) continue;
            const std::size_t row = s.index(a[0].first + i, a[1].first + j, a[2].first);
            for (int k = 0; k < a[2].width; ++k) acc += wij * a[2].w[k] * u[row + k];
        }
    }
    return acc;
}

}  // namespace

double interpolate(const GridField& u, double x, double y, double t, bool* outside) {
    return interpolate_impl(u, x, y, t, false, outside);
}

double interpolate_cubic_t(const GridField& u, double x, double y, double t, bool* outside) {
    return interpolate_impl(u, x, y, t, true, outside);
}

namespace {

struct Box {
    double lo[3];
    double hi[3];
};

// Coordinate bounding box of the nonzero samples, or false when the field vanishes.
bool support_box(const GridField& g, Box& box) {
    const GridSpec& s = g.spec();
    bool any = false;
    for (int a = 0; a < 3; ++a) {
        box.lo[a] = std::numeric_limits<double>::infinity();
        box.hi[a] = -std::numeric_limits<double>::infinity();
    }
    for (std::size_t i = 0; i < s.count[0]; ++i)
        for (std::size_t j = 0; j < s.count[1]; ++j)
            for (std::size_t k = 0; k < s.count[2]; ++k) {
                if (g.at(i, j, k) == 0.0) continue;
                any = true;
                const double c[3] = {s.coord(0, i), s.coord(1, j), s.coord(2, k)};
                for (int a = 0; a < 3; ++a) {
                    box.lo[a] = std::min(box.lo[a], c[a]);
                    box.hi[a] = std::max(box.hi[a], c[a]);
                }
            }
    if (!any) return false;
    // one extra cell so trilinear interpolation near the support edge is included
    for (int a = 0; a < 3; ++a) {
        box.lo[a] -= s.step[a];
        box.hi[a] += s.step[a];
    }
    return true;
}

// Index range of [lo, hi] on one axis, clamped; `clipped` is set when clamping occurred.
std::pair<std::size_t, std::size_t> index_range(const GridSpec& s, int axis, double lo, double hi, bool& clipped) {
    const double a = std::ceil((lo - s.lower[axis]) / s.step[axis] - 1e-9);
    const double b = std::floor((hi - s.lower[axis]) / s.step[axis] + 1e-9);
    const double last = static_cast<double>(s.count[axis] - 1);
    if (a < 0.0 || b > last) clipped = true;
    const double ca = std::max(a, 0.0), cb = std::min(b, last);
    if (ca > cb) return {1, 0};
    return {static_cast<std::size_t>(ca), static_cast<std::size_t>(cb)};
}

GridField convolve_into(const GridField& f, const GridField& g, const GridSpec& out_spec, ConvolutionStats* stats) {
    GridField out(out_spec);
    Box box;
    if (!support_box(g, box)) return out;
    const GridSpec& fs = f.spec();
    const double vol = fs.cell_volume();
    std::size_t clipped_count = 0;
    for (std::size_t qi = 0; qi < fs.count[0]; ++qi)
        for (std::size_t qj = 0; qj < fs.count[1]; ++qj)
            for (std::size_t qk = 0; qk < fs.count[2]; ++qk) {
                const double fq = f.at(qi, qj, qk);
                if (fq == 0.0) continue;
                const double qx = fs.coord(0, qi), qy = fs.coord(1, qj), qt = fs.coord(2, qk);
                // p = q . r with r in the support box of g
                bool clipped = false;
                auto [i0, i1] = index_range(out_spec, 0, qx + box.lo[0], qx + box.hi[0], clipped);
                auto [j0, j1] = index_range(out_spec, 1, qy + box.lo[1], qy + box.hi[1], clipped);
                const double shear_lo = 0.5 * std::min(qx * box.lo[1], qx * box.hi[1]) -
                                        0.5 * std::max(qy * box.lo[0], qy * box.hi[0]);
                const double shear_hi = 0.5 * std::max(qx * box.lo[1], qx * box.hi[1]) -
                                        0.5 * std::min(qy * box.lo[0], qy * box.hi[0]);
                auto [k0, k1] =
                    index_range(out_spec, 2, qt + box.lo[2] + shear_lo, qt + box.hi[2] + shear_hi, clipped);
                if (clipped) ++clipped_count;
                if (i0 > i1 || j0 > j1 || k0 > k1) continue;
                for (std::size_t i = i0; i <= i1; ++i)
                    for (std::size_t j = j0; j <= j1; ++j) {
                        const double px = out_spec.coord(0, i), py = out_spec.coord(1, j);
                        const double rx = px - qx, ry = py - qy;
                        const double shift = qt + 0.5 * (qx * py - qy * px);
                        for (std::size_t k = k0; k <= k1; ++k) {
                            // q^{-1} p; g is zero outside its lattice
                            const double rt = out_spec.coord(2, k) - shift;
                            const double gv = interpolate_cubic_t(g, rx, ry, rt);
                            if (gv != 0.0) out.at(i, j, k) += fq * gv * vol;
                        }
                    }
            }
    if (stats != nullptr) stats->clipped_placements += clipped_count;
    return out;
}

}  // namespace

GridField group_convolve(const GridField& f, const GridField& g, ConvolutionStats* stats) {
    return convolve_into(f, g, f.spec(), stats);
}

GridField mollifier(const GridSpec& spec, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("mollifier radius must be positive");
    std::array<std::size_t, 3> half{};
    for (int a = 0; a < 3; ++a) {
        const double reach = a < 2 ? eps : eps * eps / 4.0;
        half[a] = static_cast<std::size_t>(std::floor(reach / spec.step[a] + 1e-9));
    }
    GridSpec ks = spec;
    for (int a = 0; a < 3; ++a) {
        ks.count[a] = 2 * half[a] + 1;
        ks.lower[a] = -static_cast<double>(half[a]) * spec.step[a];
    }
    GridField j(ks);
    double mass = 0.0;
    for (std::size_t i = 0; i < ks.count[0]; ++i)
        for (std::size_t jj = 0; jj < ks.count[1]; ++jj)
            for (std::size_t k = 0; k < ks.count[2]; ++k) {
                const double x = ks.coord(0, i) / eps, y = ks.coord(1, jj) / eps, t = ks.coord(2, k) / (eps * eps);
                const double z2 = x * x + y * y;
                const double r4 = z2 * z2 + 16.0 * t * t;
                if (r4 >= 1.0) continue;
                const double v = std::pow(1.0 - r4, 4);
                j.at(i, jj, k) = v;
                mass += v;
            }
    j *= 1.0 / (mass * ks.cell_volume());
    return j;
}

GridField mollify(const GridField& u, double eps, ConvolutionStats* stats) {
    if (eps < 2.0 * u.spec().resolution()) throw std::invalid_argument("mollifier radius below lattice resolution");
    // count[] of the kernel lattice may drop below 5 on the t axis; it is never differentiated
    return convolve_into(mollifier(u.spec(), eps), u, u.spec(), stats);
}

GridRuminForm mollify(const GridRuminForm& a, double eps, ConvolutionStats* stats) {
    GridRuminForm out = a;
    for (auto& c : out.components) c = mollify(c, eps, stats);
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json spec_json(const GridSpec& s) {
    return {{"n", s.n},
            {"lower", s.lower},
            {"step", s.step},
            {"count", s.count},
            {"ordering", "row-major x,y,t (t fastest)"},
            {"dtype", "float64-le"}};
}

GridSpec spec_from_json(const nlohmann::json& j) {
    GridSpec s;
    s.n = j.at("n").get<int>();
    s.lower = j.at("lower").get<std::array<double, 3>>();
    s.step = j.at("step").get<std::array<double, 3>>();
    s.count = j.at("count").get<std::array<std::size_t, 3>>();
    s.validate();
    return s;
}

void write_payload(const std::string& path, const std::vector<const GridField*>& fields) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    for (const auto* f : fields)
        out.write(reinterpret_cast<const char*>(f->data().data()),
                  static_cast<std::streamsize>(f->data().size() * sizeof(double)));
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<GridField> read_payload(const std::string& path, const GridSpec& spec, std::size_t components) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<GridField> out;
    for (std::size_t c = 0; c < components; ++c) {
        std::vector<double> d(spec.size());
        in.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
        if (!in) throw std::runtime_error("truncated sample file: " + path);
        out.emplace_back(spec, std::move(d));
    }
    return out;
}

std::string base_name(const std::string& path) {
    auto slash = path.find_last_of('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

std::string sibling(const std::string& header, const std::string& name) {
    auto slash = header.find_last_of('/');
    return slash == std::string::npos ? name : header.substr(0, slash + 1) + name;
}

nlohmann::json read_header(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return nlohmann::json::parse(in);
}

}  // namespace

void write_form(const std::string& path, const GridRuminForm& a) {
    nlohmann::json j;
    j["format"] = "rumin-grid-form";
    j["version"] = 1;
    j["degree"] = a.degree();
    j["grid"] = spec_json(a.spec);
    std::vector<std::string> names;
    for (const auto& e : a.basis->elements) {
        std::string s;
        for (const auto& [m, c] : e.terms()) {
            if (!s.empty()) s += " ";
            s += (sgn(c) < 0 ? "-" : "+") + to_string(Rational(abs(c))) + "*" + exterior::mask_name(1, m);
        }
        names.push_back(s);
    }
    j["basis"] = names;
    j["components"] = a.components.size();
    j["data"] = base_name(path) + ".bin";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << j.dump(2) << "\n";
    std::vector<const GridField*> fields;
    for (const auto& c : a.components) fields.push_back(&c);
    write_payload(path + ".bin", fields);
}

GridRuminForm read_form(const std::string& path) {
    nlohmann::json j = read_header(path);
    if (j.value("format", "") != "rumin-grid-form") throw std::runtime_error("not a grid form header: " + path);
    GridSpec spec = spec_from_json(j.at("grid"));
    const int h = j.at("degree").get<int>();
    const RuminBasis& basis = complex::build_basis(spec.n, h);
    const std::size_t comps = j.at("components").get<std::size_t>();
    if (comps != basis.dim()) throw std::runtime_error("component count does not match E_0 dimension");
    return GridRuminForm{&basis, spec, read_payload(sibling(path, j.at("data").get<std::string>()), spec, comps)};
}

void write_field(const std::string& path, const GridField& u) {
    nlohmann::json j;
    j["format"] = "rumin-grid-field";
    j["version"] = 1;
    j["grid"] = spec_json(u.spec());
    j["data"] = base_name(path) + ".bin";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << j.dump(2) << "\n";
    write_payload(path + ".bin", {&u});
}

GridField read_field(const std::string& path) {
    nlohmann::json j = read_header(path);
    if (j.value("format", "") != "rumin-grid-field") throw std::runtime_error("not a grid field header: " + path);
    GridSpec spec = spec_from_json(j.at("grid"));
    return read_payload(sibling(path, j.at("data").get<std::string>()), spec, 1).front();
}

void write_norms_csv(const std::string& path, const std::vector<NamedForm>& forms) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out.precision(12);
    out << "name,degree,nx,ny,nt,L1,L2,L4,Linf,bl_4/3,bl_4\n";
    for (const auto& [name, a] : forms) {
        const GridSpec& s = a->spec;
        out << name << ',' << a->degree() << ',' << s.count[0] << ',' << s.count[1] << ',' << s.count[2] << ','
            << norm(*a, 1.0) << ',' << norm(*a, 2.0) << ',' << norm(*a, 4.0) << ','
            << norm(*a, std::numeric_limits<double>::infinity()) << ',' << bl_norm(*a, 4.0 / 3.0) << ','
            << bl_norm(*a, 4.0) << '\n';
    }
}

}  // namespace rumin::grid
