#include "rumin/rumin.hpp"

#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace rumin::complex {

namespace {

std::mutex& cache_mutex() {
    static std::mutex m;
    return m;
}

// Scales a rational vector to a primitive integer vector with a positive leading entry.
void make_primitive(std::vector<Rational>& v) {
    mpz_class den = 1;
    for (const auto& q : v)
        if (!is_zero(q)) den = lcm(den, mpz_class(q.get_den()));
    mpz_class g = 0;
    for (auto& q : v) {
        q *= den;
        if (!is_zero(q)) g = gcd(g, mpz_class(q.get_num()));
    }
    if (g == 0) return;
    int lead = 0;
    for (const auto& q : v) {
        if (!is_zero(q)) {
            lead = sgn(q);
            break;
        }
    }
    Rational scale(g * lead);
    for (auto& q : v) q /= scale;
}

Rational dot(const std::vector<Rational>& a, const std::vector<Rational>& b) {
    Rational s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::vector<std::vector<Rational>> gram_schmidt(std::vector<std::vector<Rational>> vs) {
    std::vector<std::vector<Rational>> out;
    std::vector<Rational> n2;
    for (auto& v : vs) {
        for (std::size_t k = 0; k < out.size(); ++k) {
            Rational f = dot(v, out[k]) / n2[k];
            if (is_zero(f)) continue;
            for (std::size_t i = 0; i < v.size(); ++i) v[i] -= f * out[k][i];
        }
        make_primitive(v);
        n2.push_back(dot(v, v));
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<std::vector<Rational>> identity_columns(std::size_t dim) {
    std::vector<std::vector<Rational>> out;
    for (std::size_t i = 0; i < dim; ++i) {
        std::vector<Rational> v(dim, 0);
        v[i] = 1;
        out.push_back(std::move(v));
    }
    return out;
}

// Primitive horizontal covectors, h <= n: kernel of Lambda = L^T on horizontal h-covectors.
RuminBasis primitive_basis(int n, int h) {
    RuminBasis basis;
    basis.n = n;
    basis.h = h;
    const std::vector<Mask> masks = horizontal_masks(n, h);
    auto kernel = h < 2 ? identity_columns(masks.size())
                        : linalg::nullspace(horizontal_lefschetz(n, h - 2).map.transpose());
    for (auto& v : gram_schmidt(std::move(kernel))) {
        ConstForm f(n, h);
        for (std::size_t i = 0; i < masks.size(); ++i) f.add(masks[i], v[i]);
        basis.norms2.push_back(exterior::inner(f, f));
        basis.elements.push_back(std::move(f));
    }
    return basis;
}

}  // namespace

std::vector<Mask> horizontal_masks(int n, int k) {
    std::vector<Mask> out;
    if (k < 0 || k > 2 * n) return out;
    for (Mask m : exterior::basis_masks(n, k))
        if (!exterior::has_theta(n, m)) out.push_back(m);
    return out;
}

const HorizontalLefschetz& horizontal_lefschetz(int n, int k) {
    static std::map<std::pair<int, int>, HorizontalLefschetz> cache;
    std::lock_guard lock(cache_mutex());
    auto key = std::make_pair(n, k);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    HorizontalLefschetz lef;
    lef.source = horizontal_masks(n, k);
    lef.target = horizontal_masks(n, k + 2);
    lef.map = linalg::Matrix(lef.target.size(), lef.source.size());
    const ConstForm& dtheta = exterior::contact_differential(n);
    std::map<Mask, std::size_t> row;
    for (std::size_t r = 0; r < lef.target.size(); ++r) row[lef.target[r]] = r;
    for (std::size_t s = 0; s < lef.source.size(); ++s) {
        for (const auto& [mt, ct] : dtheta.terms()) {
            int sign = exterior::wedge_sign(mt, lef.source[s]);
            if (sign == 0) continue;
            lef.map(row.at(mt | lef.source[s]), s) += ct * sign;
        }
    }
    lef.pinv = linalg::pseudo_inverse(lef.map);
    return cache.emplace(key, std::move(lef)).first->second;
}

const RuminBasis& build_basis(int n, int h, int n_max) {
    if (n < 1 || n > n_max) throw std::invalid_argument("unsupported dimension n");
    if (h < 0 || h > 2 * n + 1) throw std::out_of_range("Rumin degree out of range");
    // horizontal_lefschetz takes the lock itself, so the basis is built outside it
    static std::map<std::pair<int, int>, RuminBasis> cache;
    auto key = std::make_pair(n, h);
    {
        std::lock_guard lock(cache_mutex());
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    RuminBasis b;
    if (h <= n) {
        b = primitive_basis(n, h);
    } else {
        // star of the dual primitive basis; lands in theta ^ ker L and keeps the norms
        const RuminBasis& dual = build_basis(n, 2 * n + 1 - h, n_max);
        b.n = n;
        b.h = h;
        b.norms2 = dual.norms2;
        for (const auto& e : dual.elements) b.elements.push_back(exterior::hodge_star(e));
    }
    std::lock_guard lock(cache_mutex());
    return cache.emplace(key, std::move(b)).first->second;
}

// ---------------------------------------------------------------------------

LeftInvariantOperator::LeftInvariantOperator(int n, int source_degree, int target_degree)
    : n_(n), source_(source_degree), target_(target_degree) {
    cols_ = build_basis(n, source_degree).dim();
    rows_ = (target_degree >= 0 && target_degree <= 2 * n + 1) ? build_basis(n, target_degree).dim()
                                                               : 0;
    entries_.assign(rows_ * cols_, FieldOperator(n));
}

bool LeftInvariantOperator::is_zero() const {
    for (const auto& e : entries_)
        if (!e.is_zero()) return false;
    return true;
}

int LeftInvariantOperator::weight() const {
    int w = 0;
    for (const auto& e : entries_) {
        if (e.is_zero()) continue;
        int ew = e.weight();
        if (ew < 0) return -1;
        if (w == 0) w = ew;
        else if (w != ew) return -1;
    }
    return w;
}

LeftInvariantOperator operator*(const LeftInvariantOperator& a, const LeftInvariantOperator& b) {
    if (a.cols_ != b.rows_ || a.source_ != b.target_) {
        throw std::invalid_argument("operator composition degree mismatch");
    }
    LeftInvariantOperator out(a.n_, b.source_, a.target_);
    for (std::size_t i = 0; i < a.rows_; ++i)
        for (std::size_t k = 0; k < a.cols_; ++k) {
            const FieldOperator& aik = a.at(i, k);
            if (aik.is_zero()) continue;
            for (std::size_t j = 0; j < b.cols_; ++j) {
                if (b.at(k, j).is_zero()) continue;
                out.at(i, j) += aik * b.at(k, j);
            }
        }
    return out;
}

LeftInvariantOperator operator+(const LeftInvariantOperator& a, const LeftInvariantOperator& b) {
    if (a.source_ != b.source_ || a.target_ != b.target_) throw std::invalid_argument("shape mismatch");
    LeftInvariantOperator out = a;
    for (std::size_t i = 0; i < out.entries_.size(); ++i) out.entries_[i] += b.entries_[i];
    return out;
}

LeftInvariantOperator operator-(const LeftInvariantOperator& a, const LeftInvariantOperator& b) {
    if (a.source_ != b.source_ || a.target_ != b.target_) throw std::invalid_argument("shape mismatch");
    LeftInvariantOperator out = a;
    for (std::size_t i = 0; i < out.entries_.size(); ++i) out.entries_[i] -= b.entries_[i];
    return out;
}

LeftInvariantOperator LeftInvariantOperator::formal_adjoint() const {
    // (D^*)_{ki} = (D_{ik})^* |e_i|^2 / |e_k|^2 for orthogonal, non-normalized bases
    LeftInvariantOperator out(n_, target_, source_);
    const RuminBasis& src = build_basis(n_, source_);
    const RuminBasis& tgt = build_basis(n_, target_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = 0; k < cols_; ++k) {
            if (at(i, k).is_zero()) continue;
            out.at(k, i) = at(i, k).adjoint() * Rational(tgt.norms2[i] / src.norms2[k]);
        }
    return out;
}

PolyRuminForm LeftInvariantOperator::apply(const PolyRuminForm& a) const {
    if (a.n() != n_ || a.degree() != source_) throw std::invalid_argument("operator source mismatch");
    PolyRuminForm out = zero_form(n_, target_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = 0; k < cols_; ++k) {
            if (at(i, k).is_zero() || a.coefficients[k].is_zero()) continue;
            out.coefficients[i] += at(i, k).apply(a.coefficients[k]);
        }
    return out;
}

namespace {

template <class Build>
const LeftInvariantOperator& cached_operator(std::map<std::pair<int, int>, LeftInvariantOperator>& cache,
                                             int n, int h, Build build) {
    auto key = std::make_pair(n, h);
    {
        std::lock_guard lock(cache_mutex());
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    LeftInvariantOperator op = build();
    std::lock_guard lock(cache_mutex());
    return cache.emplace(key, std::move(op)).first->second;
}

// Runs a form-level map on e_k (x) Id and reads off the operator matrix.
template <class F>
LeftInvariantOperator extract(int n, int source, int target, F map) {
    LeftInvariantOperator op(n, source, target);
    if (op.rows() == 0) return op;
    const RuminBasis& src = build_basis(n, source);
    for (std::size_t k = 0; k < src.dim(); ++k) {
        Form<FieldOperator> in = detail::embed(n, src.elements[k], FieldOperator::identity(n));
        RuminForm<FieldOperator> out = proj_E0(map(in));
        for (std::size_t i = 0; i < op.rows(); ++i) op.at(i, k) = out.coefficients[i];
    }
    return op;
}

}  // namespace

const LeftInvariantOperator& d_c_operator(int n, int h) {
    static std::map<std::pair<int, int>, LeftInvariantOperator> cache;
    return cached_operator(cache, n, h, [&] {
        build_basis(n, h);
        return extract(n, h, h + 1, [](const Form<FieldOperator>& a) { return d_c(a); });
    });
}

const LeftInvariantOperator& d_c_star_operator(int n, int h) {
    static std::map<std::pair<int, int>, LeftInvariantOperator> cache;
    return cached_operator(cache, n, h, [&] {
        build_basis(n, h);
        if (h == 0) throw std::out_of_range("d_c^* is not defined on functions");
        return extract(n, h, h - 1, [](const Form<FieldOperator>& a) { return d_c_star(a); });
    });
}

const LeftInvariantOperator& laplacian(int n, int h) {
    static std::map<std::pair<int, int>, LeftInvariantOperator> cache;
    return cached_operator(cache, n, h, [&] {
        build_basis(n, h);
        const bool has_down = h > 0;
        const bool has_up = h < 2 * n + 1;
        LeftInvariantOperator up_part(n, h, h);    // d^* d
        LeftInvariantOperator down_part(n, h, h);  // d d^*
        if (has_up) up_part = d_c_star_operator(n, h + 1) * d_c_operator(n, h);
        if (has_down) down_part = d_c_operator(n, h - 1) * d_c_star_operator(n, h);
        if (h == n) down_part = down_part * down_part;
        if (h == n + 1) up_part = up_part * up_part;
        return up_part + down_part;
    });
}

const FormOperator& proj_E_operator(int n, int h) {
    static std::map<std::pair<int, int>, FormOperator> cache;
    auto key = std::make_pair(n, h);
    {
        std::lock_guard lock(cache_mutex());
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    if (n < 1 || h < 0 || h > 2 * n + 1) throw std::out_of_range("form degree out of range");
    FormOperator op;
    op.n = n;
    op.source_degree = h;
    op.target_degree = h;
    op.source = exterior::basis_masks(n, h);
    op.target = op.source;
    op.entries.assign(op.source.size() * op.target.size(), FieldOperator(n));
    for (std::size_t c = 0; c < op.source.size(); ++c) {
        const Form<FieldOperator> out =
            proj_E(Form<FieldOperator>::basis(n, op.source[c], FieldOperator::identity(n)));
        for (std::size_t r = 0; r < op.target.size(); ++r)
            op.entries[r * op.source.size() + c] = out.coefficient(op.target[r]);
    }
    std::lock_guard lock(cache_mutex());
    return cache.emplace(key, std::move(op)).first->second;
}

// ---------------------------------------------------------------------------

void VariableOperator::add(const heisenberg::MultiIndex& index, const PolyScalar& f) {
    if (f.is_zero()) return;
    auto [it, inserted] = terms.try_emplace(index, f);
    if (!inserted) {
        it->second += f;
        if (it->second.is_zero()) terms.erase(it);
    }
}

PolyScalar VariableOperator::apply(const PolyScalar& u) const {
    PolyScalar out(2 * n + 1);
    for (const auto& [index, f] : terms) out += f * heisenberg::apply_multi_index(n, index, u);
    return out;
}

unsigned VariableOperator::order() const {
    unsigned o = 0;
    for (const auto& [index, f] : terms) o = std::max(o, index.order());
    return o;
}

PolyRuminForm VariableOperatorMatrix::apply(const PolyRuminForm& a) const {
    PolyRuminForm out = zero_form(n, target_degree);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t k = 0; k < cols; ++k) {
            if (at(i, k).is_zero()) continue;
            out.coefficients[i] += at(i, k).apply(a.coefficients[k]);
        }
    return out;
}

unsigned VariableOperatorMatrix::order() const {
    unsigned o = 0;
    for (const auto& e : entries) o = std::max(o, e.order());
    return o;
}

bool VariableOperatorMatrix::is_zero() const {
    for (const auto& e : entries)
        if (!e.is_zero()) return false;
    return true;
}

namespace {

VariableOperatorMatrix empty_like(const LeftInvariantOperator& op) {
    VariableOperatorMatrix m;
    m.n = op.n();
    m.source_degree = op.source_degree();
    m.target_degree = op.target_degree();
    m.rows = op.rows();
    m.cols = op.cols();
    m.entries.assign(m.rows * m.cols, VariableOperator{op.n(), {}});
    return m;
}

}  // namespace

VariableOperatorMatrix commutator(const LeftInvariantOperator& op, const PolyScalar& zeta) {
    const int n = op.n();
    const int nf = 2 * n + 1;
    VariableOperatorMatrix out = empty_like(op);
    // derivatives W^J zeta are shared across entries
    std::map<heisenberg::MultiIndex, PolyScalar> dzeta;
    auto derivative = [&](const heisenberg::MultiIndex& j) -> const PolyScalar& {
        auto it = dzeta.find(j);
        if (it == dzeta.end()) it = dzeta.emplace(j, heisenberg::apply_multi_index(n, j, zeta)).first;
        return it->second;
    };
    for (std::size_t r = 0; r < op.rows(); ++r)
        for (std::size_t c = 0; c < op.cols(); ++c)
            for (const auto& [index, coeff] : op.at(r, c).terms()) {
                std::vector<int> word;
                for (int f = 0; f < nf; ++f)
                    for (unsigned p = 0; p < index[f]; ++p) word.push_back(f);
                const unsigned len = static_cast<unsigned>(word.size());
                // W^I (zeta u) = sum_S (W^{I|S} zeta)(W^{I|S^c} u); S = {} is zeta W^I u
                for (unsigned s = 1; s < (1u << len); ++s) {
                    heisenberg::MultiIndex on_zeta;
                    heisenberg::MultiIndex on_u;
                    for (unsigned k = 0; k < len; ++k) {
                        auto& target = (s >> k) & 1u ? on_zeta : on_u;
                        target.set(word[k], target[word[k]] + 1);
                    }
                    const PolyScalar& dz = derivative(on_zeta);
                    if (dz.is_zero()) continue;
                    out.at(r, c).add(on_u, dz * coeff);
                }
            }
    return out;
}

LeibnizSplit leibniz_decompose(const PolyScalar& zeta, int n, int h) {
    VariableOperatorMatrix full = commutator(d_c_operator(n, h), zeta);
    LeibnizSplit split{full, full};
    for (std::size_t i = 0; i < full.entries.size(); ++i) {
        split.order_zero.entries[i].terms.clear();
        split.first_order.entries[i].terms.clear();
        for (const auto& [index, f] : full.entries[i].terms) {
            if (index.order() == 0) split.order_zero.entries[i].add(index, f);
            else if (index.order() == 1) split.first_order.entries[i].add(index, f);
            else throw std::logic_error("commutator with d_c has order above one");
        }
    }
    return split;
}

PolyRuminForm commutator_action(const PolyScalar& zeta, const PolyRuminForm& alpha) {
    PolyRuminForm lhs = d_c(multiply(zeta, alpha));
    PolyRuminForm rhs = multiply(zeta, d_c(alpha));
    for (std::size_t i = 0; i < lhs.coefficients.size(); ++i) lhs.coefficients[i] -= rhs.coefficients[i];
    return lhs;
}

PolyRuminForm multiply(const PolyScalar& f, const PolyRuminForm& a) {
    PolyRuminForm out = a;
    for (auto& c : out.coefficients) c = f * c;
    return out;
}

PolyRuminForm zero_form(int n, int h) {
    const RuminBasis& b = build_basis(n, h);
    return PolyRuminForm{&b, std::vector<PolyScalar>(b.dim(), PolyScalar(2 * n + 1))};
}

std::string describe(const RuminBasis& basis) {
    std::ostringstream os;
    os << "E_0^" << basis.h << " on H^" << basis.n << " (dim " << basis.dim() << ")\n";
    for (std::size_t i = 0; i < basis.dim(); ++i) {
        os << "  e" << i << " =";
        bool first = true;
        for (const auto& [m, c] : basis.elements[i].terms()) {
            os << (first ? " " : " + ") << to_string(c) << " " << exterior::mask_name(basis.n, m);
            first = false;
        }
        os << "   |e|^2 = " << to_string(basis.norms2[i]) << "\n";
    }
    return os.str();
}

}  // namespace rumin::complex
