#include "rumin/heisenberg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rumin::heisenberg {

Point Point::identity(int n) {
    return Point{std::vector<Rational>(static_cast<std::size_t>(n), Rational(0)),
                 std::vector<Rational>(static_cast<std::size_t>(n), Rational(0)), Rational(0)};
}

std::vector<Rational> Point::coordinates() const {
    std::vector<Rational> c = x;
    c.insert(c.end(), y.begin(), y.end());
    c.push_back(t);
    return c;
}

namespace {

void check_same_dimension(const Point& p, const Point& q) {
    if (p.x.size() != q.x.size() || p.y.size() != q.y.size() || p.x.size() != p.y.size()) {
        throw std::invalid_argument("points of different Heisenberg dimension");
    }
}

}  // namespace

Point group_mul(const Point& p, const Point& q) {
    check_same_dimension(p, q);
    Point r = p;
    Rational twist = 0;
    for (std::size_t j = 0; j < p.x.size(); ++j) {
        r.x[j] += q.x[j];
        r.y[j] += q.y[j];
        twist += p.x[j] * q.y[j] - p.y[j] * q.x[j];
    }
    r.t = p.t + q.t + twist / 2;
    return r;
}

Point group_inv(const Point& p) {
    Point r = p;
    for (auto& v : r.x) v = -v;
    for (auto& v : r.y) v = -v;
    r.t = -p.t;
    return r;
}

Point dilate(const Rational& lambda, const Point& p) {
    if (sgn(lambda) <= 0) throw std::invalid_argument("dilation factor must be positive");
    Point r = p;
    for (auto& v : r.x) v *= lambda;
    for (auto& v : r.y) v *= lambda;
    r.t *= lambda * lambda;
    return r;
}

Rational koranyi_norm4(const Point& p) {
    Rational sq = 0;
    for (std::size_t j = 0; j < p.x.size(); ++j) sq += p.x[j] * p.x[j] + p.y[j] * p.y[j];
    return sq * sq + 16 * p.t * p.t;
}

double koranyi_norm(const Point& p) { return std::pow(koranyi_norm4(p).get_d(), 0.25); }

double gauge_distance(const Point& p, const Point& q) {
    return koranyi_norm(group_mul(group_inv(p), q));
}

PolyScalar gauge_norm4_poly(int n) {
    const int nv = 2 * n + 1;
    PolyScalar sq(nv);
    for (int v = 0; v < 2 * n; ++v) {
        PolyScalar x = PolyScalar::variable(nv, v);
        sq += x * x;
    }
    PolyScalar t = PolyScalar::variable(nv, 2 * n);
    return sq * sq + Rational(16) * (t * t);
}

PolyScalar gauge_bump(int n, const Rational& radius, unsigned k) {
    if (sgn(radius) <= 0) throw std::invalid_argument("bump radius must be positive");
    const Rational r4 = radius * radius * radius * radius;
    PolyScalar base = PolyScalar(2 * n + 1, Rational(1)) - gauge_norm4_poly(n) * Rational(1 / r4);
    return base.pow(k);
}

double koranyi_norm(std::span<const double> c) {
    double sq = 0.0;
    const std::size_t last = c.size() - 1;
    for (std::size_t i = 0; i < last; ++i) sq += c[i] * c[i];
    return std::pow(sq * sq + 16.0 * c[last] * c[last], 0.25);
}

void group_mul(std::span<const double> p, std::span<const double> q, std::span<double> out) {
    const std::size_t n = (p.size() - 1) / 2;
    double twist = 0.0;
    for (std::size_t j = 0; j < n; ++j) twist += p[j] * q[n + j] - p[n + j] * q[j];
    for (std::size_t i = 0; i < 2 * n; ++i) out[i] = p[i] + q[i];
    out[2 * n] = p[2 * n] + q[2 * n] + 0.5 * twist;
}

MultiIndex::MultiIndex(std::span<const unsigned> exps) {
    exps_.fill(0);
    if (exps.size() > exps_.size()) throw std::invalid_argument("multi-index too long");
    for (std::size_t i = 0; i < exps.size(); ++i) set(static_cast<int>(i), exps[i]);
}

MultiIndex MultiIndex::unit(int field, int n) {
    if (field < 1 || field > 2 * n + 1) throw std::out_of_range("field index out of range");
    MultiIndex m;
    m.set(field - 1, 1);
    return m;
}

void MultiIndex::set(int field, unsigned power) {
    if (field < 0 || field >= kMaxVars) throw std::out_of_range("multi-index position");
    if (power > 255) throw std::overflow_error("multi-index exponent exceeds 255");
    exps_[static_cast<std::size_t>(field)] = static_cast<std::uint8_t>(power);
}

unsigned MultiIndex::order() const {
    unsigned s = 0;
    for (auto e : exps_) s += e;
    return s;
}

unsigned MultiIndex::homogeneity(int n) const { return order() + (*this)[2 * n]; }

PolyScalar apply_field(int n, int j, const PolyScalar& f) {
    if (j < 1 || j > 2 * n + 1) throw std::out_of_range("field index out of range");
    const int t_var = 2 * n;
    if (j == 2 * n + 1) return f.derivative(t_var);
    const Rational half(1, 2);
    PolyScalar ft = f.derivative(t_var);
    if (j <= n) {
        // X_i = d/dx_i - 1/2 y_i d/dt
        return f.derivative(j - 1) - ft.times_variable(n + j - 1) * half;
    }
    // Y_i = d/dy_i + 1/2 x_i d/dt
    const int i = j - n;
    return f.derivative(n + i - 1) + ft.times_variable(i - 1) * half;
}

PolyScalar apply_multi_index(int n, const MultiIndex& index, const PolyScalar& f) {
    PolyScalar r = f;
    for (int pos = 2 * n; pos >= 0; --pos) {
        for (unsigned k = 0; k < index[pos]; ++k) {
            if (r.is_zero()) return r;
            r = apply_field(n, pos + 1, r);
        }
    }
    return r;
}

PolyScalar left_translate(int n, const PolyScalar& f, const Point& q) {
    const int nv = 2 * n + 1;
    if (f.num_vars() != nv || q.dimension() != n) {
        throw std::invalid_argument("left_translate: dimension mismatch");
    }
    // Coordinates of q.p as polynomials in p.
    std::vector<PolyScalar> sub;
    sub.reserve(static_cast<std::size_t>(nv));
    for (int i = 0; i < n; ++i) sub.push_back(PolyScalar(nv, q.x[i]) + PolyScalar::variable(nv, i));
    for (int i = 0; i < n; ++i) {
        sub.push_back(PolyScalar(nv, q.y[i]) + PolyScalar::variable(nv, n + i));
    }
    PolyScalar tt = PolyScalar(nv, q.t) + PolyScalar::variable(nv, 2 * n);
    for (int j = 0; j < n; ++j) {
        tt += PolyScalar::variable(nv, n + j) * (q.x[j] / 2);
        tt -= PolyScalar::variable(nv, j) * (q.y[j] / 2);
    }
    sub.push_back(tt);

    std::vector<std::vector<PolyScalar>> powers(static_cast<std::size_t>(nv));
    PolyScalar out(nv);
    for (const auto& [m, c] : f.terms()) {
        PolyScalar term(nv, c);
        for (int i = 0; i < nv; ++i) {
            auto& pw = powers[static_cast<std::size_t>(i)];
            if (pw.empty()) pw.push_back(PolyScalar(nv, 1));
            while (pw.size() <= m[i]) pw.push_back(pw.back() * sub[static_cast<std::size_t>(i)]);
            if (m[i] != 0) term = term * pw[m[i]];
        }
        out += term;
    }
    return out;
}

// ---------------------------------------------------------------------------
// FieldOperator

FieldOperator FieldOperator::identity(int n) { return scalar(n, 1); }

FieldOperator FieldOperator::scalar(int n, const Rational& c) {
    FieldOperator op(n);
    op.add_term(MultiIndex{}, c);
    return op;
}

FieldOperator FieldOperator::field(int n, int j) {
    FieldOperator op(n);
    op.add_term(MultiIndex::unit(j, n), 1);
    return op;
}

void FieldOperator::add_term(const MultiIndex& index, const Rational& c) {
    if (rumin::is_zero(c)) return;
    auto [it, inserted] = terms_.try_emplace(index, c);
    if (!inserted) {
        it->second += c;
        if (rumin::is_zero(it->second)) terms_.erase(it);
    }
}

FieldOperator& FieldOperator::operator+=(const FieldOperator& other) {
    if (n_ == 0) n_ = other.n_;
    for (const auto& [m, c] : other.terms_) add_term(m, c);
    return *this;
}

FieldOperator& FieldOperator::operator-=(const FieldOperator& other) {
    if (n_ == 0) n_ = other.n_;
    for (const auto& [m, c] : other.terms_) add_term(m, -c);
    return *this;
}

FieldOperator& FieldOperator::operator*=(const Rational& c) {
    if (rumin::is_zero(c)) {
        terms_.clear();
        return *this;
    }
    for (auto& [m, v] : terms_) v *= c;
    return *this;
}

FieldOperator FieldOperator::operator-() const {
    FieldOperator r = *this;
    for (auto& [m, c] : r.terms_) c = -c;
    return r;
}

namespace {

Rational binomial(unsigned a, unsigned k) {
    Rational r = 1;
    for (unsigned i = 0; i < k; ++i) r = r * (a - i) / (i + 1);
    return r;
}

Rational factorial(unsigned k) {
    Rational r = 1;
    for (unsigned i = 2; i <= k; ++i) r *= i;
    return r;
}

// Normal-orders X^a Y^b T^c X^{a'} Y^{b'} T^{c'} by commuting Y_i^{b_i} past X_i^{a'_i}:
//   Y^b X^a = sum_k (-1)^k k! C(a,k) C(b,k) X^{a-k} Y^{b-k} T^k.
void multiply_monomials(int n, const MultiIndex& left, const MultiIndex& right, const Rational& coef,
                        int i, MultiIndex& acc, FieldOperator& out) {
    if (i == n) {
        out.add_term(acc, coef);
        return;
    }
    const unsigned b = left[n + i];
    const unsigned a2 = right[i];
    const unsigned kmax = std::min(b, a2);
    for (unsigned k = 0; k <= kmax; ++k) {
        Rational c = coef * factorial(k) * binomial(a2, k) * binomial(b, k);
        if (k % 2 == 1) c = -c;
        MultiIndex next = acc;
        next.set(i, left[i] + a2 - k);
        next.set(n + i, b - k + right[n + i]);
        next.set(2 * n, acc[2 * n] + k);
        multiply_monomials(n, left, right, c, i + 1, next, out);
    }
}

}  // namespace

FieldOperator operator*(const FieldOperator& a, const FieldOperator& b) {
    const int n = a.n_ != 0 ? a.n_ : b.n_;
    FieldOperator out(n);
    for (const auto& [ma, ca] : a.terms_) {
        for (const auto& [mb, cb] : b.terms_) {
            MultiIndex acc;
            acc.set(2 * n, ma[2 * n] + mb[2 * n]);
            multiply_monomials(n, ma, mb, ca * cb, 0, acc, out);
        }
    }
    return out;
}

FieldOperator FieldOperator::apply_field(int j) const { return field(n_, j) * *this; }

FieldOperator FieldOperator::adjoint() const {
    FieldOperator out(n_);
    for (const auto& [m, c] : terms_) {
        // (X^a Y^b T^c)^* = (-1)^{|I|} T^c Y^b X^a.
        MultiIndex ys;
        MultiIndex xs;
        for (int i = 0; i < n_; ++i) {
            xs.set(i, m[i]);
            ys.set(n_ + i, m[n_ + i]);
        }
        ys.set(2 * n_, m[2 * n_]);
        FieldOperator left(n_);
        left.add_term(ys, m.order() % 2 == 0 ? c : Rational(-c));
        FieldOperator right(n_);
        right.add_term(xs, 1);
        out += left * right;
    }
    return out;
}

PolyScalar FieldOperator::apply(const PolyScalar& f) const {
    PolyScalar out(f.num_vars());
    for (const auto& [m, c] : terms_) out += apply_multi_index(n_, m, f) * c;
    return out;
}

int FieldOperator::weight() const {
    int w = -2;
    for (const auto& [m, c] : terms_) {
        int mw = static_cast<int>(m.homogeneity(n_));
        if (w == -2) {
            w = mw;
        } else if (w != mw) {
            return -1;
        }
    }
    return w == -2 ? 0 : w;
}

unsigned FieldOperator::max_weight() const {
    unsigned w = 0;
    for (const auto& [m, c] : terms_) w = std::max(w, m.homogeneity(n_));
    return w;
}

std::string to_string(const FieldOperator& op) {
    if (op.is_zero()) return "0";
    const int n = op.n();
    std::ostringstream out;
    bool first = true;
    for (const auto& [m, c] : op.terms()) {
        bool negative = sgn(c) < 0;
        Rational mag = abs(c);
        if (!first) out << (negative ? " - " : " + ");
        else if (negative) out << "-";
        first = false;
        bool constant = m.order() == 0;
        if (mag != 1 || constant) {
            out << mag.get_str();
            if (!constant) out << "*";
        }
        bool first_factor = true;
        for (int pos = 0; pos <= 2 * n; ++pos) {
            if (m[pos] == 0) continue;
            if (!first_factor) out << "*";
            first_factor = false;
            if (pos < n) out << "X" << pos + 1;
            else if (pos < 2 * n) out << "Y" << pos - n + 1;
            else out << "T";
            if (m[pos] > 1) out << "^" << m[pos];
        }
    }
    return out.str();
}

std::vector<std::vector<int>> letter_orderings(int n, const MultiIndex& index) {
    std::vector<int> letters;
    for (int f = 0; f < 2 * n; ++f)
        for (unsigned p = 0; p < index[f]; ++p) letters.push_back(f + 1);
    std::vector<std::vector<int>> out;
    do {
        out.push_back(letters);
    } while (std::next_permutation(letters.begin(), letters.end()));
    return out;
}

FieldOperator symmetrized(int n, const MultiIndex& index) {
    const auto orderings = letter_orderings(n, index);
    MultiIndex tpow;
    tpow.set(2 * n, index[2 * n]);
    FieldOperator tail(n);
    tail.add_term(tpow, 1);
    FieldOperator out(n);
    for (const auto& word : orderings) {
        FieldOperator w = tail;
        for (auto it = word.rbegin(); it != word.rend(); ++it) w = w.apply_field(*it);
        out += w;
    }
    out *= Rational(1) / static_cast<long>(orderings.size());
    return out;
}

std::map<MultiIndex, Rational> symmetric_coordinates(const FieldOperator& op) {
    // sym(I) = W^I + lower order terms, so peeling off top-order terms terminates.
    std::map<MultiIndex, Rational> coords;
    FieldOperator rest = op;
    while (!rest.is_zero()) {
        const MultiIndex* top = nullptr;
        for (const auto& [m, c] : rest.terms())
            if (top == nullptr || m.order() > top->order()) top = &m;
        const MultiIndex index = *top;
        const Rational c = rest.terms().at(index);
        coords[index] += c;
        rest -= symmetrized(op.n(), index) * c;
    }
    return coords;
}

}  // namespace rumin::heisenberg
