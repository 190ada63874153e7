#include "rumin/poly.hpp"

#include <sstream>
#include <stdexcept>
#include <vector>

namespace rumin {

Rational parse_rational(std::string_view text) {
    Rational q;
    if (q.set_str(std::string(text), 10) != 0) {
        throw std::invalid_argument("malformed rational: " + std::string(text));
    }
    q.canonicalize();
    return q;
}

std::string to_string(const Rational& q) { return q.get_str(); }

Rational pow(const Rational& base, unsigned exponent) {
    Rational result = 1;
    for (unsigned i = 0; i < exponent; ++i) result *= base;
    return result;
}

Monomial Monomial::variable(int var, unsigned power) {
    Monomial m;
    m.set(var, power);
    return m;
}

void Monomial::set(int var, unsigned power) {
    if (var < 0 || var >= kMaxVars) throw std::out_of_range("monomial variable index");
    if (power > 255) throw std::overflow_error("monomial exponent exceeds 255");
    exps_[static_cast<std::size_t>(var)] = static_cast<std::uint8_t>(power);
}

unsigned Monomial::total_degree() const {
    unsigned d = 0;
    for (auto e : exps_) d += e;
    return d;
}

Monomial Monomial::operator*(const Monomial& other) const {
    Monomial m;
    for (int i = 0; i < kMaxVars; ++i) m.set(i, (*this)[i] + other[i]);
    return m;
}

PolyScalar::PolyScalar(int num_vars, const Rational& constant) : num_vars_(num_vars) {
    add_term(Monomial{}, constant);
}

PolyScalar PolyScalar::variable(int num_vars, int var) {
    PolyScalar p(num_vars);
    p.add_term(Monomial::variable(var), 1);
    return p;
}

PolyScalar PolyScalar::monomial(int num_vars, const Monomial& m, const Rational& c) {
    PolyScalar p(num_vars);
    p.add_term(m, c);
    return p;
}

Rational PolyScalar::coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Rational(0) : it->second;
}

void PolyScalar::add_term(const Monomial& m, const Rational& c) {
    if (rumin::is_zero(c)) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
        it->second += c;
        if (rumin::is_zero(it->second)) terms_.erase(it);
    }
}

PolyScalar& PolyScalar::operator+=(const PolyScalar& other) {
    if (num_vars_ == 0) num_vars_ = other.num_vars_;
    for (const auto& [m, c] : other.terms_) add_term(m, c);
    return *this;
}

PolyScalar& PolyScalar::operator-=(const PolyScalar& other) {
    if (num_vars_ == 0) num_vars_ = other.num_vars_;
    for (const auto& [m, c] : other.terms_) add_term(m, -c);
    return *this;
}

PolyScalar& PolyScalar::operator*=(const Rational& c) {
    if (rumin::is_zero(c)) {
        terms_.clear();
        return *this;
    }
    for (auto& [m, coef] : terms_) coef *= c;
    return *this;
}

PolyScalar PolyScalar::operator-() const {
    PolyScalar r = *this;
    for (auto& [m, c] : r.terms_) c = -c;
    return r;
}

PolyScalar operator*(const PolyScalar& a, const PolyScalar& b) {
    PolyScalar r(a.num_vars_ != 0 ? a.num_vars_ : b.num_vars_);
    for (const auto& [ma, ca] : a.terms_) {
        for (const auto& [mb, cb] : b.terms_) r.add_term(ma * mb, ca * cb);
    }
    return r;
}

PolyScalar PolyScalar::derivative(int var) const {
    PolyScalar r(num_vars_);
    for (const auto& [m, c] : terms_) {
        unsigned e = m[var];
        if (e == 0) continue;
        Monomial dm = m;
        dm.set(var, e - 1);
        r.add_term(dm, c * e);
    }
    return r;
}

PolyScalar PolyScalar::times_variable(int var) const {
    PolyScalar r(num_vars_);
    for (const auto& [m, c] : terms_) {
        Monomial mm = m;
        mm.set(var, m[var] + 1);
        r.terms_.emplace_hint(r.terms_.end(), mm, c);
    }
    return r;
}

unsigned PolyScalar::total_degree() const {
    unsigned d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m.total_degree());
    return d;
}

Rational PolyScalar::evaluate(std::span<const Rational> point) const {
    if (static_cast<int>(point.size()) != num_vars_) {
        throw std::invalid_argument("evaluation point has wrong dimension");
    }
    Rational sum = 0;
    for (const auto& [m, c] : terms_) {
        Rational v = c;
        for (int i = 0; i < num_vars_; ++i) {
            if (m[i] != 0) v *= rumin::pow(point[static_cast<std::size_t>(i)], m[i]);
        }
        sum += v;
    }
    return sum;
}

double PolyScalar::evaluate(std::span<const double> point) const {
    if (static_cast<int>(point.size()) != num_vars_) {
        throw std::invalid_argument("evaluation point has wrong dimension");
    }
    double sum = 0.0;
    for (const auto& [m, c] : terms_) {
        double v = c.get_d();
        for (int i = 0; i < num_vars_; ++i) {
            for (unsigned k = 0; k < m[i]; ++k) v *= point[static_cast<std::size_t>(i)];
        }
        sum += v;
    }
    return sum;
}

PolyScalar PolyScalar::dilate(const Rational& lambda) const {
    const int t_var = num_vars_ - 1;
    PolyScalar r(num_vars_);
    for (const auto& [m, c] : terms_) {
        unsigned w = m.total_degree() + m[t_var];
        r.add_term(m, c * rumin::pow(lambda, w));
    }
    return r;
}

int PolyScalar::homogeneous_weight() const {
    const int t_var = num_vars_ - 1;
    int w = -1;
    for (const auto& [m, c] : terms_) {
        int mw = static_cast<int>(m.total_degree() + m[t_var]);
        if (w == -1) {
            w = mw;
        } else if (w != mw) {
            return -1;
        }
    }
    return w;
}

PolyScalar PolyScalar::pow(unsigned k) const {
    PolyScalar r(num_vars_, 1);
    for (unsigned i = 0; i < k; ++i) r = r * *this;
    return r;
}

namespace {

std::string variable_name(int var, int num_vars) {
    const int n = (num_vars - 1) / 2;
    if (var == num_vars - 1) return "t";
    if (var < n) return "x" + std::to_string(var + 1);
    return "y" + std::to_string(var - n + 1);
}

}  // namespace

std::string to_string(const PolyScalar& p) {
    if (p.is_zero()) return "0";
    std::ostringstream out;
    bool first = true;
    // Highest-degree terms first reads more naturally.
    std::vector<std::pair<Monomial, Rational>> terms(p.terms().rbegin(), p.terms().rend());
    for (const auto& [m, c] : terms) {
        Rational mag = abs(c);
        bool negative = sgn(c) < 0;
        if (first) {
            if (negative) out << "-";
        } else {
            out << (negative ? " - " : " + ");
        }
        first = false;
        bool constant = m.total_degree() == 0;
        bool unit = mag == 1;
        if (!unit || constant) {
            out << mag.get_str();
            if (!constant) out << "*";
        }
        bool first_factor = true;
        for (int i = 0; i < p.num_vars(); ++i) {
            if (m[i] == 0) continue;
            if (!first_factor) out << "*";
            first_factor = false;
            out << variable_name(i, p.num_vars());
            if (m[i] > 1) out << "^" << m[i];
        }
    }
    return out.str();
}

}  // namespace rumin
