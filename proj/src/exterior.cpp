#include "rumin/exterior.hpp"

#include <cctype>
#include <mutex>
#include <sstream>

namespace rumin::exterior {

int wedge_sign(Mask a, Mask b) {
    if ((a & b) != 0) return 0;
    // Each slot of b must move past every slot of a lying above it.
    int swaps = 0;
    for (Mask rest = b; rest != 0; rest &= rest - 1) {
        const Mask bit = rest & (~rest + 1);
        const Mask above = a & ~((bit << 1) - 1);
        swaps += std::popcount(above);
    }
    return swaps % 2 == 0 ? 1 : -1;
}

std::vector<Mask> basis_masks(int n, int degree) {
    const int slots = 2 * n + 1;
    std::vector<std::vector<int>> tuples;
    std::vector<int> current;
    auto rec = [&](auto&& self, int start) -> void {
        if (static_cast<int>(current.size()) == degree) {
            tuples.push_back(current);
            return;
        }
        for (int s = start; s < slots; ++s) {
            current.push_back(s);
            self(self, s + 1);
            current.pop_back();
        }
    };
    rec(rec, 0);
    std::vector<Mask> out;
    out.reserve(tuples.size());
    for (const auto& t : tuples) {
        Mask m = 0;
        for (int s : t) m |= Mask{1} << s;
        out.push_back(m);
    }
    return out;
}

std::string mask_name(int n, Mask m) {
    if (m == 0) return "1";
    std::string out;
    for (int s = 0; s <= 2 * n; ++s) {
        if ((m & (Mask{1} << s)) == 0) continue;
        if (!out.empty()) out += "^";
        if (s < n) out += "dx" + std::to_string(s + 1);
        else if (s < 2 * n) out += "dy" + std::to_string(s - n + 1);
        else out += "theta";
    }
    return out;
}

PolyForm wedge(const PolyForm& a, const PolyForm& b) {
    const int n = a.n();
    const int deg = a.degree() + b.degree();
    if (deg > 2 * n + 1) return PolyForm(n, 2 * n + 1);
    PolyForm out(n, deg);
    for (const auto& [ma, ca] : a.terms()) {
        for (const auto& [mb, cb] : b.terms()) {
            int s = wedge_sign(ma, mb);
            if (s == 0) continue;
            out.add(ma | mb, ca * cb * Rational(s));
        }
    }
    return out;
}

ConstForm wedge(const ConstForm& a, const ConstForm& b) {
    const int n = a.n();
    const int deg = a.degree() + b.degree();
    if (deg > 2 * n + 1) return ConstForm(n, 2 * n + 1);
    ConstForm out(n, deg);
    for (const auto& [ma, ca] : a.terms()) {
        for (const auto& [mb, cb] : b.terms()) {
            int s = wedge_sign(ma, mb);
            if (s == 0) continue;
            out.add(ma | mb, Rational(ca * cb * s));
        }
    }
    return out;
}

PolyScalar inner(const PolyForm& a, const PolyForm& b) {
    PolyScalar out(2 * a.n() + 1);
    for (const auto& [m, c] : a.terms()) {
        auto it = b.terms().find(m);
        if (it != b.terms().end()) out += c * it->second;
    }
    return out;
}

Rational inner(const ConstForm& a, const ConstForm& b) {
    Rational out = 0;
    for (const auto& [m, c] : a.terms()) {
        auto it = b.terms().find(m);
        if (it != b.terms().end()) out += c * it->second;
    }
    return out;
}

namespace {

// Coordinate exterior derivative of a form written in the coordinate coframe
// (dx, dy, dt), where slot 2n means dt.
PolyForm coordinate_d(const PolyForm& a) {
    const int n = a.n();
    PolyForm out(n, a.degree() + 1);
    for (const auto& [m, c] : a.terms()) {
        for (int var = 0; var <= 2 * n; ++var) {
            const Mask e = Mask{1} << var;
            int s = wedge_sign(e, m);
            if (s == 0) continue;
            out.add(e | m, c.derivative(var) * Rational(s));
        }
    }
    return out;
}

// Rewrites a coordinate-coframe form in the left-invariant coframe using
// dt = theta + 1/2 sum_j (x_j dy_j - y_j dx_j).
PolyForm coordinate_to_coframe(const PolyForm& a) {
    const int n = a.n();
    const int nv = 2 * n + 1;
    PolyForm dt(n, 1);
    dt.add(theta_slot(n), PolyScalar(nv, 1));
    for (int j = 0; j < n; ++j) {
        dt.add(Mask{1} << (n + j), PolyScalar::variable(nv, j) * Rational(1, 2));
        dt.add(Mask{1} << j, PolyScalar::variable(nv, n + j) * Rational(-1, 2));
    }
    PolyForm out(n, a.degree());
    for (const auto& [m, c] : a.terms()) {
        if (!has_theta(n, m)) {
            out.add(m, c);
            continue;
        }
        const Mask rest = m & ~theta_slot(n);
        // e^J ^ dt with dt expanded.
        PolyForm piece = wedge(basis_form(n, rest), dt);
        out += multiply(c, piece);
    }
    return out;
}

}  // namespace

const ConstForm& contact_differential(int n) {
    static std::mutex mu;
    static std::map<int, ConstForm> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    const int nv = 2 * n + 1;
    // theta in the coordinate coframe.
    PolyForm theta(n, 1);
    theta.add(theta_slot(n), PolyScalar(nv, 1));
    for (int j = 0; j < n; ++j) {
        theta.add(Mask{1} << (n + j), PolyScalar::variable(nv, j) * Rational(-1, 2));
        theta.add(Mask{1} << j, PolyScalar::variable(nv, n + j) * Rational(1, 2));
    }
    PolyForm dtheta = coordinate_to_coframe(coordinate_d(theta));
    ConstForm out(n, 2);
    for (const auto& [m, c] : dtheta.terms()) {
        if (c.total_degree() != 0) throw std::logic_error("dtheta is not left-invariant");
        out.add(m, c.coefficient(Monomial{}));
    }
    return cache.emplace(n, std::move(out)).first->second;
}

const LefschetzTable& lefschetz_table(int n, int h) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, LefschetzTable> cache;
    std::lock_guard lock(mu);
    auto key = std::make_pair(n, h);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    LefschetzTable table;
    table.source = basis_masks(n, h);
    if (h + 2 <= 2 * n + 1) table.target = basis_masks(n, h + 2);
    table.entries.assign(table.target.size(), std::vector<Rational>(table.source.size(), 0));
    const ConstForm& dtheta = contact_differential(n);
    for (std::size_t s = 0; s < table.source.size(); ++s) {
        ConstForm image = wedge(dtheta, ConstForm::basis(n, table.source[s], 1));
        for (std::size_t r = 0; r < table.target.size(); ++r) {
            table.entries[r][s] = image.coefficient(table.target[r]);
        }
    }
    return cache.emplace(key, std::move(table)).first->second;
}

PolyForm dilation_pullback(const Rational& lambda, const PolyForm& a) {
    if (sgn(lambda) <= 0) throw std::invalid_argument("dilation factor must be positive");
    const int n = a.n();
    PolyForm out(n, a.degree());
    for (const auto& [m, c] : a.terms()) {
        out.add(m, c.dilate(lambda) * rumin::pow(lambda, static_cast<unsigned>(mask_weight(n, m))));
    }
    return out;
}

PolyForm multiply(const PolyScalar& f, const PolyForm& a) {
    PolyForm out(a.n(), a.degree());
    for (const auto& [m, c] : a.terms()) out.add(m, f * c);
    return out;
}

PolyForm basis_form(int n, Mask m, const Rational& c) {
    return PolyForm::basis(n, m, PolyScalar(2 * n + 1, c));
}

// ---------------------------------------------------------------------------
// Text format

std::string to_text(const PolyForm& a) {
    std::ostringstream out;
    out << "form n=" << a.n() << " degree=" << a.degree() << "\n";
    for (const auto& [m, c] : a.terms()) {
        out << mask_name(a.n(), m) << " : " << to_string(c) << "\n";
    }
    return out.str();
}

namespace {

class PolyParser {
public:
    PolyParser(std::string_view text, int n) : text_(text), n_(n), nv_(2 * n + 1) {}

    PolyScalar parse() {
        PolyScalar result(nv_);
        skip_space();
        bool first = true;
        while (pos_ < text_.size()) {
            int sign = 1;
            if (peek() == '+' || peek() == '-') {
                sign = peek() == '-' ? -1 : 1;
                ++pos_;
                skip_space();
            } else if (!first) {
                fail("expected '+' or '-'");
            }
            first = false;
            result += parse_term() * Rational(sign);
            skip_space();
        }
        return result;
    }

private:
    PolyScalar parse_term() {
        Rational coef = 1;
        Monomial m;
        bool any = false;
        while (true) {
            skip_space();
            if (pos_ >= text_.size()) break;
            char c = peek();
            if (std::isdigit(static_cast<unsigned char>(c))) {
                coef *= parse_number();
            } else if (c == 'x' || c == 'y' || c == 't') {
                int var = parse_variable();
                unsigned power = 1;
                skip_space();
                if (pos_ < text_.size() && peek() == '^') {
                    ++pos_;
                    power = static_cast<unsigned>(parse_integer());
                }
                m.set(var, m[var] + power);
            } else {
                fail("unexpected character");
            }
            any = true;
            skip_space();
            if (pos_ < text_.size() && peek() == '*') {
                ++pos_;
                continue;
            }
            break;
        }
        if (!any) fail("empty term");
        return PolyScalar::monomial(nv_, m, coef);
    }

    Rational parse_number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '/')) {
            ++pos_;
        }
        return parse_rational(text_.substr(start, pos_ - start));
    }

    long parse_integer() {
        skip_space();
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        if (start == pos_) fail("expected integer");
        return std::stol(std::string(text_.substr(start, pos_ - start)));
    }

    int parse_variable() {
        char c = text_[pos_++];
        if (c == 't') return 2 * n_;
        long idx = parse_integer();
        if (idx < 1 || idx > n_) fail("variable index out of range");
        return (c == 'x' ? 0 : n_) + static_cast<int>(idx) - 1;
    }

    char peek() const { return text_[pos_]; }
    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("polynomial parse error at " + std::to_string(pos_) + ": " +
                                    what);
    }

    std::string_view text_;
    int n_;
    int nv_;
    std::size_t pos_ = 0;
};

Mask parse_mask(std::string_view name, int n) {
    std::string s(name);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    if (s == "1") return 0;
    Mask m = 0;
    std::stringstream ss(s);
    std::string tok;
    Mask previous = 0;
    while (std::getline(ss, tok, '^')) {
        int slot;
        if (tok == "theta") {
            slot = 2 * n;
        } else if (tok.size() > 2 && (tok.rfind("dx", 0) == 0 || tok.rfind("dy", 0) == 0)) {
            int idx = std::stoi(tok.substr(2));
            if (idx < 1 || idx > n) throw std::invalid_argument("coframe index out of range");
            slot = (tok[1] == 'x' ? 0 : n) + idx - 1;
        } else {
            throw std::invalid_argument("unknown covector: " + tok);
        }
        const Mask bit = Mask{1} << slot;
        if (bit <= previous) throw std::invalid_argument("covectors must be in increasing order");
        previous = bit;
        m |= bit;
    }
    return m;
}

}  // namespace

PolyScalar parse_poly(std::string_view text, int n) { return PolyParser(text, n).parse(); }

PolyForm parse_form(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string header;
    if (!std::getline(in, header)) throw std::invalid_argument("empty form text");
    int n = 0;
    int degree = 0;
    if (std::sscanf(header.c_str(), "form n=%d degree=%d", &n, &degree) != 2) {
        throw std::invalid_argument("malformed form header: " + header);
    }
    PolyForm out(n, degree);
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto colon = line.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("missing ':' in form line");
        Mask m = parse_mask(std::string_view(line).substr(0, colon), n);
        if (mask_degree(m) != degree) throw std::invalid_argument("term degree mismatch");
        out.add(m, parse_poly(std::string_view(line).substr(colon + 1), n));
    }
    return out;
}

}  // namespace rumin::exterior
