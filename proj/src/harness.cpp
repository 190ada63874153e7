#include "rumin/harness.hpp"

#include "rumin/heisenberg.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace rumin::harness {

using grid::GridField;
using grid::Mask;

namespace {

constexpr const char* kNote =
    "Empirical maxima and medians over seeded samples on finite grids; no constant is estimated or verified.";

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) body(i);
        });
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

Rational parse_rational(const std::string& s) {
    if (s.find('/') != std::string::npos) {
        Rational r(s);
        r.canonicalize();
        return r;
    }
    return Rational(std::stod(s));
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

Summary summarize(const std::vector<TrialRecord>& records, const std::string& label, std::size_t mesh) {
    Summary s;
    s.label = label;
    s.mesh = mesh;
    std::vector<double> ratios;
    for (const auto& r : records) {
        if (r.label != label || r.mesh != mesh) continue;
        if (r.failed) ++s.failed;
        if (r.failed || r.excluded) continue;
        ratios.push_back(r.ratio);
    }
    s.counted = ratios.size();
    if (!ratios.empty()) s.max_ratio = *std::max_element(ratios.begin(), ratios.end());
    s.median_ratio = median(ratios);
    return s;
}

void assert_finite(ExperimentResult& result, const Summary& s) {
    const bool ok = s.counted > 0 && s.failed == 0 && std::isfinite(s.max_ratio) && s.max_ratio > 0.0;
    result.assertions.push_back({s.label + " finite at " + std::to_string(s.mesh), ok,
                                 "counted " + std::to_string(s.counted) + ", failed " + std::to_string(s.failed) +
                                     ", max " + fmt(s.max_ratio)});
}

void assert_stable(ExperimentResult& result, const std::string& label, std::size_t coarse, std::size_t fine) {
    const Summary* a = nullptr;
    const Summary* b = nullptr;
    for (const auto& s : result.summaries) {
        if (s.label != label) continue;
        if (s.mesh == coarse) a = &s;
        if (s.mesh == fine) b = &s;
    }
    if (!a || !b) return;
    const double f = stability_factor(a->max_ratio, b->max_ratio);
    result.diagnostics["stability_" + label] = f;
    result.assertions.push_back({label + " stable under refinement", f <= 1.5,
                                 "max ratio " + fmt(a->max_ratio) + " -> " + fmt(b->max_ratio) + ", factor " + fmt(f) +
                                     " (limit 1.5)"});
}

// sup of the primitive where it is defined
Mask primitive_region(const GridSpec& spec, const ExperimentConfig& config) {
    if (config.solve.method == Method::Homotopy) return grid::ball_mask(spec, config.solve.homotopy.radius);
    return {};
}

// max over lattice points p in B(e, radius) of |phi(p) - phi(p exp(d W))|, W in {X, Y}
std::vector<double> modulus(const GridRuminForm& phi, double radius) {
    const GridSpec& s = phi.spec;
    const Mask inner = grid::ball_mask(s, radius);
    std::vector<double> out;
    for (double d : modulus_distances()) {
        double best = 0.0;
        for (std::size_t idx = 0; idx < s.size(); ++idx) {
            if (!inner[idx]) continue;
            const std::size_t k = idx % s.count[2];
            const std::size_t j = (idx / s.count[2]) % s.count[1];
            const std::size_t i = idx / (s.count[2] * s.count[1]);
            const double x = s.coord(0, i), y = s.coord(1, j), t = s.coord(2, k);
            for (int dir = 0; dir < 2; ++dir) {
                // p . exp(d e_1) = (x + d, y, t - y d / 2), p . exp(d e_2) = (x, y + d, t + x d / 2)
                const double qx = dir == 0 ? x + d : x;
                const double qy = dir == 0 ? y : y + d;
                const double qt = dir == 0 ? t - 0.5 * y * d : t + 0.5 * x * d;
                double sum = 0.0;
                bool outside = false;
                for (std::size_t c = 0; c < phi.components.size(); ++c) {
                    const double v = grid::interpolate_cubic_t(phi.components[c], qx, qy, qt, &outside);
                    const double diff = phi.components[c][idx] - v;
                    sum += diff * diff * to_double(phi.basis->norms2[c]);
                }
                if (!outside) best = std::max(best, std::sqrt(sum));
            }
        }
        out.push_back(best);
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Seeds and samples

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t trial_seed(std::uint64_t base, std::size_t i) {
    std::uint64_t state = base + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(i);
    return splitmix64(state);
}

Rational CoefficientStream::next() {
    // 21 random bits -> k in [0, 2^21], value (k - 2^20) / 2^20
    const std::uint64_t bits = splitmix64(state_) >> 43;
    const long k = static_cast<long>(bits % ((1ul << 21) + 1));
    Rational r(k - (1l << 20), 1l << 20);
    r.canonicalize();
    return r;
}

PolyScalar random_cubic(CoefficientStream& rng) {
    PolyScalar p(3);
    for (unsigned a = 0; a <= 3; ++a)
        for (unsigned b = 0; a + b <= 3; ++b)
            for (unsigned c = 0; a + b + c <= 3; ++c) {
                Monomial m;
                m.set(0, a);
                m.set(1, b);
                m.set(2, c);
                p.add_term(m, rng.next());
            }
    return p;
}

PolyRuminForm random_potential(std::uint64_t seed, int h, const SampleOptions& options) {
    if (h < 1 || h > 3) throw std::invalid_argument("sampled degree must be in [1, 3]");
    CoefficientStream rng(seed);
    const PolyScalar bump = heisenberg::gauge_bump(1, options.support_radius, options.bump_power);
    PolyRuminForm psi = complex::zero_form(1, h - 1);
    for (auto& c : psi.coefficients) c = bump * random_cubic(rng);
    return psi;
}

ExactSample sample_exact_form(const PolyRuminForm& psi, const GridSpec& spec, const SampleOptions& options) {
    const double r = to_double(options.support_radius);
    return {grid::discretize(psi, spec, r), grid::discretize(complex::d_c(psi), spec, r)};
}

ExactSample sample_exact_form(std::uint64_t seed, int h, const GridSpec& spec, const SampleOptions& options) {
    return sample_exact_form(random_potential(seed, h, options), spec, options);
}

CoclosedSample sample_coclosed_form(const PolyRuminForm& beta, const GridSpec& spec, const SampleOptions& options) {
    if (beta.degree() != 2) throw std::invalid_argument("coclosed samples are d_c^* of a 2-form");
    const double r = to_double(options.support_radius);
    const PolyRuminForm u = complex::d_c_star(beta);
    return {grid::discretize(u, spec, r), grid::discretize(complex::d_c(u), spec, r)};
}

CoclosedSample sample_coclosed_form(std::uint64_t seed, const GridSpec& spec, const SampleOptions& options) {
    return sample_coclosed_form(random_potential(seed, 3, options), spec, options);
}

// ---------------------------------------------------------------------------
// Configuration

Config Config::parse(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(number) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw std::invalid_argument("config line " + std::to_string(number) + ": empty key");
        c.values_[key] = trim(line.substr(eq + 1));
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_[key] = true;
    return it->second;
}

long Config::get(const std::string& key, long fallback) const {
    const std::string v = get(key, std::string());
    if (v.empty()) return fallback;
    std::size_t pos = 0;
    const long r = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("config " + key + ": not an integer: " + v);
    return r;
}

double Config::get(const std::string& key, double fallback) const {
    const std::string v = get(key, std::string());
    if (v.empty()) return fallback;
    if (v.find('/') != std::string::npos) return to_double(parse_rational(v));
    std::size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("config " + key + ": not a number: " + v);
    return r;
}

bool Config::get(const std::string& key, bool fallback) const {
    const std::string v = get(key, std::string());
    if (v.empty()) return fallback;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config " + key + ": not a boolean: " + v);
}

std::vector<int> Config::get(const std::string& key, const std::vector<int>& fallback) const {
    const std::string v = get(key, std::string());
    if (v.empty()) return fallback;
    std::vector<int> out;
    std::istringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(std::stoi(trim(item)));
    return out;
}

void Config::check_unused() const {
    for (const auto& [key, value] : values_)
        if (!used_.count(key)) throw std::invalid_argument("unknown config key: " + key);
}

ExperimentConfig ExperimentConfig::from(const Config& c) {
    ExperimentConfig e;
    e.n = static_cast<int>(c.get("n", static_cast<long>(e.n)));
    e.degrees = c.get("degrees", e.degrees);
    e.trials = static_cast<std::size_t>(c.get("trials", static_cast<long>(e.trials)));
    e.seed = std::stoull(c.get("seed", std::to_string(e.seed)));
    e.points = static_cast<std::size_t>(c.get("points", static_cast<long>(e.points)));
    e.refine = c.get("refine", e.refine);
    e.solve.method = solver::parse_method(c.get("method", solver::to_string(e.solve.method)));
    if (c.has("support_radius")) e.sample.support_radius = parse_rational(c.get("support_radius", std::string()));
    e.solve.homotopy.radius = c.get("radius", e.solve.homotopy.radius);
    e.solve.homotopy.lambda = c.get("lambda", e.solve.homotopy.lambda);
    e.solve.laplacian.padding = c.get("padding", e.solve.laplacian.padding);
    e.threads = static_cast<std::size_t>(c.get("threads", static_cast<long>(e.threads)));
    e.output_dir = c.get("output_dir", e.output_dir);
    e.name = c.get("name", e.name);
    c.check_unused();
    e.validate();
    return e;
}

void ExperimentConfig::validate() const {
    if (n != 1) throw std::invalid_argument("experiments run on H^1 grids (n = 1)");
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (points < 5 || points % 2 == 0) throw std::invalid_argument("points must be odd and >= 5");
    for (int h : degrees)
        if (h < 1 || h > 3) throw std::invalid_argument("degrees must lie in [1, 3]");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (!(sample.support_radius > 0)) throw std::invalid_argument("support_radius must be positive");
}

std::vector<GridSpec> ExperimentConfig::meshes() const {
    std::vector<GridSpec> out{GridSpec::standard(points)};
    if (refine) out.push_back(out.front().refined());
    return out;
}

// ---------------------------------------------------------------------------
// Records

double stability_factor(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        return std::numeric_limits<double>::infinity();
    return std::max(a / b, b / a);
}

bool ExperimentResult::passed() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

const std::vector<double>& modulus_distances() {
    static const std::vector<double> d{0.125, 0.25, 0.5};
    return d;
}

// ---------------------------------------------------------------------------
// Experiments

ExperimentResult run_poincare_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentResult result;
    result.experiment = "poincare";
    const int Q = heisenberg::homogeneous_dimension(config.n);
    const auto meshes = config.meshes();
    for (int h : config.degrees) {
        if (h < 2) throw std::invalid_argument("the Poincare experiment requires h >= 2");
        const double p = h == config.n + 1 ? Q / 2.0 : Q;
        const std::string label = "h" + std::to_string(h) + "_p" + fmt(p);
        for (const GridSpec& spec : meshes) {
            std::unique_ptr<solver::LaplacianInverse> inverse;
            if (config.solve.method == Method::Laplacian)
                inverse = std::make_unique<solver::LaplacianInverse>(spec, h, config.solve.laplacian);
            const Mask region = primitive_region(spec, config);
            auto solve = [&](const GridRuminForm& omega) {
                return inverse ? solver::solve_primitive(omega, *inverse) : solver::solve_primitive(omega, config.solve);
            };
            std::vector<TrialRecord> records(config.trials);
            parallel_for(config.trials, config.threads, [&](std::size_t i) {
                TrialRecord& r = records[i];
                r.label = label;
                r.trial = i;
                r.seed = trial_seed(config.seed, i);
                r.degree = h;
                r.exponent = p;
                r.mesh = spec.count[0];
                try {
                    const ExactSample sample = sample_exact_form(r.seed, h, spec, config.sample);
                    r.omega_norm = grid::norm(sample.omega, p);
                    if (r.omega_norm == 0.0) {
                        r.excluded = true;
                        return;
                    }
                    auto [phi, report] = solve(sample.omega);
                    r.report = report;
                    r.phi_sup = grid::norm(phi, std::numeric_limits<double>::infinity(), region);
                    r.ratio = r.phi_sup / r.omega_norm;
                    r.modulus = modulus(phi, 0.5);
                    for (double& m : r.modulus) m /= r.omega_norm;
                } catch (const std::exception& e) {
                    r.failed = true;
                    r.error = e.what();
                }
            });
            // linearity audit: omega -> 10 omega on the first usable trial
            for (const auto& r : records) {
                if (r.failed || r.excluded) continue;
                const ExactSample sample = sample_exact_form(r.seed, h, spec, config.sample);
                auto [phi, report] = solve(10.0 * sample.omega);
                const double ratio = grid::norm(phi, std::numeric_limits<double>::infinity(), region) /
                                     grid::norm(10.0 * sample.omega, p);
                const double defect = std::abs(ratio / r.ratio - 1.0);
                const std::string key = "linearity_" + label + "_" + std::to_string(spec.count[0]);
                result.diagnostics[key] = defect;
                result.assertions.push_back({key, defect <= 1e-4, "relative change " + fmt(defect) + " (limit 1e-4)"});
                break;
            }
            result.records.insert(result.records.end(), records.begin(), records.end());
            result.summaries.push_back(summarize(result.records, label, spec.count[0]));
            assert_finite(result, result.summaries.back());
        }
        if (meshes.size() > 1) assert_stable(result, label, meshes[0].count[0], meshes[1].count[0]);
    }
    return result;
}

namespace {

double gn_ratio(const CoclosedSample& s, double q) { return grid::bl_norm(s.u, q) / grid::norm(s.du, 1.0); }

PolyRuminForm dilate(const PolyRuminForm& a, const Rational& lambda) {
    PolyRuminForm out = a;
    for (auto& c : out.coefficients) c = c.dilate(lambda);
    return out;
}

}  // namespace

ExperimentResult run_gn_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentResult result;
    result.experiment = "gn";
    const int Q = heisenberg::homogeneous_dimension(config.n);
    const double q = Q / (Q - 1.0);
    const int sobolev_degree = config.degrees.size() == 1 ? config.degrees.front() : 2 * config.n + 1;
    const auto meshes = config.meshes();
    const std::string gn_label = "gn_q" + fmt(q);
    const std::string sob_label = "sobolev_h" + std::to_string(sobolev_degree);
    for (const GridSpec& spec : meshes) {
        const std::size_t mesh = spec.count[0];
        std::vector<TrialRecord> gn(config.trials), sob(config.trials);
        std::unique_ptr<solver::LaplacianInverse> inverse;
        if (config.solve.method == Method::Laplacian)
            inverse = std::make_unique<solver::LaplacianInverse>(spec, sobolev_degree, config.solve.laplacian);
        const Mask region = primitive_region(spec, config);
        parallel_for(config.trials, config.threads, [&](std::size_t i) {
            const std::uint64_t seed = trial_seed(config.seed, i);
            TrialRecord& g = gn[i];
            g.label = gn_label;
            g.trial = i;
            g.seed = seed;
            g.degree = config.n;
            g.exponent = q;
            g.mesh = mesh;
            try {
                const CoclosedSample s = sample_coclosed_form(seed, spec, config.sample);
                g.omega_norm = grid::norm(s.du, 1.0);
                g.phi_sup = grid::bl_norm(s.u, q);
                if (g.omega_norm == 0.0) g.excluded = true;
                else g.ratio = g.phi_sup / g.omega_norm;
            } catch (const std::exception& e) {
                g.failed = true;
                g.error = e.what();
            }
            TrialRecord& r = sob[i];
            r.label = sob_label;
            r.trial = i;
            r.seed = seed;
            r.degree = sobolev_degree;
            r.exponent = 1.0;
            r.mesh = mesh;
            try {
                ExactSample s = sample_exact_form(seed, sobolev_degree, spec, config.sample);
                const double l1 = grid::norm(s.omega, 1.0);
                if (l1 == 0.0) {
                    r.excluded = true;
                    return;
                }
                s.omega *= 1.0 / l1;
                auto [phi, report] = inverse ? solver::solve_primitive(s.omega, *inverse)
                                             : solver::solve_primitive(s.omega, config.solve);
                r.report = report;
                r.omega_norm = 1.0;
                r.phi_sup = grid::norm(phi, q, region);
                r.ratio = r.phi_sup;
            } catch (const std::exception& e) {
                r.failed = true;
                r.error = e.what();
            }
        });
        // dilation audit: beta -> beta o delta_lambda leaves the GN ratio unchanged
        for (const auto& g : gn) {
            if (g.failed || g.excluded) continue;
            const PolyRuminForm beta = random_potential(g.seed, 3, config.sample);
            const Rational lambda(4, 3);
            SampleOptions shrunk = config.sample;
            shrunk.support_radius = config.sample.support_radius / lambda;
            const double dilated = gn_ratio(sample_coclosed_form(dilate(beta, lambda), spec, shrunk), q);
            result.diagnostics["dilation_defect_" + std::to_string(mesh)] = std::abs(dilated / g.ratio - 1.0);
            break;
        }
        result.records.insert(result.records.end(), gn.begin(), gn.end());
        result.records.insert(result.records.end(), sob.begin(), sob.end());
        for (const auto& label : {gn_label, sob_label}) {
            result.summaries.push_back(summarize(result.records, label, mesh));
            assert_finite(result, result.summaries.back());
        }
    }
    if (meshes.size() > 1) {
        const std::size_t a = meshes[0].count[0], b = meshes[1].count[0];
        assert_stable(result, gn_label, a, b);
        assert_stable(result, sob_label, a, b);
        const double d0 = result.diagnostics["dilation_defect_" + std::to_string(a)];
        const double d1 = result.diagnostics["dilation_defect_" + std::to_string(b)];
        result.assertions.push_back({"gn dilation audit", d1 <= 0.05 && d1 <= d0 + 1e-3,
                                     "relative defect " + fmt(d0) + " -> " + fmt(d1) + " (limit 0.05 on the fine mesh)"});
    }
    return result;
}

ExperimentResult run_degree_one_control(const DegreeOneOptions& options) {
    if (options.levels.empty() || options.levels.front() != 1)
        throw std::invalid_argument("levels must start at k = 1 (the normalization point)");
    ExperimentResult result;
    result.experiment = "degree_one";
    const double Q = 4.0;
    const double r0 = options.outer_radius;
    std::vector<GridSpec> meshes{GridSpec::standard(options.points)};
    if (options.refine) meshes.push_back(meshes.front().refined());
    const RuminBasis& functions = complex::build_basis(1, 0);
    std::map<std::pair<std::size_t, int>, double> stacked;
    for (const GridSpec& spec : meshes) {
        const std::size_t mesh = spec.count[0];
        auto sample = [&](double k) {
            GridRuminForm u = GridRuminForm::zero(functions, spec);
            for (std::size_t i = 0; i < spec.count[0]; ++i)
                for (std::size_t j = 0; j < spec.count[1]; ++j)
                    for (std::size_t l = 0; l < spec.count[2]; ++l) {
                        const double p[3] = {spec.coord(0, i), spec.coord(1, j), spec.coord(2, l)};
                        const double rho = heisenberg::koranyi_norm(std::span<const double>(p, 3));
                        const double v = rho > 0.0 ? std::log(r0 / rho) : std::numeric_limits<double>::infinity();
                        u.components[0].at(i, j, l) = std::clamp(v, 0.0, k);
                    }
            return u;
        };
        // ||W_j u_1||_Q^Q on the grid; u_1 is constant inside the inner sphere
        const GridRuminForm u1 = sample(1.0);
        double shell[2];
        for (int j = 1; j <= 2; ++j)
            shell[j - 1] = std::pow(grid::norm(grid::apply_field(j, u1.components[0], grid::Boundary::OneSided), Q), Q);
        for (int k : options.levels) {
            TrialRecord r;
            r.label = "stacked";
            r.trial = static_cast<std::size_t>(k);
            r.degree = 1;
            r.exponent = Q;
            r.mesh = mesh;
            r.phi_sup = k;
            r.omega_norm = std::pow(k * shell[0], 1.0 / Q) + std::pow(k * shell[1], 1.0 / Q);
            r.ratio = r.phi_sup / r.omega_norm;
            stacked[{mesh, k}] = r.ratio;
            result.records.push_back(r);

            const GridRuminForm uk = sample(k);
            TrialRecord d = r;
            d.label = "direct";
            d.phi_sup = grid::norm(uk, std::numeric_limits<double>::infinity());
            d.omega_norm = grid::bl_norm(uk, Q);
            d.ratio = d.phi_sup / d.omega_norm;
            result.records.push_back(d);
        }
        result.summaries.push_back(summarize(result.records, "stacked", mesh));
        result.summaries.push_back(summarize(result.records, "direct", mesh));
    }
    const std::size_t m0 = meshes[0].count[0];
    const int kmax = options.levels.back();
    const double growth = stacked[{m0, kmax}] / stacked[{m0, 1}];
    result.diagnostics["growth"] = growth;
    result.assertions.push_back({"ratio grows from k = 1 to k = " + std::to_string(kmax), growth > 2.0,
                                 "ratio(" + std::to_string(kmax) + ") / ratio(1) = " + fmt(growth) + " (limit > 2)"});
    if (meshes.size() > 1) {
        const std::size_t m1 = meshes[1].count[0];
        double worst = 0.0;
        for (int k : options.levels)
            worst = std::max(worst, std::abs(stacked[{m1, k}] / stacked[{m0, k}] - 1.0));
        result.diagnostics["refinement_change"] = worst;
        result.assertions.push_back({"refinement audit", worst < 0.1,
                                     "largest relative change " + fmt(worst) + " (limit 0.1)"});
    }
    return result;
}

ExperimentResult run_pairing_test(const PairingOptions& options) {
    ExperimentResult result;
    result.experiment = "pairing";
    const GridSpec spec = GridSpec::standard(options.points);
    double worst_closed = 0.0;
    double weakest_control = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < options.trials; ++i) {
        const int h = 1 + static_cast<int>(i % 2);
        const std::uint64_t sa = trial_seed(options.seed, 2 * i), sb = trial_seed(options.seed, 2 * i + 1);
        TrialRecord r;
        r.label = "closed";
        r.trial = i;
        r.seed = sa;
        r.degree = h;
        r.exponent = 2.0;
        r.mesh = spec.count[0];
        const GridRuminForm alpha = sample_exact_form(sa, h, spec, options.sample).omega;
        const GridRuminForm omega = sample_exact_form(sb, 3 - h, spec, options.sample).omega;
        r.omega_norm = grid::norm(alpha, 2.0) * grid::norm(omega, 2.0);
        r.phi_sup = std::abs(grid::integrate_wedge(alpha, omega));
        r.ratio = r.omega_norm > 0.0 ? r.phi_sup / r.omega_norm : 0.0;
        r.excluded = r.omega_norm == 0.0;
        worst_closed = std::max(worst_closed, r.ratio);
        result.records.push_back(r);

        // alpha not closed; omega = d_c * d_c alpha pairs to +-||d_c alpha||^2
        const PolyRuminForm open = random_potential(sa, h + 1, options.sample);
        const PolyRuminForm partner =
            complex::d_c(complex::proj_E0(exterior::hodge_star(complex::to_form(complex::d_c(open)))));
        const double rad = to_double(options.sample.support_radius);
        const GridRuminForm a2 = grid::discretize(open, spec, rad);
        const GridRuminForm w2 = grid::discretize(partner, spec, rad);
        TrialRecord c = r;
        c.label = "control";
        c.omega_norm = grid::norm(a2, 2.0) * grid::norm(w2, 2.0);
        c.phi_sup = std::abs(grid::integrate_wedge(a2, w2));
        c.ratio = c.omega_norm > 0.0 ? c.phi_sup / c.omega_norm : 0.0;
        weakest_control = std::min(weakest_control, c.ratio);
        result.records.push_back(c);
    }
    for (const char* label : {"closed", "control"}) result.summaries.push_back(summarize(result.records, label, spec.count[0]));
    result.diagnostics["worst_closed"] = worst_closed;
    result.diagnostics["weakest_control"] = weakest_control;
    result.assertions.push_back({"closed pairs vanish", worst_closed <= options.tol,
                                 "largest relative pairing " + fmt(worst_closed) + " (limit " + fmt(options.tol) + ")"});
    result.assertions.push_back({"control exceeds tolerance tenfold", weakest_control >= 10.0 * options.tol,
                                 "smallest control pairing " + fmt(weakest_control)});
    return result;
}

// ---------------------------------------------------------------------------
// Output

std::string summary_json(const ExperimentResult& result) {
    nlohmann::ordered_json j;
    j["experiment"] = result.experiment;
    j["note"] = kNote;
    j["passed"] = result.passed();
    j["summaries"] = nlohmann::json::array();
    for (const auto& s : result.summaries)
        j["summaries"].push_back({{"label", s.label},
                                  {"mesh", s.mesh},
                                  {"counted", s.counted},
                                  {"failed", s.failed},
                                  {"empirical_max_ratio", s.max_ratio},
                                  {"median_ratio", s.median_ratio}});
    j["assertions"] = nlohmann::json::array();
    for (const auto& a : result.assertions)
        j["assertions"].push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
    j["diagnostics"] = result.diagnostics;
    return j.dump(2);
}

std::vector<std::string> write_outputs(const ExperimentResult& result, const std::string& dir, const std::string& name) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> paths;
    auto open = [&](const std::string& file) {
        const std::string path = (fs::path(dir) / file).string();
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        paths.push_back(path);
        out.precision(10);
        return out;
    };
    {
        std::ofstream csv = open(name + "_trials.csv");
        csv << "experiment,label,trial,seed,degree,exponent,mesh,denominator,numerator,ratio,excluded,failed,"
               "residual_LQ,residual_natural,closedness";
        for (double d : modulus_distances()) csv << ",modulus_" << d;
        csv << ",error\n";
        for (const auto& r : result.records) {
            csv << result.experiment << ',' << r.label << ',' << r.trial << ',' << r.seed << ',' << r.degree << ','
                << r.exponent << ',' << r.mesh << ',' << r.omega_norm << ',' << r.phi_sup << ',' << r.ratio << ','
                << r.excluded << ',' << r.failed << ',' << r.report.residual_LQ << ',' << r.report.residual_natural
                << ',' << r.report.closedness;
            for (std::size_t k = 0; k < modulus_distances().size(); ++k)
                csv << ',' << (k < r.modulus.size() ? r.modulus[k] : 0.0);
            std::string err = r.error;
            std::replace(err.begin(), err.end(), ',', ';');
            std::replace(err.begin(), err.end(), '\n', ' ');
            csv << ',' << err << '\n';
        }
    }
    open(name + "_summary.json") << summary_json(result) << '\n';
    for (const auto& s : result.summaries) {
        std::ofstream plot = open(name + "_" + s.label + "_" + std::to_string(s.mesh) + ".dat");
        plot << "# x y (" << s.label << ", mesh " << s.mesh << ")\n";
        for (const auto& r : result.records)
            if (r.label == s.label && r.mesh == s.mesh && !r.failed && !r.excluded) plot << r.trial << ' ' << r.ratio << '\n';
    }
    return paths;
}

}  // namespace rumin::harness
