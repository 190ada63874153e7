#pragma once

#include "rumin/solver.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

/// Seeded Monte-Carlo experiments on H^1 grids: Poincare ratios for exact forms, the
/// Gagliardo-Nirenberg ratio for coclosed 1-forms, the degree-one negative control and the
/// vanishing of closed pairings. Every reported number is an empirical maximum or median;
/// nothing here estimates or certifies a constant.
namespace rumin::harness {

using complex::PolyRuminForm;
using complex::RuminBasis;
using grid::GridRuminForm;
using grid::GridSpec;
using solver::Method;

// ---------------------------------------------------------------------------
// Seeds and samples

/// splitmix64 step: advances `state` and returns the next output.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seed of trial i: the (i+1)-th splitmix64 output of the stream started at `base`. Depends
/// only on (base, i), never on scheduling.
std::uint64_t trial_seed(std::uint64_t base, std::size_t i);

/// Coefficient source for sampled polynomials: splitmix64 outputs mapped to multiples of
/// 2^-20 in [-1, 1] (exact rationals, so symbolic d_c stays exact).
class CoefficientStream {
public:
    explicit CoefficientStream(std::uint64_t seed) : state_(seed) {}
    Rational next();

private:
    std::uint64_t state_;
};

/// Polynomial of Euclidean degree <= 3 in (x, y, t) with all 20 coefficients drawn from `rng`.
PolyScalar random_cubic(CoefficientStream& rng);

struct SampleOptions {
    Rational support_radius{9, 10};  // psi vanishes outside B(e, support_radius)
    unsigned bump_power = 6;
};

/// psi in E_0^{h-1} with components gauge_bump * random_cubic.
PolyRuminForm random_potential(std::uint64_t seed, int h, const SampleOptions& options = {});

struct ExactSample {
    GridRuminForm psi;    // degree h-1
    GridRuminForm omega;  // degree h, omega = d_c psi
};

/// omega = d_c psi computed symbolically and then sampled; 1 <= h <= 3.
ExactSample sample_exact_form(std::uint64_t seed, int h, const GridSpec& spec, const SampleOptions& options = {});
/// Same for a given potential.
ExactSample sample_exact_form(const PolyRuminForm& psi, const GridSpec& spec, const SampleOptions& options = {});

/// u = d_c^* beta for a random beta of degree 2 (bump times random cubics); u has degree 1 and
/// d_c^* u = 0 symbolically. `du` is d_c u, also computed symbolically.
struct CoclosedSample {
    GridRuminForm u;
    GridRuminForm du;
};
CoclosedSample sample_coclosed_form(std::uint64_t seed, const GridSpec& spec, const SampleOptions& options = {});
CoclosedSample sample_coclosed_form(const PolyRuminForm& beta, const GridSpec& spec, const SampleOptions& options = {});

// ---------------------------------------------------------------------------
// Configuration

/// `key = value` lines; `#` starts a comment. Every key must be consumed by the reader
/// (check_unused throws on leftovers, so typos are not silently ignored).
class Config {
public:
    Config() = default;
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    long get(const std::string& key, long fallback) const;
    double get(const std::string& key, double fallback) const;
    bool get(const std::string& key, bool fallback) const;
    std::vector<int> get(const std::string& key, const std::vector<int>& fallback) const;
    void check_unused() const;

private:
    std::map<std::string, std::string> values_;
    mutable std::map<std::string, bool> used_;
};

struct ExperimentConfig {
    int n = 1;
    std::vector<int> degrees{2, 3};
    std::size_t trials = 50;
    std::uint64_t seed = 20240601;
    std::size_t points = 65;   // default lattice GridSpec::standard(points)
    bool refine = true;        // also run on the halved mesh
    SampleOptions sample;
    solver::SolveOptions solve;  // method, homotopy radius, Laplacian padding
    std::size_t threads = 1;
    std::string output_dir = ".";
    std::string name;          // file prefix; defaults to the experiment name

    /// Reads the keys n, degrees, trials, seed, points, refine, method, support_radius,
    /// radius, threads, output_dir, name. Throws on invalid values or unknown keys.
    static ExperimentConfig from(const Config& config);
    void validate() const;
    std::vector<GridSpec> meshes() const;
};

// ---------------------------------------------------------------------------
// Records

struct TrialRecord {
    std::string label;         // which statistic the record belongs to
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    int degree = 0;
    double exponent = 0.0;     // p of ||omega||_p
    std::size_t mesh = 0;      // points per axis
    double omega_norm = 0.0;
    double phi_sup = 0.0;
    double ratio = 0.0;        // phi_sup / omega_norm, 0 if excluded
    bool excluded = false;     // omega = 0
    bool failed = false;
    std::string error;
    solver::SolveReport report;
    std::vector<double> modulus;  // exploratory: max |phi(p) - phi(p exp(d W))| / omega_norm per distance d
};

struct Summary {
    std::string label;         // e.g. "h=2 p=2"
    std::size_t mesh = 0;
    std::size_t counted = 0;   // trials entering the statistics
    std::size_t failed = 0;
    double max_ratio = 0.0;
    double median_ratio = 0.0;
};

/// max(a/b, b/a) for positive a, b; infinity otherwise.
double stability_factor(double a, double b);

struct Assertion {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ExperimentResult {
    std::string experiment;
    std::vector<TrialRecord> records;
    std::vector<Summary> summaries;
    std::vector<Assertion> assertions;
    std::map<std::string, double> diagnostics;  // audits and exploratory numbers

    bool passed() const;
};

/// Gauge distances at which the exploratory modulus of continuity is recorded.
const std::vector<double>& modulus_distances();

// ---------------------------------------------------------------------------
// Experiments

/// For each degree h >= 2 and mesh: sample exact omega, solve for phi, record
/// ||phi||_inf / ||omega||_p with p = Q/2 in degree n+1 and p = Q otherwise. phi is taken on
/// B(e, solve.homotopy.radius) for the homotopy route and on the whole box for the Laplacian
/// route. Asserts finite ratios and max-ratio stability within 1.5 between the two meshes, and
/// audits linearity (omega -> 10 omega) on the first trial.
ExperimentResult run_poincare_experiment(const ExperimentConfig& config);

/// bl_norm(u, Q/(Q-1)) / ||d_c u||_{L^1} for coclosed samples u, and the Sobolev ratio
/// ||phi||_{L^{Q/(Q-1)}} / ||omega||_{L^1} for primitives of L^1-normalized exact forms of
/// degree 3 (or the single degree listed in the config). Audits dilation invariance.
ExperimentResult run_gn_experiment(const ExperimentConfig& config);

struct DegreeOneOptions {
    std::vector<int> levels{1, 2, 4, 8};
    double outer_radius = 1.3;  // u_k = min(log(outer_radius / rho), k), zero outside
    std::size_t points = 65;
    bool refine = true;
};

/// Truncated logarithms u_k. ||u_k||_inf = k is exact. The Beppo Levi integral of u_k splits
/// into k dilated copies of the unit shell outer_radius / e < rho < outer_radius, and
/// int |W_j u|^Q over a shell is dilation invariant, so
/// ||W_j u_k||_Q^Q = k ||W_j u_1||_Q^Q with u_1 measured on the grid. The directly sampled
/// u_k (inner shells below the mesh) is reported alongside as a diagnostic.
ExperimentResult run_degree_one_control(const DegreeOneOptions& options = {});

struct PairingOptions {
    std::size_t trials = 10;
    std::uint64_t seed = 7;
    std::size_t points = 65;
    double tol = 1e-3;
    SampleOptions sample;
};

/// |int alpha ^ omega| / (||alpha||_2 ||omega||_2) for exact alpha (degree h) and exact
/// omega (degree 3-h), h in {1, 2}; control: non-closed alpha against
/// omega = d_c * d_c alpha, whose pairing is +-||d_c alpha||^2.
ExperimentResult run_pairing_test(const PairingOptions& options = {});

// ---------------------------------------------------------------------------
// Output

/// Writes <dir>/<name>_trials.csv, <dir>/<name>_summary.json and one plot-data file
/// <dir>/<name>_<label>_<mesh>.dat (trial index, ratio) per summary. Returns the paths.
std::vector<std::string> write_outputs(const ExperimentResult& result, const std::string& dir, const std::string& name);

/// JSON text of the summary (also used by the CLI on stdout).
std::string summary_json(const ExperimentResult& result);

}  // namespace rumin::harness
