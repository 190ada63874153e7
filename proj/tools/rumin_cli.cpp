// Command-line front end: algebra self-checks, primitive solves on grid files and the
// seeded experiments. Exit code 0 iff every assertion of the chosen command holds.

#include "rumin/harness.hpp"
#include "rumin/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace rumin;

namespace {

int report(const harness::ExperimentResult& result, const std::string& dir, const std::string& name) {
    const auto paths = harness::write_outputs(result, dir, name);
    std::cout << harness::summary_json(result) << '\n';
    for (const auto& a : result.assertions)
        std::cerr << (a.passed ? "PASS " : "FAIL ") << a.name << ": " << a.detail << '\n';
    for (const auto& p : paths) std::cerr << "wrote " << p << '\n';
    return result.passed() ? 0 : 1;
}

int verify_algebra(const std::vector<int>& ns, unsigned max_degree, std::size_t samples, std::uint64_t seed) {
    bool ok = true;
    for (int n : ns) {
        std::vector<verify::Check> checks{verify::chain_property(n, samples, max_degree, seed),
                                          verify::star_identities(n, samples, max_degree, seed + 1),
                                          verify::basis_dimensions(n),
                                          verify::dilation_homogeneity(n, samples, max_degree, seed + 2)};
        if (n <= 2) {
            checks.push_back(verify::proj_E_contract(n, samples, max_degree, seed + 3));
            checks.push_back(verify::leibniz_structure(n, std::max<std::size_t>(1, samples / 10), seed + 4));
            checks.push_back(verify::laplacian_commutation(n));
        }
        for (const auto& c : checks) {
            std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.cases << " cases)";
            if (!c.passed) std::cout << ' ' << c.detail;
            std::cout << '\n';
            ok = ok && c.passed;
        }
    }
    return ok ? 0 : 1;
}

struct SolveArgs {
    std::string input, output, report, norms;
    std::string method = "homotopy";
    int degree = -1;
    double tol = -1.0;
    std::size_t max_iter = 0;
    double radius = 1.0;
    double padding = 1.0;
};

int solve(const SolveArgs& a) {
    const grid::GridRuminForm omega = grid::read_form(a.input);
    if (a.degree >= 0 && omega.degree() != a.degree)
        throw std::invalid_argument("input has degree " + std::to_string(omega.degree()) + ", expected " +
                                    std::to_string(a.degree));
    solver::SolveOptions options;
    options.method = solver::parse_method(a.method);
    options.homotopy.radius = a.radius;
    options.laplacian.padding = a.padding;
    if (a.tol > 0.0) {
        options.homotopy.closed_tol = a.tol;
        options.laplacian.tol = a.tol;
    }
    if (a.max_iter > 0) options.laplacian.max_iter = a.max_iter;
    auto [phi, rep] = solver::solve_primitive(omega, options);
    grid::write_form(a.output, phi);

    // reconstruction tolerance: 10% for the homotopy in degree n+1, 5% otherwise
    const double limit = options.method == solver::Method::Homotopy && omega.degree() == 2 ? 0.10 : 0.05;
    const bool ok = rep.residual_natural <= limit && rep.converged;
    nlohmann::ordered_json j;
    j["method"] = rep.method;
    j["degree"] = rep.degree;
    j["residual_LQ"] = rep.residual_LQ;
    j["residual_L2"] = rep.residual_L2;
    j["natural_exponent"] = rep.natural_exponent;
    j["residual_natural"] = rep.residual_natural;
    j["residual_limit"] = limit;
    j["closedness"] = rep.closedness;
    j["laplacian_residual"] = rep.laplacian_residual;
    j["iterations"] = rep.iterations;
    j["converged"] = rep.converged;
    j["mesh"] = {rep.mesh.count[0], rep.mesh.count[1], rep.mesh.count[2]};
    j["seconds"] = rep.seconds;
    j["message"] = rep.message;
    j["passed"] = ok;
    const std::string text = j.dump(2);
    if (!a.report.empty()) std::ofstream(a.report) << text << '\n';
    std::cout << text << '\n';
    if (!a.norms.empty()) {
        // residual restricted to the region where the solver reports it
        grid::GridRuminForm residual = grid::d_c(phi) - omega;
        const grid::Mask region = solver::residual_region(omega.spec, options.method, options.homotopy.radius);
        for (auto& c : residual.components)
            for (std::size_t i = 0; i < c.size(); ++i)
                if (!region.empty() && !region[i]) c[i] = 0.0;
        grid::write_norms_csv(a.norms, {{"omega", &omega}, {"phi", &phi}, {"d_c phi - omega", &residual}});
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rumin complex on the Heisenberg group: exact algebra, grid solvers, experiments"};
    app.require_subcommand(1);

    std::vector<int> ns{1, 2, 3};
    unsigned max_degree = 3;
    std::size_t samples = 100;
    std::uint64_t seed = 1;
    auto* va = app.add_subcommand("verify-algebra", "exact identities of the symbolic complex on random forms");
    va->add_option("--n", ns, "dimension parameters (1..3)")->check(CLI::Range(1, 3));
    va->add_option("--max-degree", max_degree, "coefficient polynomial degree");
    va->add_option("--samples", samples, "random forms per degree");
    va->add_option("--seed", seed);

    int sample_degree = 2;
    std::size_t sample_points = 65;
    std::uint64_t sample_seed = 1;
    std::string sample_out;
    auto* sa = app.add_subcommand("sample", "write a seeded exact form d_c psi to a grid file");
    sa->add_option("--degree", sample_degree)->check(CLI::Range(1, 3));
    sa->add_option("--points", sample_points);
    sa->add_option("--seed", sample_seed);
    sa->add_option("--output", sample_out)->required();

    SolveArgs solve_args;
    auto* so = app.add_subcommand("solve", "primitive of a d_c-exact grid form");
    so->add_option("input", solve_args.input, "grid form header (JSON)")->required();
    so->add_option("--output,-o", solve_args.output, "primitive file")->required();
    so->add_option("--report", solve_args.report, "JSON solve report");
    so->add_option("--norms", solve_args.norms, "CSV of norms of omega, phi and the residual");
    so->add_option("--method", solve_args.method)->check(CLI::IsMember({"homotopy", "laplacian"}));
    so->add_option("--degree", solve_args.degree, "expected degree of the input");
    so->add_option("--tol", solve_args.tol, "closedness tolerance (homotopy) or residual tolerance (laplacian)");
    so->add_option("--max-iter", solve_args.max_iter, "refinement sweeps of the Laplacian solve");
    so->add_option("--radius", solve_args.radius, "homotopy ball radius");
    so->add_option("--padding", solve_args.padding, "x, y half-width factor of the Laplacian solve box");

    std::string poincare_config, gn_config;
    auto* pe = app.add_subcommand("poincare-experiment", "Poincare ratios ||phi||_inf / ||omega||_p");
    pe->add_option("--config", poincare_config)->required()->check(CLI::ExistingFile);
    auto* ge = app.add_subcommand("gn-experiment", "Gagliardo-Nirenberg and Sobolev ratios");
    ge->add_option("--config", gn_config)->required()->check(CLI::ExistingFile);

    harness::DegreeOneOptions d1;
    bool d1_no_refine = false;
    std::string d1_dir = ".";
    auto* dc = app.add_subcommand("degree-one-control", "truncated logarithms: the degree-one failure");
    dc->add_option("--points", d1.points);
    dc->add_option("--outer-radius", d1.outer_radius);
    dc->add_option("--levels", d1.levels, "truncation levels k, starting at 1");
    dc->add_flag("--no-refine", d1_no_refine);
    dc->add_option("--output-dir", d1_dir);

    harness::PairingOptions po;
    std::string po_dir = ".";
    auto* pt = app.add_subcommand("pairing-test", "integrals of closed complementary pairs");
    pt->add_option("--trials", po.trials);
    pt->add_option("--seed", po.seed);
    pt->add_option("--points", po.points);
    pt->add_option("--tol", po.tol);
    pt->add_option("--output-dir", po_dir);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*va) return verify_algebra(ns, max_degree, samples, seed);
        if (*sa) {
            const auto s = harness::sample_exact_form(sample_seed, sample_degree, grid::GridSpec::standard(sample_points));
            grid::write_form(sample_out, s.omega);
            std::cerr << "wrote " << sample_out << '\n';
            return 0;
        }
        if (*so) return solve(solve_args);
        if (*pe || *ge) {
            const auto config = harness::ExperimentConfig::from(harness::Config::load(*pe ? poincare_config : gn_config));
            const auto result = *pe ? harness::run_poincare_experiment(config) : harness::run_gn_experiment(config);
            return report(result, config.output_dir, config.name.empty() ? result.experiment : config.name);
        }
        if (*dc) {
            d1.refine = !d1_no_refine;
            return report(harness::run_degree_one_control(d1), d1_dir, "degree_one");
        }
        if (*pt) return report(harness::run_pairing_test(po), po_dir, "pairing");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
