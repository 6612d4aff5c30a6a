#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "lambdalab/continuation.hpp"
#include "lambdalab/curvature.hpp"
#include "lambdalab/estimates.hpp"
#include "lambdalab/identities.hpp"
#include "lambdalab/mesh_io.hpp"
#include "lambdalab/parallel.hpp"
#include "lambdalab/primitives.hpp"
#include "lambdalab/report.hpp"
#include "lambdalab/shooting.hpp"
#include "lambdalab/spectrum.hpp"
#include "lambdalab/topology.hpp"

namespace lambdalab {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kIdentityTolerance = 0.05;
constexpr double kSpectrumTolerance = 0.02;
constexpr double kEigenResidualLimit = 1e-6;
constexpr double kRadiusTolerance = 1e-4;
// Launch window of the shrinker-torus meridian.
constexpr double kTorusLaunchLo = 3.0;
constexpr double kTorusLaunchHi = 3.6;
constexpr int kTorusLaunchSamples = 13;

double curve_circle_radius(double lambda)
{
    return std::sqrt(lambda * lambda + 2.0) - lambda;
}

// Runs `body`; a failure of the computation becomes a failed asserted check
// called `name`. Configuration and input errors keep propagating.
bool guarded(SuiteReport& report, const std::string& name, const std::function<void()>& body)
{
    try {
        body();
        return true;
    } catch (const ConfigError&) {
        throw;
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        report.checks.push_back(failed_check(name, e.what()));
        return false;
    }
}

Check skipped_check(const std::string& name, const std::string& reason)
{
    Check c;
    c.name = name;
    c.asserted = false;
    c.passed = true;
    c.note = "skipped: " + reason;
    return c;
}

ShootOptions shoot_options(const SuiteConfig& c)
{
    ShootOptions o;
    o.jobs = c.jobs;
    return o;
}

TriMesh build_surface(const SuiteConfig& c)
{
    if (c.shape == "sphere") {
        return make_icosphere(lambda_sphere_radius(c.lambda), c.level);
    }
    if (c.shape == "torus") {
        return sweep_revolution(c.lambda, RevolutionMode::torus_like, kTorusLaunchLo, kTorusLaunchHi,
                                kTorusLaunchSamples, c.level, shoot_options(c))
            .mesh;
    }
    if (c.shape == "cylinder") {
        return make_cylinder_band(curve_circle_radius(c.lambda), 2.0, c.level);
    }
    if (c.shape == "disk") {
        return make_disk(2.0, c.level);
    }
    return read_mesh(c.shape.substr(5));
}

double interior_max(const TriMesh& mesh, const Field& f)
{
    double out = 0.0;
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
        if (!mesh.is_boundary(static_cast<int>(i))) {
            out = std::max(out, std::abs(f[static_cast<Eigen::Index>(i)]));
        }
    }
    return out;
}

ordered_json residual_json(const ResidualReport& r)
{
    return {{"identity", r.identity}, {"relative", r.relative}, {"absolute", r.absolute},
            {"scale", r.scale},       {"exact_zero", r.exact_zero}};
}

ordered_json stats_json(const CurvatureStats& s)
{
    return {{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"variance", s.variance}};
}

std::string trajectory_csv(const Trajectory& t)
{
    std::ostringstream out;
    write_trajectory_csv(out, t);
    return out.str();
}

std::string obj_text(const TriMesh& mesh)
{
    std::ostringstream out;
    write_obj(out, mesh);
    return out.str();
}

// --- verify ---------------------------------------------------------------

void run_verify(const SuiteConfig& c, const TriMesh& mesh, SuiteReport& report, const std::string& prefix)
{
    const double tol = c.tolerance.value_or(kIdentityTolerance);
    const CurvatureData cd = curvature(mesh);
    const double residual = interior_max(mesh, lambda_residual(mesh, cd, c.lambda));
    const double threshold = lambda_surface_threshold(mesh, cd);
    const Check surface = bound_check(prefix + "lambda_residual_max", residual, threshold);
    report.checks.push_back(surface);

    ordered_json identities = ordered_json::array();
    auto identity = [&](const std::string& name, const std::function<ResidualReport()>& compute, bool optional) {
        try {
            const ResidualReport r = compute();
            report.checks.push_back(bound_check(prefix + name, r.relative, tol));
            identities.push_back(residual_json(r));
        } catch (const PreconditionError& e) {
            if (optional || !surface.passed) {
                report.checks.push_back(skipped_check(prefix + name, e.what()));
            } else {
                report.checks.push_back(failed_check(prefix + name, e.what()));
            }
        }
    };
    const char* axis_names[] = {"x", "y", "z"};
    for (int k = 0; k < 3; ++k) {
        identity("eigenfunction_identity/" + std::string(axis_names[k]),
                 [&] { return verify_eigenfunction_identity(mesh, c.lambda, Vec3::Unit(k)); }, false);
    }
    identity("drift_distance_identity/origin",
             [&] { return verify_drift_distance_identity(mesh, c.lambda, Vec3::Zero()); }, false);
    identity("drift_distance_identity/e1",
             [&] { return verify_drift_distance_identity(mesh, c.lambda, Vec3::UnitX()); }, false);
    // Simons applies only where |A|^2 is nearly constant.
    identity("simons_identity", [&] { return verify_simons(mesh, c.lambda, kSimonsLambdaSign); }, true);

    report.results["lambda_residual"] = {{"max", residual}, {"threshold", threshold}};
    report.results["identities"] = identities;
}

// --- spectrum -------------------------------------------------------------

void run_spectrum(const SuiteConfig& c, const TriMesh& mesh, SuiteReport& report, const std::string& prefix)
{
    const WeightedOperator op = stability_operator(mesh, curvature(mesh));
    SpectrumOptions options;
    options.seed = c.seed;
    const Spectrum sp = spectrum(op, c.eigen_count, SpectrumEnd::largest, options);
    const double worst_residual = *std::max_element(sp.residuals.begin(), sp.residuals.end());
    report.checks.push_back(bound_check(prefix + "eigen_residual_max", worst_residual, kEigenResidualLimit));

    double gap = std::numeric_limits<double>::infinity();
    for (const double mu : sp.eigenvalues) {
        gap = std::min(gap, std::abs(mu));
    }
    report.checks.push_back(info_check(prefix + "gap_around_zero", gap, "min |eigenvalue| among those computed"));

    ordered_json results;
    results["eigenvalues"] = sp.eigenvalues;
    results["residuals"] = sp.residuals;
    results["iterations"] = sp.iterations;
    results["dense"] = sp.dense;

    if (c.shape == "sphere") {
        // On the radius-r sphere L = Laplacian + 1/2 + 2/r^2, whose degree-l
        // harmonics give 1/2 + 2/r^2 - l(l+1)/r^2 with multiplicity 2l + 1.
        const double r = lambda_sphere_radius(c.lambda);
        std::vector<double> reference;
        for (int l = 0; static_cast<int>(reference.size()) < c.eigen_count; ++l) {
            for (int m = 0; m < 2 * l + 1 && static_cast<int>(reference.size()) < c.eigen_count; ++m) {
                reference.push_back(0.5 + 2.0 / (r * r) - l * (l + 1) / (r * r));
            }
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < reference.size(); ++i) {
            worst = std::max(worst, std::abs(sp.eigenvalues[i] - reference[i]) / std::max(std::abs(reference[i]), 0.5));
        }
        report.checks.push_back(bound_check(prefix + "closed_form_relative_error", worst, kSpectrumTolerance));
        results["reference"] = reference;
    }

    std::ostringstream csv;
    csv << "index,eigenvalue,residual\n";
    csv.precision(17);
    for (std::size_t i = 0; i < sp.eigenvalues.size(); ++i) {
        csv << i << ',' << sp.eigenvalues[i] << ',' << sp.residuals[i] << '\n';
    }
    report.artifacts.push_back({"spectrum.csv", csv.str()});
    report.results["spectrum"] = results;
}

// --- shoot-curve ----------------------------------------------------------

void run_shoot_curve(const SuiteConfig& c, SuiteReport& report, const std::string& prefix)
{
    const ShootOptions options = shoot_options(c);
    std::vector<ShootResult> shots;
    if (c.sweep_samples > 0) {
        shots = sweep_closed_curves(c.lambda, c.symmetry, c.sweep_lo, c.sweep_hi, c.sweep_samples, options);
        report.checks.push_back(bound_check(prefix + "closed_curves_found", static_cast<double>(shots.size()), 1.0, ">="));
    } else {
        shots.push_back(
            shoot_closed_curve(c.lambda, c.symmetry, c.guess.value_or(curve_circle_radius(c.lambda)), options));
    }

    ordered_json curves = ordered_json::array();
    for (std::size_t i = 0; i < shots.size(); ++i) {
        const ShootResult& s = shots[i];
        const std::string tag = prefix + "curve" + std::to_string(i) + "/";
        report.checks.push_back(bound_check(tag + "closure_defect", s.closure_defect, options.closure_tolerance));
        ordered_json entry;
        entry["launch"] = s.launch;
        entry["classification"] = to_string(s.classification);
        entry["closure_defect"] = s.closure_defect;
        entry["section_defect"] = s.section_defect;
        entry["iterations"] = s.iterations;
        entry["curvature"] = stats_json(s.curvature_stats);
        if (s.classification == Classification::circle) {
            report.checks.push_back(bound_check(tag + "circle_radius_error",
                                                std::abs(s.launch - curve_circle_radius(c.lambda)), kRadiusTolerance));
        }
        if (s.classification != Classification::open) {
            const CurveInvariants inv = curve_invariants(s, c.lambda);
            entry["invariants"] = {{"min_norm", inv.min_norm},
                                   {"max_norm", inv.max_norm},
                                   {"reference_radius", inv.reference_radius},
                                   {"intersects", inv.intersects},
                                   {"strict", inv.strict},
                                   {"winding_number", inv.winding_number}};
        }
        curves.push_back(entry);
        report.artifacts.push_back({"curve" + std::to_string(i) + ".csv", trajectory_csv(s.trajectory)});
    }
    report.results["curves"] = curves;
}

// --- shoot-revolution -----------------------------------------------------

void run_shoot_revolution(const SuiteConfig& c, SuiteReport& report, const std::string& prefix)
{
    const RevolutionMode mode = parse_revolution_mode(c.mode);
    const ShootOptions options = shoot_options(c);
    RevolutionResult rev;
    if (mode == RevolutionMode::sphere_like) {
        rev = shoot_revolution(c.lambda, mode, c.guess.value_or(lambda_sphere_radius(c.lambda)), c.level, options);
    } else if (c.guess) {
        rev = shoot_revolution(c.lambda, mode, *c.guess, c.level, options);
    } else {
        rev = sweep_revolution(c.lambda, mode, kTorusLaunchLo, kTorusLaunchHi, kTorusLaunchSamples, c.level, options);
    }
    const ShootResult& s = rev.shot;
    report.inputs.push_back(input_record("revolution", rev.mesh));
    report.checks.push_back(bound_check(prefix + "closure_defect", s.closure_defect, options.closure_tolerance));

    const CurvatureData cd = curvature(rev.mesh);
    const double residual = interior_max(rev.mesh, lambda_residual(rev.mesh, cd, c.lambda));
    const double threshold = lambda_surface_threshold(rev.mesh, cd);
    report.checks.push_back(bound_check(prefix + "lambda_residual_max", residual, threshold));
    if (mode == RevolutionMode::sphere_like && s.classification == Classification::circle) {
        report.checks.push_back(bound_check(prefix + "sphere_radius_error",
                                            std::abs(s.launch - lambda_sphere_radius(c.lambda)), kRadiusTolerance));
    }
    const int g = genus(rev.mesh);
    report.checks.push_back(bound_check(prefix + "genus", g, mode == RevolutionMode::torus_like ? 1.0 : 0.0, "=="));

    ordered_json results;
    results["mode"] = to_string(mode);
    results["launch"] = s.launch;
    results["classification"] = to_string(s.classification);
    results["closure_defect"] = s.closure_defect;
    results["iterations"] = s.iterations;
    results["lambda_residual"] = {{"max", residual}, {"threshold", threshold}};
    results["genus"] = g;
    results["vertices"] = rev.mesh.num_vertices();
    report.results["revolution"] = results;
    report.artifacts.push_back({"revolution.obj", obj_text(rev.mesh)});
    report.artifacts.push_back({"meridian.csv", trajectory_csv(s.trajectory)});
}

// --- continue -------------------------------------------------------------

void run_continue(const SuiteConfig& c, SuiteReport& report, const std::string& prefix)
{
    NewtonOptions newton;
    newton.jobs = c.jobs;
    const Branch branch = continue_branch(c.lambda_lo, c.lambda_hi, c.lambda_step, c.level, newton);
    Check complete = bound_check(prefix + "branch_samples", static_cast<double>(branch.samples.size()),
                                 std::floor(-c.lambda_lo / c.lambda_step + 1e-9)
                                     + std::floor(c.lambda_hi / c.lambda_step + 1e-9) + 1.0,
                                 ">=");
    complete.note = branch.diagnostic;
    report.checks.push_back(complete);

    double deviation = 0.0;
    double worst_residual = 0.0;
    double quadratic = 0.0;
    std::vector<double> lambdas;
    for (const BranchSample& s : branch.samples) {
        const double round = lambda_sphere_radius(s.lambda) - kBaseRadius;
        deviation = std::max(deviation, (s.u.array() - round).abs().maxCoeff());
        worst_residual = std::max(worst_residual, s.residual);
        quadratic = std::max(quadratic, s.quadratic_constant);
        lambdas.push_back(s.lambda);
    }
    report.checks.push_back(bound_check(prefix + "max_round_deviation", deviation, kRadiusTolerance));
    report.checks.push_back(bound_check(prefix + "max_residual", worst_residual, newton.tolerance));
    report.checks.push_back(info_check(prefix + "quadratic_constant", quadratic, "max over branch samples"));

    RigidityOptions rigidity;
    rigidity.level = c.level;
    rigidity.seed = c.seed;
    rigidity.newton = newton;
    const std::vector<RigidityCell> cells = rigidity_experiment(lambdas, {c.amplitude}, rigidity);
    int round_count = 0;
    ordered_json cell_json = ordered_json::array();
    for (const RigidityCell& cell : cells) {
        round_count += cell.outcome == RigidityOutcome::round ? 1 : 0;
        ordered_json entry = {{"lambda", cell.lambda},
                              {"amplitude", cell.amplitude},
                              {"outcome", to_string(cell.outcome)},
                              {"iterations", cell.iterations},
                              {"residual", cell.residual}};
        entry["deviation"] = std::isfinite(cell.deviation) ? ordered_json(cell.deviation) : ordered_json(nullptr);
        if (!cell.diagnostic.empty()) {
            entry["diagnostic"] = cell.diagnostic;
        }
        cell_json.push_back(entry);
    }
    report.checks.push_back(bound_check(prefix + "rigidity_round_cells", round_count,
                                        static_cast<double>(cells.size()), ">="));

    const LinearizationReport lin = linearization_check(0.0, 0.1, c.level);
    report.checks.push_back(bound_check(prefix + "linearization_ratio", lin.ratio, 0.30));

    std::ostringstream jsonl;
    write_branch_jsonl(jsonl, branch);
    std::ostringstream fields;
    write_branch_fields_csv(fields, branch);
    report.artifacts.push_back({"branch.jsonl", jsonl.str()});
    report.artifacts.push_back({"branch_fields.csv", fields.str()});

    ordered_json results;
    results["samples"] = branch.samples.size();
    results["lambdas"] = lambdas;
    results["max_round_deviation"] = deviation;
    results["max_residual"] = worst_residual;
    results["quadratic_constant"] = quadratic;
    results["rigidity"] = cell_json;
    results["linearization"] = {{"lambda1", lin.lambda1}, {"lambda2", lin.lambda2}, {"defect", lin.defect},
                                {"relative", lin.relative}, {"half_defect", lin.half_defect}, {"ratio", lin.ratio}};
    report.results["continuation"] = results;
}

// --- estimate -------------------------------------------------------------

void add_estimate_checks(const std::vector<EstimateReport>& reports, SuiteReport& report, const std::string& prefix)
{
    ordered_json list = ordered_json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const EstimateReport& e = reports[i];
        const std::string name = prefix + "estimate" + std::to_string(i) + "/" + e.name;
        if (e.verdict == Verdict::informational) {
            report.checks.push_back(info_check(name, e.lhs));
        } else {
            Check chk = bound_check(name + "/margin", e.margin, -e.tolerance, ">=");
            chk.passed = e.verdict == Verdict::pass;
            report.checks.push_back(chk);
        }
        list.push_back(to_json(e));
    }
    report.results["estimates"] = list;
}

std::vector<EstimateReport> builtin_estimates(const SuiteConfig& c, const TriMesh& mesh)
{
    const Vec3 on_surface = mesh.vertices().front();
    double reach = 0.0;
    for (const Vec3& x : mesh.vertices()) {
        reach = std::max(reach, x.norm());
    }
    std::vector<std::function<EstimateReport()>> jobs;
    for (const double eps : {0.25, 0.5}) {
        jobs.emplace_back([&, eps] { return gauss_bonnet_check(mesh, on_surface, 0.5, 1.0, eps); });
        jobs.emplace_back([&, eps] { return gauss_bonnet_check(mesh, on_surface, 1.0, 2.0, eps); });
        jobs.emplace_back([&, eps] { return gauss_bonnet_check(mesh, Vec3::Zero(), 0.75 * reach, 1.25 * reach, eps); });
    }
    jobs.emplace_back([&] {
        return monotonicity_profile(mesh, c.lambda, on_surface, Field::Ones(static_cast<Eigen::Index>(mesh.num_vertices())),
                                    1.0);
    });
    jobs.emplace_back([&] { return choi_schoen_quantity(mesh, on_surface, 1.0); });
    jobs.emplace_back([&] { return singularity_diagnostic(mesh, Vec3::Zero()); });
    if (is_convex(mesh, 1e-6)) {
        jobs.emplace_back([&] { return convex_area_growth(mesh, Vec3::Zero(), {reach, 1.5 * reach, 2.0 * reach}); });
    }
    if (boundary_loop_count(mesh) == 0) {
        jobs.emplace_back([&] { return sphere_intersection_check(mesh, c.lambda); });
    }
    std::vector<EstimateReport> out(jobs.size());
    parallel_for(static_cast<int>(jobs.size()), c.jobs, [&](int i) { out[static_cast<std::size_t>(i)] = jobs[static_cast<std::size_t>(i)](); });
    return out;
}

void run_estimate(const SuiteConfig& c, SuiteReport& report, const std::string& prefix,
                  const std::function<const TriMesh&()>& surface)
{
    if (!c.manifest.empty()) {
        std::ifstream in(c.manifest, std::ios::binary);
        if (!in) {
            throw IoError("cannot read manifest '" + c.manifest + "'");
        }
        json manifest;
        try {
            manifest = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("manifest '" + c.manifest + "' is not valid JSON: " + e.what());
        }
        const std::string base = std::filesystem::path(c.manifest).parent_path().string();
        add_estimate_checks(run_estimate_batch(manifest, base.empty() ? "." : base, c.jobs), report, prefix);
        return;
    }
    add_estimate_checks(builtin_estimates(c, surface()), report, prefix);
}

}  // namespace

SuiteReport run_suite(const SuiteConfig& config)
{
    validate_config(config);
    SuiteReport report;
    report.config = config;

    // The surface is built once and only for commands that use it; a
    // shooting failure for the torus is a failed check, a missing file an
    // IoError.
    std::optional<TriMesh> surface;
    bool surface_failed = false;
    auto get_surface = [&]() -> const TriMesh& {
        if (!surface && !surface_failed) {
            try {
                surface = build_surface(config);
                report.inputs.push_back(input_record(config.shape, *surface));
            } catch (const IoError&) {
                throw;
            } catch (const std::exception&) {
                surface_failed = true;
                throw;
            }
        }
        if (!surface) {
            throw std::runtime_error("surface '" + config.shape + "' could not be built");
        }
        return *surface;
    };

    auto section = [&](Command command, const std::string& prefix) {
        SuiteReport part;
        part.config = config;
        const std::string name = std::string(to_string(command));
        guarded(part, prefix + "completed", [&] {
            switch (command) {
            case Command::verify:
                run_verify(config, get_surface(), part, prefix);
                break;
            case Command::spectrum:
                run_spectrum(config, get_surface(), part, prefix);
                break;
            case Command::shoot_curve:
                run_shoot_curve(config, part, prefix);
                break;
            case Command::shoot_revolution:
                run_shoot_revolution(config, part, prefix);
                break;
            case Command::continuation:
                run_continue(config, part, prefix);
                break;
            case Command::estimate:
                run_estimate(config, part, prefix, get_surface);
                break;
            case Command::all:
                break;
            }
        });
        report.inputs.insert(report.inputs.end(), part.inputs.begin(), part.inputs.end());
        report.checks.insert(report.checks.end(), part.checks.begin(), part.checks.end());
        for (Artifact& a : part.artifacts) {
            report.artifacts.push_back({prefix.empty() ? a.name : name + "_" + a.name, std::move(a.content)});
        }
        return part.results;
    };

    if (config.command == Command::all) {
        for (const Command command : {Command::verify, Command::spectrum, Command::shoot_curve, Command::shoot_revolution,
                                      Command::continuation, Command::estimate}) {
            const std::string name = to_string(command);
            report.results[name] = section(command, name + "/");
        }
    } else {
        report.results = section(config.command, "");
    }
    return report;
}

}  // namespace lambdalab
