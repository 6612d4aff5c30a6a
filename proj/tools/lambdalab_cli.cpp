// Command-line entry point. Exit codes: 0 every asserted check passed,
// 1 an asserted check failed (or a report is invalid), 2 usage or IO error.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lambdalab/mesh_io.hpp"
#include "lambdalab/report.hpp"
#include "lambdalab/schema.hpp"

namespace {

using lambdalab::Command;
using lambdalab::SuiteConfig;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

void add_common_flags(CLI::App& sub, SuiteConfig& c, double& tol)
{
    sub.add_option("--lambda", c.lambda, "lambda parameter");
    sub.add_option("--shape", c.shape, "sphere, torus, cylinder, disk or file:PATH");
    sub.add_option("--level", c.level, "refinement level (0-6)");
    sub.add_option("--tol", tol, "relative tolerance of identity checks");
    sub.add_option("--out", c.out_dir, "output directory (report.json and artifacts); stdout when absent");
    sub.add_option("--jobs", c.jobs, "worker threads");
    sub.add_option("--seed", c.seed, "random seed");
    sub.add_flag("--no-timestamp", [&c](std::int64_t) { c.timestamp = false; }, "omit the timestamp for byte-identical reports");
}

int emit(const SuiteConfig& config)
{
    const lambdalab::SuiteReport report = lambdalab::run_suite(config);
    if (config.out_dir.empty()) {
        std::cout << lambdalab::serialize_report(report);
    } else {
        lambdalab::write_outputs(report, config.out_dir);
    }
    std::size_t failures = 0;
    for (const lambdalab::Check& c : report.checks) {
        if (c.asserted && !c.passed) {
            ++failures;
            std::cerr << "FAIL " << c.name << (c.note.empty() ? "" : ": " + c.note) << '\n';
        }
    }
    std::cerr << lambdalab::to_string(config.command) << ": " << (report.passed() ? "pass" : "fail") << " ("
              << report.checks.size() << " checks, " << failures << " failed)\n";
    return report.passed() ? kExitPass : kExitFail;
}

int validate(const std::string& path)
{
    const lambdalab::ReportValidation v = lambdalab::validate_report_file(path);
    if (v.valid) {
        std::cout << "valid (schema version " << v.version << ")\n";
        return kExitPass;
    }
    std::cout << "invalid at '" << v.pointer << "': " << v.message << '\n';
    return kExitFail;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Numerical experiments on lambda-surfaces"};
    app.require_subcommand(1);

    SuiteConfig config;
    double tol = 0.0;

    struct Entry {
        Command command;
        CLI::App* sub;
    };
    std::vector<Entry> entries;
    auto add = [&](Command command, const std::string& help) {
        CLI::App* sub = app.add_subcommand(lambdalab::to_string(command), help);
        add_common_flags(*sub, config, tol);
        entries.push_back({command, sub});
        return sub;
    };

    add(Command::verify, "identity residuals on a surface");
    CLI::App* spectrum = add(Command::spectrum, "largest eigenvalues of the stability operator");
    spectrum->add_option("--count", config.eigen_count, "number of eigenvalues");
    CLI::App* curve = add(Command::shoot_curve, "closed lambda-curves by shooting");
    curve->add_option("--symmetry", config.symmetry, "symmetry order of the curve");
    curve->add_option("--guess", config.guess, "launch distance guess");
    curve->add_option("--sweep-lo", config.sweep_lo, "sweep lower launch");
    curve->add_option("--sweep-hi", config.sweep_hi, "sweep upper launch");
    curve->add_option("--sweep-samples", config.sweep_samples, "sweep sample count (0: single shot)");
    CLI::App* revolution = add(Command::shoot_revolution, "closed surfaces of revolution by shooting");
    revolution->add_option("--mode", config.mode, "sphere or torus");
    revolution->add_option("--guess", config.guess, "launch guess");
    CLI::App* cont = add(Command::continuation, "branch of round solutions and rigidity experiment");
    cont->add_option("--lambda-lo", config.lambda_lo, "lower end of the branch");
    cont->add_option("--lambda-hi", config.lambda_hi, "upper end of the branch");
    cont->add_option("--lambda-step", config.lambda_step, "branch step");
    cont->add_option("--amplitude", config.amplitude, "rigidity perturbation amplitude");
    CLI::App* estimate = add(Command::estimate, "integral and pointwise estimates");
    estimate->add_option("--manifest", config.manifest, "batch manifest (JSON list of {check, mesh_path, params})");
    CLI::App* all = add(Command::all, "every command on one configuration");
    all->add_option("--mode", config.mode, "revolution mode");

    std::string config_path;
    CLI::App* run = app.add_subcommand("run", "run a JSON configuration");
    run->add_option("--config", config_path, "configuration file")->required();

    std::string report_path;
    CLI::App* check = app.add_subcommand("validate-report", "validate a report against its schema version");
    check->add_option("path", report_path, "report.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitUsage;
    }

    try {
        if (check->parsed()) {
            return validate(report_path);
        }
        if (run->parsed()) {
            return emit(lambdalab::load_config(config_path));
        }
        for (const Entry& e : entries) {
            if (e.sub->parsed()) {
                config.command = e.command;
                if (e.sub->count("--tol") > 0) {
                    config.tolerance = tol;
                }
                return emit(config);
            }
        }
    } catch (const lambdalab::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const lambdalab::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitFail;
    }
    return kExitUsage;
}
