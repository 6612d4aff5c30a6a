#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lambdalab/mesh.hpp"

namespace lambdalab {

/// Invalid suite configuration; the command line maps it to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr int kReportSchemaVersion = 2;
/// Memory guard: an icosphere at level 7 has 164k vertices and the dense
/// continuation Jacobian would not fit.
inline constexpr int kMaxLevel = 6;

enum class Command { verify, spectrum, shoot_curve, shoot_revolution, continuation, estimate, all };

const char* to_string(Command command);
/// Throws ConfigError for unknown names.
Command parse_command(const std::string& name);

struct SuiteConfig {
    Command command = Command::verify;
    double lambda = 0.0;
    /// sphere, torus, cylinder, disk or file:PATH.
    std::string shape = "sphere";
    int level = 3;
    /// Overrides the relative acceptance tolerance of identity checks (0.05).
    std::optional<double> tolerance;
    /// Empty: the report goes to stdout and no artifacts are written.
    std::string out_dir;
    std::uint64_t seed = 0x5eed;
    int jobs = 1;
    bool timestamp = true;

    // shoot-curve
    int symmetry = 2;
    /// Launch guess; defaults to the closed-form circle or sphere radius.
    std::optional<double> guess;
    double sweep_lo = 0.5;
    double sweep_hi = 5.0;
    /// A positive count replaces the single shot by a sweep over [sweep_lo, sweep_hi].
    int sweep_samples = 0;

    // shoot-revolution: sphere or torus
    std::string mode = "sphere";

    // spectrum
    int eigen_count = 9;

    // continue
    double lambda_lo = -0.3;
    double lambda_hi = 0.5;
    double lambda_step = 0.05;
    double amplitude = 0.05;

    // estimate: optional batch manifest; relative mesh paths resolve against its directory
    std::string manifest;
};

/// Throws ConfigError: tolerance > 0, 0 <= level <= kMaxLevel, jobs >= 1, a
/// known shape and mode, and well-formed ranges.
void validate_config(const SuiteConfig& config);

/// Keys mirror the command-line flags with dashes replaced by underscores.
/// Unknown keys are a ConfigError so misspelled options never fall back to
/// defaults silently. The result is validated.
SuiteConfig config_from_json(const nlohmann::json& json);
nlohmann::ordered_json config_to_json(const SuiteConfig& config);

/// Throws IoError when the file cannot be read, ConfigError when it is not
/// a valid configuration.
SuiteConfig load_config(const std::string& path);

std::string sha256_hex(const std::string& bytes);
/// Hash of the mesh's OBJ serialization.
std::string mesh_sha256(const TriMesh& mesh);

struct Check {
    std::string name;
    std::optional<double> value;
    std::optional<double> threshold;
    /// "<=", ">=" or "==" (value equals threshold up to nothing).
    std::string comparison = "<=";
    /// Only asserted checks decide the exit status.
    bool asserted = true;
    bool passed = false;
    std::string note;
};

/// value `comparison` threshold; NaN values fail.
Check bound_check(const std::string& name, double value, double threshold, const std::string& comparison = "<=",
                  bool asserted = true);
/// An asserted check that failed because the computation itself failed.
Check failed_check(const std::string& name, const std::string& note);
/// A reported value with no threshold.
Check info_check(const std::string& name, double value, const std::string& note = {});

nlohmann::ordered_json to_json(const Check& check);

struct InputRecord {
    std::string label;
    std::size_t vertices = 0;
    std::size_t faces = 0;
    std::string sha256;
};

InputRecord input_record(const std::string& label, const TriMesh& mesh);

/// File written next to report.json.
struct Artifact {
    std::string name;
    std::string content;
};

struct SuiteReport {
    SuiteConfig config;
    std::vector<InputRecord> inputs;
    std::vector<Check> checks;
    nlohmann::ordered_json results = nlohmann::ordered_json::object();
    std::vector<Artifact> artifacts;

    /// Every asserted check passed.
    bool passed() const;
};

nlohmann::ordered_json report_document(const SuiteReport& report);
/// Two-space indented JSON with a trailing newline.
std::string serialize_report(const SuiteReport& report);

/// Runs the configured command. Domain failures (no root found, Newton
/// diverged, preconditions) become failed checks; configuration and input
/// errors propagate as ConfigError or IoError.
SuiteReport run_suite(const SuiteConfig& config);

/// Creates out_dir and writes report.json plus every artifact. Throws IoError.
void write_outputs(const SuiteReport& report, const std::string& out_dir);

}  // namespace lambdalab
