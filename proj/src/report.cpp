#include "lambdalab/report.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lambdalab/mesh_io.hpp"

#ifndef LAMBDALAB_GIT_REVISION
#define LAMBDALAB_GIT_REVISION "unknown"
#endif

namespace lambdalab {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::pair<Command, const char*> kCommandNames[] = {
    {Command::verify, "verify"},
    {Command::spectrum, "spectrum"},
    {Command::shoot_curve, "shoot-curve"},
    {Command::shoot_revolution, "shoot-revolution"},
    {Command::continuation, "continue"},
    {Command::estimate, "estimate"},
    {Command::all, "all"},
};

bool known_shape(const std::string& shape)
{
    return shape == "sphere" || shape == "torus" || shape == "cylinder" || shape == "disk"
           || (shape.rfind("file:", 0) == 0 && shape.size() > 5);
}

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm parts{};
    gmtime_r(&now, &parts);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &parts);
    return buffer;
}

template <class T>
T take(json& object, const char* key, T fallback)
{
    if (!object.contains(key)) {
        return fallback;
    }
    T value = object.at(key).get<T>();
    object.erase(key);
    return value;
}

}  // namespace

const char* to_string(Command command)
{
    for (const auto& [c, name] : kCommandNames) {
        if (c == command) {
            return name;
        }
    }
    return "?";
}

Command parse_command(const std::string& name)
{
    for (const auto& [c, text] : kCommandNames) {
        if (name == text) {
            return c;
        }
    }
    throw ConfigError("unknown command '" + name + "'");
}

void validate_config(const SuiteConfig& config)
{
    if (config.level < 0 || config.level > kMaxLevel) {
        throw ConfigError("level must be in [0, " + std::to_string(kMaxLevel) + "], got " + std::to_string(config.level));
    }
    if (config.tolerance && !(*config.tolerance > 0.0)) {
        throw ConfigError("tolerance must be positive");
    }
    if (config.jobs < 1) {
        throw ConfigError("jobs must be at least 1");
    }
    if (!known_shape(config.shape)) {
        throw ConfigError("unknown shape '" + config.shape + "' (sphere, torus, cylinder, disk or file:PATH)");
    }
    if (config.mode != "sphere" && config.mode != "torus") {
        throw ConfigError("mode must be sphere or torus");
    }
    if (config.symmetry < 1) {
        throw ConfigError("symmetry must be at least 1");
    }
    if (config.sweep_samples < 0 || (config.sweep_samples > 0 && !(config.sweep_lo < config.sweep_hi))) {
        throw ConfigError("sweep needs sweep_lo < sweep_hi and a non-negative sample count");
    }
    if (config.guess && !(*config.guess > 0.0)) {
        throw ConfigError("guess must be positive");
    }
    if (config.eigen_count < 1) {
        throw ConfigError("eigen_count must be at least 1");
    }
    if (!(config.lambda_step > 0.0) || !(config.lambda_lo <= 0.0) || !(config.lambda_hi >= 0.0)) {
        throw ConfigError("continuation needs lambda_lo <= 0 <= lambda_hi and lambda_step > 0");
    }
    if (!(config.amplitude >= 0.0)) {
        throw ConfigError("amplitude must be non-negative");
    }
    if (!std::isfinite(config.lambda)) {
        throw ConfigError("lambda must be finite");
    }
}

SuiteConfig config_from_json(const json& input)
{
    if (!input.is_object()) {
        throw ConfigError("configuration must be a JSON object");
    }
    json rest = input;
    SuiteConfig c;
    try {
        if (!rest.contains("command")) {
            throw ConfigError("configuration needs a 'command'");
        }
        c.command = parse_command(take<std::string>(rest, "command", ""));
        c.lambda = take(rest, "lambda", c.lambda);
        c.shape = take(rest, "shape", c.shape);
        c.level = take(rest, "level", c.level);
        if (rest.contains("tol")) {
            c.tolerance = take(rest, "tol", 0.0);
        }
        c.out_dir = take(rest, "out", c.out_dir);
        c.seed = take(rest, "seed", c.seed);
        c.jobs = take(rest, "jobs", c.jobs);
        c.timestamp = !take(rest, "no_timestamp", !c.timestamp);
        c.symmetry = take(rest, "symmetry", c.symmetry);
        if (rest.contains("guess")) {
            c.guess = take(rest, "guess", 0.0);
        }
        c.sweep_lo = take(rest, "sweep_lo", c.sweep_lo);
        c.sweep_hi = take(rest, "sweep_hi", c.sweep_hi);
        c.sweep_samples = take(rest, "sweep_samples", c.sweep_samples);
        c.mode = take(rest, "mode", c.mode);
        c.eigen_count = take(rest, "eigen_count", c.eigen_count);
        c.lambda_lo = take(rest, "lambda_lo", c.lambda_lo);
        c.lambda_hi = take(rest, "lambda_hi", c.lambda_hi);
        c.lambda_step = take(rest, "lambda_step", c.lambda_step);
        c.amplitude = take(rest, "amplitude", c.amplitude);
        c.manifest = take(rest, "manifest", c.manifest);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("configuration value has the wrong type: ") + e.what());
    }
    if (!rest.empty()) {
        throw ConfigError("unknown configuration key '" + rest.begin().key() + "'");
    }
    validate_config(c);
    return c;
}

ordered_json config_to_json(const SuiteConfig& c)
{
    ordered_json j;
    j["command"] = to_string(c.command);
    j["lambda"] = c.lambda;
    j["shape"] = c.shape;
    j["level"] = c.level;
    j["tol"] = c.tolerance ? ordered_json(*c.tolerance) : ordered_json(nullptr);
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["symmetry"] = c.symmetry;
    j["guess"] = c.guess ? ordered_json(*c.guess) : ordered_json(nullptr);
    j["sweep_lo"] = c.sweep_lo;
    j["sweep_hi"] = c.sweep_hi;
    j["sweep_samples"] = c.sweep_samples;
    j["mode"] = c.mode;
    j["eigen_count"] = c.eigen_count;
    j["lambda_lo"] = c.lambda_lo;
    j["lambda_hi"] = c.lambda_hi;
    j["lambda_step"] = c.lambda_step;
    j["amplitude"] = c.amplitude;
    j["manifest"] = c.manifest;
    return j;
}

SuiteConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read configuration '" + path + "'");
    }
    json parsed;
    try {
        parsed = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("configuration '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(parsed);
}

std::string sha256_hex(const std::string& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xF];
    }
    return out;
}

std::string mesh_sha256(const TriMesh& mesh)
{
    std::ostringstream out;
    write_obj(out, mesh);
    return sha256_hex(out.str());
}

Check bound_check(const std::string& name, double value, double threshold, const std::string& comparison,
                  bool asserted)
{
    Check c;
    c.name = name;
    c.value = value;
    c.threshold = threshold;
    c.comparison = comparison;
    c.asserted = asserted;
    if (comparison == "<=") {
        c.passed = value <= threshold;
    } else if (comparison == ">=") {
        c.passed = value >= threshold;
    } else if (comparison == "==") {
        c.passed = value == threshold;
    } else {
        throw std::invalid_argument("unknown comparison '" + comparison + "'");
    }
    return c;
}

Check failed_check(const std::string& name, const std::string& note)
{
    Check c;
    c.name = name;
    c.passed = false;
    c.note = note;
    return c;
}

Check info_check(const std::string& name, double value, const std::string& note)
{
    Check c;
    c.name = name;
    c.value = value;
    c.asserted = false;
    c.passed = true;
    c.note = note;
    return c;
}

ordered_json to_json(const Check& check)
{
    ordered_json j;
    j["name"] = check.name;
    // JSON has no NaN or infinity; such values are reported as null.
    j["value"] = check.value && std::isfinite(*check.value) ? ordered_json(*check.value) : ordered_json(nullptr);
    j["threshold"] = check.threshold ? ordered_json(*check.threshold) : ordered_json(nullptr);
    j["comparison"] = check.comparison;
    j["asserted"] = check.asserted;
    j["passed"] = check.passed;
    if (!check.note.empty()) {
        j["note"] = check.note;
    }
    return j;
}

InputRecord input_record(const std::string& label, const TriMesh& mesh)
{
    return {label, mesh.num_vertices(), mesh.num_faces(), mesh_sha256(mesh)};
}

bool SuiteReport::passed() const
{
    for (const Check& c : checks) {
        if (c.asserted && !c.passed) {
            return false;
        }
    }
    return true;
}

ordered_json report_document(const SuiteReport& report)
{
    ordered_json doc;
    doc["schema_version"] = kReportSchemaVersion;
    ordered_json generator;
    generator["name"] = "lambdalab";
    generator["git_revision"] = LAMBDALAB_GIT_REVISION;
    if (report.config.timestamp) {
        generator["timestamp"] = utc_timestamp();
    }
    doc["generator"] = generator;
    doc["command"] = to_string(report.config.command);
    doc["config"] = config_to_json(report.config);
    doc["inputs"] = ordered_json::array();
    for (const InputRecord& in : report.inputs) {
        doc["inputs"].push_back(
            {{"label", in.label}, {"vertices", in.vertices}, {"faces", in.faces}, {"sha256", in.sha256}});
    }
    doc["checks"] = ordered_json::array();
    for (const Check& c : report.checks) {
        doc["checks"].push_back(to_json(c));
    }
    doc["results"] = report.results;
    doc["status"] = report.passed() ? "pass" : "fail";
    return doc;
}

std::string serialize_report(const SuiteReport& report)
{
    return report_document(report).dump(2) + "\n";
}

void write_outputs(const SuiteReport& report, const std::string& out_dir)
{
    const std::string text = serialize_report(report);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
    }
    auto write_file = [&](const std::string& name, const std::string& content) {
        const std::filesystem::path path = std::filesystem::path(out_dir) / name;
        std::ofstream out(path, std::ios::binary);
        out << content;
        if (!out) {
            throw IoError("cannot write '" + path.string() + "'");
        }
    };
    for (const Artifact& a : report.artifacts) {
        write_file(a.name, a.content);
    }
    write_file("report.json", text);
}

}  // namespace lambdalab
