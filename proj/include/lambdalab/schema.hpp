#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lambdalab {

/// First schema violation found; `pointer` is an RFC 6901 JSON pointer into
/// the validated document.
struct SchemaViolation {
    std::string pointer;
    std::string message;
};

/// Validates against the JSON-Schema keyword subset the shipped report
/// schemas use: type, const, enum, properties, required,
/// additionalProperties, items, minItems, minimum, maximum, minLength,
/// pattern and local $ref. Other keywords are ignored.
std::optional<SchemaViolation> validate_against(const nlohmann::json& document, const nlohmann::json& schema);

/// Report schema of the given version as shipped in docs/schemas; throws
/// std::out_of_range for versions that do not exist.
const nlohmann::json& report_schema(int version);

/// Versions report_schema() knows, oldest first.
std::vector<int> report_schema_versions();

struct ReportValidation {
    bool valid = false;
    /// schema_version read from the document (0 when absent or unreadable).
    int version = 0;
    std::string pointer;
    std::string message;
};

/// Picks the schema from the document's schema_version and validates.
ReportValidation validate_report(const nlohmann::json& document);

/// Parses then validates; a parse failure is an invalid report whose
/// pointer names the value being read where the text broke off and whose
/// message carries the byte offset.
ReportValidation validate_report_text(const std::string& text);

/// Throws IoError when the file cannot be read.
ReportValidation validate_report_file(const std::string& path);

}  // namespace lambdalab
