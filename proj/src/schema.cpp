#include "lambdalab/schema.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "lambdalab/embedded_schemas.hpp"
#include "lambdalab/mesh_io.hpp"

namespace lambdalab {

namespace {

using nlohmann::json;

std::string escape_token(const std::string& token)
{
    std::string out;
    for (const char c : token) {
        if (c == '~') {
            out += "~0";
        } else if (c == '/') {
            out += "~1";
        } else {
            out += c;
        }
    }
    return out;
}

bool has_type(const json& value, const std::string& type)
{
    if (type == "object") {
        return value.is_object();
    }
    if (type == "array") {
        return value.is_array();
    }
    if (type == "string") {
        return value.is_string();
    }
    if (type == "boolean") {
        return value.is_boolean();
    }
    if (type == "null") {
        return value.is_null();
    }
    if (type == "number") {
        return value.is_number();
    }
    if (type == "integer") {
        if (value.is_number_integer()) {
            return true;
        }
        return value.is_number_float() && std::floor(value.get<double>()) == value.get<double>();
    }
    throw std::invalid_argument("schema uses unknown type '" + type + "'");
}

// JSON equality for const and enum, treating 2 and 2.0 as equal.
bool same_value(const json& a, const json& b)
{
    if (a.is_number() && b.is_number()) {
        return a.get<double>() == b.get<double>();
    }
    return a == b;
}

class Validator {
public:
    explicit Validator(const json& root) : root_(root) {}

    std::optional<SchemaViolation> check(const json& value, const json& schema, const std::string& pointer)
    {
        if (schema.is_boolean()) {
            if (!schema.get<bool>()) {
                return SchemaViolation{pointer, "no value is allowed here"};
            }
            return std::nullopt;
        }
        if (schema.contains("$ref")) {
            return check(value, resolve(schema.at("$ref").get<std::string>()), pointer);
        }
        if (schema.contains("type")) {
            const json& type = schema.at("type");
            bool ok = false;
            std::string names;
            for (const json& t : type.is_array() ? type : json::array({type})) {
                ok = ok || has_type(value, t.get<std::string>());
                names += (names.empty() ? "" : " or ") + t.get<std::string>();
            }
            if (!ok) {
                return SchemaViolation{pointer, "expected " + names + ", found " + value.type_name()};
            }
        }
        if (schema.contains("const") && !same_value(value, schema.at("const"))) {
            return SchemaViolation{pointer, "expected the constant " + schema.at("const").dump()};
        }
        if (schema.contains("enum")) {
            bool found = false;
            for (const json& option : schema.at("enum")) {
                found = found || same_value(value, option);
            }
            if (!found) {
                return SchemaViolation{pointer, "value " + value.dump() + " is not one of " + schema.at("enum").dump()};
            }
        }
        if (value.is_number()) {
            const double x = value.get<double>();
            if (schema.contains("minimum") && x < schema.at("minimum").get<double>()) {
                return SchemaViolation{pointer, "below the minimum " + schema.at("minimum").dump()};
            }
            if (schema.contains("maximum") && x > schema.at("maximum").get<double>()) {
                return SchemaViolation{pointer, "above the maximum " + schema.at("maximum").dump()};
            }
        }
        if (value.is_string()) {
            const auto& text = value.get_ref<const std::string&>();
            if (schema.contains("minLength") && text.size() < schema.at("minLength").get<std::size_t>()) {
                return SchemaViolation{pointer, "string shorter than " + schema.at("minLength").dump()};
            }
            if (schema.contains("pattern") && !std::regex_search(text, pattern(schema.at("pattern").get<std::string>()))) {
                return SchemaViolation{pointer, "string does not match " + schema.at("pattern").get<std::string>()};
            }
        }
        if (value.is_array()) {
            if (schema.contains("minItems") && value.size() < schema.at("minItems").get<std::size_t>()) {
                return SchemaViolation{pointer, "fewer than " + schema.at("minItems").dump() + " items"};
            }
            if (schema.contains("items")) {
                for (std::size_t i = 0; i < value.size(); ++i) {
                    if (auto v = check(value[i], schema.at("items"), pointer + "/" + std::to_string(i))) {
                        return v;
                    }
                }
            }
        }
        if (value.is_object()) {
            if (schema.contains("required")) {
                for (const json& key : schema.at("required")) {
                    if (!value.contains(key.get<std::string>())) {
                        return SchemaViolation{pointer, "missing required property '" + key.get<std::string>() + "'"};
                    }
                }
            }
            const json empty = json::object();
            const json& properties = schema.contains("properties") ? schema.at("properties") : empty;
            for (const auto& [key, child] : value.items()) {
                const std::string child_pointer = pointer + "/" + escape_token(key);
                if (properties.contains(key)) {
                    if (auto v = check(child, properties.at(key), child_pointer)) {
                        return v;
                    }
                } else if (schema.contains("additionalProperties")) {
                    const json& extra = schema.at("additionalProperties");
                    if (extra.is_boolean() && !extra.get<bool>()) {
                        return SchemaViolation{child_pointer, "property '" + key + "' is not allowed"};
                    }
                    if (auto v = check(child, extra, child_pointer)) {
                        return v;
                    }
                }
            }
        }
        return std::nullopt;
    }

private:
    const json& resolve(const std::string& ref) const
    {
        if (ref.rfind("#", 0) != 0) {
            throw std::invalid_argument("only local $ref is supported: " + ref);
        }
        return root_.at(json::json_pointer(ref.substr(1)));
    }

    const std::regex& pattern(const std::string& text)
    {
        auto it = patterns_.find(text);
        if (it == patterns_.end()) {
            it = patterns_.emplace(text, std::regex(text, std::regex::ECMAScript)).first;
        }
        return it->second;
    }

    const json& root_;
    std::map<std::string, std::regex> patterns_;
};

// Tracks the JSON pointer of the value being parsed so a parse failure can
// say where the document broke off.
class PointerTracker : public nlohmann::json_sax<json> {
public:
    std::string pointer() const
    {
        std::string out;
        for (const Frame& f : frames_) {
            if (f.array) {
                out += "/" + std::to_string(f.index);
            } else if (f.has_key) {
                out += "/" + escape_token(f.key);
            }
        }
        return out;
    }

    bool null() override { return value(); }
    bool boolean(bool) override { return value(); }
    bool number_integer(number_integer_t) override { return value(); }
    bool number_unsigned(number_unsigned_t) override { return value(); }
    bool number_float(number_float_t, const string_t&) override { return value(); }
    bool string(string_t&) override { return value(); }
    bool binary(binary_t&) override { return value(); }
    bool start_object(std::size_t) override
    {
        frames_.push_back({});
        return true;
    }
    bool key(string_t& k) override
    {
        frames_.back().key = k;
        frames_.back().has_key = true;
        return true;
    }
    bool end_object() override { return close(); }
    bool start_array(std::size_t) override
    {
        frames_.push_back({true, 0, {}, false});
        return true;
    }
    bool end_array() override { return close(); }
    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override { return false; }

private:
    struct Frame {
        bool array = false;
        std::size_t index = 0;
        std::string key;
        bool has_key = false;
    };

    bool value()
    {
        if (!frames_.empty() && frames_.back().array) {
            ++frames_.back().index;
        } else if (!frames_.empty()) {
            frames_.back().has_key = false;
        }
        return true;
    }

    bool close()
    {
        frames_.pop_back();
        return value();
    }

    std::vector<Frame> frames_;
};

const std::map<int, json>& schemas()
{
    static const std::map<int, json> table = [] {
        std::map<int, json> out;
        out.emplace(1, json::parse(embedded::kReportSchemaV1));
        out.emplace(2, json::parse(embedded::kReportSchemaV2));
        return out;
    }();
    return table;
}

}  // namespace

std::optional<SchemaViolation> validate_against(const json& document, const json& schema)
{
    Validator validator(schema);
    return validator.check(document, schema, "");
}

const json& report_schema(int version)
{
    return schemas().at(version);
}

std::vector<int> report_schema_versions()
{
    std::vector<int> out;
    for (const auto& entry : schemas()) {
        out.push_back(entry.first);
    }
    return out;
}

ReportValidation validate_report(const json& document)
{
    ReportValidation out;
    if (!document.is_object()) {
        out.message = "report must be a JSON object";
        return out;
    }
    if (!document.contains("schema_version") || !document.at("schema_version").is_number_integer()) {
        out.pointer = "/schema_version";
        out.message = "missing or non-integer schema_version";
        return out;
    }
    out.version = document.at("schema_version").get<int>();
    if (schemas().count(out.version) == 0) {
        out.pointer = "/schema_version";
        out.message = "unknown schema version " + std::to_string(out.version);
        return out;
    }
    if (const auto violation = validate_against(document, report_schema(out.version))) {
        out.pointer = violation->pointer;
        out.message = violation->message;
        return out;
    }
    out.valid = true;
    return out;
}

ReportValidation validate_report_text(const std::string& text)
{
    json document;
    try {
        document = json::parse(text);
    } catch (const json::parse_error& e) {
        PointerTracker tracker;
        json::sax_parse(text, &tracker);
        ReportValidation out;
        out.pointer = tracker.pointer();
        out.message = "not valid JSON (byte " + std::to_string(e.byte) + "): " + e.what();
        return out;
    }
    return validate_report(document);
}

ReportValidation validate_report_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read report '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return validate_report_text(buffer.str());
}

}  // namespace lambdalab
