#include "dbarlab/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace dbarlab {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

Json named_values(const std::vector<std::pair<std::string, double>>& values) {
    Json obj = Json::object();
    for (const auto& [k, v] : values) obj[k] = std::isfinite(v) ? Json(v) : Json(nullptr);
    return obj;
}

std::string type_of(const Json& v) {
    switch (v.type()) {
        case Json::value_t::null: return "null";
        case Json::value_t::boolean: return "boolean";
        case Json::value_t::number_integer:
        case Json::value_t::number_unsigned: return "integer";
        case Json::value_t::number_float: return "number";
        case Json::value_t::string: return "string";
        case Json::value_t::array: return "array";
        case Json::value_t::object: return "object";
        default: return "unknown";
    }
}

bool type_matches(const Json& v, const std::string& t) {
    std::string actual = type_of(v);
    return actual == t || (t == "number" && actual == "integer");
}

void validate_at(const Json& doc, const Json& schema, const std::string& where, std::vector<std::string>& errors) {
    if (schema.contains("type")) {
        const Json& t = schema["type"];
        bool ok = false;
        if (t.is_string()) ok = type_matches(doc, t.get<std::string>());
        else
            for (const auto& alt : t) ok = ok || type_matches(doc, alt.get<std::string>());
        if (!ok) {
            errors.push_back(where + ": expected type " + t.dump() + ", found " + type_of(doc));
            return;
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& e : schema["enum"]) found = found || e == doc;
        if (!found) errors.push_back(where + ": value " + doc.dump() + " not in " + schema["enum"].dump());
    }
    if (schema.contains("minimum") && doc.is_number() && doc.get<double>() < schema["minimum"].get<double>())
        errors.push_back(where + ": below minimum " + schema["minimum"].dump());
    if (doc.is_object()) {
        if (schema.contains("required"))
            for (const auto& key : schema["required"])
                if (!doc.contains(key.get<std::string>()))
                    errors.push_back(where + ": missing required key '" + key.get<std::string>() + "'");
        const Json props = schema.value("properties", Json::object());
        const bool closed = schema.contains("additionalProperties") && schema["additionalProperties"] == false;
        for (const auto& [key, value] : doc.items()) {
            if (props.contains(key)) validate_at(value, props[key], where + "." + key, errors);
            else if (closed) errors.push_back(where + ": unexpected key '" + key + "'");
        }
    }
    if (doc.is_array() && schema.contains("items"))
        for (std::size_t i = 0; i < doc.size(); ++i)
            validate_at(doc[i], schema["items"], where + "[" + std::to_string(i) + "]", errors);
}

}  // namespace

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream os = open_out(path);
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << csv_cell(columns[c]);
    os << '\n';
    for (const auto& row : rows) {
        if (row.size() != columns.size()) throw std::logic_error("CSV row width differs from header in " + path.string());
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << csv_cell(row[c]);
        os << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
    std::vector<std::vector<std::string>> text;
    text.reserve(rows.size());
    for (const auto& row : rows) {
        std::vector<std::string> r;
        for (double x : row) r.push_back(format_number(x));
        text.push_back(std::move(r));
    }
    write_csv(path, columns, text);
}

Json to_json(const CriterionReport& r, const std::string& data_file) {
    Json j;
    j["criterion"] = r.id;
    j["paper_anchor"] = r.anchor;
    j["verdict"] = to_string(r.verdict);
    j["data_file"] = data_file;
    j["statement"] = r.statement;
    j["growth"] = r.growth;
    j["constants"] = named_values(r.constants);
    j["notes"] = r.notes;
    return j;
}

Json to_json(const CheckResult& r) {
    Json j;
    j["id"] = r.id;
    j["statement"] = r.statement;
    j["pass"] = r.pass;
    j["skipped"] = r.skipped;
    j["max_violation"] = std::isfinite(r.max_violation) ? Json(r.max_violation) : Json(nullptr);
    j["tolerance"] = r.tolerance;
    j["samples"] = r.samples;
    j["values"] = named_values(r.values);
    j["notes"] = r.notes;
    return j;
}

std::string config_hash(const Json& canonical_config) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : canonical_config.dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[i] = hex[h & 0xf];
    return out;
}

const Json& report_schema() {
    static const Json schema = Json::parse(
#include "report_schema.inc"
    );
    return schema;
}

std::vector<std::string> validate_schema(const Json& doc, const Json& schema) {
    std::vector<std::string> errors;
    validate_at(doc, schema, "$", errors);
    return errors;
}

}  // namespace dbarlab
