#pragma once

#include "dbarlab/diagnostics.hpp"
#include "dbarlab/verify.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dbarlab {

using Json = nlohmann::json;

// Shortest decimal text that reads back to the same double; "nan", "inf",
// "-inf" otherwise.
std::string format_number(double x);

// RFC 4180 quoting where needed; numbers through format_number. Rows are
// written in the order given, so identical inputs give identical bytes.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows);

Json to_json(const CriterionReport& r, const std::string& data_file);
Json to_json(const CheckResult& r);

// FNV-1a 64 of the compact dump, as 16 hex digits.
std::string config_hash(const Json& canonical_config);

// The published schema of the JSON summary (docs/report.schema.json).
const Json& report_schema();

// Checks `doc` against a JSON Schema restricted to the keywords the report
// schema uses: type (string or list), required, properties,
// additionalProperties (boolean), items, enum, minimum. Returns one message
// per violation; empty means valid.
std::vector<std::string> validate_schema(const Json& doc, const Json& schema);

}  // namespace dbarlab
