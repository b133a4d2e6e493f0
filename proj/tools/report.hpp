#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "tspc/optimizer.hpp"

namespace tspc::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "tspc.report/1";

/// Writes `iteration,objective,max_penalty,grad_norm` rows.
void write_trace_csv(std::ostream& out, const optimizer::SolveTrace& trace);
void write_trace_csv_file(const std::string& path, const optimizer::SolveTrace& trace);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

/// Problems found in a report; empty when it conforms to the schema.
std::vector<std::string> schema_errors(const Json& report);

}  // namespace tspc::cli
