#include "report.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

#include "tspc/error.hpp"

namespace tspc::cli {

void write_trace_csv(std::ostream& out, const optimizer::SolveTrace& trace) {
  out << "iteration,objective,max_penalty,grad_norm\n" << std::setprecision(17);
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << r.objective << ',' << r.max_penalty << ',' << r.grad_norm << '\n';
  }
}

void write_trace_csv_file(const std::string& path, const optimizer::SolveTrace& trace) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write trace file '" + path + "'");
  write_trace_csv(out, trace);
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

namespace {

void require(std::vector<std::string>& errs, const Json& obj, const std::string& key, bool ok, const char* what) {
  if (!obj.contains(key)) {
    errs.push_back("missing key '" + key + "'");
  } else if (!ok) {
    errs.push_back("'" + key + "' must be " + what);
  }
}

bool number_array(const Json& j) {
  if (!j.is_array()) return false;
  for (const auto& v : j) {
    if (!v.is_number()) return false;
  }
  return true;
}

bool int_array(const Json& j) {
  if (!j.is_array()) return false;
  for (const auto& v : j) {
    if (!v.is_number_integer()) return false;
  }
  return true;
}

}  // namespace

std::vector<std::string> schema_errors(const Json& r) {
  std::vector<std::string> errs;
  if (!r.is_object()) return {"report must be a JSON object"};
  auto has = [&](const char* k) { return r.contains(k); };

  require(errs, r, "schema", has("schema") && r["schema"] == kReportSchema, "\"tspc.report/1\"");
  require(errs, r, "problem",
          has("problem") && r["problem"].is_object() && r["problem"].contains("kind") &&
              (r["problem"]["kind"] == "static" || r["problem"]["kind"] == "debris"),
          "an object with kind \"static\" or \"debris\"");
  require(errs, r, "config", has("config") && r["config"].is_object(), "an object");
  require(errs, r, "route", has("route") && int_array(r["route"]), "an array of integers");
  require(errs, r, "total_cost", has("total_cost") && r["total_cost"].is_number(), "a number");
  require(errs, r, "objective", has("objective") && (r["objective"].is_number() || r["objective"].is_null()),
          "a number or null");
  require(errs, r, "penalties", has("penalties") && number_array(r["penalties"]), "an array of numbers");
  require(errs, r, "wall_time_s", has("wall_time_s") && (r["wall_time_s"].is_number() || r["wall_time_s"].is_null()),
          "a number or null");
  require(errs, r, "seed", has("seed") && r["seed"].is_number_unsigned(), "a non-negative integer");

  if (has("legs")) {
    if (!r["legs"].is_array()) {
      errs.emplace_back("'legs' must be an array");
    } else {
      for (std::size_t k = 0; k < r["legs"].size(); ++k) {
        const Json& leg = r["legs"][k];
        const bool ok = leg.is_object() && leg.contains("from") && leg["from"].is_number_integer() &&
                        leg.contains("to") && leg["to"].is_number_integer() && leg.contains("cost") &&
                        leg["cost"].is_number();
        if (!ok) errs.push_back("legs[" + std::to_string(k) + "] needs integer from/to and a numeric cost");
      }
    }
  } else {
    errs.emplace_back("missing key 'legs'");
  }
  if (has("design") && !number_array(r["design"])) errs.emplace_back("'design' must be an array of numbers");
  if (has("trace") && !r["trace"].is_object()) errs.emplace_back("'trace' must be an object");
  if (has("runs") && !r["runs"].is_array()) errs.emplace_back("'runs' must be an array");
  if (has("refine")) {
    const Json& f = r["refine"];
    const bool ok = f.is_object() && f.contains("tofs") && number_array(f["tofs"]) && f.contains("dvs") &&
                    number_array(f["dvs"]) && f.contains("total_dv") && f["total_dv"].is_number();
    if (!ok) errs.emplace_back("'refine' needs numeric arrays tofs, dvs and a numeric total_dv");
  }
  return errs;
}

}  // namespace tspc::cli
