#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "report.hpp"
#include "tspc/debris.hpp"
#include "tspc/ephemeris.hpp"
#include "tspc/error.hpp"
#include "tspc/static_tsp.hpp"

namespace tspc::cli {
namespace {

namespace fs = std::filesystem;
using engine::Vector;

constexpr const char* kCatalogFile = "gtoc9_debris.csv";

/// The debris catalog could not be located.
class MissingData : public Error {
 public:
  using Error::Error;
};

/// A problem with user-supplied flags or files.
class UsageError : public Error {
 public:
  using Error::Error;
};

std::string join(const std::vector<int>& ids, const char* sep = " ") {
  std::ostringstream s;
  for (std::size_t j = 0; j < ids.size(); ++j) s << (j ? sep : "") << ids[j];
  return s.str();
}

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index j = 0; j < v.size(); ++j) a.push_back(v[j]);
  return a;
}

Json runs_json(const optimizer::MultiStartResult& ms) {
  Json runs = Json::array();
  for (std::size_t r = 0; r < ms.runs.size(); ++r) {
    const auto& o = ms.runs[r];
    Json j;
    j["run"] = r;
    j["ok"] = o.ok;
    if (o.ok) {
      j["objective"] = o.result.objective;
      j["max_penalty"] = o.result.max_penalty;
      j["iterations"] = o.result.trace.records.empty() ? 0 : o.result.trace.records.back().iteration;
      j["status"] = optimizer::to_string(o.result.trace.status);
    } else {
      j["error"] = o.error;
    }
    runs.push_back(j);
  }
  return runs;
}

Json trace_json(const optimizer::SolveTrace& t, const std::string& file) {
  Json j;
  j["file"] = file.empty() ? Json(nullptr) : Json(file);
  j["status"] = optimizer::to_string(t.status);
  j["reason"] = t.reason;
  j["iterations"] = t.records.empty() ? 0 : t.records.back().iteration;
  j["evaluations"] = t.evaluations;
  int flips = 0;
  for (const auto& r : t.records) flips += r.selection_flip ? 1 : 0;
  j["selection_flips"] = flips;
  return j;
}

void finish_report(Json& report, const std::string& out_path, bool deterministic,
                   std::chrono::steady_clock::time_point t0, std::ostream& out) {
  report["wall_time_s"] =
      deterministic ? Json(nullptr)
                    : Json(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  if (!out_path.empty()) {
    write_json_file(out_path, report);
    out << "report: " << out_path << '\n';
  }
}

std::string resolve_catalog(const std::string& flag) {
  std::string path = flag;
  if (path.empty()) {
    const char* dir = std::getenv("TSPC_DATA_DIR");
    if (dir == nullptr || *dir == '\0') {
      throw MissingData("no debris catalog given and TSPC_DATA_DIR is not set");
    }
    path = (fs::path(dir) / kCatalogFile).string();
  }
  if (!fs::exists(path)) throw MissingData("debris catalog not found at '" + path + "'");
  return path;
}

std::string missing_data_help() {
  return std::string(
             "The debris catalog is not distributed with this tool. Obtain the GTOC-9 debris\n"
             "ephemeris table from the competition organizers, then convert it:\n"
             "  tspc convert-gtoc9 --in <table.txt> --out <dir>/") +
         kCatalogFile +
         "\n"
         "and either pass --ephemeris <dir>/" +
         kCatalogFile +
         " or set TSPC_DATA_DIR=<dir>.\n"
         "A small synthetic catalog ships as data/synthetic_debris.csv for trying the pipeline.\n";
}

// ---------------------------------------------------------------- solve-static

struct StaticArgs {
  std::string mode = "chi-square";
  std::string init = "uniform";
  std::string search = "auto";
  int restarts = 1;
  std::uint64_t seed = 0;
  int jobs = 1;
  int max_iter = 300;
  std::string points;
  int depot = static_tsp::kBenchmarkDepot;
  std::string out_path;
  std::string trace_path;
  bool oracle = false;
  std::string baseline;
  bool deterministic = false;
};

int cmd_solve_static(const StaticArgs& a, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const static_tsp::PointSet points =
      a.points.empty() ? static_tsp::PointSet::benchmark() : static_tsp::read_points_csv_file(a.points);
  if (!points.contains(a.depot)) throw UsageError("depot " + std::to_string(a.depot) + " is not in the point set");

  static_tsp::StaticSolveOptions opt;
  opt.mode = a.mode == "map" ? engine::ObjectiveMode::map : engine::ObjectiveMode::chi_square;
  opt.init = a.init == "solution-a" ? static_tsp::StaticInit::solution_a
             : a.init == "default"  ? static_tsp::StaticInit::table
                                    : static_tsp::StaticInit::uniform;
  opt.search = a.search == "local"      ? static_tsp::StaticSearch::local
               : a.search == "filtered" ? static_tsp::StaticSearch::filtered
                                        : static_tsp::StaticSearch::automatic;
  opt.restarts = a.restarts;
  opt.seed = a.seed;
  opt.jobs = a.jobs;
  opt.max_iterations = a.max_iter;
  opt.depot = a.depot;
  if (opt.init == static_tsp::StaticInit::solution_a && (!a.points.empty() || a.depot != static_tsp::kBenchmarkDepot)) {
    throw UsageError("--init solution-a applies to the built-in benchmark only");
  }

  Json report;
  report["schema"] = kReportSchema;
  report["problem"] = {{"kind", "static"},
                       {"points", a.points.empty() ? "benchmark" : a.points},
                       {"n_points", points.size()},
                       {"depot", a.depot}};
  report["config"] = {{"mode", a.mode},         {"init", a.init},         {"search", a.search},
                      {"restarts", a.restarts}, {"jobs", a.jobs},         {"max_iterations", a.max_iter},
                      {"oracle", a.oracle},     {"baseline", a.baseline}, {"deterministic", a.deterministic}};

  static_tsp::StaticSolveResult res;
  try {
    res = static_tsp::solve_static(points, opt);
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  const auto& ev = res.evaluation;
  const auto& best = res.search.best;

  Json legs = Json::array();
  for (std::size_t k = 0; k + 1 < ev.route.size(); ++k) {
    const auto& p = points.at(ev.route[k]);
    const auto& q = points.at(ev.route[k + 1]);
    legs.push_back({{"from", ev.route[k]}, {"to", ev.route[k + 1]}, {"cost", std::hypot(q.x - p.x, q.y - p.y)}});
  }
  Json penalties = Json::array();
  for (const auto& n : ev.nodes) penalties.push_back(n.penalty);

  report["route"] = ev.route;
  report["legs"] = legs;
  report["total_cost"] = ev.total_cost;
  report["objective"] = ev.objective;
  report["penalties"] = penalties;
  report["design"] = vector_json(best.x);
  report["design_names"] = res.problem.layout().scalar_names();
  report["best_run"] = res.search.best_index;
  report["runs"] = runs_json(res.search);
  report["trace"] = trace_json(best.trace, a.trace_path);
  report["seed"] = a.seed;

  out << std::fixed << std::setprecision(6);
  out << "mode: " << a.mode << '\n';
  out << "route: " << join(ev.route) << '\n';
  out << "total cost: " << ev.total_cost << '\n';
  out << "objective: " << ev.objective << '\n';
  out << "max penalty: " << ev.max_penalty() << '\n';
  out << "best run: " << res.search.best_index << " of " << res.search.runs.size() << " ("
      << optimizer::to_string(best.trace.status) << ", " << best.trace.records.back().iteration << " iterations)\n";

  if (a.oracle) {
    const auto hk = static_tsp::held_karp_optimal(points, a.depot);
    out << "held-karp optimum: " << hk.length << " route: " << join(hk.order) << '\n';
    report["oracle"] = {{"method", "held-karp"}, {"length", hk.length}, {"route", hk.order}};
  }
  if (a.baseline == "sa") {
    static_tsp::Tour best_sa;
    best_sa.length = std::numeric_limits<double>::infinity();
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto t = static_tsp::simulated_annealing(points, a.depot, {}, a.seed + s);
      if (t.length < best_sa.length) best_sa = t;
    }
    out << "simulated annealing (best of 10 seeds): " << best_sa.length << " route: " << join(best_sa.order) << '\n';
    report["baseline"] = {{"method", "simulated-annealing"}, {"seeds", 10}, {"length", best_sa.length},
                          {"route", best_sa.order}};
  }
  if (!a.trace_path.empty()) write_trace_csv_file(a.trace_path, best.trace);
  finish_report(report, a.out_path, a.deterministic, t0, out);
  return kOk;
}

// ---------------------------------------------------------------- solve-debris

struct DebrisArgs {
  std::string ephemeris;
  std::string config;
  std::optional<double> fixed_tof;
  std::string refine;
  int restarts = 1;
  std::uint64_t seed = 0;
  int jobs = 1;
  int max_iter = 300;
  std::string out_path;
  std::string trace_path;
  bool deterministic = false;
};

Json mission_json(const debris::MissionConfig& mc) {
  Json j;
  j["start_epoch"] = mc.start_epoch;
  j["start_debris"] = mc.start_debris;
  j["n_transfers"] = mc.n_transfers;
  j["dwell_days"] = mc.dwell_days;
  j["fixed_tof_days"] = mc.fixed_tof_days ? Json(*mc.fixed_tof_days) : Json(nullptr);
  j["alpha"] = mc.alpha;
  j["dof"] = mc.dof ? Json(*mc.dof) : Json(nullptr);
  const auto layout = mc.layout();
  j["lower"] = vector_json(engine::flatten_node(layout.lower, layout));
  j["upper"] = vector_json(engine::flatten_node(layout.upper, layout));
  j["initial"] = vector_json(engine::flatten_node(layout.initial, layout));
  return j;
}

Json refine_json(const debris::RefineResult& r) {
  return {{"route", r.route},     {"tofs", r.tofs},
          {"dvs", r.dvs},         {"total_dv", r.total_dv},
          {"initial_total_dv", r.initial_total_dv},
          {"status", optimizer::to_string(r.trace.status)}};
}

/// Route and optional ToFs from a report or a bare {"route": [...]} file.
std::pair<std::vector<int>, std::optional<std::vector<double>>> read_route(const std::string& path) {
  const Json j = read_json_file(path);
  if (!j.is_object() || !j.contains("route") || !j["route"].is_array()) {
    throw UsageError("'" + path + "' has no route array");
  }
  std::vector<int> route;
  for (const auto& v : j["route"]) {
    if (!v.is_number_integer()) throw UsageError("'" + path + "': route ids must be integers");
    route.push_back(v.get<int>());
  }
  std::optional<std::vector<double>> tofs;
  if (j.contains("tofs") && j["tofs"].is_array()) {
    tofs = j["tofs"].get<std::vector<double>>();
  } else if (j.contains("legs") && j["legs"].is_array()) {
    std::vector<double> t;
    for (const auto& leg : j["legs"]) {
      if (leg.contains("tof") && leg["tof"].is_number()) t.push_back(leg["tof"].get<double>());
    }
    if (t.size() + 1 == route.size()) tofs = t;
  }
  return {route, tofs};
}

int cmd_solve_debris(const DebrisArgs& a, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string path = resolve_catalog(a.ephemeris);
  const auto catalog = debris::DebrisCatalog::from_csv_file(path);
  debris::MissionConfig mc = a.config.empty() ? debris::MissionConfig{} : debris::read_mission_config_file(a.config);
  if (a.fixed_tof) mc.fixed_tof_days = *a.fixed_tof;

  optimizer::OptimizerConfig oc;
  oc.max_iterations = a.max_iter;
  oc.restarts = a.restarts;
  oc.jobs = a.jobs;
  oc.seed = a.seed;

  Json report;
  report["schema"] = kReportSchema;
  report["problem"] = {{"kind", "debris"}, {"ephemeris", path}, {"catalog_size", catalog.size()}};
  report["config"] = {{"mission", mission_json(mc)},
                      {"restarts", a.restarts},
                      {"jobs", a.jobs},
                      {"max_iterations", a.max_iter},
                      {"refine_input", a.refine.empty() ? Json(nullptr) : Json(a.refine)},
                      {"deterministic", a.deterministic}};
  out << std::fixed << std::setprecision(6);

  if (!a.refine.empty()) {
    const auto [route, tofs] = read_route(a.refine);
    for (int id : route) {
      if (!catalog.contains(id)) throw UsageError("route id " + std::to_string(id) + " is not in the catalog");
    }
    mc.start_debris = route.front();
    const auto ref = debris::refine_tof(route, catalog, mc, oc, tofs);
    const auto legs = debris::route_legs(route, ref.tofs, catalog, mc);
    Json lj = Json::array();
    for (const auto& l : legs) {
      lj.push_back({{"from", l.from}, {"to", l.to}, {"departure", l.departure}, {"tof", l.tof}, {"cost", l.dv}});
    }
    report["route"] = route;
    report["legs"] = lj;
    report["total_cost"] = ref.total_dv;
    report["objective"] = nullptr;
    report["penalties"] = Json::array();
    report["refine"] = refine_json(ref);
    report["trace"] = trace_json(ref.trace, a.trace_path);
    report["seed"] = a.seed;
    out << "route: " << join(route) << " (" << route.size() - 1 << " transfers)\n";
    out << "total dv before refinement: " << ref.initial_total_dv * 1000.0 << " m/s\n";
    out << "total dv after refinement: " << ref.total_dv * 1000.0 << " m/s\n";
    for (const auto& l : legs) {
      out << "  " << l.from << " -> " << l.to << "  tof " << l.tof << " d  dv " << l.dv * 1000.0 << " m/s\n";
    }
    if (!a.trace_path.empty()) write_trace_csv_file(a.trace_path, ref.trace);
    finish_report(report, a.out_path, a.deterministic, t0, out);
    return kOk;
  }

  const bool step_one_only = mc.fixed_tof_days.has_value() && a.fixed_tof.has_value();
  const auto fixed = debris::solve_fixed_tof(catalog, mc, oc, a.seed);
  const auto& ev = fixed.evaluation;
  const double tof = mc.fixed_tof_days.value_or(20.0);

  Json lj = Json::array();
  Json penalties = Json::array();
  for (std::size_t k = 0; k < ev.nodes.size(); ++k) {
    const auto& n = ev.nodes[k];
    lj.push_back({{"from", ev.route[k]},
                  {"to", n.selected_id},
                  {"departure", n.epoch - n.leg_time},
                  {"tof", n.leg_time},
                  {"cost", n.y},
                  {"penalty", n.penalty}});
    penalties.push_back(n.penalty);
  }
  report["route"] = ev.route;
  report["legs"] = lj;
  report["total_cost"] = ev.total_cost;
  report["objective"] = ev.objective;
  report["penalties"] = penalties;
  report["design"] = vector_json(fixed.x);
  report["best_run"] = fixed.search.best_index;
  report["runs"] = runs_json(fixed.search);
  report["trace"] = trace_json(fixed.search.best.trace, a.trace_path);
  report["seed"] = a.seed;

  out << "fixed tof: " << tof << " d\n";
  out << "route: " << join(ev.route) << " (" << ev.nodes.size() << " transfers)\n";
  out << "total dv: " << ev.total_cost * 1000.0 << " m/s\n";
  out << "objective: " << ev.objective << '\n';
  out << "max penalty: " << ev.max_penalty() << '\n';
  for (const auto& n : ev.nodes) {
    out << "  -> " << n.selected_id << "  dv " << n.y * 1000.0 << " m/s  penalty " << n.penalty << '\n';
  }

  if (!step_one_only) {
    const auto ref = debris::refine_tof(ev.route, catalog, mc, oc, std::vector<double>(ev.nodes.size(), tof));
    report["refine"] = refine_json(ref);
    out << "refined total dv: " << ref.total_dv * 1000.0 << " m/s\n";
  }
  if (!a.trace_path.empty()) write_trace_csv_file(a.trace_path, fixed.search.best.trace);
  finish_report(report, a.out_path, a.deterministic, t0, out);
  return kOk;
}

// ---------------------------------------------------------------- inspect

int cmd_inspect_stats(const std::string& ephemeris, std::ostream& out) {
  const auto catalog = debris::DebrisCatalog::from_csv_file(resolve_catalog(ephemeris));
  const auto s = debris::catalog_statistics(catalog);
  out << "debris: " << s.count << '\n';
  out << std::left << std::setw(14) << "element" << std::right << std::setw(14) << "mean" << std::setw(14) << "std"
      << std::setw(14) << "max" << std::setw(14) << "min" << '\n';
  auto row = [&](const char* name, const debris::Summary& m, int prec) {
    out << std::left << std::setw(14) << name << std::right << std::setprecision(prec) << std::fixed
        << std::setw(14) << m.mean << std::setw(14) << m.std << std::setw(14) << m.max << std::setw(14) << m.min
        << '\n';
  };
  row("a (km)", s.a_km, 3);
  row("e", s.e, 7);
  row("i (deg)", s.i_deg, 5);
  row("raan (deg)", s.raan_deg, 4);
  return kOk;
}

int cmd_inspect_propagate(const std::string& ephemeris, int id, double days, double step, std::ostream& out) {
  const auto catalog = debris::DebrisCatalog::from_csv_file(resolve_catalog(ephemeris));
  if (!catalog.contains(id)) throw UsageError("debris id " + std::to_string(id) + " is not in the catalog");
  const auto r = orbital::compare_raan_drift(catalog.at(id), days, step);
  out << std::fixed << std::setprecision(6);
  out << "debris " << id << ", " << days << " days, rk4 step " << step << " s\n";
  out << "secular raan drift: " << r.secular_deg << " deg\n";
  out << "secular drift at mean elements: " << r.secular_mean_deg << " deg\n";
  out << "rk4 raan drift: " << r.numerical_deg << " deg\n";
  out << "difference: " << r.difference_deg << " deg\n";
  return kOk;
}

// ---------------------------------------------------------------- misc

int cmd_convert(const std::string& in_path, const std::string& out_path, std::ostream& out) {
  std::ifstream in(in_path);
  if (!in) throw UsageError("cannot open '" + in_path + "'");
  const auto rows = orbital::read_gtoc9_table(in);
  for (const auto& r : rows) orbital::elements_from_record(r);
  std::ofstream o(out_path);
  if (!o) throw UsageError("cannot write '" + out_path + "'");
  orbital::write_ephemeris_csv(o, rows);
  out << "wrote " << rows.size() << " records to " << out_path << '\n';
  return kOk;
}

int cmd_schema_check(const std::string& path, std::ostream& out, std::ostream& err) {
  const Json j = read_json_file(path);
  const auto errs = schema_errors(j);
  if (errs.empty()) {
    out << path << ": ok\n";
    return kOk;
  }
  for (const auto& e : errs) err << path << ": " << e << '\n';
  return kSolverFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous Bayesian relaxation of travelling-salesman sequencing problems"};
  app.name("tspc");
  app.require_subcommand(1);
  app.set_version_flag("--version", "tspc 0.1.0");

  StaticArgs sa;
  auto* st = app.add_subcommand("solve-static", "Solve the planar benchmark (or a CSV point set)");
  st->add_option("--mode", sa.mode, "Objective")->check(CLI::IsMember({"map", "chi-square"}));
  st->add_option("--init", sa.init, "Initial mu")->check(CLI::IsMember({"solution-a", "uniform", "default"}));
  st->add_option("--search", sa.search, "Difference scheme")->check(CLI::IsMember({"auto", "local", "filtered"}));
  st->add_option("--restarts", sa.restarts, "Multi-start runs")->check(CLI::PositiveNumber);
  st->add_option("--seed", sa.seed, "Random seed");
  st->add_option("--jobs", sa.jobs, "Parallel restarts")->check(CLI::PositiveNumber);
  st->add_option("--max-iter", sa.max_iter, "Iteration limit per run")->check(CLI::PositiveNumber);
  st->add_option("--points", sa.points, "CSV of id,x,y")->check(CLI::ExistingFile);
  st->add_option("--depot", sa.depot, "Start and end id");
  st->add_option("--out", sa.out_path, "Report JSON path");
  st->add_option("--trace", sa.trace_path, "Convergence CSV path");
  st->add_flag("--oracle", sa.oracle, "Also compute the Held-Karp optimum");
  st->add_option("--baseline", sa.baseline, "Also run a baseline")->check(CLI::IsMember({"sa"}));
  st->add_flag("--deterministic", sa.deterministic, "Omit wall time from the report");

  DebrisArgs da;
  auto* sd = app.add_subcommand("solve-debris", "Debris rendezvous sequence (fixed ToF, then ToF refinement)");
  sd->add_option("--ephemeris", da.ephemeris, "Ephemeris CSV (default $TSPC_DATA_DIR/gtoc9_debris.csv)");
  sd->add_option("--config", da.config, "Mission config (key = value)")->check(CLI::ExistingFile);
  sd->add_option("--fixed-tof", da.fixed_tof, "Run only the fixed-ToF step with this ToF (days)")
      ->check(CLI::NonNegativeNumber);
  sd->add_option("--refine", da.refine, "Refine ToFs on the route in this JSON file")->check(CLI::ExistingFile);
  sd->add_option("--restarts", da.restarts, "Multi-start runs")->check(CLI::PositiveNumber);
  sd->add_option("--seed", da.seed, "Random seed");
  sd->add_option("--jobs", da.jobs, "Parallel restarts")->check(CLI::PositiveNumber);
  sd->add_option("--max-iter", da.max_iter, "Iteration limit per run")->check(CLI::PositiveNumber);
  sd->add_option("--out", da.out_path, "Report JSON path");
  sd->add_option("--trace", da.trace_path, "Convergence CSV path");
  sd->add_flag("--deterministic", da.deterministic, "Omit wall time from the report");

  auto* in = app.add_subcommand("inspect", "Catalog statistics and propagation checks");
  in->require_subcommand(1);
  std::string stats_eph;
  auto* is = in->add_subcommand("stats", "Mean, std, max and min of a, e, i, raan");
  is->add_option("--ephemeris", stats_eph, "Ephemeris CSV");
  std::string prop_eph;
  int prop_id = 0;
  double prop_days = 10.0;
  double prop_step = 10.0;
  auto* ip = in->add_subcommand("propagate", "Secular versus RK4 node drift");
  ip->add_option("--ephemeris", prop_eph, "Ephemeris CSV");
  ip->add_option("--id", prop_id, "Debris id")->required();
  ip->add_option("--days", prop_days, "Arc length (days)")->check(CLI::NonNegativeNumber);
  ip->add_option("--step", prop_step, "RK4 step (s)")->check(CLI::PositiveNumber);

  std::string conv_in;
  std::string conv_out;
  auto* cv = app.add_subcommand("convert-gtoc9", "Convert the whitespace GTOC-9 table to ephemeris CSV");
  cv->add_option("--in", conv_in, "Input table")->required()->check(CLI::ExistingFile);
  cv->add_option("--out", conv_out, "Output CSV")->required();

  std::string schema_path;
  auto* sc = app.add_subcommand("schema-check", "Validate a report JSON file");
  sc->add_option("report", schema_path, "Report file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*st) return cmd_solve_static(sa, out);
    if (*sd) return cmd_solve_debris(da, out);
    if (*is) return cmd_inspect_stats(stats_eph, out);
    if (*ip) return cmd_inspect_propagate(prop_eph, prop_id, prop_days, prop_step, out);
    if (*cv) return cmd_convert(conv_in, conv_out, out);
    if (*sc) return cmd_schema_check(schema_path, out, err);
  } catch (const MissingData& e) {
    err << "error: " << e.what() << '\n' << missing_data_help();
    return kMissingData;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kUsage;
}

}  // namespace tspc::cli
