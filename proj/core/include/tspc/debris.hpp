#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tspc/engine.hpp"
#include "tspc/ephemeris.hpp"
#include "tspc/optimizer.hpp"
#include "tspc/orbital.hpp"

namespace tspc::debris {

/// Debris elements keyed by id.
class DebrisCatalog {
 public:
  DebrisCatalog() = default;
  static DebrisCatalog from_records(const std::vector<orbital::EphemerisRecord>& rows);
  static DebrisCatalog from_csv_file(const std::string& path);

  void insert(int id, const orbital::OrbitalElements& el);
  const orbital::OrbitalElements& at(int id) const;
  bool contains(int id) const { return records_.count(id) != 0; }
  std::vector<int> ids() const;
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

 private:
  std::map<int, orbital::OrbitalElements> records_;
};

/// Mission setup. Design fields are in user units: days, km, deg.
/// Node layout: tof, mu (a, e, i, raan), sigma (a, e, i, raan), kappa.
struct MissionConfig {
  double start_epoch = 23557.0;
  int start_debris = 23;
  std::size_t n_transfers = 14;
  double dwell_days = 5.0;
  std::optional<double> fixed_tof_days;
  double alpha = 0.98;
  std::optional<int> dof;
  engine::NodeDesign lower;
  engine::NodeDesign upper;
  engine::NodeDesign initial;

  MissionConfig();
  void validate() const;
  engine::DesignLayout layout() const;
};

/// Parses `key = value` lines ('#' comments). Keys: start_epoch, start_debris,
/// n_transfers, dwell_days, fixed_tof_days, alpha, dof and
/// bounds.<field>.{lower,upper,initial} with field one of tof, mu_a, mu_e,
/// mu_i, mu_raan, sigma_a, sigma_e, sigma_i, sigma_raan, kappa.
MissionConfig parse_mission_config(std::istream& in, MissionConfig base = {});
MissionConfig read_mission_config_file(const std::string& path, MissionConfig base = {});

/// Jacobian steps for the (a, e, i, raan) state: km, -, rad, rad.
engine::Vector covariance_fd_steps();

std::shared_ptr<const engine::SequenceProblem> make_debris_problem(const DebrisCatalog& catalog,
                                                                   const MissionConfig& config);

/// Chi-square backend. When config.fixed_tof_days is set, ToF is not a design
/// variable (9 scalars per node instead of 10).
engine::BoundProblem build_debris_problem(const DebrisCatalog& catalog, const MissionConfig& config);

/// Optimizer difference steps in design units.
engine::Vector default_fd_steps(const MissionConfig& config);

struct FixedTofResult {
  engine::SequenceEvaluation evaluation;
  optimizer::MultiStartResult search;
  engine::Vector x;
};

/// Step one of the two-step strategy: optimize the route with every ToF fixed
/// (20 days unless the config says otherwise). Run 0 starts from the table
/// initial values; further restarts draw mu uniformly within its bounds.
FixedTofResult solve_fixed_tof(const DebrisCatalog& catalog, MissionConfig config,
                               const optimizer::OptimizerConfig& opt, std::uint64_t seed);

struct LegCost {
  int from = 0;
  int to = 0;
  double departure = 0.0;
  double tof = 0.0;
  double dv = 0.0;  // km/s
};

/// Chained legs along `route` (start id first): departure of leg k is the
/// previous arrival plus the dwell, the first previous arrival being the
/// start epoch.
std::vector<LegCost> route_legs(const std::vector<int>& route, const std::vector<double>& tofs,
                                const DebrisCatalog& catalog, const MissionConfig& config);

struct RefineResult {
  std::vector<int> route;
  std::vector<double> tofs;
  std::vector<double> dvs;  // km/s
  double total_dv = 0.0;    // km/s
  double initial_total_dv = 0.0;
  optimizer::SolveTrace trace;
};

/// Step two: with the route frozen, minimizes the summed transfer cost over
/// the ToFs within the tof bounds. Starts from `initial_tofs` or the fixed
/// ToF (20 days by default).
RefineResult refine_tof(const std::vector<int>& route, const DebrisCatalog& catalog, const MissionConfig& config,
                        const optimizer::OptimizerConfig& opt,
                        const std::optional<std::vector<double>>& initial_tofs = std::nullopt);

struct Summary {
  double mean = 0.0;
  double std = 0.0;
  double max = 0.0;
  double min = 0.0;
};

struct CatalogStatistics {
  std::size_t count = 0;
  Summary a_km;
  Summary e;
  Summary i_deg;
  Summary raan_deg;
};

/// Sample standard deviation (n - 1); zero for one entry.
CatalogStatistics catalog_statistics(const DebrisCatalog& catalog);

}  // namespace tspc::debris
