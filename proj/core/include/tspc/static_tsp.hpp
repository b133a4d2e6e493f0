#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tspc/engine.hpp"
#include "tspc/optimizer.hpp"

namespace tspc::static_tsp {

struct Point {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
};

struct PointSet {
  std::vector<Point> points;

  /// The 14-point benchmark.
  static PointSet benchmark();

  void validate() const;
  const Point& at(int id) const;
  bool contains(int id) const;
  std::vector<int> ids() const;
  std::size_t size() const { return points.size(); }
};

inline constexpr int kBenchmarkDepot = 13;

/// Reads `id,x,y` rows; a header line is optional.
PointSet read_points_csv(std::istream& in);
PointSet read_points_csv_file(const std::string& path);

struct Tour {
  std::vector<int> order;  // starts and ends at the depot
  double length = 0.0;
};

/// Sum of leg lengths. Throws InputError unless `order` is closed at its first
/// id and visits every other point exactly once.
double tour_length(const std::vector<int>& order, const PointSet& points);

/// Chained standard deviation sqrt(s_prior^2 + s_prev^2 + 2 rho s_prior s_prev).
double chain_variance(double sigma_prior, double sigma_prev, double rho);

/// Variance of the step length for a step N((mu_x, mu_y), diag(sx^2, sy^2)),
/// linearized at the mean. Throws DegeneracyError for a zero mean step.
double distance_variance(double mu_x, double mu_y, double sigma_x, double sigma_y);

/// Exact optimum by dynamic programming; at most 20 points.
Tour held_karp_optimal(const PointSet& points, int depot);

Tour nearest_neighbor(const PointSet& points, int depot);

struct AnnealingSchedule {
  double t0 = 10.0;
  double cooling = 0.995;
  int sweeps = 50;
  double t_min = 1e-3;

  void validate() const;
};

/// 2-opt and swap moves. Starts from `initial` when given, else from the
/// nearest-neighbour tour. Returns the best tour seen.
Tour simulated_annealing(const PointSet& points, int depot, const AnnealingSchedule& schedule, std::uint64_t seed,
                         const std::optional<std::vector<int>>& initial = std::nullopt);

/// Per-node bounds and initial values of the static design.
engine::DesignLayout static_layout(std::size_t nodes);

/// Backend where node i observes planar coordinates and costs leg lengths.
/// The predicted position chains from the previous expected position, starting
/// at the depot.
std::shared_ptr<const engine::SequenceProblem> make_static_problem(const PointSet& points, int depot);

engine::BoundProblem build_static_problem(const PointSet& points, engine::ObjectiveMode mode,
                                          int depot = kBenchmarkDepot);

/// Route A of the benchmark and its coordinate steps.
std::vector<int> solution_a_route();
std::vector<int> solution_b_route();
/// Step means (dx, dy) along a route, one pair per node.
std::vector<std::pair<double, double>> route_steps(const std::vector<int>& route, const PointSet& points);

/// Design with mu at the route steps plus (dx, dy) and the remaining fields at
/// the given values.
engine::Vector seeded_design(const std::vector<int>& route, const PointSet& points, double dx, double dy,
                             double sigma = 4.0, double rho = 0.2, double kappa = 50.0);

/// mu drawn uniformly in [lo, hi]^2 per node, other fields at their initial
/// values.
engine::Vector uniform_design(std::mt19937_64& rng, std::size_t nodes, double lo = -2.0, double hi = 2.0);

/// Finite-difference steps that suit the static design scales.
engine::Vector default_fd_steps(std::size_t nodes);

/// Fixed small difference steps; follows the local basin of a good start.
optimizer::OptimizerConfig local_search_config(std::size_t nodes);

/// Central differences over a coarse-to-fine scale schedule (0.5 x 0.7^k of
/// each bound span, 20 levels), with the difference probes used as a
/// pattern-search stencil. Suited to cold starts, where the objective is
/// flat between selection changes.
optimizer::OptimizerConfig filtered_search_config();

enum class StaticInit { solution_a, uniform, table };
enum class StaticSearch { automatic, local, filtered };

struct StaticSolveOptions {
  engine::ObjectiveMode mode = engine::ObjectiveMode::chi_square;
  StaticInit init = StaticInit::uniform;
  StaticSearch search = StaticSearch::automatic;  // local for solution_a, filtered otherwise
  int restarts = 1;
  std::uint64_t seed = 0;
  int jobs = 1;
  int max_iterations = 300;
  int depot = kBenchmarkDepot;
};

struct StaticSolveResult {
  engine::SequenceEvaluation evaluation;
  optimizer::MultiStartResult search;
  engine::BoundProblem problem;
  optimizer::OptimizerConfig config;
};

/// Multi-start solve. `solution_a` seeds mu at the route A steps plus
/// (1.0, -0.8) and needs the benchmark points; `uniform` draws mu in
/// [-2, 2]^2; `table` starts every run at the table initial values.
StaticSolveResult solve_static(const PointSet& points, const StaticSolveOptions& options);

}  // namespace tspc::static_tsp
