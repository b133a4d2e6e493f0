#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tspc::optimizer {

using Vector = Eigen::VectorXd;
using Objective = std::function<double(const Vector&)>;

struct Bounds {
  Vector lower;
  Vector upper;

  void validate() const;
  Vector clamp(const Vector& x) const;
  bool contains(const Vector& x) const;
};

struct OptimizerConfig {
  int max_iterations = 300;
  double grad_tolerance = 1e-20;
  double step_tolerance = 1e-20;
  double objective_tolerance = 1e-20;
  Vector fd_step;                  // per variable; empty means 1e-6 scaled by max(1, |x|)
  /// Optional coarse-to-fine difference scales as fractions of each bound
  /// span. When set, fd_step is ignored; the solver moves to the next scale
  /// whenever the current one stalls.
  std::vector<double> fd_scales;
  bool central = false;            // central differences (two probes per variable)
  double armijo = 1e-4;
  /// Keep doubling an accepted full step while the objective still falls.
  /// Helps when the objective scale is far from the variable scale and the
  /// curvature gives BFGS nothing to learn from (piecewise-linear costs).
  bool expand = false;
  int max_backtracks = 40;
  int restarts = 1;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
};

/// Diagnostics attached to each iterate when a probe is supplied.
struct ProbeResult {
  double max_penalty = 0.0;
  std::string signature;  // e.g. the selected route; a change marks a selection flip
};
using Probe = std::function<ProbeResult(const Vector&)>;

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double max_penalty = 0.0;
  double grad_norm = 0.0;
  double step_norm = 0.0;
  bool selection_flip = false;
};

enum class SolveStatus { converged, max_iter, stalled };
std::string to_string(SolveStatus s);

struct SolveTrace {
  std::vector<IterationRecord> records;
  SolveStatus status = SolveStatus::max_iter;
  std::string reason;
  long evaluations = 0;
};

struct MinimizeResult {
  Vector x;
  double objective = 0.0;
  double max_penalty = 0.0;
  SolveTrace trace;
};

/// Forward-difference gradient, backward at an upper bound. A non-finite probe
/// is retried once with half the step on the same side, then on the other
/// side; persistent failure throws PropagationError.
Vector fd_gradient(const Objective& f, const Vector& x, double fx, const Vector& steps, const Bounds& bounds,
                   long* evaluations = nullptr);

/// Central differences, shortened to the room left inside the box on each
/// side; falls back to fd_gradient's one-sided rule at a bound.
Vector fd_gradient_central(const Objective& f, const Vector& x, double fx, const Vector& steps,
                           const Bounds& bounds, long* evaluations = nullptr);

/// Projected quasi-Newton (dense BFGS inverse Hessian, Armijo backtracking
/// along the projected path). x0 is clamped into the box.
MinimizeResult minimize(const Objective& f, const Vector& x0, const Bounds& bounds, const OptimizerConfig& config,
                        const Probe& probe = {});

using Sampler = std::function<Vector(std::mt19937_64& rng, std::size_t run)>;

struct RunOutcome {
  bool ok = false;
  std::string error;
  MinimizeResult result;
};

struct MultiStartResult {
  std::size_t best_index = 0;
  MinimizeResult best;
  std::vector<RunOutcome> runs;
};

/// Runs `config.restarts` minimizations from sampled starts. Run r draws its
/// start from an rng seeded with (seed, r), so results do not depend on
/// `jobs`. The best run is the feasible one (max_penalty <= 0) with the
/// lowest objective, else the lowest objective; ties go to the lower index.
/// Throws Error when every run fails.
MultiStartResult multi_start(const Objective& f, const Sampler& sampler, const Bounds& bounds,
                             const OptimizerConfig& config, const Probe& probe = {});

/// Deterministic rng for run `run` of a multi-start with base seed `seed`.
std::mt19937_64 run_rng(std::uint64_t seed, std::size_t run);

}  // namespace tspc::optimizer
