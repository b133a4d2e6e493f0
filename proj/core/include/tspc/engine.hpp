#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tspc/design.hpp"
#include "tspc/gaussian.hpp"

namespace tspc::engine {

using gaussian::GaussianBelief;
using gaussian::Matrix;
using ScalarMap = std::function<double(const Vector&)>;

enum class ObjectiveMode { chi_square, map };
enum class SelectionMode { deterministic, stochastic };
enum class Propagation { linearized, unscented };

/// Everything the engine needs to score one node, produced by a backend from
/// the node's design variables and the sequence history.
struct NodeModel {
  GaussianBelief prior;              // expected-target state before propagation
  gaussian::VectorMap state_map;     // f
  gaussian::VectorMap observation_map;  // h
  ScalarMap cost_map;                // expected cost as a function of the propagated state
  std::optional<Matrix> state_jacobian;
  std::optional<Matrix> observation_jacobian;
  std::optional<Vector> cost_gradient;
  Vector fd_steps;                   // per state component; used when a Jacobian is absent
  bool condition_cost = true;
  std::vector<bool> circular;        // per observation component; wraps the innovation
  double kappa = 0.0;
};

/// Walks one sequence. Each evaluation creates a fresh cursor, so cursors may
/// keep mutable history.
class SequenceCursor {
 public:
  virtual ~SequenceCursor() = default;
  virtual NodeModel model(std::size_t k, const NodeDesign& node) = 0;
  virtual Vector observe(int id) const = 0;
  virtual double cost_to(int id) const = 0;
  struct Step {
    double leg_time = 0.0;
    double epoch = 0.0;
  };
  /// Commits the selection and returns bookkeeping for the report.
  virtual Step advance(int id, const Vector& expected_state) = 0;
  /// Cost of returning to the origin after the last node, if the tour closes.
  virtual std::optional<double> closing_cost() const { return std::nullopt; }
};

class SequenceProblem {
 public:
  virtual ~SequenceProblem() = default;
  virtual const DesignLayout& layout() const = 0;
  virtual std::vector<int> candidates() const = 0;
  /// Ids visited before the first node (depot, start debris).
  virtual std::vector<int> origin() const = 0;
  virtual std::unique_ptr<SequenceCursor> start() const = 0;
  virtual int observation_dim() const = 0;
};

/// Candidate ids with a visited set.
struct CandidateSet {
  std::vector<int> items;
  std::set<int> visited;

  void validate() const;
  std::vector<int> unvisited() const;
};

struct EvaluationOptions {
  ObjectiveMode mode = ObjectiveMode::chi_square;
  SelectionMode selection = SelectionMode::deterministic;
  Propagation propagation = Propagation::linearized;
  std::uint64_t seed = 0;
  double alpha = 0.98;
  std::optional<int> dof;  // defaults to n_z + n_y
  gaussian::SutScaling sut;
};

struct NodeEvaluation {
  int selected_id = 0;
  Vector z;
  Vector innovation;
  Vector mu_z;
  Matrix cov_z;
  Vector expected_state;
  double y = 0.0;
  double mu_y = 0.0;
  double var_y = 0.0;
  double observation_term = 0.0;
  double cost_term = 0.0;
  double penalty = 0.0;
  double prior_logdensity = 0.0;
  double leg_time = 0.0;
  double epoch = 0.0;
  bool conditioning_fallback = false;
};

struct SequenceEvaluation {
  std::vector<NodeEvaluation> nodes;
  double objective = 0.0;
  double total_cost = 0.0;
  std::optional<double> closing_cost;
  std::vector<int> route;  // includes the origin and, for closed tours, the return

  double max_penalty() const;
};

/// Propagated state, observation and the Jacobians used for cross terms.
struct Prediction {
  GaussianBelief state;
  GaussianBelief observation;
  Matrix state_jacobian;        // F
  Matrix observation_jacobian;  // H
};

Prediction predict_observation(const NodeModel& model, Propagation propagation = Propagation::linearized,
                               const gaussian::SutScaling& sut = {});

/// Innovation z - mu with circular components wrapped to (-pi, pi].
Vector innovation(const Vector& z, const Vector& mu, const std::vector<bool>& circular);

struct Selection {
  int id = 0;
  Vector z;
  double distance_sq = 0.0;
};

/// Picks the unvisited candidate with the smallest regularized Mahalanobis
/// distance (ties to the smallest id), or samples one with weight
/// exp(-d^2/2) when `rng` is given. Throws ExhaustionError when none is left.
Selection select_candidate(const CandidateSet& candidates, const std::function<Vector(int)>& observe,
                           const GaussianBelief& observation, const std::vector<bool>& circular,
                           std::mt19937_64* rng = nullptr);

struct CostBelief {
  double mean = 0.0;
  double var = 0.0;
  bool fallback = false;
};

/// Joint (y, z) Gaussian of the expected cost and the observation at the
/// propagated state: Y S Y', Y S H', H S Y', H S H'.
gaussian::JointGaussian cost_observation_joint(const Prediction& prediction, double mu_y,
                                               const Vector& cost_gradient);

/// Cost belief conditioned on the observed innovation. With `condition`
/// false, or when cov_zz cannot be factorized, the unconditioned belief is
/// returned (the latter sets `fallback`).
CostBelief condition_cost(const gaussian::JointGaussian& joint, const Vector& innovation,
                          bool condition = true);

/// Linearized form: builds the joint from the cost gradient Y and the
/// observation Jacobian H against the state covariance.
CostBelief condition_cost(const GaussianBelief& state, const ScalarMap& cost_map,
                          const Vector& cost_gradient, const Matrix& observation_jacobian,
                          const Vector& innovation, bool condition = true);

inline constexpr double kCostVarianceFloor = 1e-12;

/// d_z^2 + d_y^2 - chi2_dof(alpha).
double node_penalty(const NodeEvaluation& eval, int dof, double alpha);

SequenceEvaluation evaluate_sequence(const Vector& x, const SequenceProblem& problem,
                                     const EvaluationOptions& options = {});

/// A problem paired with the evaluation options it should be scored with.
struct BoundProblem {
  std::shared_ptr<const SequenceProblem> problem;
  EvaluationOptions options;

  SequenceEvaluation evaluate(const Vector& x) const { return evaluate_sequence(x, *problem, options); }
  double objective(const Vector& x) const { return evaluate(x).objective; }
  const DesignLayout& layout() const { return problem->layout(); }
};

std::string to_string(ObjectiveMode mode);
std::string to_string(SelectionMode mode);
std::string to_string(Propagation p);

}  // namespace tspc::engine
