#include "tspc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tspc/chi_square.hpp"
#include "tspc/error.hpp"
#include "tspc/orbital.hpp"

namespace tspc::engine {
namespace {

using gaussian::JointGaussian;

double regularized_log_det(const Matrix& cov) {
  const Matrix s = cov + gaussian::default_regularizer(cov).asDiagonal().toDenseMatrix();
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) throw DegeneracyError("observation covariance is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Vector cost_gradient_at(const NodeModel& model, const Vector& state) {
  if (model.cost_gradient) return *model.cost_gradient;
  const gaussian::VectorMap f = [&](const Vector& x) {
    Vector out(1);
    out[0] = model.cost_map(x);
    return out;
  };
  return gaussian::fd_jacobian(f, state, model.fd_steps).row(0).transpose();
}

/// Unscented joint of (y, z) straight from the propagated state belief.
JointGaussian unscented_joint(const NodeModel& model, const GaussianBelief& state,
                              const gaussian::SutScaling& sut) {
  const gaussian::VectorMap g = [&](const Vector& x) {
    const Vector z = model.observation_map(x);
    Vector out(z.size() + 1);
    out.head(z.size()) = z;
    out[z.size()] = model.cost_map(x);
    return out;
  };
  const auto res = gaussian::sut_propagate(state, g, sut);
  const Eigen::Index nz = res.output.mean.size() - 1;
  JointGaussian j;
  j.mean_z = res.output.mean.head(nz);
  j.mean_y = res.output.mean.tail(1);
  j.cov_zz = res.output.cov.topLeftCorner(nz, nz);
  j.cov_yy = res.output.cov.bottomRightCorner(1, 1);
  j.cov_yz = res.output.cov.bottomLeftCorner(1, nz);
  j.cov_zy = j.cov_yz.transpose();
  return j;
}

}  // namespace

void CandidateSet::validate() const {
  std::set<int> seen;
  for (int id : items) {
    if (!seen.insert(id).second) throw InputError("candidate set: duplicate id " + std::to_string(id));
  }
  for (int id : visited) {
    if (!seen.count(id)) throw InputError("candidate set: visited id " + std::to_string(id) + " is not a candidate");
  }
}

std::vector<int> CandidateSet::unvisited() const {
  std::vector<int> out;
  for (int id : items) {
    if (!visited.count(id)) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double SequenceEvaluation::max_penalty() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& n : nodes) m = std::max(m, n.penalty);
  return m;
}

Prediction predict_observation(const NodeModel& model, Propagation propagation,
                               const gaussian::SutScaling& sut) {
  model.prior.validate();
  Prediction p;
  const Eigen::Index n = model.prior.dim();
  if (propagation == Propagation::linearized) {
    p.state_jacobian = model.state_jacobian ? *model.state_jacobian
                                            : gaussian::fd_jacobian(model.state_map, model.prior.mean, model.fd_steps);
    p.state = gaussian::linear_propagate(model.prior, p.state_jacobian, model.state_map);
    p.observation_jacobian = model.observation_jacobian
                                 ? *model.observation_jacobian
                                 : gaussian::fd_jacobian(model.observation_map, p.state.mean, model.fd_steps);
    p.observation = gaussian::linear_propagate(p.state, p.observation_jacobian, model.observation_map);
  } else {
    p.state = gaussian::sut_propagate(model.prior, model.state_map, sut).output;
    p.observation = gaussian::sut_propagate(p.state, model.observation_map, sut).output;
    p.state_jacobian = Matrix::Identity(n, n);
    p.observation_jacobian = model.observation_jacobian
                                 ? *model.observation_jacobian
                                 : gaussian::fd_jacobian(model.observation_map, p.state.mean, model.fd_steps);
  }
  return p;
}

Vector innovation(const Vector& z, const Vector& mu, const std::vector<bool>& circular) {
  Vector r = z - mu;
  for (std::size_t j = 0; j < circular.size() && static_cast<Eigen::Index>(j) < r.size(); ++j) {
    if (circular[j]) r[static_cast<Eigen::Index>(j)] = orbital::wrap_pi(r[static_cast<Eigen::Index>(j)]);
  }
  return r;
}

Selection select_candidate(const CandidateSet& candidates, const std::function<Vector(int)>& observe,
                           const GaussianBelief& observation, const std::vector<bool>& circular,
                           std::mt19937_64* rng) {
  const std::vector<int> pool = candidates.unvisited();
  if (pool.empty()) throw ExhaustionError("no unvisited candidate left");
  const Vector reg = gaussian::default_regularizer(observation.cov);

  std::vector<Selection> scored;
  scored.reserve(pool.size());
  for (int id : pool) {
    Selection s;
    s.id = id;
    s.z = observe(id);
    s.distance_sq = gaussian::quadratic_form(innovation(s.z, observation.mean, circular), observation.cov, reg);
    scored.push_back(std::move(s));
  }

  if (rng == nullptr) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < scored.size(); ++j) {
      if (scored[j].distance_sq < scored[best].distance_sq) best = j;
    }
    return scored[best];
  }

  double dmin = scored.front().distance_sq;
  for (const auto& s : scored) dmin = std::min(dmin, s.distance_sq);
  std::vector<double> w;
  w.reserve(scored.size());
  for (const auto& s : scored) w.push_back(std::exp(-0.5 * (s.distance_sq - dmin)));
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  return scored[pick(*rng)];
}

JointGaussian cost_observation_joint(const Prediction& prediction, double mu_y, const Vector& cost_gradient) {
  const Matrix& s = prediction.state.cov;
  const Matrix& h = prediction.observation_jacobian;
  const Eigen::RowVectorXd y = cost_gradient.transpose();
  JointGaussian j;
  j.mean_y = Vector::Constant(1, mu_y);
  j.mean_z = prediction.observation.mean;
  j.cov_yy = y * s * y.transpose();
  j.cov_yz = y * s * h.transpose();
  j.cov_zy = j.cov_yz.transpose();
  j.cov_zz = prediction.observation.cov;
  return j;
}

CostBelief condition_cost(const JointGaussian& joint, const Vector& innov, bool condition) {
  CostBelief out;
  out.mean = joint.mean_y[0];
  out.var = joint.cov_yy(0, 0);
  if (condition) {
    try {
      const GaussianBelief post = gaussian::condition_on_innovation(joint, innov);
      out.mean = post.mean[0];
      out.var = post.cov(0, 0);
    } catch (const DegeneracyError&) {
      out.fallback = true;
    }
  }
  out.var = std::max(out.var, kCostVarianceFloor);
  return out;
}

CostBelief condition_cost(const GaussianBelief& state, const ScalarMap& cost_map, const Vector& cost_gradient,
                          const Matrix& observation_jacobian, const Vector& innov, bool condition) {
  Prediction p;
  p.state = state;
  p.observation_jacobian = observation_jacobian;
  p.observation.mean = Vector::Zero(observation_jacobian.rows());
  p.observation.cov = observation_jacobian * state.cov * observation_jacobian.transpose();
  return condition_cost(cost_observation_joint(p, cost_map(state.mean), cost_gradient), innov, condition);
}

double node_penalty(const NodeEvaluation& eval, int dof, double alpha) {
  const Vector reg = gaussian::default_regularizer(eval.cov_z);
  const double dz = gaussian::quadratic_form(eval.innovation, eval.cov_z, reg);
  const double var_y = std::max(eval.var_y, kCostVarianceFloor);
  const double dy = (eval.y - eval.mu_y) * (eval.y - eval.mu_y) / var_y;
  return dz + dy - gaussian::chi_square_quantile(dof, alpha);
}

SequenceEvaluation evaluate_sequence(const Vector& x, const SequenceProblem& problem,
                                     const EvaluationOptions& options) {
  const DesignLayout& layout = problem.layout();
  if (static_cast<std::size_t>(x.size()) != layout.size()) {
    throw InputError("evaluate_sequence: expected " + std::to_string(layout.size()) + " design scalars, got " +
                     std::to_string(x.size()));
  }
  if (!x.allFinite()) throw InputError("evaluate_sequence: non-finite design vector");

  const int dof = options.dof.value_or(problem.observation_dim() + 1);
  const double threshold = gaussian::chi_square_quantile(dof, options.alpha);
  const double log_two_pi = std::log(2.0 * std::numbers::pi);

  CandidateSet candidates;
  candidates.items = problem.candidates();
  const std::vector<int> origin = problem.origin();
  candidates.visited.insert(origin.begin(), origin.end());

  std::mt19937_64 rng(options.seed);
  std::mt19937_64* rng_ptr = options.selection == SelectionMode::stochastic ? &rng : nullptr;

  auto cursor = problem.start();
  SequenceEvaluation out;
  out.route = origin;
  out.nodes.reserve(layout.nodes);

  for (std::size_t k = 0; k < layout.nodes; ++k) {
    NodeEvaluation ne;
    try {
      const NodeModel model = cursor->model(k, node_at(x, layout, k));
      const Prediction pred = predict_observation(model, options.propagation, options.sut);

      const Selection sel = select_candidate(
          candidates, [&](int id) { return cursor->observe(id); }, pred.observation, model.circular, rng_ptr);

      JointGaussian joint;
      if (options.propagation == Propagation::linearized) {
        joint = cost_observation_joint(pred, model.cost_map(pred.state.mean),
                                       cost_gradient_at(model, pred.state.mean));
      } else {
        joint = unscented_joint(model, pred.state, options.sut);
      }
      ne.selected_id = sel.id;
      ne.z = sel.z;
      ne.mu_z = joint.mean_z;
      ne.cov_z = joint.cov_zz;
      ne.innovation = innovation(sel.z, joint.mean_z, model.circular);
      ne.expected_state = pred.state.mean;
      ne.y = cursor->cost_to(sel.id);

      const CostBelief cb = condition_cost(joint, ne.innovation, model.condition_cost);
      ne.mu_y = cb.mean;
      ne.var_y = cb.var;
      ne.conditioning_fallback = cb.fallback;

      const Vector reg = gaussian::default_regularizer(ne.cov_z);
      ne.observation_term = gaussian::quadratic_form(ne.innovation, ne.cov_z, reg);
      ne.cost_term = (ne.y - ne.mu_y) * (ne.y - ne.mu_y) / ne.var_y;
      ne.penalty = ne.observation_term + ne.cost_term - threshold;
      const double log_det = regularized_log_det(ne.cov_z);
      ne.prior_logdensity =
          -0.5 * ne.observation_term - 0.5 * log_det - 0.5 * static_cast<double>(ne.z.size()) * log_two_pi;

      double term = 0.0;
      if (options.mode == ObjectiveMode::chi_square) {
        term = ne.y + model.kappa * std::max(0.0, ne.penalty);
      } else {
        term = ne.y + log_det + std::log(ne.var_y) + ne.observation_term + ne.cost_term;
      }
      if (!std::isfinite(term)) throw EvaluationError(k, "non-finite objective term");

      const auto step = cursor->advance(sel.id, pred.state.mean);
      ne.leg_time = step.leg_time;
      ne.epoch = step.epoch;
      candidates.visited.insert(sel.id);
      out.route.push_back(sel.id);
      out.objective += term;
      out.total_cost += ne.y;
    } catch (const EvaluationError&) {
      throw;
    } catch (const ExhaustionError&) {
      throw;
    } catch (const Error& e) {
      throw EvaluationError(k, e.what());
    }
    out.nodes.push_back(std::move(ne));
  }

  out.closing_cost = cursor->closing_cost();
  if (out.closing_cost) {
    out.objective += *out.closing_cost;
    out.total_cost += *out.closing_cost;
    out.route.push_back(origin.front());
  }
  if (!std::isfinite(out.objective)) throw EvaluationError(layout.nodes, "non-finite objective");
  return out;
}

std::string to_string(ObjectiveMode mode) { return mode == ObjectiveMode::map ? "map" : "chi-square"; }
std::string to_string(SelectionMode mode) {
  return mode == SelectionMode::stochastic ? "stochastic" : "deterministic";
}
std::string to_string(Propagation p) { return p == Propagation::unscented ? "unscented" : "linearized"; }

}  // namespace tspc::engine
