#include "tspc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "tspc/error.hpp"

namespace tspc::optimizer {
namespace {

using Matrix = Eigen::MatrixXd;

/// Norm of P(x - g) - x, the projected-gradient measure for box constraints.
double projected_gradient_norm(const Vector& x, const Vector& g, const Bounds& b) {
  return (b.clamp(x - g) - x).norm();
}

Vector default_steps(const Vector& x) {
  return (1e-6 * x.array().abs().max(1.0)).matrix();
}

double safe_eval(const Objective& f, const Vector& x, long& evaluations) {
  ++evaluations;
  try {
    return f(x);
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

/// Lowest finite probe seen while differencing.
struct StencilBest {
  double value = std::numeric_limits<double>::infinity();
  Eigen::Index index = -1;
  double coordinate = 0.0;  // value of x[index] at the probe

  void offer(double v, Eigen::Index j, double coord) {
    if (std::isfinite(v) && v < value) {
      value = v;
      index = j;
      coordinate = coord;
    }
  }
};

// x[j] + offset kept inside the box; x + (upper - x) can round past upper.
double probe_coordinate(const Vector& x, Eigen::Index j, double offset, const Bounds& bounds) {
  return std::clamp(x[j] + offset, bounds.lower[j], bounds.upper[j]);
}

thread_local StencilBest* g_stencil = nullptr;

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::stalled: return "stalled";
  }
  return "unknown";
}

void Bounds::validate() const {
  if (lower.size() != upper.size()) throw InputError("bounds: lower and upper differ in length");
  for (Eigen::Index j = 0; j < lower.size(); ++j) {
    if (!(lower[j] <= upper[j])) throw InputError("bounds: lower exceeds upper at index " + std::to_string(j));
  }
}

Vector Bounds::clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

bool Bounds::contains(const Vector& x) const {
  return x.size() == lower.size() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

void OptimizerConfig::validate() const {
  if (max_iterations < 1) throw InputError("optimizer: max_iterations must be >= 1");
  if (!(grad_tolerance > 0 && step_tolerance > 0 && objective_tolerance > 0)) {
    throw InputError("optimizer: tolerances must be > 0");
  }
  if (restarts < 1) throw InputError("optimizer: restarts must be >= 1");
  if ((fd_step.array() <= 0.0).any()) throw InputError("optimizer: fd_step entries must be > 0");
  for (double s : fd_scales) {
    if (!(s > 0)) throw InputError("optimizer: fd_scales entries must be > 0");
  }
}

Vector fd_gradient(const Objective& f, const Vector& x, double fx, const Vector& steps, const Bounds& bounds,
                   long* evaluations) {
  if (steps.size() != x.size()) throw InputError("fd_gradient: step vector length mismatch");
  long local = 0;
  long& evals = evaluations ? *evaluations : local;
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = steps[j];
    const double room_up = bounds.upper[j] - x[j];
    const double room_down = x[j] - bounds.lower[j];
    // Forward unless the step would leave the box; then backward.
    double dir = (room_up >= h || room_up >= room_down) ? 1.0 : -1.0;
    bool done = false;
    for (int attempt = 0; attempt < 3 && !done; ++attempt) {
      double hj = h;
      if (attempt == 1) hj = 0.5 * h;
      if (attempt == 2) {
        dir = -dir;
        hj = 0.5 * h;
      }
      const double room = dir > 0 ? room_up : room_down;
      hj = std::min(hj, room);
      if (hj <= 0.0) continue;
      probe[j] = probe_coordinate(x, j, dir * hj, bounds);
      const double off = probe[j] - x[j];
      if (off == 0.0) {
        probe[j] = x[j];
        continue;
      }
      const double fp = safe_eval(f, probe, evals);
      if (g_stencil) g_stencil->offer(fp, j, probe[j]);
      probe[j] = x[j];
      if (std::isfinite(fp)) {
        g[j] = (fp - fx) / off;
        done = true;
      }
    }
    if (!done) {
      if (bounds.upper[j] == bounds.lower[j]) {
        g[j] = 0.0;
        continue;
      }
      throw PropagationError("fd_gradient: objective not finite around coordinate " + std::to_string(j));
    }
  }
  return g;
}

Vector fd_gradient_central(const Objective& f, const Vector& x, double fx, const Vector& steps,
                           const Bounds& bounds, long* evaluations) {
  if (steps.size() != x.size()) throw InputError("fd_gradient: step vector length mismatch");
  long local = 0;
  long& evals = evaluations ? *evaluations : local;
  Vector g = Vector::Zero(x.size());
  Vector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double up = probe_coordinate(x, j, std::min(steps[j], bounds.upper[j] - x[j]), bounds);
    const double down = probe_coordinate(x, j, -std::min(steps[j], x[j] - bounds.lower[j]), bounds);
    const double hp = up - x[j];
    const double hm = x[j] - down;
    double fp = fx;
    double fm = fx;
    if (hp > 0) {
      probe[j] = up;
      fp = safe_eval(f, probe, evals);
      if (g_stencil) g_stencil->offer(fp, j, up);
    }
    if (hm > 0) {
      probe[j] = down;
      fm = safe_eval(f, probe, evals);
      if (g_stencil) g_stencil->offer(fm, j, down);
    }
    probe[j] = x[j];
    if (hp + hm > 0 && std::isfinite(fp) && std::isfinite(fm)) {
      g[j] = (fp - fm) / (hp + hm);
    } else if (hp > 0 && std::isfinite(fp)) {
      g[j] = (fp - fx) / hp;
    } else if (hm > 0 && std::isfinite(fm)) {
      g[j] = (fx - fm) / hm;
    } else if (hp + hm > 0) {
      throw PropagationError("fd_gradient: objective not finite around coordinate " + std::to_string(j));
    }
  }
  return g;
}

MinimizeResult minimize(const Objective& f, const Vector& x0, const Bounds& bounds, const OptimizerConfig& config,
                        const Probe& probe) {
  bounds.validate();
  config.validate();
  if (x0.size() != bounds.lower.size()) throw InputError("minimize: x0 length does not match the bounds");
  if (config.fd_step.size() != 0 && config.fd_step.size() != x0.size()) {
    throw InputError("minimize: fd_step length does not match x0");
  }

  const Eigen::Index n = x0.size();
  const Vector span = bounds.upper - bounds.lower;
  std::vector<Vector> schedule;
  if (!config.fd_scales.empty()) {
    for (double s : config.fd_scales) schedule.push_back((s * span).cwiseMax(1e-12));
  }
  std::size_t stage = 0;
  StencilBest stencil;
  auto gradient = [&](const Vector& x, double fx, const Vector& steps, long* evals) {
    stencil = StencilBest{};
    g_stencil = schedule.empty() ? nullptr : &stencil;
    struct Reset {
      ~Reset() { g_stencil = nullptr; }
    } reset;
    return config.central ? fd_gradient_central(f, x, fx, steps, bounds, evals)
                          : fd_gradient(f, x, fx, steps, bounds, evals);
  };
  auto steps_for = [&](const Vector& x) -> Vector {
    if (!schedule.empty()) return schedule[stage];
    if (config.fd_step.size() != 0) return config.fd_step;
    return default_steps(x);
  };

  MinimizeResult res;
  SolveTrace& trace = res.trace;
  Vector x = bounds.clamp(x0);
  double fx = f(x);
  ++trace.evaluations;
  if (!std::isfinite(fx)) throw InputError("minimize: objective is not finite at the initial point");

  ProbeResult pr;
  if (probe) pr = probe(x);
  Vector g = gradient(x, fx, steps_for(x), &trace.evaluations);
  trace.records.push_back({0, fx, pr.max_penalty, projected_gradient_norm(x, g, bounds), 0.0, false});

  Matrix hinv = Matrix::Identity(n, n);
  bool identity = true;
  trace.status = SolveStatus::max_iter;
  trace.reason = "iteration limit";

  int iter = 0;
  while (iter < config.max_iterations) {
    if (projected_gradient_norm(x, g, bounds) <= config.grad_tolerance) {
      trace.status = SolveStatus::converged;
      trace.reason = "projected gradient below tolerance";
      break;
    }
    Vector d = -hinv * g;
    // Directions pushing into an active bound contribute nothing.
    for (Eigen::Index j = 0; j < n; ++j) {
      if ((x[j] <= bounds.lower[j] && d[j] < 0) || (x[j] >= bounds.upper[j] && d[j] > 0)) d[j] = 0.0;
    }
    if (g.dot(d) >= 0.0 || !d.allFinite()) {
      hinv.setIdentity();
      identity = true;
      d = -g;
      for (Eigen::Index j = 0; j < n; ++j) {
        if ((x[j] <= bounds.lower[j] && d[j] < 0) || (x[j] >= bounds.upper[j] && d[j] > 0)) d[j] = 0.0;
      }
    }

    double t = 1.0;
    bool accepted = false;
    Vector xn;
    double fn = 0.0;
    for (int b = 0; b < config.max_backtracks; ++b) {
      xn = bounds.clamp(x + t * d);
      if ((xn - x).norm() == 0.0) break;
      fn = safe_eval(f, xn, trace.evaluations);
      if (std::isfinite(fn) && fn < fx && fn <= fx + config.armijo * g.dot(xn - x)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (accepted && config.expand && t == 1.0) {
      for (int b = 0; b < config.max_backtracks; ++b) {
        t *= 2.0;
        const Vector xt = bounds.clamp(x + t * d);
        if ((xt - xn).norm() == 0.0) break;
        const double ft = safe_eval(f, xt, trace.evaluations);
        if (!(std::isfinite(ft) && ft < fn && ft <= fx + config.armijo * g.dot(xt - x))) break;
        xn = xt;
        fn = ft;
      }
    }

    // With a difference-scale schedule the probes double as a pattern-search
    // stencil: the best probe wins when it beats the line search.
    if (!schedule.empty() && stencil.index >= 0 && stencil.value < fx && (!accepted || stencil.value < fn)) {
      xn = x;
      xn[stencil.index] = stencil.coordinate;
      fn = stencil.value;
      accepted = true;
    }

    if (!accepted) {
      if (!identity) {
        hinv.setIdentity();
        identity = true;
        continue;
      }
      if (!schedule.empty() && stage + 1 < schedule.size()) {
        ++stage;
        g = gradient(x, fx, steps_for(x), &trace.evaluations);
        continue;
      }
      trace.status = SolveStatus::stalled;
      trace.reason = "line search failed along the steepest-descent direction";
      break;
    }

    ++iter;
    const Vector gn = gradient(xn, fn, steps_for(xn), &trace.evaluations);
    const Vector s = xn - x;
    const Vector y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * std::max(1.0, s.norm() * y.norm())) {
      const double rho = 1.0 / sy;
      const Vector hy = hinv * y;
      // Inverse BFGS update in rank-two form.
      hinv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
      identity = false;
    }
    const double df = fx - fn;
    const double step_norm = s.norm();
    x = xn;
    fx = fn;
    g = gn;

    ProbeResult next;
    if (probe) next = probe(x);
    const bool flip = probe && next.signature != pr.signature;
    pr = next;
    trace.records.push_back({iter, fx, pr.max_penalty, projected_gradient_norm(x, g, bounds), step_norm, flip});

    if (step_norm <= config.step_tolerance) {
      trace.status = SolveStatus::converged;
      trace.reason = "step below tolerance";
      break;
    }
    if (df <= config.objective_tolerance) {
      trace.status = SolveStatus::converged;
      trace.reason = "objective change below tolerance";
      break;
    }
  }

  res.x = x;
  res.objective = fx;
  res.max_penalty = pr.max_penalty;
  return res;
}

std::mt19937_64 run_rng(std::uint64_t seed, std::size_t run) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(run), 0x7473u};
  return std::mt19937_64(seq);
}

MultiStartResult multi_start(const Objective& f, const Sampler& sampler, const Bounds& bounds,
                             const OptimizerConfig& config, const Probe& probe) {
  config.validate();
  const auto restarts = static_cast<std::size_t>(config.restarts);
  MultiStartResult out;
  out.runs.resize(restarts);

  auto run_one = [&](std::size_t r) {
    RunOutcome& o = out.runs[r];
    try {
      auto rng = run_rng(config.seed, r);
      const Vector x0 = sampler(rng, r);
      o.result = minimize(f, x0, bounds, config, probe);
      o.ok = true;
    } catch (const std::exception& e) {
      o.error = e.what();
    }
  };

  const auto jobs = static_cast<std::size_t>(std::max(1, config.jobs));
  if (jobs == 1 || restarts == 1) {
    for (std::size_t r = 0; r < restarts; ++r) run_one(r);
  } else {
    std::mutex m;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(jobs, restarts); ++t) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t r = 0;
          {
            std::lock_guard<std::mutex> lock(m);
            if (next >= restarts) return;
            r = next++;
          }
          run_one(r);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  bool found = false;
  bool best_feasible = false;
  for (std::size_t r = 0; r < restarts; ++r) {
    const auto& o = out.runs[r];
    if (!o.ok) continue;
    const bool feasible = !probe || o.result.max_penalty <= 0.0;
    const bool better = !found || (feasible && !best_feasible) ||
                        (feasible == best_feasible && o.result.objective < out.best.objective);
    if (better) {
      out.best = o.result;
      out.best_index = r;
      best_feasible = feasible;
      found = true;
    }
  }
  if (!found) {
    std::string msg = "multi_start: all " + std::to_string(restarts) + " runs failed";
    if (!out.runs.empty()) msg += "; first error: " + out.runs.front().error;
    throw Error(msg);
  }
  return out;
}

}  // namespace tspc::optimizer
