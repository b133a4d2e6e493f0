#include "tspc/static_tsp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <set>
#include <sstream>

#include "tspc/error.hpp"

namespace tspc::static_tsp {
namespace {

using engine::Vector;
using gaussian::Matrix;

constexpr double kMinStepNorm = 1e-6;

double dist(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Distance matrix indexed by position in `points.points`.
std::vector<std::vector<double>> distances(const PointSet& ps) {
  const std::size_t n = ps.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) d[a][b] = dist(ps.points[a], ps.points[b]);
  }
  return d;
}

std::size_t index_of(const PointSet& ps, int id) {
  for (std::size_t j = 0; j < ps.size(); ++j) {
    if (ps.points[j].id == id) return j;
  }
  throw InputError("unknown point id " + std::to_string(id));
}

Tour tour_from_indices(const PointSet& ps, const std::vector<std::size_t>& idx) {
  Tour t;
  for (std::size_t j : idx) t.order.push_back(ps.points[j].id);
  t.order.push_back(ps.points[idx.front()].id);
  t.length = tour_length(t.order, ps);
  return t;
}

class StaticCursor final : public engine::SequenceCursor {
 public:
  StaticCursor(const PointSet& ps, int depot) : ps_(ps), depot_(ps.at(depot)) {
    prev_selected_ = depot_;
    prev_expected_ = Vector(2);
    prev_expected_ << depot_.x, depot_.y;
  }

  engine::NodeModel model(std::size_t, const engine::NodeDesign& node) override {
    pending_sx_ = chain_variance(node.sigma[0], sx_, node.rho[0]);
    pending_sy_ = chain_variance(node.sigma[1], sy_, node.rho[1]);

    Vector var(2);
    var << pending_sx_ * pending_sx_, pending_sy_ * pending_sy_;
    engine::NodeModel m;
    m.prior = GaussianBelief(prev_expected_ + node.mu, var.asDiagonal());
    m.state_map = [](const Vector& x) { return x; };
    m.observation_map = [](const Vector& x) { return x; };
    const Vector anchor = prev_expected_;
    m.cost_map = [anchor](const Vector& x) { return (x - anchor).norm(); };
    m.state_jacobian = Matrix::Identity(2, 2);
    m.observation_jacobian = Matrix::Identity(2, 2);
    const double norm = node.mu.norm();
    Vector grad(2);
    if (norm < kMinStepNorm) {
      grad << 1.0, 0.0;
    } else {
      grad = node.mu / norm;
    }
    m.cost_gradient = grad;
    m.fd_steps = Vector::Constant(2, 1e-6);
    // With identity observation the Schur complement of the cost is zero, so
    // the cost belief is kept unconditioned.
    m.condition_cost = false;
    m.kappa = node.kappa;
    return m;
  }

  Vector observe(int id) const override {
    const Point& p = ps_.at(id);
    Vector z(2);
    z << p.x, p.y;
    return z;
  }

  double cost_to(int id) const override { return dist(prev_selected_, ps_.at(id)); }

  Step advance(int id, const Vector& expected_state) override {
    prev_selected_ = ps_.at(id);
    prev_expected_ = expected_state;
    sx_ = pending_sx_;
    sy_ = pending_sy_;
    return {};
  }

  std::optional<double> closing_cost() const override { return dist(prev_selected_, depot_); }

 private:
  using GaussianBelief = gaussian::GaussianBelief;
  const PointSet& ps_;
  Point depot_;
  Point prev_selected_;
  Vector prev_expected_;
  double sx_ = 0.0;
  double sy_ = 0.0;
  double pending_sx_ = 0.0;
  double pending_sy_ = 0.0;
};

class StaticProblem final : public engine::SequenceProblem {
 public:
  StaticProblem(PointSet ps, int depot) : ps_(std::move(ps)), depot_(depot) {
    ps_.validate();
    if (!ps_.contains(depot)) throw InputError("depot id " + std::to_string(depot) + " is not in the point set");
    if (ps_.size() < 2) throw InputError("static problem needs at least two points");
    layout_ = static_layout(ps_.size() - 1);
  }

  const engine::DesignLayout& layout() const override { return layout_; }
  std::vector<int> candidates() const override { return ps_.ids(); }
  std::vector<int> origin() const override { return {depot_}; }
  std::unique_ptr<engine::SequenceCursor> start() const override {
    return std::make_unique<StaticCursor>(ps_, depot_);
  }
  int observation_dim() const override { return 2; }

 private:
  PointSet ps_;
  int depot_;
  engine::DesignLayout layout_;
};

}  // namespace

PointSet PointSet::benchmark() {
  return PointSet{{{1, 16.470, 96.100},
                   {2, 16.470, 94.440},
                   {3, 20.090, 92.540},
                   {4, 22.390, 93.370},
                   {5, 25.230, 97.240},
                   {6, 22.000, 96.050},
                   {7, 20.470, 97.020},
                   {8, 17.200, 96.290},
                   {9, 16.300, 97.380},
                   {10, 14.050, 98.120},
                   {11, 16.530, 97.380},
                   {12, 21.520, 95.590},
                   {13, 19.410, 97.130},
                   {14, 20.090, 94.550}}};
}

void PointSet::validate() const {
  std::set<int> seen;
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw ValidationError("point " + std::to_string(p.id) + " has a non-finite coordinate");
    }
    if (!seen.insert(p.id).second) throw ValidationError("duplicate point id " + std::to_string(p.id));
  }
}

const Point& PointSet::at(int id) const { return points[index_of(*this, id)]; }

bool PointSet::contains(int id) const {
  return std::any_of(points.begin(), points.end(), [id](const Point& p) { return p.id == id; });
}

std::vector<int> PointSet::ids() const {
  std::vector<int> out;
  for (const auto& p : points) out.push_back(p.id);
  return out;
}

PointSet read_points_csv(std::istream& in) {
  PointSet ps;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string f[3];
    int nf = 0;
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (nf < 3) f[nf] = cell;
      ++nf;
    }
    if (nf != 3) throw ValidationError("points CSV line " + std::to_string(line_no) + ": expected id,x,y");
    try {
      std::size_t used = 0;
      const int id = std::stoi(f[0], &used);
      ps.points.push_back({id, std::stod(f[1]), std::stod(f[2])});
    } catch (const std::logic_error&) {
      if (ps.points.empty() && line_no == 1) continue;  // header
      throw ValidationError("points CSV line " + std::to_string(line_no) + ": cannot parse '" + line + "'");
    }
  }
  ps.validate();
  return ps;
}

PointSet read_points_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open points file '" + path + "'");
  return read_points_csv(in);
}

double tour_length(const std::vector<int>& order, const PointSet& points) {
  if (order.size() != points.size() + 1 || order.front() != order.back()) {
    throw InputError("tour must visit every point once and return to its start");
  }
  std::set<int> seen(order.begin(), order.end() - 1);
  if (seen.size() != points.size()) throw InputError("tour repeats a point");
  for (int id : seen) {
    if (!points.contains(id)) throw InputError("tour contains unknown id " + std::to_string(id));
  }
  double len = 0.0;
  for (std::size_t j = 0; j + 1 < order.size(); ++j) len += dist(points.at(order[j]), points.at(order[j + 1]));
  return len;
}

double chain_variance(double sigma_prior, double sigma_prev, double rho) {
  return std::sqrt(sigma_prior * sigma_prior + sigma_prev * sigma_prev + 2.0 * rho * sigma_prior * sigma_prev);
}

double distance_variance(double mu_x, double mu_y, double sigma_x, double sigma_y) {
  const double m2 = mu_x * mu_x + mu_y * mu_y;
  if (!(m2 > 0.0)) throw DegeneracyError("distance_variance: zero mean step");
  return (sigma_x * sigma_x * mu_x * mu_x + sigma_y * sigma_y * mu_y * mu_y) / m2;
}

Tour held_karp_optimal(const PointSet& points, int depot) {
  points.validate();
  const std::size_t n = points.size();
  if (n > 20) throw InputError("held_karp_optimal: at most 20 points are supported");
  const std::size_t d0 = index_of(points, depot);
  if (n == 1) return Tour{{depot, depot}, 0.0};

  const auto d = distances(points);
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < n; ++j) {
    if (j != d0) others.push_back(j);
  }
  const std::size_t m = others.size();
  const std::size_t full = std::size_t{1} << m;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(full * m, inf);
  std::vector<std::uint8_t> parent(full * m, 0xff);
  for (std::size_t j = 0; j < m; ++j) cost[(std::size_t{1} << j) * m + j] = d[d0][others[j]];

  for (std::size_t mask = 1; mask < full; ++mask) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!(mask & (std::size_t{1} << j))) continue;
      const double cj = cost[mask * m + j];
      if (cj == inf) continue;
      for (std::size_t k = 0; k < m; ++k) {
        if (mask & (std::size_t{1} << k)) continue;
        const std::size_t nm = mask | (std::size_t{1} << k);
        const double c = cj + d[others[j]][others[k]];
        if (c < cost[nm * m + k]) {
          cost[nm * m + k] = c;
          parent[nm * m + k] = static_cast<std::uint8_t>(j);
        }
      }
    }
  }

  std::size_t last = 0;
  double best = inf;
  for (std::size_t j = 0; j < m; ++j) {
    const double c = cost[(full - 1) * m + j] + d[others[j]][d0];
    if (c < best) {
      best = c;
      last = j;
    }
  }
  std::vector<std::size_t> rev;
  std::size_t mask = full - 1;
  std::size_t cur = last;
  while (cur != 0xff) {
    rev.push_back(others[cur]);
    const std::size_t p = parent[mask * m + cur];
    mask &= ~(std::size_t{1} << cur);
    cur = mask == 0 ? 0xff : p;
  }
  std::vector<std::size_t> idx{d0};
  idx.insert(idx.end(), rev.rbegin(), rev.rend());
  return tour_from_indices(points, idx);
}

Tour nearest_neighbor(const PointSet& points, int depot) {
  points.validate();
  const auto d = distances(points);
  const std::size_t n = points.size();
  std::vector<bool> used(n, false);
  std::size_t cur = index_of(points, depot);
  used[cur] = true;
  std::vector<std::size_t> idx{cur};
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      if (best == n || d[cur][j] < d[cur][best] ||
          (d[cur][j] == d[cur][best] && points.points[j].id < points.points[best].id)) {
        best = j;
      }
    }
    used[best] = true;
    idx.push_back(best);
    cur = best;
  }
  return tour_from_indices(points, idx);
}

void AnnealingSchedule::validate() const {
  if (!(t0 > t_min && t_min > 0.0)) throw InputError("annealing schedule: need t0 > t_min > 0");
  if (!(cooling > 0.0 && cooling < 1.0)) throw InputError("annealing schedule: cooling must be in (0, 1)");
  if (sweeps < 1) throw InputError("annealing schedule: sweeps must be >= 1");
}

Tour simulated_annealing(const PointSet& points, int depot, const AnnealingSchedule& schedule, std::uint64_t seed,
                         const std::optional<std::vector<int>>& initial) {
  schedule.validate();
  points.validate();
  const std::size_t n = points.size();
  const auto d = distances(points);

  std::vector<std::size_t> tour;
  if (initial) {
    tour_length(*initial, points);
    if (initial->front() != depot) throw InputError("simulated_annealing: initial tour must start at the depot");
    for (std::size_t j = 0; j + 1 < initial->size(); ++j) tour.push_back(index_of(points, (*initial)[j]));
  } else {
    for (int id : nearest_neighbor(points, depot).order) tour.push_back(index_of(points, id));
    tour.pop_back();
  }
  if (n < 4) return tour_from_indices(points, tour);

  auto at = [&](std::size_t p) { return tour[p % n]; };
  double len = 0.0;
  for (std::size_t p = 0; p < n; ++p) len += d[at(p)][at(p + 1)];
  std::vector<std::size_t> best = tour;
  double best_len = len;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pos(1, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (double temp = schedule.t0; temp > schedule.t_min; temp *= schedule.cooling) {
    for (int s = 0; s < schedule.sweeps; ++s) {
      for (std::size_t move = 0; move < n; ++move) {
        std::size_t i = pos(rng);
        std::size_t j = pos(rng);
        if (i == j) continue;
        if (i > j) std::swap(i, j);
        const bool two_opt = unit(rng) < 0.5;
        double delta = 0.0;
        if (two_opt) {
          // Reverse tour[i..j].
          delta = d[at(i - 1)][at(j)] + d[at(i)][at(j + 1)] - d[at(i - 1)][at(i)] - d[at(j)][at(j + 1)];
        } else if (j == i + 1) {
          delta = d[at(i - 1)][at(j)] + d[at(i)][at(j + 1)] - d[at(i - 1)][at(i)] - d[at(j)][at(j + 1)];
        } else {
          delta = d[at(i - 1)][at(j)] + d[at(j)][at(i + 1)] + d[at(j - 1)][at(i)] + d[at(i)][at(j + 1)] -
                  d[at(i - 1)][at(i)] - d[at(i)][at(i + 1)] - d[at(j - 1)][at(j)] - d[at(j)][at(j + 1)];
        }
        if (delta <= 0.0 || unit(rng) < std::exp(-delta / temp)) {
          if (two_opt) {
            std::reverse(tour.begin() + static_cast<std::ptrdiff_t>(i), tour.begin() + static_cast<std::ptrdiff_t>(j) + 1);
          } else {
            std::swap(tour[i], tour[j]);
          }
          len += delta;
          if (len < best_len - 1e-12) {
            best_len = len;
            best = tour;
          }
        }
      }
    }
  }
  return tour_from_indices(points, best);
}

engine::DesignLayout static_layout(std::size_t nodes) {
  engine::DesignLayout l;
  l.nodes = nodes;
  l.has_tof = false;
  l.n_mu = 2;
  l.n_rho = 2;
  l.mu_names = {"x", "y"};
  l.lower = {std::nullopt, Vector::Constant(2, -8.0), Vector::Constant(2, 0.1), Vector::Constant(2, 0.0), 0.01};
  l.upper = {std::nullopt, Vector::Constant(2, 8.0), Vector::Constant(2, 6.0), Vector::Constant(2, 1.0), 300.0};
  l.initial = {std::nullopt, Vector::Zero(2), Vector::Constant(2, 4.0), Vector::Constant(2, 0.2), 50.0};
  l.validate();
  return l;
}

std::shared_ptr<const engine::SequenceProblem> make_static_problem(const PointSet& points, int depot) {
  return std::make_shared<StaticProblem>(points, depot);
}

engine::BoundProblem build_static_problem(const PointSet& points, engine::ObjectiveMode mode, int depot) {
  engine::BoundProblem b;
  b.problem = make_static_problem(points, depot);
  b.options.mode = mode;
  return b;
}

std::vector<int> solution_a_route() { return {13, 7, 12, 6, 5, 4, 3, 14, 2, 1, 10, 9, 11, 8, 13}; }
std::vector<int> solution_b_route() { return {13, 7, 12, 6, 5, 4, 3, 14, 2, 1, 8, 11, 9, 10, 13}; }

std::vector<std::pair<double, double>> route_steps(const std::vector<int>& route, const PointSet& points) {
  std::vector<std::pair<double, double>> out;
  // The closing leg back to the depot has no design node.
  for (std::size_t j = 0; j + 2 < route.size(); ++j) {
    const Point& a = points.at(route[j]);
    const Point& b = points.at(route[j + 1]);
    out.emplace_back(b.x - a.x, b.y - a.y);
  }
  return out;
}

engine::Vector seeded_design(const std::vector<int>& route, const PointSet& points, double dx, double dy,
                             double sigma, double rho, double kappa) {
  const auto steps = route_steps(route, points);
  const auto layout = static_layout(steps.size());
  Vector x = layout.initial_vector();
  const auto stride = static_cast<Eigen::Index>(layout.per_node());
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const Eigen::Index b = static_cast<Eigen::Index>(k) * stride;
    x.segment(b, 7) << steps[k].first + dx, steps[k].second + dy, sigma, sigma, rho, rho, kappa;
  }
  return layout.lower_bounds().cwiseMax(x).cwiseMin(layout.upper_bounds());
}

engine::Vector uniform_design(std::mt19937_64& rng, std::size_t nodes, double lo, double hi) {
  const auto layout = static_layout(nodes);
  Vector x = layout.initial_vector();
  std::uniform_real_distribution<double> u(lo, hi);
  const auto stride = static_cast<Eigen::Index>(layout.per_node());
  for (std::size_t k = 0; k < nodes; ++k) {
    const Eigen::Index b = static_cast<Eigen::Index>(k) * stride;
    x[b] = u(rng);
    x[b + 1] = u(rng);
  }
  return x;
}

engine::Vector default_fd_steps(std::size_t nodes) {
  Vector one(7);
  one << 1e-4, 1e-4, 0.1, 0.1, 0.05, 0.05, 1.0;
  Vector out(static_cast<Eigen::Index>(7 * nodes));
  for (std::size_t k = 0; k < nodes; ++k) out.segment(static_cast<Eigen::Index>(7 * k), 7) = one;
  return out;
}

optimizer::OptimizerConfig local_search_config(std::size_t nodes) {
  optimizer::OptimizerConfig c;
  c.fd_step = default_fd_steps(nodes);
  return c;
}

optimizer::OptimizerConfig filtered_search_config() {
  optimizer::OptimizerConfig c;
  c.central = true;
  for (int k = 0; k < 20; ++k) c.fd_scales.push_back(0.5 * std::pow(0.7, k));
  return c;
}

StaticSolveResult solve_static(const PointSet& points, const StaticSolveOptions& options) {
  StaticSolveResult out;
  out.problem = build_static_problem(points, options.mode, options.depot);
  const auto& layout = out.problem.layout();
  const std::size_t nodes = layout.nodes;

  StaticSearch search = options.search;
  if (search == StaticSearch::automatic) {
    search = options.init == StaticInit::solution_a ? StaticSearch::local : StaticSearch::filtered;
  }
  out.config = search == StaticSearch::local ? local_search_config(nodes) : filtered_search_config();
  out.config.restarts = options.restarts;
  out.config.seed = options.seed;
  out.config.jobs = options.jobs;
  out.config.max_iterations = options.max_iterations;

  optimizer::Sampler sampler;
  if (options.init == StaticInit::solution_a) {
    if (options.depot != kBenchmarkDepot || points.size() != 14) {
      throw InputError("solution-a initialization needs the 14-point benchmark");
    }
    const Vector x0 = seeded_design(solution_a_route(), points, 1.0, -0.8);
    sampler = [x0](std::mt19937_64&, std::size_t) { return x0; };
  } else if (options.init == StaticInit::uniform) {
    sampler = [nodes](std::mt19937_64& rng, std::size_t) { return uniform_design(rng, nodes); };
  } else {
    const Vector x0 = layout.initial_vector();
    sampler = [x0](std::mt19937_64&, std::size_t) { return x0; };
  }

  const engine::BoundProblem& bp = out.problem;
  const optimizer::Objective f = [&bp](const Vector& x) { return bp.objective(x); };
  const optimizer::Probe probe = [&bp](const Vector& x) {
    const auto ev = bp.evaluate(x);
    optimizer::ProbeResult r;
    r.max_penalty = ev.max_penalty();
    for (int id : ev.route) r.signature += std::to_string(id) + ",";
    return r;
  };
  out.search = optimizer::multi_start(f, sampler, {layout.lower_bounds(), layout.upper_bounds()}, out.config, probe);
  out.evaluation = bp.evaluate(out.search.best.x);
  return out;
}

}  // namespace tspc::static_tsp
