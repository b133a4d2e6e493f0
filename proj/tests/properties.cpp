#include "properties.hpp"

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "tspc/debris.hpp"
#include "tspc/gaussian.hpp"
#include "tspc/optimizer.hpp"
#include "tspc/static_tsp.hpp"

namespace props {
namespace {

using tspc::engine::Vector;

Vector uniform_in(std::mt19937_64& rng, const Vector& lo, const Vector& hi) {
  Vector x(lo.size());
  for (Eigen::Index j = 0; j < lo.size(); ++j) x[j] = std::uniform_real_distribution<double>(lo[j], hi[j])(rng);
  return x;
}

void fail(Outcome& o, const std::string& what) {
  if (o.failures++ == 0) o.first_failure = what;
}

std::string route_string(const std::vector<int>& r) {
  std::ostringstream s;
  for (int id : r) s << id << ' ';
  return s.str();
}

const tspc::debris::DebrisCatalog& fixture() {
  static const auto c = tspc::debris::DebrisCatalog::from_csv_file(std::string(TSPC_TEST_DATA_DIR) +
                                                                  "/synthetic_debris.csv");
  return c;
}

}  // namespace

Outcome route_uniqueness(int cases, std::uint64_t seed) {
  Outcome o{"route uniqueness"};
  std::mt19937_64 rng(seed);
  const auto bench = tspc::static_tsp::PointSet::benchmark();
  const auto st = tspc::static_tsp::build_static_problem(bench, tspc::engine::ObjectiveMode::chi_square);
  tspc::debris::MissionConfig mc;
  mc.n_transfers = 8;
  const auto db = tspc::debris::build_debris_problem(fixture(), mc);
  for (int c = 0; c < cases; ++c) {
    const bool debris = c % 2 == 1;
    const auto& bp = debris ? db : st;
    const Vector x = uniform_in(rng, bp.layout().lower_bounds(), bp.layout().upper_bounds());
    auto e = bp.evaluate(x);
    std::vector<int> route = e.route;
    if (!debris) {
      // the closed tour returns to the depot; everything before must be distinct
      if (route.front() != route.back()) fail(o, "static tour not closed: " + route_string(route));
      route.pop_back();
    }
    ++o.cases;
    if (std::set<int>(route.begin(), route.end()).size() != route.size()) fail(o, "repeat in " + route_string(e.route));
    if (route.size() != bp.layout().nodes + 1) fail(o, "wrong length " + route_string(e.route));
  }
  return o;
}

Outcome epoch_monotonicity(int cases, std::uint64_t seed) {
  Outcome o{"epoch monotonicity"};
  std::mt19937_64 rng(seed);
  tspc::debris::MissionConfig mc;
  mc.n_transfers = 10;
  const auto bp = tspc::debris::build_debris_problem(fixture(), mc);
  const auto& layout = bp.layout();
  for (int c = 0; c < cases; ++c) {
    const Vector x = uniform_in(rng, layout.lower_bounds(), layout.upper_bounds());
    const auto e = bp.evaluate(x);
    ++o.cases;
    double prev = mc.start_epoch;
    for (std::size_t k = 0; k < e.nodes.size(); ++k) {
      const double tof = *tspc::engine::node_at(x, layout, k).tof;
      const double want = prev + mc.dwell_days + tof;
      if (!(e.nodes[k].epoch > prev) || std::abs(e.nodes[k].epoch - want) > 1e-9) {
        std::ostringstream s;
        s << "case " << c << " node " << k << ": epoch " << e.nodes[k].epoch << " after " << prev;
        fail(o, s.str());
        break;
      }
      prev = e.nodes[k].epoch;
    }
  }
  return o;
}

Outcome kappa_monotonicity(int cases, std::uint64_t seed) {
  Outcome o{"penalty monotone in kappa"};
  std::mt19937_64 rng(seed);
  const auto bench = tspc::static_tsp::PointSet::benchmark();
  const auto st = tspc::static_tsp::build_static_problem(bench, tspc::engine::ObjectiveMode::chi_square);
  tspc::debris::MissionConfig mc;
  mc.n_transfers = 6;
  const auto db = tspc::debris::build_debris_problem(fixture(), mc);
  for (int c = 0; c < cases; ++c) {
    const auto& bp = c % 2 ? db : st;
    const auto& layout = bp.layout();
    Vector x = uniform_in(rng, layout.lower_bounds(), layout.upper_bounds());
    const auto before = bp.evaluate(x);
    // kappa is the last scalar of each node
    const std::size_t k = std::uniform_int_distribution<std::size_t>(0, layout.nodes - 1)(rng);
    const Eigen::Index idx = static_cast<Eigen::Index>((k + 1) * layout.per_node() - 1);
    x[idx] = std::uniform_real_distribution<double>(x[idx], layout.upper.kappa)(rng);
    const auto after = bp.evaluate(x);
    ++o.cases;
    if (after.route != before.route) {
      fail(o, "kappa changed the selection in case " + std::to_string(c));
    } else if (after.objective < before.objective) {
      std::ostringstream s;
      s << "case " << c << ": objective fell from " << before.objective << " to " << after.objective;
      fail(o, s.str());
    }
  }
  return o;
}

Outcome iterate_feasibility(int cases, std::uint64_t seed) {
  Outcome o{"optimizer iterate feasibility"};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  for (int c = 0; c < cases; ++c) {
    const int n = 1 + c % 5;
    Vector lo(n), hi(n), target(n), w(n);
    for (int j = 0; j < n; ++j) {
      lo[j] = -3.0 * std::abs(n01(rng));
      hi[j] = lo[j] + 0.01 + 4.0 * std::abs(n01(rng));
      target[j] = 4.0 * n01(rng);  // often outside the box
      w[j] = 0.1 + std::abs(n01(rng));
    }
    const tspc::optimizer::Bounds box{lo, hi};
    const int shape = c % 3;
    bool outside = false;
    tspc::optimizer::Objective f = [&](const Vector& x) {
      if (!box.contains(x)) outside = true;
      const Vector d = x - target;
      if (shape == 0) return d.cwiseProduct(w).squaredNorm();
      if (shape == 1) return d.cwiseAbs().dot(w);
      return d.cwiseProduct(w).squaredNorm() + std::sin(3.0 * x.sum());
    };
    tspc::optimizer::Probe probe = [&](const Vector& x) {
      if (!box.contains(x)) outside = true;
      return tspc::optimizer::ProbeResult{};
    };
    tspc::optimizer::OptimizerConfig cfg;
    cfg.max_iterations = 25;
    cfg.central = c % 4 == 0;
    cfg.expand = c % 5 == 0;
    if (c % 7 == 0) {
      for (int s = 0; s < 6; ++s) cfg.fd_scales.push_back(0.5 * std::pow(0.7, s));
    }
    const Vector x0 = uniform_in(rng, lo.array() - 2.0, hi.array() + 2.0);
    const auto r = tspc::optimizer::minimize(f, x0, box, cfg, probe);
    ++o.cases;
    if (outside || !box.contains(r.x)) fail(o, "iterate left the box in case " + std::to_string(c));
    const double f0 = f(box.clamp(x0));
    if (r.objective > f0) fail(o, "objective rose in case " + std::to_string(c));
  }
  return o;
}

Outcome jacobian_halving(int cases, std::uint64_t seed) {
  Outcome o{"Jacobian step halving"};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  for (int c = 0; c < cases; ++c) {
    // f_i(x) = sin(a_i . x) + b_i (c_i . x)^2, analytic Jacobian available
    const int n = 1 + c % 4;
    const int m = 1 + (c / 4) % 3;
    Eigen::MatrixXd a(m, n), cm(m, n);
    Vector b(m);
    for (int i = 0; i < m; ++i) {
      b[i] = n01(rng);
      for (int j = 0; j < n; ++j) {
        a(i, j) = n01(rng);
        cm(i, j) = n01(rng);
      }
    }
    Vector x0(n);
    for (int j = 0; j < n; ++j) x0[j] = n01(rng);
    tspc::gaussian::VectorMap f = [&](const Vector& x) {
      Vector out(m);
      for (int i = 0; i < m; ++i) {
        const double u = cm.row(i).dot(x);
        out[i] = std::sin(a.row(i).dot(x)) + b[i] * u * u;
      }
      return out;
    };
    Eigen::MatrixXd exact(m, n);
    for (int i = 0; i < m; ++i)
      exact.row(i) = std::cos(a.row(i).dot(x0)) * a.row(i) + 2.0 * b[i] * cm.row(i).dot(x0) * cm.row(i);

    const double h = 1e-3;
    const auto j1 = tspc::gaussian::fd_jacobian(f, x0, Vector::Constant(n, h));
    const auto j2 = tspc::gaussian::fd_jacobian(f, x0, Vector::Constant(n, h / 2));
    const double e1 = (j1 - exact).norm();
    const double e2 = (j2 - exact).norm();
    const double er = (2.0 * j2 - j1 - exact).norm();
    ++o.cases;
    // forward differences are first order: halving roughly halves the error,
    // and one Richardson step removes most of what is left
    const bool first_order = e1 < 1e-9 || (e1 / e2 > 1.6 && e1 / e2 < 2.5);
    const bool richardson = er <= 0.1 * e1 + 1e-9;
    if (!first_order || !richardson) {
      std::ostringstream s;
      s << "case " << c << ": errors " << e1 << " " << e2 << " extrapolated " << er;
      fail(o, s.str());
    }
  }
  return o;
}

}  // namespace props
