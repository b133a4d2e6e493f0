#include "tspc/debris.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "tspc/error.hpp"

namespace tspc::debris {
namespace {

using engine::Vector;
using gaussian::Matrix;
using orbital::deg2rad;
using orbital::OrbitalElements;

OrbitalElements state_elements(const Vector& x, double epoch) {
  OrbitalElements el;
  el.a = x[0];
  el.e = x[1];
  el.i = x[2];
  el.raan = x[3];
  el.epoch = epoch;
  return el;
}

class DebrisCursor final : public engine::SequenceCursor {
 public:
  DebrisCursor(const DebrisCatalog& catalog, const MissionConfig& config)
      : catalog_(catalog), config_(config), current_(catalog.at(config.start_debris)),
        arrival_(config.start_epoch) {}

  engine::NodeModel model(std::size_t, const engine::NodeDesign& node) override {
    tof_ = node.tof ? *node.tof : config_.fixed_tof_days.value_or(20.0);
    departure_ = arrival_ + config_.dwell_days;
    sc_departure_ = orbital::advance_elements(current_, departure_);
    sc_arrival_ = orbital::advance_elements(current_, departure_ + tof_);

    Vector mean(4);
    mean << sc_departure_.a + node.mu[0], sc_departure_.e + node.mu[1], sc_departure_.i + deg2rad(node.mu[2]),
        sc_departure_.raan + deg2rad(node.mu[3]);
    Vector sd(4);
    sd << node.sigma[0], node.sigma[1], deg2rad(node.sigma[2]), deg2rad(node.sigma[3]);

    engine::NodeModel m;
    m.prior = gaussian::GaussianBelief::diagonal(mean, sd);
    const double seconds = tof_ * orbital::kSecondsPerDay;
    const double epoch = departure_;
    m.state_map = [seconds, epoch](const Vector& x) {
      Vector out = x;
      out[3] += orbital::secular_rates(state_elements(x, epoch)).raan_dot * seconds;
      return out;
    };
    m.observation_map = [](const Vector& x) { return Vector::Constant(1, x[3]); };
    Matrix h = Matrix::Zero(1, 4);
    h(0, 3) = 1.0;
    m.observation_jacobian = h;
    const OrbitalElements sc = sc_arrival_;
    m.cost_map = [sc](const Vector& x) {
      return orbital::transfer_cost_at_common_epoch(sc, state_elements(x, sc.epoch)).dv_total;
    };
    m.fd_steps = covariance_fd_steps();
    m.condition_cost = true;
    m.circular = {true};
    m.kappa = node.kappa;
    return m;
  }

  Vector observe(int id) const override {
    return Vector::Constant(1, orbital::advance_elements(catalog_.at(id), departure_ + tof_).raan);
  }

  double cost_to(int id) const override {
    return orbital::transfer_cost(sc_departure_, catalog_.at(id), tof_).dv_total;
  }

  Step advance(int id, const Vector&) override {
    current_ = catalog_.at(id);
    arrival_ = departure_ + tof_;
    return {tof_, arrival_};
  }

 private:
  const DebrisCatalog& catalog_;
  const MissionConfig& config_;
  OrbitalElements current_;
  double arrival_;
  double departure_ = 0.0;
  double tof_ = 0.0;
  OrbitalElements sc_departure_;
  OrbitalElements sc_arrival_;
};

class DebrisProblem final : public engine::SequenceProblem {
 public:
  DebrisProblem(DebrisCatalog catalog, MissionConfig config)
      : catalog_(std::move(catalog)), config_(std::move(config)) {
    config_.validate();
    if (!catalog_.contains(config_.start_debris)) {
      throw InputError("start debris " + std::to_string(config_.start_debris) + " is not in the catalog");
    }
    if (catalog_.size() < config_.n_transfers + 1) {
      throw InputError("catalog has too few debris for " + std::to_string(config_.n_transfers) + " transfers");
    }
    layout_ = config_.layout();
  }

  const engine::DesignLayout& layout() const override { return layout_; }
  std::vector<int> candidates() const override { return catalog_.ids(); }
  std::vector<int> origin() const override { return {config_.start_debris}; }
  std::unique_ptr<engine::SequenceCursor> start() const override {
    return std::make_unique<DebrisCursor>(catalog_, config_);
  }
  int observation_dim() const override { return 1; }

 private:
  DebrisCatalog catalog_;
  MissionConfig config_;
  engine::DesignLayout layout_;
};

engine::NodeDesign make_node(double tof, double ma, double me, double mi, double mo, double sa, double se,
                             double si, double so, double kappa) {
  engine::NodeDesign n;
  n.tof = tof;
  n.mu = Vector(4);
  n.mu << ma, me, mi, mo;
  n.sigma = Vector(4);
  n.sigma << sa, se, si, so;
  n.rho = Vector(0);
  n.kappa = kappa;
  return n;
}

double* field(engine::NodeDesign& n, const std::string& name) {
  static const char* names[] = {"mu_a", "mu_e", "mu_i", "mu_raan"};
  static const char* snames[] = {"sigma_a", "sigma_e", "sigma_i", "sigma_raan"};
  if (name == "tof") return &*n.tof;
  if (name == "kappa") return &n.kappa;
  for (int j = 0; j < 4; ++j) {
    if (name == names[j]) return &n.mu[j];
    if (name == snames[j]) return &n.sigma[j];
  }
  return nullptr;
}

double parse_number(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size() || !std::isfinite(v)) {
    throw ValidationError("mission config: '" + key + "' expects a number, got '" + value + "'");
  }
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Summary summarize(const std::vector<double>& v) {
  Summary s;
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / n;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.max = *std::max_element(v.begin(), v.end());
  s.min = *std::min_element(v.begin(), v.end());
  return s;
}

}  // namespace

DebrisCatalog DebrisCatalog::from_records(const std::vector<orbital::EphemerisRecord>& rows) {
  DebrisCatalog c;
  for (const auto& r : rows) c.insert(r.id, orbital::elements_from_record(r));
  return c;
}

DebrisCatalog DebrisCatalog::from_csv_file(const std::string& path) {
  return from_records(orbital::read_ephemeris_csv_file(path));
}

void DebrisCatalog::insert(int id, const OrbitalElements& el) {
  el.validate();
  if (!records_.emplace(id, el).second) throw ValidationError("duplicate debris id " + std::to_string(id));
}

const OrbitalElements& DebrisCatalog::at(int id) const {
  const auto it = records_.find(id);
  if (it == records_.end()) throw InputError("debris id " + std::to_string(id) + " is not in the catalog");
  return it->second;
}

std::vector<int> DebrisCatalog::ids() const {
  std::vector<int> out;
  for (const auto& [id, el] : records_) out.push_back(id);
  return out;
}

MissionConfig::MissionConfig()
    : lower(make_node(0.5, -150, -1e-3, -1.5, -8, 5, 1e-4, 0.1, 0.1, 1e-3)),
      upper(make_node(25, 150, 1e-3, 1.5, 8, 50, 1e-3, 1.0, 8, 300)),
      initial(make_node(20, 0, 0, 0, 0, 30, 5e-4, 0.5, 5, 50)) {}

void MissionConfig::validate() const {
  if (n_transfers < 1) throw ValidationError("mission config: n_transfers must be >= 1");
  if (!(dwell_days >= 0)) throw ValidationError("mission config: dwell_days must be >= 0");
  if (fixed_tof_days && !(*fixed_tof_days >= 0)) throw ValidationError("mission config: fixed_tof_days must be >= 0");
  if (!(alpha > 0 && alpha < 1)) throw ValidationError("mission config: alpha must be in (0, 1)");
  if (dof && *dof < 1) throw ValidationError("mission config: dof must be >= 1");
  if ((lower.sigma.array() <= 0).any()) throw ValidationError("mission config: sigma lower bounds must be > 0");
  layout();
}

engine::DesignLayout MissionConfig::layout() const {
  engine::DesignLayout l;
  l.nodes = n_transfers;
  l.has_tof = !fixed_tof_days.has_value();
  l.n_mu = 4;
  l.n_rho = 0;
  l.mu_names = {"a", "e", "i", "raan"};
  l.lower = lower;
  l.upper = upper;
  l.initial = initial;
  if (!l.has_tof) {
    l.lower.tof.reset();
    l.upper.tof.reset();
    l.initial.tof.reset();
  }
  try {
    l.validate();
  } catch (const InputError& e) {
    throw ValidationError(std::string("mission config: ") + e.what());
  }
  const Vector lo = l.lower_bounds();
  const Vector hi = l.upper_bounds();
  const Vector x0 = l.initial_vector();
  for (Eigen::Index j = 0; j < x0.size(); ++j) {
    if (x0[j] < lo[j] || x0[j] > hi[j]) throw ValidationError("mission config: initial value outside its bounds");
  }
  return l;
}

MissionConfig parse_mission_config(std::istream& in, MissionConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("mission config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const double v = parse_number(key, value);
    if (key == "start_epoch") {
      base.start_epoch = v;
    } else if (key == "start_debris") {
      base.start_debris = static_cast<int>(v);
    } else if (key == "n_transfers") {
      if (v < 1 || v != std::floor(v)) throw ValidationError("mission config: n_transfers must be a positive integer");
      base.n_transfers = static_cast<std::size_t>(v);
    } else if (key == "dwell_days") {
      base.dwell_days = v;
    } else if (key == "fixed_tof_days") {
      base.fixed_tof_days = v;
    } else if (key == "alpha") {
      base.alpha = v;
    } else if (key == "dof") {
      base.dof = static_cast<int>(v);
    } else if (key.rfind("bounds.", 0) == 0) {
      const std::string rest = key.substr(7);
      const auto dot = rest.rfind('.');
      const std::string name = dot == std::string::npos ? "" : rest.substr(0, dot);
      const std::string which = dot == std::string::npos ? "" : rest.substr(dot + 1);
      engine::NodeDesign* target = which == "lower" ? &base.lower
                                   : which == "upper" ? &base.upper
                                   : which == "initial" ? &base.initial
                                                        : nullptr;
      double* slot = target ? field(*target, name) : nullptr;
      if (slot == nullptr) throw ValidationError("mission config: unknown key '" + key + "'");
      *slot = v;
    } else {
      throw ValidationError("mission config: unknown key '" + key + "'");
    }
  }
  base.validate();
  return base;
}

MissionConfig read_mission_config_file(const std::string& path, MissionConfig base) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open mission config '" + path + "'");
  return parse_mission_config(in, std::move(base));
}

engine::Vector covariance_fd_steps() {
  Vector s(4);
  s << 1e-2, 1e-4, deg2rad(1e-3), deg2rad(1e-3);
  return s;
}

std::shared_ptr<const engine::SequenceProblem> make_debris_problem(const DebrisCatalog& catalog,
                                                                   const MissionConfig& config) {
  return std::make_shared<DebrisProblem>(catalog, config);
}

engine::BoundProblem build_debris_problem(const DebrisCatalog& catalog, const MissionConfig& config) {
  engine::BoundProblem b;
  b.problem = make_debris_problem(catalog, config);
  b.options.mode = engine::ObjectiveMode::chi_square;
  b.options.alpha = config.alpha;
  b.options.dof = config.dof;
  return b;
}

engine::Vector default_fd_steps(const MissionConfig& config) {
  const auto layout = config.layout();
  engine::NodeDesign n = make_node(1e-3, 1e-1, 1e-6, 1e-3, 1e-3, 1e-1, 1e-6, 1e-3, 1e-3, 1e-2);
  if (!layout.has_tof) n.tof.reset();
  const Vector one = engine::flatten_node(n, layout);
  Vector out(static_cast<Eigen::Index>(layout.size()));
  for (std::size_t k = 0; k < layout.nodes; ++k) {
    out.segment(static_cast<Eigen::Index>(k) * one.size(), one.size()) = one;
  }
  return out;
}

FixedTofResult solve_fixed_tof(const DebrisCatalog& catalog, MissionConfig config,
                               const optimizer::OptimizerConfig& opt, std::uint64_t seed) {
  if (!config.fixed_tof_days) config.fixed_tof_days = 20.0;
  const engine::BoundProblem bp = build_debris_problem(catalog, config);
  const auto& layout = bp.layout();
  optimizer::Bounds bounds{layout.lower_bounds(), layout.upper_bounds()};

  optimizer::OptimizerConfig cfg = opt;
  cfg.seed = seed;
  if (cfg.fd_step.size() == 0 && cfg.fd_scales.empty()) cfg.fd_step = default_fd_steps(config);

  const Vector x_init = layout.initial_vector();
  const optimizer::Sampler sampler = [&](std::mt19937_64& rng, std::size_t run) {
    if (run == 0) return x_init;
    Vector x = x_init;
    const auto stride = static_cast<Eigen::Index>(layout.per_node());
    const Eigen::Index off = layout.has_tof ? 1 : 0;
    for (std::size_t k = 0; k < layout.nodes; ++k) {
      for (Eigen::Index j = 0; j < 4; ++j) {
        const Eigen::Index idx = static_cast<Eigen::Index>(k) * stride + off + j;
        std::uniform_real_distribution<double> u(bounds.lower[idx], bounds.upper[idx]);
        x[idx] = u(rng);
      }
    }
    return x;
  };
  const optimizer::Objective f = [&bp](const Vector& x) { return bp.objective(x); };
  const optimizer::Probe probe = [&bp](const Vector& x) {
    const auto ev = bp.evaluate(x);
    optimizer::ProbeResult r;
    r.max_penalty = ev.max_penalty();
    for (int id : ev.route) r.signature += std::to_string(id) + ",";
    return r;
  };

  FixedTofResult out;
  out.search = optimizer::multi_start(f, sampler, bounds, cfg, probe);
  out.x = out.search.best.x;
  out.evaluation = bp.evaluate(out.x);
  return out;
}

std::vector<LegCost> route_legs(const std::vector<int>& route, const std::vector<double>& tofs,
                                const DebrisCatalog& catalog, const MissionConfig& config) {
  if (route.size() < 2) throw InputError("route needs at least two ids");
  if (tofs.size() != route.size() - 1) {
    throw InputError("route with " + std::to_string(route.size()) + " ids needs " +
                     std::to_string(route.size() - 1) + " ToFs, got " + std::to_string(tofs.size()));
  }
  std::vector<LegCost> legs;
  double arrival = config.start_epoch;
  for (std::size_t k = 0; k + 1 < route.size(); ++k) {
    LegCost leg;
    leg.from = route[k];
    leg.to = route[k + 1];
    leg.departure = arrival + config.dwell_days;
    leg.tof = tofs[k];
    const OrbitalElements sc = orbital::advance_elements(catalog.at(leg.from), leg.departure);
    leg.dv = orbital::transfer_cost(sc, catalog.at(leg.to), leg.tof).dv_total;
    arrival = leg.departure + leg.tof;
    legs.push_back(leg);
  }
  return legs;
}

RefineResult refine_tof(const std::vector<int>& route, const DebrisCatalog& catalog, const MissionConfig& config,
                        const optimizer::OptimizerConfig& opt, const std::optional<std::vector<double>>& initial_tofs) {
  if (route.size() < 2) throw InputError("refine_tof: route needs at least two ids");
  const std::size_t n = route.size() - 1;
  std::vector<double> start =
      initial_tofs ? *initial_tofs : std::vector<double>(n, config.fixed_tof_days.value_or(20.0));
  if (start.size() != n) throw InputError("refine_tof: ToF count does not match the route");

  const double lo = *config.lower.tof;
  const double hi = *config.upper.tof;
  optimizer::Bounds bounds{Vector::Constant(static_cast<Eigen::Index>(n), lo),
                           Vector::Constant(static_cast<Eigen::Index>(n), hi)};
  auto total = [&](const Vector& t) {
    const std::vector<double> tofs(t.data(), t.data() + t.size());
    double s = 0.0;
    for (const auto& leg : route_legs(route, tofs, catalog, config)) s += leg.dv;
    return s;
  };
  const Vector x0 = Eigen::Map<const Vector>(start.data(), static_cast<Eigen::Index>(n));

  optimizer::OptimizerConfig cfg = opt;
  if (cfg.fd_step.size() != static_cast<Eigen::Index>(n) && cfg.fd_scales.empty()) {
    cfg.fd_step = Vector::Constant(static_cast<Eigen::Index>(n), 1e-4);
  }
  cfg.restarts = 1;
  // dv in km/s against ToF in days: the gradient is tiny next to the box
  cfg.expand = true;

  RefineResult out;
  out.route = route;
  out.initial_total_dv = total(bounds.clamp(x0));
  const auto res = optimizer::minimize(total, x0, bounds, cfg);
  out.tofs.assign(res.x.data(), res.x.data() + res.x.size());
  for (const auto& leg : route_legs(route, out.tofs, catalog, config)) {
    out.dvs.push_back(leg.dv);
    out.total_dv += leg.dv;
  }
  out.trace = res.trace;
  return out;
}

CatalogStatistics catalog_statistics(const DebrisCatalog& catalog) {
  if (catalog.empty()) throw InputError("catalog_statistics: empty catalog");
  std::vector<double> a, e, i, o;
  for (int id : catalog.ids()) {
    const auto& el = catalog.at(id);
    a.push_back(el.a);
    e.push_back(el.e);
    i.push_back(orbital::rad2deg(el.i));
    o.push_back(orbital::rad2deg(el.raan));
  }
  CatalogStatistics s;
  s.count = catalog.size();
  s.a_km = summarize(a);
  s.e = summarize(e);
  s.i_deg = summarize(i);
  s.raan_deg = summarize(o);
  return s;
}

}  // namespace tspc::debris
