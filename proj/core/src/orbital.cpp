#include "tspc/orbital.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tspc/error.hpp"

namespace tspc::orbital {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Derivative = Eigen::Matrix<double, 6, 1>;

CartesianState step_rk4(const CartesianState& s, double h, const Constants& c) {
  auto add = [](const CartesianState& base, const Derivative& d, double scale) {
    return CartesianState{base.position + scale * d.head<3>(),
                          base.velocity + scale * d.tail<3>()};
  };
  const Derivative k1 = j2_ode(s, c);
  const Derivative k2 = j2_ode(add(s, k1, 0.5 * h), c);
  const Derivative k3 = j2_ode(add(s, k2, 0.5 * h), c);
  const Derivative k4 = j2_ode(add(s, k3, h), c);
  const Derivative incr = (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
  return add(s, incr, h);
}

double solve_kepler(double mean_anom, double e) {
  double ecc_anom = e < 0.8 ? mean_anom : std::numbers::pi;
  for (int i = 0; i < 50; ++i) {
    const double f = ecc_anom - e * std::sin(ecc_anom) - mean_anom;
    const double step = f / (1.0 - e * std::cos(ecc_anom));
    ecc_anom -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return ecc_anom;
}

}  // namespace

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

double wrap_two_pi(double angle) {
  double w = std::fmod(angle, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w -= kTwoPi;
  return w;
}

double wrap_pi(double angle) {
  double w = wrap_two_pi(angle);
  if (w > std::numbers::pi) w -= kTwoPi;
  return w;
}

void OrbitalElements::validate(const Constants& c) const {
  for (double v : {a, e, i, raan, argp, mean_anom, epoch}) {
    if (!std::isfinite(v)) throw ValidationError("orbital elements contain a non-finite value");
  }
  if (!(a > c.r_eq)) throw ValidationError("semi-major axis must exceed the equatorial radius");
  if (!(e >= 0.0 && e < 1.0)) throw ValidationError("eccentricity must lie in [0, 1)");
  if (!(i >= 0.0 && i <= std::numbers::pi)) {
    throw ValidationError("inclination must lie in [0, pi]");
  }
}

SecularRates secular_rates(const OrbitalElements& el, const Constants& c) {
  SecularRates r;
  r.mean_motion = std::sqrt(c.mu / (el.a * el.a * el.a));
  const double p = el.a * (1.0 - el.e * el.e);
  const double k = c.j2 * (c.r_eq / p) * (c.r_eq / p) * r.mean_motion;
  const double ci = std::cos(el.i);
  r.raan_dot = -1.5 * k * ci;
  r.argp_dot = 0.75 * k * (5.0 * ci * ci - 1.0);
  return r;
}

OrbitalElements advance_elements(const OrbitalElements& el, double t, const Constants& c) {
  const SecularRates r = secular_rates(el, c);
  const double dt = (t - el.epoch) * kSecondsPerDay;
  OrbitalElements out = el;
  out.raan = wrap_two_pi(el.raan + r.raan_dot * dt);
  out.argp = wrap_two_pi(el.argp + r.argp_dot * dt);
  out.mean_anom = wrap_two_pi(el.mean_anom + r.mean_motion * dt);
  out.epoch = t;
  return out;
}

Derivative j2_ode(const CartesianState& state, const Constants& c) {
  const Eigen::Vector3d& p = state.position;
  const double r2 = p.squaredNorm();
  if (!(r2 > 0.0)) throw SingularityError("j2_ode: zero radius");
  const double r = std::sqrt(r2);
  const double k = -c.mu / (r2 * r);
  const double f = 1.5 * c.j2 * (c.r_eq * c.r_eq / r2);
  const double zz = 5.0 * p.z() * p.z() / r2;
  Derivative d;
  d.head<3>() = state.velocity;
  d(3) = k * p.x() * (1.0 + f * (1.0 - zz));
  d(4) = k * p.y() * (1.0 + f * (1.0 - zz));
  d(5) = k * p.z() * (1.0 + f * (3.0 - zz));
  return d;
}

CartesianState rk4_propagate(const CartesianState& state, double dt_total, double step,
                             const Constants& c) {
  if (!(step > 0.0)) throw InputError("rk4_propagate: step must be positive");
  if (!std::isfinite(dt_total)) throw InputError("rk4_propagate: non-finite duration");
  const double dir = dt_total < 0.0 ? -1.0 : 1.0;
  double remaining = std::abs(dt_total);
  CartesianState s = state;
  const auto full_steps = static_cast<long long>(std::floor(remaining / step));
  for (long long n = 0; n < full_steps; ++n) s = step_rk4(s, dir * step, c);
  remaining -= static_cast<double>(full_steps) * step;
  if (remaining > 1e-12 * std::max(1.0, step)) s = step_rk4(s, dir * remaining, c);
  return s;
}

double specific_energy(const CartesianState& state, const Constants& c) {
  const double r = state.position.norm();
  const double sin_lat2 = state.position.z() * state.position.z() / (r * r);
  const double potential =
      -c.mu / r + 0.5 * c.mu * c.j2 * c.r_eq * c.r_eq / (r * r * r) * (3.0 * sin_lat2 - 1.0);
  return 0.5 * state.velocity.squaredNorm() + potential;
}

CartesianState to_cartesian(const OrbitalElements& el, const Constants& c) {
  const double ecc_anom = solve_kepler(wrap_two_pi(el.mean_anom), el.e);
  const double cos_e = std::cos(ecc_anom);
  const double sin_e = std::sin(ecc_anom);
  const double root = std::sqrt(1.0 - el.e * el.e);
  const double r = el.a * (1.0 - el.e * cos_e);
  const Eigen::Vector3d pos_pf(el.a * (cos_e - el.e), el.a * root * sin_e, 0.0);
  const double vfac = std::sqrt(c.mu * el.a) / r;
  const Eigen::Vector3d vel_pf(-vfac * sin_e, vfac * root * cos_e, 0.0);
  const Eigen::Matrix3d rot = (Eigen::AngleAxisd(el.raan, Eigen::Vector3d::UnitZ()) *
                               Eigen::AngleAxisd(el.i, Eigen::Vector3d::UnitX()) *
                               Eigen::AngleAxisd(el.argp, Eigen::Vector3d::UnitZ()))
                                  .toRotationMatrix();
  return {rot * pos_pf, rot * vel_pf};
}

OrbitalElements from_cartesian(const CartesianState& state, const Constants& c) {
  const Eigen::Vector3d& r = state.position;
  const Eigen::Vector3d& v = state.velocity;
  const double rn = r.norm();
  const Eigen::Vector3d h = r.cross(v);
  const Eigen::Vector3d node = Eigen::Vector3d::UnitZ().cross(h);
  const Eigen::Vector3d ecc = v.cross(h) / c.mu - r / rn;

  OrbitalElements el;
  el.a = 1.0 / (2.0 / rn - v.squaredNorm() / c.mu);
  el.e = ecc.norm();
  el.i = std::acos(std::clamp(h.z() / h.norm(), -1.0, 1.0));
  el.raan = wrap_two_pi(std::atan2(h.x(), -h.y()));

  const double nn = node.norm();
  double argp = 0.0;
  double true_anom = 0.0;
  if (el.e > 1e-12 && nn > 1e-12) {
    argp = std::acos(std::clamp(node.dot(ecc) / (nn * el.e), -1.0, 1.0));
    if (ecc.z() < 0.0) argp = kTwoPi - argp;
    true_anom = std::acos(std::clamp(ecc.dot(r) / (el.e * rn), -1.0, 1.0));
    if (r.dot(v) < 0.0) true_anom = kTwoPi - true_anom;
  } else if (nn > 1e-12) {
    // circular: measure from the node (argument of latitude)
    true_anom = std::acos(std::clamp(node.dot(r) / (nn * rn), -1.0, 1.0));
    if (r.z() < 0.0) true_anom = kTwoPi - true_anom;
  }
  el.argp = wrap_two_pi(argp);
  const double ecc_anom =
      2.0 * std::atan2(std::sqrt(1.0 - el.e) * std::sin(0.5 * true_anom),
                       std::sqrt(1.0 + el.e) * std::cos(0.5 * true_anom));
  el.mean_anom = wrap_two_pi(ecc_anom - el.e * std::sin(ecc_anom));
  return el;
}

TransferCost transfer_cost_at_common_epoch(const OrbitalElements& from, const OrbitalElements& to,
                                           const Constants& c) {
  const double v0 = std::sqrt(c.mu / from.a);
  const double d_raan = std::abs(wrap_pi(to.raan - from.raan));
  TransferCost tc;
  tc.dv_a = 0.5 * std::abs(from.a - to.a) / from.a * v0;
  tc.dv_e = 0.5 * std::abs(from.e - to.e) * v0;
  tc.dv_i = 2.0 * v0 * std::sin(0.5 * std::abs(from.i - to.i));
  tc.dv_raan = std::abs(std::sin(from.i)) * d_raan * v0;
  tc.dv_total = std::sqrt(tc.dv_a * tc.dv_a + tc.dv_e * tc.dv_e + tc.dv_i * tc.dv_i) + tc.dv_raan;
  return tc;
}

TransferCost transfer_cost(const OrbitalElements& from, const OrbitalElements& to, double tof,
                           const Constants& c) {
  const double arrival = from.epoch + tof;
  OrbitalElements f = from;
  OrbitalElements t = to;
  f.raan = from.raan + secular_rates(from, c).raan_dot * (arrival - from.epoch) * kSecondsPerDay;
  t.raan = to.raan + secular_rates(to, c).raan_dot * (arrival - to.epoch) * kSecondsPerDay;
  return transfer_cost_at_common_epoch(f, t, c);
}

}  // namespace tspc::orbital

namespace tspc::orbital {
namespace {

struct PeriodMean {
  double a = 0.0;
  double e = 0.0;
  double i = 0.0;
  double raan = 0.0;
};

/// Osculating elements averaged over one period starting at `state`; the node
/// is unwrapped around `reference`.
PeriodMean period_mean(CartesianState state, double period, double step, double reference, const Constants& c) {
  const int n = std::max(1, static_cast<int>(std::ceil(period / step)));
  const double h = period / n;
  PeriodMean m;
  for (int k = 0; k < n; ++k) {
    const OrbitalElements el = from_cartesian(state, c);
    m.a += el.a;
    m.e += el.e;
    m.i += el.i;
    m.raan += reference + wrap_pi(el.raan - reference);
    state = rk4_propagate(state, h, h, c);
  }
  m.a /= n;
  m.e /= n;
  m.i /= n;
  m.raan /= n;
  return m;
}

}  // namespace

RaanDriftComparison compare_raan_drift(const OrbitalElements& el, double days, double step_s, const Constants& c) {
  el.validate(c);
  if (!(step_s > 0)) throw InputError("compare_raan_drift: step must be > 0");
  RaanDriftComparison out;
  const double seconds = days * kSecondsPerDay;
  out.secular_deg = rad2deg(secular_rates(el, c).raan_dot * seconds);
  out.secular_mean_deg = out.secular_deg;
  if (days == 0.0) return out;

  const double period = 2.0 * std::numbers::pi * std::sqrt(el.a * el.a * el.a / c.mu);
  const CartesianState s0 = to_cartesian(el, c);
  const CartesianState s1 = rk4_propagate(s0, seconds, step_s, c);
  const PeriodMean m0 = period_mean(s0, period, step_s, el.raan, c);
  const double expected_end = el.raan + secular_rates(el, c).raan_dot * seconds;
  const PeriodMean m1 = period_mean(s1, period, step_s, expected_end, c);

  OrbitalElements mean = el;
  mean.a = 0.5 * (m0.a + m1.a);
  mean.e = 0.5 * (m0.e + m1.e);
  mean.i = 0.5 * (m0.i + m1.i);
  out.secular_mean_deg = rad2deg(secular_rates(mean, c).raan_dot * seconds);
  out.numerical_deg = rad2deg(m1.raan - m0.raan);
  out.difference_deg = out.numerical_deg - out.secular_mean_deg;
  return out;
}

}  // namespace tspc::orbital
