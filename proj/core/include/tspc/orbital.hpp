#pragma once

#include <array>

#include <Eigen/Dense>

namespace tspc::orbital {

/// Earth constants used by the debris dynamics.
struct Constants {
  double mu = 398600.4418;      // km^3/s^2
  double j2 = 1.08262668e-3;
  double r_eq = 6378.137;       // km
};

inline constexpr double kSecondsPerDay = 86400.0;

double deg2rad(double deg);
double rad2deg(double rad);
/// Wraps to [0, 2 pi).
double wrap_two_pi(double angle);
/// Wraps to (-pi, pi].
double wrap_pi(double angle);

/// Keplerian elements at an epoch. km, rad, days past MJD2000.
struct OrbitalElements {
  double a = 0.0;
  double e = 0.0;
  double i = 0.0;
  double raan = 0.0;
  double argp = 0.0;
  double mean_anom = 0.0;
  double epoch = 0.0;

  /// Throws ValidationError when a <= r_eq, e outside [0,1) or i outside [0,pi].
  void validate(const Constants& c = {}) const;
};

struct CartesianState {
  Eigen::Vector3d position;  // km
  Eigen::Vector3d velocity;  // km/s
};

struct SecularRates {
  double raan_dot = 0.0;     // rad/s
  double argp_dot = 0.0;     // rad/s
  double mean_motion = 0.0;  // rad/s
};

/// J2 secular drift of the node and perigee plus the Keplerian mean motion.
SecularRates secular_rates(const OrbitalElements& el, const Constants& c = {});

/// Advances raan, argp and mean anomaly linearly to epoch `t` (days).
OrbitalElements advance_elements(const OrbitalElements& el, double t, const Constants& c = {});

/// Derivative [v; a] of a Cartesian state under two-body plus J2 gravity.
/// Throws SingularityError at r = 0.
Eigen::Matrix<double, 6, 1> j2_ode(const CartesianState& state, const Constants& c = {});

/// Classic RK4 over j2_ode. A trailing partial step covers any remainder of
/// dt_total. Negative dt_total integrates backwards.
CartesianState rk4_propagate(const CartesianState& state, double dt_total, double step,
                             const Constants& c = {});

/// Specific energy including the J2 potential term.
double specific_energy(const CartesianState& state, const Constants& c = {});

CartesianState to_cartesian(const OrbitalElements& el, const Constants& c = {});
/// Osculating elements; epoch is left at zero.
OrbitalElements from_cartesian(const CartesianState& state, const Constants& c = {});

/// Near-circular impulsive rendezvous cost, km/s.
struct TransferCost {
  double dv_a = 0.0;
  double dv_e = 0.0;
  double dv_i = 0.0;
  double dv_raan = 0.0;
  double dv_total = 0.0;
};

/// Cost to rendezvous `to` from `from` after `tof` days, both node angles
/// drifted to the arrival epoch from their own epochs. The node difference is
/// taken the short way round, in [0, pi]. Total is the root-sum-square of the
/// in-plane and inclination terms plus the node term.
TransferCost transfer_cost(const OrbitalElements& from, const OrbitalElements& to, double tof,
                           const Constants& c = {});

/// Same formula for elements already expressed at a common epoch.
TransferCost transfer_cost_at_common_epoch(const OrbitalElements& from,
                                           const OrbitalElements& to, const Constants& c = {});

}  // namespace tspc::orbital

namespace tspc::orbital {

/// Node drift over `days` from the secular rate and from RK4 integration of
/// the J2 equations. The numerical drift compares the node averaged over one
/// orbital period at the start and at the end of the arc, which removes the
/// short-period J2 oscillation of the osculating node. Secular theory is in
/// mean elements, so the rate is also evaluated at the period-averaged a, e
/// and i of the integrated orbit; `difference_deg` uses that rate.
struct RaanDriftComparison {
  double secular_deg = 0.0;       // rate at the given (osculating) elements
  double secular_mean_deg = 0.0;  // rate at the averaged elements
  double numerical_deg = 0.0;
  double difference_deg = 0.0;    // numerical - secular_mean
};

RaanDriftComparison compare_raan_drift(const OrbitalElements& el, double days, double step_s = 10.0,
                                       const Constants& c = {});

}  // namespace tspc::orbital
