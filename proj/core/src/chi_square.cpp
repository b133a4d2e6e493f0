#include "tspc/chi_square.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "tspc/error.hpp"

namespace tspc::gaussian {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxTerms = 10000;

// Series expansion, converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxTerms; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q (modified Lentz), for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0 || !std::isfinite(a) || std::isnan(x)) {
    throw InputError("regularized_gamma_p: need a > 0 and x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0 || !std::isfinite(a) || std::isnan(x)) {
    throw InputError("regularized_gamma_q: need a > 0 and x >= 0");
  }
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi_square_cdf(int dof, double x) {
  if (dof < 1) throw InputError("chi_square_cdf: dof must be >= 1");
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

double chi_square_quantile(int dof, double alpha) {
  if (dof < 1) throw InputError("chi_square_quantile: dof must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InputError("chi_square_quantile: alpha must lie in (0, 1)");
  }
  const double k = 0.5 * dof;
  const double log_norm = -std::lgamma(k) - k * std::log(2.0);

  // Bracket: cdf(lo) < alpha <= cdf(hi).
  double lo = 0.0;
  double hi = std::max(1.0, 2.0 * dof);
  while (chi_square_cdf(dof, hi) < alpha) hi *= 2.0;

  // Wilson-Hilferty starting point.
  const double z = std::sqrt(2.0) * [&] {
    // inverse erf via a few Newton steps on erf
    double t = 2.0 * alpha - 1.0;
    double w = 0.0;
    for (int i = 0; i < 60; ++i) {
      const double err = std::erf(w) - t;
      w -= err / (2.0 / std::sqrt(std::numbers::pi) * std::exp(-w * w));
      if (std::abs(err) < 1e-15) break;
    }
    return w;
  }();
  const double c = 2.0 / (9.0 * dof);
  double q = dof * std::pow(std::max(1.0 - c + z * std::sqrt(c), 1e-3), 3);
  if (!(q > lo && q < hi)) q = 0.5 * (lo + hi);

  for (int iter = 0; iter < 200; ++iter) {
    const double f = chi_square_cdf(dof, q) - alpha;
    if (std::abs(f) <= 1e-14) break;
    if (f < 0.0) {
      lo = q;
    } else {
      hi = q;
    }
    const double log_pdf = log_norm + (k - 1.0) * std::log(q) - 0.5 * q;
    const double pdf = std::exp(log_pdf);
    double next = (pdf > 0.0 && std::isfinite(pdf)) ? q - f / pdf : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - q) <= 4.0 * kEps * q) {
      q = next;
      break;
    }
    q = next;
  }
  return q;
}

}  // namespace tspc::gaussian
