#pragma once

namespace tspc::gaussian {

/// Regularized lower incomplete gamma function P(a, x).
double regularized_gamma_p(double a, double x);

/// Regularized upper incomplete gamma function Q(a, x) = 1 - P(a, x).
double regularized_gamma_q(double a, double x);

/// P(X <= x) for X ~ chi-square with `dof` degrees of freedom.
double chi_square_cdf(int dof, double x);

/// Inverse of chi_square_cdf: returns q with P(X <= q) = alpha.
///
/// Newton iterations on the regularized incomplete gamma function, guarded by
/// a bracketing bisection. |cdf(q) - alpha| <= 1e-10 on return.
/// Throws InputError for dof < 1 or alpha outside (0, 1).
double chi_square_quantile(int dof, double alpha);

}  // namespace tspc::gaussian
