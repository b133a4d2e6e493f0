#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace tspc::gaussian {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorMap = std::function<Vector(const Vector&)>;

/// Mean and covariance of a multivariate normal.
struct GaussianBelief {
  Vector mean;
  Matrix cov;

  GaussianBelief() = default;
  GaussianBelief(Vector m, Matrix c) : mean(std::move(m)), cov(std::move(c)) {}

  Eigen::Index dim() const { return mean.size(); }

  /// Throws InputError unless dimensions agree, cov is symmetric (1e-12
  /// relative) and its diagonal is non-negative.
  void validate() const;

  static GaussianBelief diagonal(const Vector& mean, const Vector& stddev);
};

/// Joint normal over (y, z), stored in blocks.
struct JointGaussian {
  Vector mean_y;
  Vector mean_z;
  Matrix cov_yy;
  Matrix cov_yz;
  Matrix cov_zy;
  Matrix cov_zz;

  void validate() const;
  Matrix assembled() const;
};

struct SutScaling {
  double alpha = 1e-3;
  double beta = 2.0;
  double kappa = 0.0;
};

/// Sigma points of the scaled unscented transform, 2n+1 of them.
struct SigmaPointSet {
  std::vector<Vector> points;
  std::vector<double> mean_weights;
  std::vector<double> cov_weights;
  SutScaling scaling;
};

/// Default diagonal regularizer: 1e-9 x diag(cov), floored at 1e-12.
Vector default_regularizer(const Matrix& cov);

/// -1/2 (x-mu)' S^-1 (x-mu) - 1/2 ln|S| - n/2 ln(2 pi), with S = cov + A and A
/// the default regularizer. Throws DegeneracyError if S is not positive definite.
double log_density(const Vector& x, const GaussianBelief& belief);

/// (x-mu)' (cov + diag(regularizer))^-1 (x-mu).
double mahalanobis_sq(const Vector& x, const GaussianBelief& belief,
                      const Vector& regularizer);
double mahalanobis_sq(const Vector& x, const GaussianBelief& belief);

/// Same quadratic form on a precomputed residual (e.g. an angle-wrapped
/// innovation).
double quadratic_form(const Vector& residual, const Matrix& cov,
                      const Vector& regularizer);

/// Conditional distribution of y given z = z_observed. Diagonal of the result
/// is clamped at zero.
GaussianBelief condition(const JointGaussian& joint, const Vector& z_observed);

/// Same, with an explicitly supplied innovation (z_observed - mean_z).
GaussianBelief condition_on_innovation(const JointGaussian& joint,
                                       const Vector& innovation);

enum class Differencing { forward, central };

/// Finite-difference Jacobian of f at x0, one step per input component.
Matrix fd_jacobian(const VectorMap& f, const Vector& x0, const Vector& steps,
                   Differencing scheme = Differencing::forward);

/// First-order propagation: mean' = mean_map(mean), cov' = J cov J'.
GaussianBelief linear_propagate(const GaussianBelief& belief, const Matrix& jacobian,
                                const VectorMap& mean_map);

SigmaPointSet sigma_points(const GaussianBelief& belief, const SutScaling& scaling = {});

struct SutResult {
  GaussianBelief output;
  Matrix cross_cov;  // Cov(x, f(x)), n_x by n_y
};

SutResult sut_propagate(const GaussianBelief& belief, const VectorMap& f,
                        const SutScaling& scaling = {});

}  // namespace tspc::gaussian
