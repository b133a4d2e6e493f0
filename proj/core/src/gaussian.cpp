#include "tspc/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "tspc/error.hpp"

namespace tspc::gaussian {
namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

std::string format_vector(const Vector& v) {
  std::ostringstream os;
  os << '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v[i];
  }
  os << ']';
  return os.str();
}

Eigen::LLT<Matrix> factor_regularized(const Matrix& cov, const Vector& regularizer,
                                      const char* where) {
  Matrix s = cov;
  s.diagonal() += regularizer;
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) {
    throw DegeneracyError(std::string(where) + ": covariance is not positive definite");
  }
  return llt;
}

void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

}  // namespace

void GaussianBelief::validate() const {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw InputError("GaussianBelief: mean/cov dimension mismatch");
  }
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InputError("GaussianBelief: covariance is not symmetric");
  }
  if ((cov.diagonal().array() < 0.0).any()) {
    throw InputError("GaussianBelief: negative variance on the diagonal");
  }
}

GaussianBelief GaussianBelief::diagonal(const Vector& mean, const Vector& stddev) {
  if (mean.size() != stddev.size()) {
    throw InputError("GaussianBelief::diagonal: size mismatch");
  }
  return {mean, Matrix(stddev.array().square().matrix().asDiagonal())};
}

void JointGaussian::validate() const {
  const auto ny = mean_y.size();
  const auto nz = mean_z.size();
  if (cov_yy.rows() != ny || cov_yy.cols() != ny || cov_zz.rows() != nz ||
      cov_zz.cols() != nz || cov_yz.rows() != ny || cov_yz.cols() != nz ||
      cov_zy.rows() != nz || cov_zy.cols() != ny) {
    throw InputError("JointGaussian: block dimension mismatch");
  }
  const double scale = std::max(1.0, cov_yz.cwiseAbs().maxCoeff());
  if ((cov_zy - cov_yz.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InputError("JointGaussian: cov_zy is not the transpose of cov_yz");
  }
}

Matrix JointGaussian::assembled() const {
  const auto ny = mean_y.size();
  const auto nz = mean_z.size();
  Matrix m(ny + nz, ny + nz);
  m.topLeftCorner(ny, ny) = cov_yy;
  m.topRightCorner(ny, nz) = cov_yz;
  m.bottomLeftCorner(nz, ny) = cov_zy;
  m.bottomRightCorner(nz, nz) = cov_zz;
  return m;
}

Vector default_regularizer(const Matrix& cov) {
  return (1e-9 * cov.diagonal().array()).max(1e-12).matrix();
}

double log_density(const Vector& x, const GaussianBelief& belief) {
  if (x.size() != belief.dim() || belief.cov.rows() != belief.dim()) {
    throw InputError("log_density: dimension mismatch");
  }
  if (!all_finite(x) || !all_finite(belief.mean)) {
    throw InputError("log_density: non-finite input");
  }
  const auto llt = factor_regularized(belief.cov, default_regularizer(belief.cov), "log_density");
  const Vector r = x - belief.mean;
  const Vector w = llt.matrixL().solve(r);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double n = static_cast<double>(x.size());
  return -0.5 * w.squaredNorm() - 0.5 * log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

double quadratic_form(const Vector& residual, const Matrix& cov, const Vector& regularizer) {
  if (residual.size() != cov.rows() || regularizer.size() != cov.rows()) {
    throw InputError("quadratic_form: dimension mismatch");
  }
  if (!all_finite(residual) || !regularizer.allFinite()) {
    throw InputError("quadratic_form: non-finite input");
  }
  if ((regularizer.array() < 0.0).any()) {
    throw InputError("quadratic_form: regularizer entries must be >= 0");
  }
  const auto llt = factor_regularized(cov, regularizer, "mahalanobis_sq");
  return llt.matrixL().solve(residual).squaredNorm();
}

double mahalanobis_sq(const Vector& x, const GaussianBelief& belief, const Vector& regularizer) {
  if (x.size() != belief.dim()) throw InputError("mahalanobis_sq: dimension mismatch");
  return quadratic_form(x - belief.mean, belief.cov, regularizer);
}

double mahalanobis_sq(const Vector& x, const GaussianBelief& belief) {
  return mahalanobis_sq(x, belief, default_regularizer(belief.cov));
}

GaussianBelief condition_on_innovation(const JointGaussian& joint, const Vector& innovation) {
  joint.validate();
  if (innovation.size() != joint.mean_z.size()) {
    throw InputError("condition: observation dimension mismatch");
  }
  if (!innovation.allFinite()) throw InputError("condition: non-finite observation");
  const auto llt = factor_regularized(joint.cov_zz, default_regularizer(joint.cov_zz), "condition");
  // gain = cov_yz * cov_zz^-1, computed as (cov_zz^-1 * cov_zy)^T
  const Matrix gain = llt.solve(joint.cov_zy).transpose();
  GaussianBelief out;
  out.mean = joint.mean_y + gain * innovation;
  out.cov = joint.cov_yy - gain * joint.cov_zy;
  symmetrize(out.cov);
  for (Eigen::Index i = 0; i < out.cov.rows(); ++i) {
    out.cov(i, i) = std::max(out.cov(i, i), 0.0);
  }
  return out;
}

GaussianBelief condition(const JointGaussian& joint, const Vector& z_observed) {
  if (z_observed.size() != joint.mean_z.size()) {
    throw InputError("condition: observation dimension mismatch");
  }
  return condition_on_innovation(joint, z_observed - joint.mean_z);
}

Matrix fd_jacobian(const VectorMap& f, const Vector& x0, const Vector& steps,
                   Differencing scheme) {
  if (steps.size() != x0.size()) throw InputError("fd_jacobian: steps/x0 size mismatch");
  if ((steps.array() <= 0.0).any() || !steps.allFinite()) {
    throw InputError("fd_jacobian: steps must be strictly positive");
  }
  auto eval = [&](const Vector& x) {
    Vector y = f(x);
    if (!y.allFinite()) {
      throw PropagationError("fd_jacobian: non-finite value at probe " + format_vector(x));
    }
    return y;
  };
  const Vector f0 = eval(x0);
  Matrix jac(f0.size(), x0.size());
  Vector probe = x0;
  for (Eigen::Index j = 0; j < x0.size(); ++j) {
    const double h = steps[j];
    probe[j] = x0[j] + h;
    const Vector fp = eval(probe);
    if (scheme == Differencing::central) {
      probe[j] = x0[j] - h;
      const Vector fm = eval(probe);
      jac.col(j) = (fp - fm) / (2.0 * h);
    } else {
      jac.col(j) = (fp - f0) / h;
    }
    probe[j] = x0[j];
  }
  return jac;
}

GaussianBelief linear_propagate(const GaussianBelief& belief, const Matrix& jacobian,
                                const VectorMap& mean_map) {
  if (jacobian.cols() != belief.dim() || belief.cov.rows() != belief.dim()) {
    throw InputError("linear_propagate: dimension mismatch");
  }
  GaussianBelief out;
  out.mean = mean_map(belief.mean);
  if (out.mean.size() != jacobian.rows()) {
    throw InputError("linear_propagate: mean map and Jacobian disagree on output size");
  }
  out.cov = jacobian * belief.cov * jacobian.transpose();
  symmetrize(out.cov);
  return out;
}

SigmaPointSet sigma_points(const GaussianBelief& belief, const SutScaling& scaling) {
  belief.validate();
  const auto n = belief.dim();
  const double nd = static_cast<double>(n);
  const double lambda = scaling.alpha * scaling.alpha * (nd + scaling.kappa) - nd;
  const double spread = nd + lambda;
  if (!(spread > 0.0)) throw InputError("sigma_points: alpha^2 (n + kappa) must be positive");

  Eigen::LLT<Matrix> llt;
  bool ok = false;
  for (double jitter : {0.0, 1e-14, 1e-12, 1e-10}) {
    Matrix s = spread * belief.cov;
    s.diagonal().array() += jitter;
    llt.compute(s);
    if (llt.info() == Eigen::Success) {
      ok = true;
      break;
    }
  }
  if (!ok) throw DegeneracyError("sigma_points: covariance factorization failed after jitter");
  const Matrix root = llt.matrixL();

  SigmaPointSet set;
  set.scaling = scaling;
  set.points.reserve(2 * n + 1);
  set.points.push_back(belief.mean);
  for (Eigen::Index i = 0; i < n; ++i) set.points.push_back(belief.mean + root.col(i));
  for (Eigen::Index i = 0; i < n; ++i) set.points.push_back(belief.mean - root.col(i));

  const double w0 = lambda / spread;
  const double wi = 0.5 / spread;
  set.mean_weights.assign(2 * n + 1, wi);
  set.cov_weights.assign(2 * n + 1, wi);
  set.mean_weights[0] = w0;
  set.cov_weights[0] = w0 + (1.0 - scaling.alpha * scaling.alpha + scaling.beta);
  return set;
}

SutResult sut_propagate(const GaussianBelief& belief, const VectorMap& f,
                        const SutScaling& scaling) {
  const SigmaPointSet set = sigma_points(belief, scaling);
  std::vector<Vector> ys;
  ys.reserve(set.points.size());
  for (const auto& p : set.points) {
    Vector y = f(p);
    if (!y.allFinite()) {
      throw PropagationError("sut_propagate: non-finite value at sigma point " + format_vector(p));
    }
    ys.push_back(std::move(y));
  }
  const auto ny = ys.front().size();
  // Accumulate offsets from the centre point; the centre weight is large and
  // negative for small alpha, so summing raw values loses precision.
  Vector offset = Vector::Zero(ny);
  for (std::size_t i = 1; i < ys.size(); ++i) offset += set.mean_weights[i] * (ys[i] - ys[0]);
  const Vector y_mean = ys[0] + offset;

  Matrix cov_y = Matrix::Zero(ny, ny);
  Matrix cross = Matrix::Zero(belief.dim(), ny);
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const Vector dy = (i == 0) ? Vector(-offset) : Vector(ys[i] - y_mean);
    const Vector dx = set.points[i] - belief.mean;
    cov_y += set.cov_weights[i] * dy * dy.transpose();
    cross += set.cov_weights[i] * dx * dy.transpose();
  }
  symmetrize(cov_y);
  return {GaussianBelief{y_mean, cov_y}, cross};
}

}  // namespace tspc::gaussian
