#include <cmath>
#include <random>

#include <doctest.h>

#include "tspc/chi_square.hpp"
#include "tspc/error.hpp"
#include "tspc/gaussian.hpp"

using namespace tspc::gaussian;
using doctest::Approx;

namespace {

const double kTwoPi = 2.0 * M_PI;

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (double x : v) out[j++] = x;
  return out;
}

Matrix diag(std::initializer_list<double> v) { return vec(v).asDiagonal(); }

JointGaussian scalar_joint(double yy, double yz, double zz, double my = 0.0, double mz = 0.0) {
  JointGaussian j;
  j.mean_y = vec({my});
  j.mean_z = vec({mz});
  j.cov_yy = Matrix::Constant(1, 1, yy);
  j.cov_yz = Matrix::Constant(1, 1, yz);
  j.cov_zy = Matrix::Constant(1, 1, yz);
  j.cov_zz = Matrix::Constant(1, 1, zz);
  return j;
}

// plain formula, no regularizer
double naive_logpdf(const Vector& x, const Vector& mu, const Matrix& cov) {
  const Vector d = x - mu;
  return -0.5 * d.dot(cov.inverse() * d) - 0.5 * std::log(cov.determinant()) -
         0.5 * static_cast<double>(x.size()) * std::log(kTwoPi);
}

}  // namespace

TEST_SUITE("log_density") {
  TEST_CASE("at the mean of a 2d unit normal") {
    GaussianBelief b(vec({0.3, -1.0}), Matrix::Identity(2, 2));
    CHECK(log_density(b.mean, b) == Approx(-std::log(kTwoPi)).epsilon(1e-9));
  }

  TEST_CASE("one sigma from a unit normal") {
    GaussianBelief b(vec({0.0}), diag({1.0}));
    CHECK(log_density(vec({1.0}), b) == Approx(-0.5 - 0.5 * std::log(kTwoPi)).epsilon(1e-9));
  }

  TEST_CASE("matches the direct formula") {
    GaussianBelief b(vec({0.0, 0.0}), diag({4.0, 9.0}));
    const Vector x = vec({2.0, 3.0});
    // the default regularizer inflates the variances by 1e-9 relative
    CHECK(std::abs(log_density(x, b) - naive_logpdf(x, b.mean, b.cov)) < 1e-8);
    const double hand = -0.5 * (1.0 + 1.0) - 0.5 * std::log(36.0) - std::log(kTwoPi);
    CHECK(std::abs(log_density(x, b) - hand) < 1e-8);
  }

  TEST_CASE("indefinite covariance is a degeneracy") {
    // the regularizer rescues a singular matrix but not an indefinite one
    GaussianBelief b(vec({0.0, 0.0}), (Matrix(2, 2) << 1.0, 2.0, 2.0, 1.0).finished());
    CHECK_THROWS_AS(log_density(vec({0.0, 0.0}), b), tspc::DegeneracyError);
  }

  TEST_CASE("integrates to one by Monte Carlo") {
    std::mt19937_64 rng(11);
    const GaussianBelief beliefs[] = {
        GaussianBelief(vec({0.5, -0.2}), diag({1.0, 0.25})),
        GaussianBelief(vec({0.0, 1.0}), (Matrix(2, 2) << 2.0, 0.9, 0.9, 1.0).finished()),
    };
    for (const auto& b : beliefs) {
      // uniform samples over a +-7 sigma box
      const double hx = 7.0 * std::sqrt(b.cov(0, 0));
      const double hy = 7.0 * std::sqrt(b.cov(1, 1));
      std::uniform_real_distribution<double> ux(b.mean[0] - hx, b.mean[0] + hx);
      std::uniform_real_distribution<double> uy(b.mean[1] - hy, b.mean[1] + hy);
      const int n = 400000;
      double sum = 0.0;
      for (int s = 0; s < n; ++s) sum += std::exp(log_density(vec({ux(rng), uy(rng)}), b));
      const double integral = sum / n * (2 * hx) * (2 * hy);
      CHECK(integral == Approx(1.0).epsilon(0.02));
    }
  }
}

TEST_SUITE("mahalanobis_sq") {
  TEST_CASE("zero at the mean") {
    GaussianBelief b(vec({1.0, 2.0}), diag({3.0, 5.0}));
    CHECK(mahalanobis_sq(b.mean, b, Vector::Zero(2)) == 0.0);
  }

  TEST_CASE("squared norm under identity") {
    GaussianBelief b(vec({1.0, 1.0}), Matrix::Identity(2, 2));
    CHECK(mahalanobis_sq(vec({4.0, 5.0}), b, Vector::Zero(2)) == Approx(25.0).epsilon(1e-12));
  }

  TEST_CASE("regularizer adds to the covariance") {
    GaussianBelief b(vec({0.0}), diag({1.0}));
    CHECK(mahalanobis_sq(vec({1.0}), b, vec({1.0})) == Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("non-finite input") {
    GaussianBelief b(vec({0.0}), diag({1.0}));
    CHECK_THROWS_AS(mahalanobis_sq(vec({NAN}), b, vec({0.0})), tspc::InputError);
  }
}

TEST_SUITE("condition") {
  TEST_CASE("independent blocks leave y unchanged") {
    auto j = scalar_joint(4.0, 0.0, 1.0, 2.0, 0.0);
    const auto c = condition(j, vec({3.0}));
    CHECK(c.mean[0] == Approx(2.0));
    CHECK(c.cov(0, 0) == Approx(4.0));
  }

  TEST_CASE("observation at its mean only shrinks the covariance") {
    auto j = scalar_joint(4.0, 1.0, 1.0, 2.0, 5.0);
    const auto c = condition(j, vec({5.0}));
    CHECK(c.mean[0] == Approx(2.0));
    CHECK(c.cov(0, 0) == Approx(3.0).epsilon(1e-8));
  }

  TEST_CASE("scalar Schur complement by hand") {
    auto j = scalar_joint(4.0, 1.0, 1.0);
    const auto c = condition(j, vec({2.0}));
    CHECK(c.mean[0] == Approx(2.0).epsilon(1e-8));
    CHECK(c.cov(0, 0) == Approx(3.0).epsilon(1e-8));
  }

  TEST_CASE("indefinite observation block") {
    JointGaussian j;
    j.mean_y = vec({0.0});
    j.mean_z = vec({0.0, 0.0});
    j.cov_yy = diag({1.0});
    j.cov_yz = Matrix::Zero(1, 2);
    j.cov_zy = Matrix::Zero(2, 1);
    j.cov_zz = (Matrix(2, 2) << 1.0, 2.0, 2.0, 1.0).finished();
    CHECK_THROWS_AS(condition(j, vec({1.0, 0.0})), tspc::DegeneracyError);
  }

  TEST_CASE("conditional variance never exceeds the prior") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    for (int t = 0; t < 1000; ++t) {
      Matrix l = Matrix::Zero(3, 3);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c <= r; ++c) l(r, c) = n01(rng);
      const Matrix s = l * l.transpose() + 0.01 * Matrix::Identity(3, 3);
      JointGaussian j;
      j.mean_y = vec({n01(rng)});
      j.mean_z = vec({n01(rng), n01(rng)});
      j.cov_yy = s.block(0, 0, 1, 1);
      j.cov_yz = s.block(0, 1, 1, 2);
      j.cov_zy = s.block(1, 0, 2, 1);
      j.cov_zz = s.block(1, 1, 2, 2);
      const auto c = condition(j, vec({n01(rng), n01(rng)}));
      REQUIRE(c.cov(0, 0) <= j.cov_yy(0, 0) + 1e-12);
      REQUIRE(c.cov(0, 0) >= 0.0);
    }
  }
}

TEST_SUITE("chi_square_quantile") {
  TEST_CASE("dof 2 has a closed form") {
    CHECK(std::abs(chi_square_quantile(2, 0.98) - (-2.0 * std::log(0.02))) < 1e-9);
    CHECK(chi_square_quantile(2, 0.98) == Approx(7.8240).epsilon(1e-5));
  }

  TEST_CASE("dof 1 median is the squared normal quartile") {
    const double z = 0.6744897501960817;
    CHECK(chi_square_quantile(1, 0.5) == Approx(z * z).epsilon(1e-9));
  }

  TEST_CASE("tends to zero as alpha vanishes") {
    CHECK(chi_square_quantile(2, 1e-12) < 1e-10);
  }

  TEST_CASE("alpha outside (0,1)") {
    CHECK_THROWS_AS(chi_square_quantile(2, 0.0), tspc::InputError);
    CHECK_THROWS_AS(chi_square_quantile(2, 1.0), tspc::InputError);
    CHECK_THROWS_AS(chi_square_quantile(0, 0.5), tspc::InputError);
  }

  TEST_CASE("cdf round trip") {
    for (int dof : {1, 2, 3, 5, 10, 30})
      for (double a : {0.01, 0.1, 0.5, 0.9, 0.98, 0.999}) {
        CAPTURE(dof);
        CAPTURE(a);
        CHECK(std::abs(chi_square_cdf(dof, chi_square_quantile(dof, a)) - a) <= 1e-10);
      }
  }

  TEST_CASE("increasing in alpha and in dof") {
    for (int dof = 1; dof <= 12; ++dof) {
      double prev = 0.0;
      for (int k = 1; k < 100; ++k) {
        const double q = chi_square_quantile(dof, k / 100.0);
        REQUIRE(q > prev);
        prev = q;
        REQUIRE(chi_square_quantile(dof + 1, k / 100.0) > q);
      }
    }
  }

  TEST_CASE("dof 3 against the series for P(3/2, x)") {
    // P(3/2, x) = erf(sqrt x) - 2 sqrt(x/pi) e^-x
    for (double x : {0.1, 1.0, 3.0, 7.0, 12.0}) {
      const double p = std::erf(std::sqrt(x)) - 2.0 * std::sqrt(x / M_PI) * std::exp(-x);
      CHECK(regularized_gamma_p(1.5, x) == Approx(p).epsilon(1e-12));
      CHECK(regularized_gamma_q(1.5, x) == Approx(1.0 - p).epsilon(1e-10));
    }
  }
}

TEST_SUITE("fd_jacobian") {
  TEST_CASE("identity map") {
    VectorMap f = [](const Vector& x) { return x; };
    const Matrix j = fd_jacobian(f, vec({1.0, -2.0, 3.0}), Vector::Constant(3, 1e-6));
    CHECK((j - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("quadratic terms") {
    VectorMap f = [](const Vector& x) { return vec({x[0] * x[0], x[0] * x[1]}); };
    const Matrix j = fd_jacobian(f, vec({1.0, 1.0}), Vector::Constant(2, 1e-6));
    const Matrix want = (Matrix(2, 2) << 2.0, 0.0, 1.0, 1.0).finished();
    CHECK((j - want).cwiseAbs().maxCoeff() < 1e-4);
  }

  TEST_CASE("constant map") {
    VectorMap f = [](const Vector&) { return vec({4.0, 2.0}); };
    CHECK(fd_jacobian(f, vec({0.0, 0.0, 0.0}), Vector::Constant(3, 1e-3)).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("non-finite value") {
    VectorMap f = [](const Vector& x) { return vec({1.0 / (x[0] - 1e-3)}); };
    CHECK_THROWS_AS(fd_jacobian(f, vec({0.0}), vec({1e-3})), tspc::PropagationError);
  }

  TEST_CASE("non-positive step") {
    VectorMap f = [](const Vector& x) { return x; };
    CHECK_THROWS_AS(fd_jacobian(f, vec({0.0}), vec({0.0})), tspc::InputError);
  }

  TEST_CASE("central differences on a cubic") {
    VectorMap f = [](const Vector& x) { return vec({x[0] * x[0] * x[0]}); };
    const Matrix j = fd_jacobian(f, vec({2.0}), vec({1e-4}), Differencing::central);
    CHECK(j(0, 0) == Approx(12.0).epsilon(1e-7));
  }
}

TEST_SUITE("linear_propagate") {
  VectorMap same = [](const Vector& x) { return x; };

  TEST_CASE("identity keeps the covariance") {
    GaussianBelief b(vec({1.0, 2.0}), (Matrix(2, 2) << 2.0, 0.3, 0.3, 1.0).finished());
    const auto p = linear_propagate(b, Matrix::Identity(2, 2), same);
    CHECK((p.cov - b.cov).norm() < 1e-15);
  }

  TEST_CASE("scaling by two") {
    GaussianBelief b(vec({1.0}), diag({1.0}));
    VectorMap twice = [](const Vector& x) { return Vector(2.0 * x); };
    const auto p = linear_propagate(b, 2.0 * Matrix::Identity(1, 1), twice);
    CHECK(p.cov(0, 0) == Approx(4.0));
    CHECK(p.mean[0] == Approx(2.0));
  }

  TEST_CASE("sum of independent variances") {
    GaussianBelief b(vec({0.0, 0.0}), diag({1.0, 1.0}));
    VectorMap sum = [](const Vector& x) { return vec({x.sum()}); };
    const auto p = linear_propagate(b, (Matrix(1, 2) << 1.0, 1.0).finished(), sum);
    CHECK(p.cov(0, 0) == Approx(2.0));
  }
}

TEST_SUITE("sut_propagate") {
  TEST_CASE("exact for a linear map") {
    const Matrix a = (Matrix(2, 3) << 1.0, -2.0, 0.5, 0.3, 0.0, 4.0).finished();
    GaussianBelief b(vec({1.0, 2.0, -1.0}), (Matrix(3, 3) << 2.0, 0.4, 0.1, 0.4, 1.0, -0.2, 0.1, -0.2, 0.5).finished());
    VectorMap f = [&](const Vector& x) { return Vector(a * x); };
    const auto r = sut_propagate(b, f);
    CHECK((r.output.mean - a * b.mean).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((r.output.cov - a * b.cov * a.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((r.cross_cov - b.cov * a.transpose()).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("constant map has no spread") {
    GaussianBelief b(vec({1.0, 2.0}), diag({1.0, 3.0}));
    VectorMap f = [](const Vector&) { return vec({7.0}); };
    const auto r = sut_propagate(b, f);
    CHECK(r.output.mean[0] == Approx(7.0));
    CHECK(std::abs(r.output.cov(0, 0)) < 1e-9);
  }

  TEST_CASE("second moment of a standard normal") {
    GaussianBelief b(vec({0.0}), diag({1.0}));
    VectorMap f = [](const Vector& x) { return vec({x[0] * x[0]}); };
    CHECK(std::abs(sut_propagate(b, f).output.mean[0] - 1.0) < 1e-9);
  }

  TEST_CASE("sigma point weights") {
    GaussianBelief b(vec({0.0, 0.0, 0.0}), Matrix::Identity(3, 3));
    const auto s = sigma_points(b);
    CHECK(s.points.size() == 7);
    double w = 0.0;
    for (double x : s.mean_weights) w += x;
    CHECK(std::abs(w - 1.0) < 1e-12);
  }

  TEST_CASE("agrees with linearization for nearly linear maps") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    for (int t = 0; t < 200; ++t) {
      GaussianBelief b(vec({n01(rng), n01(rng)}), diag({0.5 + std::abs(n01(rng)), 0.5 + std::abs(n01(rng))}));
      const double c = 1e-4 * n01(rng);  // Hessian norm well under 1e-3
      VectorMap f = [c](const Vector& x) { return vec({x[0] + 2 * x[1] + c * x[0] * x[0], x[1] - c * x[0] * x[1]}); };
      const Matrix j = fd_jacobian(f, b.mean, Vector::Constant(2, 1e-6), Differencing::central);
      const auto lin = linear_propagate(b, j, f);
      const auto sut = sut_propagate(b, f).output;
      REQUIRE((lin.cov - sut.cov).norm() <= 0.05 * sut.cov.norm());
    }
  }
}
