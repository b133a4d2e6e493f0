#include <cmath>
#include <random>

#include <doctest.h>

#include "tspc/error.hpp"
#include "tspc/optimizer.hpp"

using namespace tspc::optimizer;
using doctest::Approx;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }
Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

Bounds box(double lo, double hi, Eigen::Index n = 1) {
  return {Vector::Constant(n, lo), Vector::Constant(n, hi)};
}

OptimizerConfig smooth_config(int iters = 200) {
  OptimizerConfig c;
  c.max_iterations = iters;
  c.grad_tolerance = 1e-10;
  c.step_tolerance = 1e-14;
  c.objective_tolerance = 1e-16;
  return c;
}

double rosenbrock(const Vector& x) {
  return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
}

}  // namespace

TEST_SUITE("minimize") {
  TEST_CASE("interior quadratic") {
    Objective f = [](const Vector& x) { return std::pow(x[0] - 3.0, 2); };
    const auto r = minimize(f, v1(0.0), box(0, 10), smooth_config());
    CHECK(r.x[0] == Approx(3.0).epsilon(1e-6));
  }

  TEST_CASE("active upper bound") {
    Objective f = [](const Vector& x) { return std::pow(x[0] - 3.0, 2); };
    const auto r = minimize(f, v1(0.0), box(0, 2), smooth_config());
    CHECK(r.x[0] == 2.0);
  }

  TEST_CASE("Rosenbrock") {
    auto c = smooth_config(500);
    c.central = true;
    c.fd_step = Vector::Constant(2, 1e-6);
    const auto r = minimize(rosenbrock, v2(-1.2, 1.0), box(-5, 5, 2), c);
    CHECK(std::abs(r.x[0] - 1.0) < 1e-4);
    CHECK(std::abs(r.x[1] - 1.0) < 1e-4);
    CHECK(r.trace.records.back().iteration <= 500);
  }

  TEST_CASE("start outside the box is clamped") {
    Objective f = [](const Vector& x) { return x.squaredNorm(); };
    const auto r = minimize(f, v2(9.0, -9.0), box(1, 2, 2), smooth_config());
    CHECK(r.x[0] == 1.0);
    CHECK(r.x[1] == 1.0);
  }

  TEST_CASE("non-finite start") {
    Objective f = [](const Vector&) { return NAN; };
    CHECK_THROWS_AS(minimize(f, v1(0.0), box(-1, 1), smooth_config()), tspc::Error);
  }

  TEST_CASE("never ends above the start and records at most max_iterations + 1") {
    Objective f = [](const Vector& x) { return std::abs(std::sin(5 * x[0])) + 0.1 * x[1] * x[1]; };
    auto c = smooth_config(15);
    const Vector x0 = v2(0.4, 1.0);
    const auto r = minimize(f, x0, box(-2, 2, 2), c);
    CHECK(r.objective <= f(x0));
    CHECK(r.trace.records.size() <= 16);
    for (std::size_t k = 1; k < r.trace.records.size(); ++k)
      CHECK(r.trace.records[k].objective <= r.trace.records[k - 1].objective);
  }

  TEST_CASE("non-finite region is avoided") {
    // undefined beyond x = 1.5; minimum of the defined part at 1.5
    Objective f = [](const Vector& x) { return x[0] > 1.5 ? NAN : -x[0]; };
    const auto r = minimize(f, v1(0.0), box(-3, 3), smooth_config(100));
    CHECK(std::isfinite(r.objective));
    CHECK(r.x[0] <= 1.5);
    CHECK(r.x[0] > 1.0);
  }

  TEST_CASE("probe flags selection flips") {
    Objective f = [](const Vector& x) { return std::pow(x[0] - 3.0, 2); };
    Probe probe = [](const Vector& x) { return ProbeResult{0.0, x[0] < 1.5 ? "a" : "b"}; };
    const auto r = minimize(f, v1(0.0), box(0, 10), smooth_config(), probe);
    int flips = 0;
    for (const auto& rec : r.trace.records) flips += rec.selection_flip;
    CHECK(flips == 1);
  }

  TEST_CASE("step expansion on a badly scaled slope") {
    Objective f = [](const Vector& x) { return 1e-3 * x[0]; };
    auto c = smooth_config(30);
    c.fd_step = v1(1e-4);
    const auto plain = minimize(f, v1(20.0), box(0.5, 25), c);
    c.expand = true;
    const auto wide = minimize(f, v1(20.0), box(0.5, 25), c);
    CHECK(plain.x[0] > 19.0);
    CHECK(wide.x[0] == 0.5);
  }

  TEST_CASE("invalid config") {
    OptimizerConfig c;
    c.max_iterations = 0;
    CHECK_THROWS_AS(c.validate(), tspc::InputError);
    c = {};
    c.grad_tolerance = 0.0;
    CHECK_THROWS_AS(c.validate(), tspc::InputError);
  }
}

TEST_SUITE("fd_gradient") {
  TEST_CASE("linear function") {
    const Vector c = (Vector(3) << 1.5, -2.0, 0.25).finished();
    Objective f = [&](const Vector& x) { return c.dot(x); };
    const Vector x = Vector::Zero(3);
    const Vector g = fd_gradient(f, x, f(x), Vector::Constant(3, 1e-6), box(-1, 1, 3));
    CHECK((g - c).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("probes stay inside at an upper bound") {
    Vector seen = Vector::Zero(1);
    Objective f = [&](const Vector& x) {
      seen[0] = std::max(seen[0], x[0]);
      return x[0] * x[0];
    };
    const Vector x = v1(1.0);
    const Vector g = fd_gradient(f, x, f(x), v1(1e-4), box(-1, 1));
    CHECK(seen[0] <= 1.0);
    CHECK(g[0] == Approx(2.0).epsilon(1e-3));
  }

  TEST_CASE("error is first order in the step") {
    Objective f = [](const Vector& x) { return std::exp(x[0]); };
    const Vector x = v1(0.0);
    const double e1 = std::abs(fd_gradient(f, x, 1.0, v1(1e-3), box(-1, 1))[0] - 1.0);
    const double e2 = std::abs(fd_gradient(f, x, 1.0, v1(5e-4), box(-1, 1))[0] - 1.0);
    CHECK(e1 == Approx(0.5e-3).epsilon(0.01));
    CHECK(e1 / e2 == Approx(2.0).epsilon(0.01));
  }

  TEST_CASE("non-finite probe retries the other side") {
    Objective f = [](const Vector& x) { return x[0] > 0.0 ? NAN : 3.0 * x[0]; };
    const Vector g = fd_gradient(f, v1(0.0), 0.0, v1(1e-3), box(-1, 1));
    CHECK(g[0] == Approx(3.0));
  }

  TEST_CASE("non-finite everywhere") {
    Objective f = [](const Vector& x) { return x[0] == 0.0 ? 0.0 : NAN; };
    CHECK_THROWS_AS(fd_gradient(f, v1(0.0), 0.0, v1(1e-3), box(-1, 1)), tspc::PropagationError);
  }

  TEST_CASE("central differences") {
    Objective f = [](const Vector& x) { return std::exp(x[0]); };
    const double g = fd_gradient_central(f, v1(0.0), 1.0, v1(1e-3), box(-1, 1))[0];
    CHECK(std::abs(g - 1.0) < 1e-6);
  }
}

TEST_SUITE("multi_start") {
  TEST_CASE("one restart equals one minimize") {
    Objective f = [](const Vector& x) { return std::pow(x[0] - 1.0, 2) + std::pow(x[1] + 0.5, 2); };
    Sampler s = [](std::mt19937_64& rng, std::size_t) {
      std::uniform_real_distribution<double> u(-2, 2);
      const double a = u(rng);
      return v2(a, u(rng));
    };
    auto c = smooth_config();
    c.seed = 5;
    const auto ms = multi_start(f, s, box(-3, 3, 2), c);
    auto rng = run_rng(5, 0);
    const auto single = minimize(f, s(rng, 0), box(-3, 3, 2), c);
    CHECK(ms.runs.size() == 1);
    CHECK(ms.best.x == single.x);
    CHECK(ms.best.objective == single.objective);
  }

  TEST_CASE("convex objective converges to one point from every start") {
    Objective f = [](const Vector& x) { return std::pow(x[0] - 1.0, 2) + 3.0 * std::pow(x[1] + 0.5, 2); };
    Sampler s = [](std::mt19937_64& rng, std::size_t) {
      std::uniform_real_distribution<double> u(-3, 3);
      const double a = u(rng);
      return v2(a, u(rng));
    };
    auto c = smooth_config();
    c.restarts = 8;
    const auto ms = multi_start(f, s, box(-3, 3, 2), c);
    for (const auto& r : ms.runs) {
      REQUIRE(r.ok);
      CHECK((r.result.x - v2(1.0, -0.5)).norm() < 1e-4);
    }
  }

  TEST_CASE("result does not depend on the thread count") {
    Objective f = [](const Vector& x) { return std::sin(3 * x[0]) + 0.1 * x[0] * x[0]; };
    Sampler s = [](std::mt19937_64& rng, std::size_t) {
      return v1(std::uniform_real_distribution<double>(-4, 4)(rng));
    };
    auto c = smooth_config(50);
    c.restarts = 6;
    c.seed = 99;
    const auto a = multi_start(f, s, box(-4, 4), c);
    c.jobs = 3;
    const auto b = multi_start(f, s, box(-4, 4), c);
    CHECK(a.best_index == b.best_index);
    for (std::size_t r = 0; r < a.runs.size(); ++r) CHECK(a.runs[r].result.x == b.runs[r].result.x);
  }

  TEST_CASE("feasible runs are preferred") {
    // two basins; run 0 settles in the lower one, which is infeasible
    Objective f = [](const Vector& x) { return std::min(std::pow(x[0] + 1.0, 2) - 0.5, std::pow(x[0] - 0.5, 2)); };
    Sampler s = [](std::mt19937_64&, std::size_t run) { return v1(run == 0 ? -0.9 : 0.6); };
    Probe p = [](const Vector& x) { return ProbeResult{x[0] < -0.2 ? 1.0 : -1.0, ""}; };
    auto c = smooth_config(50);
    c.restarts = 2;
    const auto ms = multi_start(f, s, box(-2, 2), c, p);
    REQUIRE(ms.runs[0].result.objective < ms.runs[1].result.objective);
    CHECK(ms.best_index == 1);
  }

  TEST_CASE("all runs failing") {
    Objective f = [](const Vector&) { return NAN; };
    Sampler s = [](std::mt19937_64&, std::size_t) { return v1(0.0); };
    auto c = smooth_config();
    c.restarts = 2;
    CHECK_THROWS_AS(multi_start(f, s, box(-1, 1), c), tspc::Error);
  }
}
