#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>

#include "fairsqp/rng.hpp"
#include "fairsqp/surrogate.hpp"

using fairsqp::SurrogateKind;
using fairsqp::SurrogateSpec;
using fairsqp::surrogate_eval;
using fairsqp::surrogate_eval_grad;

namespace {

SurrogateSpec make(SurrogateKind k, double alpha = 1.0, double mu = 1e-2) {
  SurrogateSpec s;
  s.kind = k;
  s.alpha = alpha;
  s.mu = mu;
  return s;
}

// min{max{0, t + 1/2}, 1}, the mu -> 0 limit of the smoothed step.
double piecewise_affine(double t) {
  return std::min(std::max(0.0, t + 0.5), 1.0);
}

double central_diff(const SurrogateSpec& s, double t, double h = 1e-6) {
  return (surrogate_eval(s, t + h) - surrogate_eval(s, t - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("sigmoid and linear evaluate to closed-form values") {
  CHECK(surrogate_eval(make(SurrogateKind::Sigmoid), 0.0) == 0.5);
  CHECK(surrogate_eval_grad(make(SurrogateKind::Sigmoid), 0.0) == 0.25);
  CHECK(surrogate_eval(make(SurrogateKind::Linear, 3.0), 7.0) == 21.0);
  CHECK(surrogate_eval_grad(make(SurrogateKind::Linear, 3.0), 7.0) == 3.0);
  CHECK(surrogate_eval(make(SurrogateKind::Heaviside), -1.0) == 0.0);
  CHECK(surrogate_eval(make(SurrogateKind::Heaviside), 0.0) == 0.0);
  CHECK(surrogate_eval(make(SurrogateKind::Heaviside), 0.3) == 1.0);
}

TEST_CASE("smoothed step matches high-precision reference values") {
  // Reference digits computed with 40-digit arithmetic on
  // phi(z) = 1 - smax(1 - smax(z + 1/2)), smax(a) = (a + sqrt(a^2 + mu)) / 2.
  const SurrogateSpec s50 = make(SurrogateKind::SmoothedStep, 50.0, 1e-2);
  CHECK_THAT(surrogate_eval(make(SurrogateKind::SmoothedStep, 1.0, 1e-2), 0.0),
             Catch::Matchers::WithinAbs(0.4999514610223002, 1e-14));
  CHECK_THAT(surrogate_eval(s50, 0.01),
             Catch::Matchers::WithinAbs(0.9512313455845862, 1e-13));
  CHECK_THAT(surrogate_eval_grad(s50, 0.01),
             Catch::Matchers::WithinAbs(24.316259921111279, 1e-10));
}

TEST_CASE("smoothed step stays inside its open codomain") {
  const SurrogateSpec s = make(SurrogateKind::SmoothedStep, 50.0, 1e-2);
  // Left tail limit is (1 - sqrt(1 + mu)) / 2, above -mu/2 and below 0.
  const double left = surrogate_eval(s, -1e6);
  CHECK_THAT(left, Catch::Matchers::WithinAbs(-0.0024937810560445135, 1e-12));
  CHECK(left > -s.mu / 2.0);

  fairsqp::SplitMix64 rng{20240814};
  for (int i = 0; i < 2000; ++i) {
    const double t = (rng.uniform() - 0.5) * 40.0;
    const double v = surrogate_eval(s, t);
    CHECK(v > -s.mu / 2.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("sigmoid and smoothed step are monotone in t") {
  fairsqp::SplitMix64 rng{11};
  for (SurrogateKind kind : {SurrogateKind::Sigmoid, SurrogateKind::SmoothedStep}) {
    const SurrogateSpec s = make(kind, 7.0);
    for (int i = 0; i < 2000; ++i) {
      double t1 = (rng.uniform() - 0.5) * 10.0;
      double t2 = (rng.uniform() - 0.5) * 10.0;
      if (t1 > t2) std::swap(t1, t2);
      CHECK(surrogate_eval(s, t1) <= surrogate_eval(s, t2));
    }
  }
}

TEST_CASE("phi - 1/2 is antisymmetric up to the tail defect") {
  fairsqp::SplitMix64 rng{12};
  for (int i = 0; i < 5000; ++i) {
    const double t = (rng.uniform() - 0.5) * 30.0;
    const SurrogateSpec sig = make(SurrogateKind::Sigmoid, 3.0);
    CHECK_THAT(surrogate_eval(sig, t) + surrogate_eval(sig, -t) - 1.0,
               Catch::Matchers::WithinAbs(0.0, 1e-12));
    for (double mu : {1e-4, 1e-2, 1e-1}) {
      const SurrogateSpec st = make(SurrogateKind::SmoothedStep, 1.0, mu);
      // The smoothing leaks below zero on the left tail but not above one on
      // the right, so the defect approaches mu/4 instead of vanishing.
      CHECK_THAT(surrogate_eval(st, t) + surrogate_eval(st, -t) - 1.0,
                 Catch::Matchers::WithinAbs(0.0, mu / 4.0 + 1e-12));
    }
  }
}

TEST_CASE("smoothed step converges to the piecewise-affine limit") {
  for (double mu : {1e-1, 1e-2, 1e-4, 1e-8}) {
    const SurrogateSpec s = make(SurrogateKind::SmoothedStep, 1.0, mu);
    for (double t = -3.0; t <= 3.0; t += 0.01) {
      CHECK(std::abs(surrogate_eval(s, t) - piecewise_affine(t)) <= std::sqrt(mu));
    }
  }
  // At mu this small the value is indistinguishable from the affine limit.
  const SurrogateSpec tiny = make(SurrogateKind::SmoothedStep, 1.0, 1e-12);
  CHECK_THAT(surrogate_eval(tiny, 0.2), Catch::Matchers::WithinAbs(0.7, 1e-6));
}

TEST_CASE("analytic gradients match central finite differences") {
  fairsqp::SplitMix64 rng{13};
  const SurrogateSpec specs[] = {
      make(SurrogateKind::Linear, 2.5),
      make(SurrogateKind::Sigmoid, 1.0),
      make(SurrogateKind::Sigmoid, 5.0),
      make(SurrogateKind::SmoothedStep, 1.0, 1e-2),
      make(SurrogateKind::SmoothedStep, 4.0, 1e-1),
  };
  for (const SurrogateSpec& s : specs) {
    for (int i = 0; i < 400; ++i) {
      const double t = (rng.uniform() - 0.5) * 20.0;
      const double g = surrogate_eval_grad(s, t);
      const double fd = central_diff(s, t);
      // Floor the denominator: deep in the tails both sides vanish and the
      // finite difference is pure rounding noise near 5e-11.
      const double scale = std::max({std::abs(g), std::abs(fd), 1e-3});
      CHECK(std::abs(g - fd) / scale <= 1e-5);
    }
  }
}

TEST_CASE("larger alpha never moves the value away from the step") {
  fairsqp::SplitMix64 rng{14};
  for (int i = 0; i < 3000; ++i) {
    double t = (rng.uniform() - 0.5) * 6.0;
    if (std::abs(t) < 1e-3) continue;
    double a1 = 0.5 + rng.uniform() * 30.0;
    double a2 = 0.5 + rng.uniform() * 30.0;
    if (a1 > a2) std::swap(a1, a2);
    const double step = t > 0.0 ? 1.0 : 0.0;

    const double sig1 = surrogate_eval(make(SurrogateKind::Sigmoid, a1), t);
    const double sig2 = surrogate_eval(make(SurrogateKind::Sigmoid, a2), t);
    CHECK(std::abs(sig2 - step) <= std::abs(sig1 - step) + 1e-15);

    // The smoothed step undershoots zero on the left tail, so on that side
    // sharpening can only be asserted down to the leak magnitude mu/2.
    const double mu = 1e-2;
    const double ss1 = surrogate_eval(make(SurrogateKind::SmoothedStep, a1, mu), t);
    const double ss2 = surrogate_eval(make(SurrogateKind::SmoothedStep, a2, mu), t);
    CHECK(std::abs(ss2 - step) <= std::max(std::abs(ss1 - step) + 1e-15, mu / 2.0));
  }
}

TEST_CASE("invalid specs and inputs are rejected") {
  SurrogateSpec s = make(SurrogateKind::SmoothedStep, 0.0);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.alpha = 50.0;
  s.mu = -1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.mu = 1e-2;
  CHECK_NOTHROW(s.validate());

  CHECK_THROWS_AS(surrogate_eval(s, std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(surrogate_eval(s, INFINITY), std::invalid_argument);
  CHECK_THROWS_AS(surrogate_eval_grad(make(SurrogateKind::Heaviside), 0.5),
                  std::domain_error);
  CHECK_THROWS_AS(fairsqp::surrogate_kind_from_string("tanh"), std::invalid_argument);
  CHECK(fairsqp::surrogate_kind_from_string("smoothed-step") ==
        SurrogateKind::SmoothedStep);
}
