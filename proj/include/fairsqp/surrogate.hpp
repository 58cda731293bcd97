#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace fairsqp {

enum class SurrogateKind { Heaviside, Linear, Sigmoid, SmoothedStep };

// Step-function approximation phi evaluated as phi(alpha * t), where
// t = N(x, s, w) - tau is the distance of the network output to the
// decision threshold.
struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::SmoothedStep;
  double alpha = 50.0;  // argument scaling; sharpens the approximation
  double mu = 1e-2;     // smoothing strength (SmoothedStep only)
  double tau = 0.5;     // decision threshold on the logistic output

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw std::invalid_argument("surrogate: alpha must be a positive finite real");
    if (kind == SurrogateKind::SmoothedStep && (!(mu > 0.0) || !std::isfinite(mu)))
      throw std::invalid_argument("surrogate: mu must be a positive finite real");
  }
};

inline const char* to_string(SurrogateKind k) {
  switch (k) {
    case SurrogateKind::Heaviside: return "heaviside";
    case SurrogateKind::Linear: return "linear";
    case SurrogateKind::Sigmoid: return "sigmoid";
    case SurrogateKind::SmoothedStep: return "smoothed-step";
  }
  return "?";
}

inline SurrogateKind surrogate_kind_from_string(const std::string& s) {
  if (s == "heaviside") return SurrogateKind::Heaviside;
  if (s == "linear") return SurrogateKind::Linear;
  if (s == "sigmoid") return SurrogateKind::Sigmoid;
  if (s == "smoothed-step") return SurrogateKind::SmoothedStep;
  throw std::invalid_argument("surrogate: unknown kind '" + s + "'");
}

// 1/(1+exp(-z)) evaluated on the branch that cannot overflow.
inline double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace detail {

// Smoothed max{a, 0} = (a + sqrt(a^2 + mu)) / 2 and its derivative.
inline double smax(double a, double mu) {
  return 0.5 * (a + std::hypot(a, std::sqrt(mu)));
}
inline double smax_grad(double a, double mu) {
  return 0.5 * (1.0 + a / std::hypot(a, std::sqrt(mu)));
}

}  // namespace detail

// phi(alpha * t). The smoothed step nests two smoothed max operations:
// phi_mu(z) = 1 - smax(1 - smax(z + 1/2)). Its value lies in (-mu/2, 1);
// do not clamp it, the trailing slopes are what the SQP solver follows.
inline double surrogate_eval(const SurrogateSpec& spec, double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("surrogate: non-finite input");
  const double z = spec.alpha * t;
  switch (spec.kind) {
    case SurrogateKind::Heaviside:
      return z > 0.0 ? 1.0 : 0.0;
    case SurrogateKind::Linear:
      return z;
    case SurrogateKind::Sigmoid:
      return stable_sigmoid(z);
    case SurrogateKind::SmoothedStep: {
      const double inner = detail::smax(z + 0.5, spec.mu);
      return 1.0 - detail::smax(1.0 - inner, spec.mu);
    }
  }
  throw std::invalid_argument("surrogate: unknown kind");
}

// d/dt phi(alpha * t) = alpha * phi'(alpha * t).
inline double surrogate_eval_grad(const SurrogateSpec& spec, double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("surrogate: non-finite input");
  const double z = spec.alpha * t;
  switch (spec.kind) {
    case SurrogateKind::Heaviside:
      throw std::domain_error("surrogate: heaviside has no derivative");
    case SurrogateKind::Linear:
      return spec.alpha;
    case SurrogateKind::Sigmoid: {
      const double p = stable_sigmoid(z);
      return spec.alpha * p * (1.0 - p);
    }
    case SurrogateKind::SmoothedStep: {
      const double inner = detail::smax(z + 0.5, spec.mu);
      return spec.alpha * detail::smax_grad(1.0 - inner, spec.mu) *
             detail::smax_grad(z + 0.5, spec.mu);
    }
  }
  throw std::invalid_argument("surrogate: unknown kind");
}

}  // namespace fairsqp
