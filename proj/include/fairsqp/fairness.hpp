#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairsqp/dataset.hpp"
#include "fairsqp/errors.hpp"
#include "fairsqp/model.hpp"
#include "fairsqp/surrogate.hpp"

namespace fairsqp {

enum class ConstraintKind { DisparateImpact, EqualImpact, DemographicParityBand, CovarianceBand };

inline const char* to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::DisparateImpact: return "disparate-impact";
    case ConstraintKind::EqualImpact: return "equal-impact";
    case ConstraintKind::DemographicParityBand: return "demographic-parity-band";
    case ConstraintKind::CovarianceBand: return "covariance-band";
  }
  return "?";
}

inline ConstraintKind constraint_kind_from_string(const std::string& s) {
  if (s == "disparate-impact" || s == "di") return ConstraintKind::DisparateImpact;
  if (s == "equal-impact" || s == "ei") return ConstraintKind::EqualImpact;
  if (s == "demographic-parity-band" || s == "dp") return ConstraintKind::DemographicParityBand;
  if (s == "covariance-band" || s == "cov") return ConstraintKind::CovarianceBand;
  throw std::invalid_argument("unknown constraint kind: " + s);
}

// One fairness requirement. threshold is the ratio floor delta for
// DisparateImpact/EqualImpact and the band half-width epsilon for the two
// band kinds.
struct ConstraintEntry {
  ConstraintKind kind = ConstraintKind::DisparateImpact;
  double threshold = 0.8;
  SurrogateSpec surrogate;

  // Scalar constraint functions this entry defines (DI/EI bring a pair,
  // bands bring one) and inequality rows it contributes (always two).
  int functions() const {
    return kind == ConstraintKind::DisparateImpact || kind == ConstraintKind::EqualImpact ? 2 : 1;
  }
  int rows() const { return 2; }

  void validate() const {
    surrogate.validate();
    if (kind == ConstraintKind::DisparateImpact || kind == ConstraintKind::EqualImpact) {
      if (!(threshold >= 0.0 && threshold <= 1.0))
        throw std::invalid_argument("ratio threshold must lie in [0,1], got " +
                                    std::to_string(threshold));
    } else if (!(threshold > 0.0)) {
      throw std::invalid_argument("band half-width must be positive, got " +
                                  std::to_string(threshold));
    }
  }
};

struct ConstraintSet {
  std::vector<ConstraintEntry> entries;

  int total_rows() const {
    int n = 0;
    for (const auto& e : entries) n += e.rows();
    return n;
  }

  void validate() const {
    for (const auto& e : entries) e.validate();
    if (total_rows() > 4)
      throw std::invalid_argument("solver handles at most 4 constraint rows, set has " +
                                  std::to_string(total_rows()));
  }
};

// Hard (indicator) and surrogate fairness summary at one parameter vector.
// Serialized as a flat JSON object with exactly these field names.
struct FairnessReport {
  double c_dp_surrogate = 0, c_dp_hard = 0;
  double c_di_surrogate = 0, c_di_hard = 0;
  double c_ei_surrogate = 0, c_ei_hard = 0;
  double delta_hat_surrogate = 0, delta_hat_hard = 0;
  double delta_hat_ei_surrogate = 0, delta_hat_ei_hard = 0;
  double c_cov = 0;
  double p0_hard = 0, p1_hard = 0;
};

namespace detail {

inline void require_groups(const Dataset& data) {
  if (data.group0.empty() || data.group1.empty())
    throw InvalidDatasetError("dataset \"" + data.name + "\" needs both sensitive groups");
}

// Group rates of phi(output - tau) over the given index lists.
inline std::pair<double, double> rates_over(const Eigen::VectorXd& outputs,
                                            const std::vector<Index>& g0,
                                            const std::vector<Index>& g1,
                                            const SurrogateSpec& surrogate) {
  double p0 = 0.0, p1 = 0.0;
  for (Index i : g0) p0 += surrogate_eval(surrogate, outputs[i] - surrogate.tau);
  for (Index i : g1) p1 += surrogate_eval(surrogate, outputs[i] - surrogate.tau);
  return {p0 / double(g0.size()), p1 / double(g1.size())};
}

// Ratio-fairness score from a pair of positive rates. Rates below zero
// (possible with the smoothed step's small undershoot) count as zero.
inline double delta_hat_from_rates(double p0, double p1) {
  p0 = std::max(0.0, p0);
  p1 = std::max(0.0, p1);
  if (p0 == 0.0 && p1 == 0.0) return 1.0;
  if (p0 == 0.0 || p1 == 0.0) return 0.0;
  return std::min(p0 / p1, p1 / p0);
}

inline std::vector<Index> positive_subset(const Dataset& data, const std::vector<Index>& group) {
  std::vector<Index> out;
  for (Index i : group)
    if (data.labels[i] == 1) out.push_back(i);
  return out;
}

}  // namespace detail

inline std::pair<double, double> soft_group_rates(const Dataset& data, const MlpSpec& spec,
                                                  const Eigen::VectorXd& params,
                                                  const SurrogateSpec& surrogate) {
  detail::require_groups(data);
  const Eigen::VectorXd outputs = forward(spec, params, data.features);
  return detail::rates_over(outputs, data.group0, data.group1, surrogate);
}

inline double c_dp(const Dataset& data, const MlpSpec& spec, const Eigen::VectorXd& params,
                   const SurrogateSpec& surrogate) {
  const auto [p0, p1] = soft_group_rates(data, spec, params, surrogate);
  return p1 - p0;
}

inline Eigen::VectorXd c_dp_grad(const Dataset& data, const MlpSpec& spec,
                                 const Eigen::VectorXd& params, const SurrogateSpec& surrogate) {
  detail::require_groups(data);
  ForwardCache cache;
  const Eigen::VectorXd outputs = forward(spec, params, data.features, &cache);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(outputs.size());
  for (Index i : data.group1)
    v[i] = surrogate_eval_grad(surrogate, outputs[i] - surrogate.tau) / double(data.group1.size());
  for (Index i : data.group0)
    v[i] = -surrogate_eval_grad(surrogate, outputs[i] - surrogate.tau) / double(data.group0.size());
  return output_weighted_grad(spec, params, cache, v);
}

// Covariance between the sensitive bit and the raw network output.
inline double c_cov(const Dataset& data, const MlpSpec& spec, const Eigen::VectorXd& params) {
  const Eigen::VectorXd outputs = forward(spec, params, data.features);
  const double s_bar = double(data.n1()) / double(data.n());
  double total = 0.0;
  for (Index i = 0; i < data.n(); ++i) total += (double(data.sensitive[i]) - s_bar) * outputs[i];
  return total / double(data.n());
}

inline Eigen::VectorXd c_cov_grad(const Dataset& data, const MlpSpec& spec,
                                  const Eigen::VectorXd& params) {
  ForwardCache cache;
  forward(spec, params, data.features, &cache);
  const double s_bar = double(data.n1()) / double(data.n());
  Eigen::VectorXd v(data.n());
  for (Index i = 0; i < data.n(); ++i) v[i] = (double(data.sensitive[i]) - s_bar) / double(data.n());
  return output_weighted_grad(spec, params, cache, v);
}

inline std::pair<double, double> c_di_rows(const Dataset& data, const MlpSpec& spec,
                                           const Eigen::VectorXd& params,
                                           const SurrogateSpec& surrogate, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0))
    throw std::invalid_argument("delta must lie in [0,1], got " + std::to_string(delta));
  const auto [p0, p1] = soft_group_rates(data, spec, params, surrogate);
  return {delta * p0 - p1, delta * p1 - p0};
}

// 2 x P Jacobian of the ratio-constraint row pair.
inline Eigen::MatrixXd c_di_jacobian(const Dataset& data, const MlpSpec& spec,
                                     const Eigen::VectorXd& params, const SurrogateSpec& surrogate,
                                     double delta) {
  if (!(delta >= 0.0 && delta <= 1.0))
    throw std::invalid_argument("delta must lie in [0,1], got " + std::to_string(delta));
  detail::require_groups(data);
  ForwardCache cache;
  const Eigen::VectorXd outputs = forward(spec, params, data.features, &cache);
  Eigen::VectorXd dp0 = Eigen::VectorXd::Zero(outputs.size());
  Eigen::VectorXd dp1 = Eigen::VectorXd::Zero(outputs.size());
  for (Index i : data.group0)
    dp0[i] = surrogate_eval_grad(surrogate, outputs[i] - surrogate.tau) / double(data.group0.size());
  for (Index i : data.group1)
    dp1[i] = surrogate_eval_grad(surrogate, outputs[i] - surrogate.tau) / double(data.group1.size());
  Eigen::MatrixXd jac(2, params.size());
  jac.row(0) = output_weighted_grad(spec, params, cache, delta * dp0 - dp1).transpose();
  jac.row(1) = output_weighted_grad(spec, params, cache, delta * dp1 - dp0).transpose();
  return jac;
}

inline std::pair<double, double> c_ei_rows(const Dataset& data, const MlpSpec& spec,
                                           const Eigen::VectorXd& params,
                                           const SurrogateSpec& surrogate, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0))
    throw std::invalid_argument("delta must lie in [0,1], got " + std::to_string(delta));
  detail::require_groups(data);
  const auto g0 = detail::positive_subset(data, data.group0);
  const auto g1 = detail::positive_subset(data, data.group1);
  if (g0.empty() || g1.empty())
    throw InvalidDatasetError("dataset \"" + data.name +
                              "\" needs positive labels in both groups for equal-impact rows");
  const Eigen::VectorXd outputs = forward(spec, params, data.features);
  const auto [p0, p1] = detail::rates_over(outputs, g0, g1, surrogate);
  return {delta * p0 - p1, delta * p1 - p0};
}

inline Eigen::MatrixXd c_ei_jacobian(const Dataset& data, const MlpSpec& spec,
                                     const Eigen::VectorXd& params, const SurrogateSpec& surrogate,
                                     double delta) {
  if (!(delta >= 0.0 && delta <= 1.0))
    throw std::invalid_argument("delta must lie in [0,1], got " + std::to_string(delta));
  detail::require_groups(data);
  const auto g0 = detail::positive_subset(data, data.group0);
  const auto g1 = detail::positive_subset(data, data.group1);
  if (g0.empty() || g1.empty())
    throw InvalidDatasetError("dataset \"" + data.name +
                              "\" needs positive labels in both groups for equal-impact rows");
  ForwardCache cache;
  const Eigen::VectorXd outputs = forward(spec, params, data.features, &cache);
  Eigen::VectorXd dp0 = Eigen::VectorXd::Zero(outputs.size());
  Eigen::VectorXd dp1 = Eigen::VectorXd::Zero(outputs.size());
  for (Index i : g0)
    dp0[i] = surrogate_eval_grad(surrogate, outputs[i] - surrogate.tau) / double(g0.size());
  for (Index i : g1)
    dp1[i] = surrogate_eval_grad(surrogate, outputs[i] - surrogate.tau) / double(g1.size());
  Eigen::MatrixXd jac(2, params.size());
  jac.row(0) = output_weighted_grad(spec, params, cache, delta * dp0 - dp1).transpose();
  jac.row(1) = output_weighted_grad(spec, params, cache, delta * dp1 - dp0).transpose();
  return jac;
}

// Squared demographic-parity surrogate, the soft alternative to hard
// constraints: value q^2 and gradient 2 q grad(q).
inline std::pair<double, Eigen::VectorXd> dp_regularizer(const Dataset& data, const MlpSpec& spec,
                                                         const Eigen::VectorXd& params,
                                                         const SurrogateSpec& surrogate) {
  const double q = c_dp(data, spec, params, surrogate);
  Eigen::VectorXd grad = c_dp_grad(data, spec, params, surrogate);
  grad *= 2.0 * q;
  return {q * q, std::move(grad)};
}

// Indicator-based metrics: predictions harden to 1{output > tau}.
inline FairnessReport hard_metrics(const Dataset& data, const MlpSpec& spec,
                                   const Eigen::VectorXd& params, double tau, double delta) {
  detail::require_groups(data);
  SurrogateSpec heaviside;
  heaviside.kind = SurrogateKind::Heaviside;
  heaviside.tau = tau;
  const Eigen::VectorXd outputs = forward(spec, params, data.features);
  const auto [p0, p1] = detail::rates_over(outputs, data.group0, data.group1, heaviside);

  FairnessReport rep;
  rep.p0_hard = p0;
  rep.p1_hard = p1;
  rep.c_dp_hard = p1 - p0;
  rep.c_di_hard = std::max(delta * p0 - p1, delta * p1 - p0);
  rep.delta_hat_hard = detail::delta_hat_from_rates(p0, p1);

  const auto g0 = detail::positive_subset(data, data.group0);
  const auto g1 = detail::positive_subset(data, data.group1);
  if (!g0.empty() && !g1.empty()) {
    const auto [e0, e1] = detail::rates_over(outputs, g0, g1, heaviside);
    rep.c_ei_hard = std::max(delta * e0 - e1, delta * e1 - e0);
    rep.delta_hat_ei_hard = detail::delta_hat_from_rates(e0, e1);
  } else {
    rep.c_ei_hard = std::numeric_limits<double>::quiet_NaN();
    rep.delta_hat_ei_hard = std::numeric_limits<double>::quiet_NaN();
  }

  const double s_bar = double(data.n1()) / double(data.n());
  double cov = 0.0;
  for (Index i = 0; i < data.n(); ++i) cov += (double(data.sensitive[i]) - s_bar) * outputs[i];
  rep.c_cov = cov / double(data.n());
  return rep;
}

// Full report: hard metrics plus their smooth-surrogate counterparts.
inline FairnessReport fairness_report(const Dataset& data, const MlpSpec& spec,
                                      const Eigen::VectorXd& params,
                                      const SurrogateSpec& surrogate, double delta) {
  FairnessReport rep = hard_metrics(data, spec, params, surrogate.tau, delta);
  const Eigen::VectorXd outputs = forward(spec, params, data.features);
  const auto [p0, p1] = detail::rates_over(outputs, data.group0, data.group1, surrogate);
  rep.c_dp_surrogate = p1 - p0;
  rep.c_di_surrogate = std::max(delta * p0 - p1, delta * p1 - p0);
  rep.delta_hat_surrogate = detail::delta_hat_from_rates(p0, p1);
  const auto g0 = detail::positive_subset(data, data.group0);
  const auto g1 = detail::positive_subset(data, data.group1);
  if (!g0.empty() && !g1.empty()) {
    const auto [e0, e1] = detail::rates_over(outputs, g0, g1, surrogate);
    rep.c_ei_surrogate = std::max(delta * e0 - e1, delta * e1 - e0);
    rep.delta_hat_ei_surrogate = detail::delta_hat_from_rates(e0, e1);
  } else {
    rep.c_ei_surrogate = std::numeric_limits<double>::quiet_NaN();
    rep.delta_hat_ei_surrogate = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

// Linearization of a ConstraintSet at the current parameters, in the form
// the step solver consumes: rows J d <= -r with r holding l - c for lower
// rows and c - u for upper rows. row_function maps each row to its scalar
// constraint function; a function's lower and upper row can never be active
// together, which the solver's active-set enumeration relies on.
struct ConstraintRows {
  Eigen::MatrixXd J;
  Eigen::VectorXd r;
  std::vector<int> row_function;

  double violation_l1() const {
    double v = 0.0;
    for (Index i = 0; i < r.size(); ++i) v += std::max(0.0, r[i]);
    return v;
  }
};

// Variant for callers that already ran the forward pass; cache must come
// from `forward(spec, params, data.features, &cache)` at these params.
inline ConstraintRows evaluate_rows_cached(const Dataset& data, const MlpSpec& spec,
                                           const Eigen::VectorXd& params, const ConstraintSet& set,
                                           const Eigen::VectorXd& outputs,
                                           const ForwardCache& cache) {
  set.validate();
  detail::require_groups(data);

  ConstraintRows rows;
  rows.J.resize(set.total_rows(), params.size());
  rows.r.resize(set.total_rows());
  rows.row_function.reserve(static_cast<size_t>(set.total_rows()));

  int row = 0, fn = 0;
  auto weighted_row = [&](const Eigen::VectorXd& v) {
    rows.J.row(row) = output_weighted_grad(spec, params, cache, v).transpose();
  };

  for (const auto& e : set.entries) {
    switch (e.kind) {
      case ConstraintKind::DisparateImpact:
      case ConstraintKind::EqualImpact: {
        std::vector<Index> g0, g1;
        if (e.kind == ConstraintKind::DisparateImpact) {
          g0 = data.group0;
          g1 = data.group1;
        } else {
          g0 = detail::positive_subset(data, data.group0);
          g1 = detail::positive_subset(data, data.group1);
          if (g0.empty() || g1.empty())
            throw InvalidDatasetError("dataset \"" + data.name +
                                      "\" needs positive labels in both groups for equal-impact");
        }
        const auto [p0, p1] = detail::rates_over(outputs, g0, g1, e.surrogate);
        Eigen::VectorXd dp0 = Eigen::VectorXd::Zero(outputs.size());
        Eigen::VectorXd dp1 = Eigen::VectorXd::Zero(outputs.size());
        for (Index i : g0)
          dp0[i] = surrogate_eval_grad(e.surrogate, outputs[i] - e.surrogate.tau) / double(g0.size());
        for (Index i : g1)
          dp1[i] = surrogate_eval_grad(e.surrogate, outputs[i] - e.surrogate.tau) / double(g1.size());
        weighted_row(e.threshold * dp0 - dp1);
        rows.r[row] = e.threshold * p0 - p1;
        rows.row_function.push_back(fn++);
        ++row;
        weighted_row(e.threshold * dp1 - dp0);
        rows.r[row] = e.threshold * p1 - p0;
        rows.row_function.push_back(fn++);
        ++row;
        break;
      }
      case ConstraintKind::DemographicParityBand: {
        const auto [p0, p1] = detail::rates_over(outputs, data.group0, data.group1, e.surrogate);
        const double c = p1 - p0;
        Eigen::VectorXd v = Eigen::VectorXd::Zero(outputs.size());
        for (Index i : data.group1)
          v[i] = surrogate_eval_grad(e.surrogate, outputs[i] - e.surrogate.tau) /
                 double(data.group1.size());
        for (Index i : data.group0)
          v[i] = -surrogate_eval_grad(e.surrogate, outputs[i] - e.surrogate.tau) /
                 double(data.group0.size());
        const Eigen::VectorXd g = output_weighted_grad(spec, params, cache, v);
        rows.J.row(row) = -g.transpose();
        rows.r[row] = -e.threshold - c;
        rows.row_function.push_back(fn);
        ++row;
        rows.J.row(row) = g.transpose();
        rows.r[row] = c - e.threshold;
        rows.row_function.push_back(fn++);
        ++row;
        break;
      }
      case ConstraintKind::CovarianceBand: {
        const double s_bar = double(data.n1()) / double(data.n());
        double c = 0.0;
        Eigen::VectorXd v(data.n());
        for (Index i = 0; i < data.n(); ++i) {
          v[i] = (double(data.sensitive[i]) - s_bar) / double(data.n());
          c += v[i] * outputs[i];
        }
        const Eigen::VectorXd g = output_weighted_grad(spec, params, cache, v);
        rows.J.row(row) = -g.transpose();
        rows.r[row] = -e.threshold - c;
        rows.row_function.push_back(fn);
        ++row;
        rows.J.row(row) = g.transpose();
        rows.r[row] = c - e.threshold;
        rows.row_function.push_back(fn++);
        ++row;
        break;
      }
    }
  }
  return rows;
}

inline ConstraintRows evaluate_rows(const Dataset& data, const MlpSpec& spec,
                                    const Eigen::VectorXd& params, const ConstraintSet& set) {
  ForwardCache cache;
  const Eigen::VectorXd outputs = forward(spec, params, data.features, &cache);
  return evaluate_rows_cached(data, spec, params, set, outputs, cache);
}

}  // namespace fairsqp
