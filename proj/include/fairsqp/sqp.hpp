#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fairsqp/dataset.hpp"
#include "fairsqp/errors.hpp"
#include "fairsqp/fairness.hpp"
#include "fairsqp/model.hpp"
#include "fairsqp/qp.hpp"
#include "fairsqp/sampler.hpp"

namespace fairsqp {

struct SqpOptions {
  double tau_init = 1.0;
  double initial_lr = 0.5;
  double lr_min = 1e-7;
  long k_min = 200;            // iterations before any rate adjustment
  long adjust_interval = 5;    // iterations between adjustments
  double lr_reduction_factor = 10.0;
  double merit_avg_weight = 0.85;  // new-value weight in the moving average
  double merit_sigma = 0.5;
  double merit_theta = 1e-12;
  double curvature_floor = 1e-8;
  double divergence_bound = 1e8;  // max |w_i| before the run is declared lost
  bool strict_kkt = false;
};

struct SqpState {
  Eigen::VectorXd w;
  Eigen::VectorXd adagrad_acc;
  double tau = 1.0;
  double base_lr = 0.5;
  double lr = 0.5;
  double merit_avg = 0.0;
  long iters_since_adjust = 0;
  long iteration = 0;
  long epoch = 0;

  static SqpState init(Eigen::VectorXd w0, const SqpOptions& opt) {
    SqpState st;
    st.adagrad_acc = Eigen::VectorXd::Zero(w0.size());
    st.w = std::move(w0);
    st.tau = opt.tau_init;
    st.base_lr = opt.initial_lr;
    st.lr = opt.initial_lr;
    return st;
  }
};

// Adagrad-type diagonal curvature: accumulate squared gradients, take the
// square root, keep it strictly positive.
inline Eigen::VectorXd update_curvature(SqpState& state, const Eigen::VectorXd& g,
                                        const SqpOptions& opt) {
  state.adagrad_acc.array() += g.array().square();
  return (state.adagrad_acc.array().sqrt() + opt.curvature_floor).matrix();
}

// Ratio test keeping the merit function phi(w) = tau f(w) + ||viol(w)||_1
// decreasing along d: tau shrinks only when the step trades a predicted
// violation reduction against an objective increase.
inline double update_merit_param(SqpState& state, const QpSubproblem& qp,
                                 const Eigen::VectorXd& d, const SqpOptions& opt) {
  double viol = 0.0, viol_lin = 0.0;
  for (Eigen::Index i = 0; i < qp.r.size(); ++i) {
    viol += std::max(0.0, qp.r[i]);
    viol_lin += std::max(0.0, qp.r[i] + qp.J.row(i).dot(d));
  }
  const double delta_viol = viol - viol_lin;
  const double denom = qp.g.dot(d) + std::max(d.dot((qp.h_diag.array() * d.array()).matrix()), 0.0);
  if (denom > 0.0 && delta_viol > 0.0) {
    const double trial = (1.0 - opt.merit_sigma) * delta_viol / std::max(denom, opt.merit_theta);
    state.tau = std::min(state.tau, trial);
  }
  return state.tau;
}

// Nonmonotone learning-rate rule: track a moving average of the merit
// value; once past the warm-up, a merit value at or above its average that
// persists for a full interval cuts the rate by the reduction factor.
inline void adjust_learning_rate(SqpState& state, double f_val, double violation_l1,
                                 const SqpOptions& opt) {
  const double phi = state.tau * f_val + violation_l1;
  if (state.iteration == 0)
    state.merit_avg = phi;
  else
    state.merit_avg = opt.merit_avg_weight * phi + (1.0 - opt.merit_avg_weight) * state.merit_avg;
  if (state.iteration >= opt.k_min && state.lr >= opt.lr_min) {
    if (state.merit_avg <= phi && state.iters_since_adjust >= opt.adjust_interval) {
      state.lr /= opt.lr_reduction_factor;
      state.iters_since_adjust = 0;
    }
    ++state.iters_since_adjust;
  }
}

// What one iteration works on: the dataset (or current batch), the model,
// the constraint set, and an optional soft regularizer weighted by
// 1/lambda (lambda = infinity switches it off).
struct SqpProblem {
  MlpSpec model;
  ConstraintSet constraints;
  double lambda = std::numeric_limits<double>::infinity();
  SurrogateSpec reg_surrogate;

  bool regularized() const { return std::isfinite(lambda); }
};

struct StepInfo {
  double f = 0.0;            // objective value on the batch
  double violation_l1 = 0.0;
  double qp_objective = 0.0;
  std::vector<int> active;
};

// One SQP iteration on `batch` (which is the full training set in
// full-batch mode). Assembles gradient and constraint linearization,
// solves the QP, updates the merit parameter, steps, and applies the
// learning-rate rule. state.iteration counts up by one.
inline StepInfo sqp_step(SqpState& state, const SqpProblem& prob, const Dataset& batch,
                         const SqpOptions& opt) {
  ForwardCache cache;
  const Eigen::VectorXd outputs = forward(prob.model, state.w, batch.features, &cache);

  double f = bce_loss(outputs, batch.labels);
  Eigen::VectorXd g = backprop_preact(prob.model, state.w, cache,
                                      bce_preact_seed(outputs, batch.labels));
  if (prob.regularized()) {
    detail::require_groups(batch);
    const auto [p0, p1] =
        detail::rates_over(outputs, batch.group0, batch.group1, prob.reg_surrogate);
    const double q = p1 - p0;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(outputs.size());
    for (Index i : batch.group1)
      v[i] = surrogate_eval_grad(prob.reg_surrogate, outputs[i] - prob.reg_surrogate.tau) /
             double(batch.group1.size());
    for (Index i : batch.group0)
      v[i] = -surrogate_eval_grad(prob.reg_surrogate, outputs[i] - prob.reg_surrogate.tau) /
             double(batch.group0.size());
    f += q * q / prob.lambda;
    g += (2.0 * q / prob.lambda) * output_weighted_grad(prob.model, state.w, cache, v);
  }

  ConstraintRows rows;
  if (!prob.constraints.entries.empty())
    rows = evaluate_rows_cached(batch, prob.model, state.w, prob.constraints, outputs, cache);
  else {
    rows.J.resize(0, state.w.size());
    rows.r.resize(0);
  }

  QpSubproblem qp;
  qp.g = std::move(g);
  qp.h_diag = update_curvature(state, qp.g, opt);
  qp.J = std::move(rows.J);
  qp.r = std::move(rows.r);
  qp.row_function = std::move(rows.row_function);

  const QpSolution sol = solve_qp(qp, opt.strict_kkt);
  update_merit_param(state, qp, sol.d, opt);
  state.w += state.lr * sol.d;

  if (!state.w.allFinite() || state.w.cwiseAbs().maxCoeff() > opt.divergence_bound)
    throw DivergenceError("iterate became unbounded at iteration " +
                          std::to_string(state.iteration) + " (lr " + std::to_string(state.lr) +
                          ", tau " + std::to_string(state.tau) + ")");

  StepInfo info;
  info.f = f;
  info.violation_l1 = 0.0;
  for (Eigen::Index i = 0; i < qp.r.size(); ++i) info.violation_l1 += std::max(0.0, qp.r[i]);
  info.qp_objective = sol.objective;
  info.active = sol.active;

  adjust_learning_rate(state, f, info.violation_l1, opt);
  ++state.iteration;
  return info;
}

struct TraceRecord {
  long iteration = 0;
  double f = 0.0;
  double violation_l1 = 0.0;
  double tau = 0.0;
  double lr = 0.0;
  std::vector<int> active;
};

struct BatchPlan {
  bool full = true;
  Index n0 = 0, n1 = 0;  // per-group batch rows in stratified mode
};

struct TrainLoopResult {
  SqpState state;
  std::vector<TraceRecord> trace;
};

// Runs `epochs` epochs: one iteration per epoch in full-batch mode,
// ceil(N / batch) iterations per epoch in stratified mode.
inline TrainLoopResult train_loop(
    const Dataset& train, const SqpProblem& prob, const BatchPlan& plan, long epochs,
    std::uint64_t seed, const SqpOptions& opt,
    const std::function<void(const SqpState&, const TraceRecord&)>& on_iteration = {},
    const std::function<void(const SqpState&)>& on_epoch = {}) {
  prob.model.validate();
  prob.constraints.validate();
  if (prob.model.widths.front() != train.f())
    throw std::invalid_argument("train_loop: model input width " +
                                std::to_string(prob.model.widths.front()) +
                                " != dataset feature count " + std::to_string(train.f()));

  TrainLoopResult result;
  result.state = SqpState::init(init_params(prob.model, seed), opt);

  std::unique_ptr<StratifiedSampler> sampler;
  long iters_per_epoch = 1;
  if (!plan.full) {
    sampler = std::make_unique<StratifiedSampler>(train, plan.n0, plan.n1, seed ^ 0x5deece66dull);
    iters_per_epoch = (train.n() + (plan.n0 + plan.n1) - 1) / (plan.n0 + plan.n1);
  }

  for (long epoch = 0; epoch < epochs; ++epoch) {
    result.state.epoch = epoch;
    for (long it = 0; it < iters_per_epoch; ++it) {
      StepInfo info;
      if (plan.full) {
        info = sqp_step(result.state, prob, train, opt);
      } else {
        const Dataset batch = train.rows_subset(sampler->next_batch());
        info = sqp_step(result.state, prob, batch, opt);
      }
      TraceRecord rec;
      rec.iteration = result.state.iteration - 1;
      rec.f = info.f;
      rec.violation_l1 = info.violation_l1;
      rec.tau = result.state.tau;
      rec.lr = result.state.lr;
      rec.active = info.active;
      if (on_iteration) on_iteration(result.state, rec);
      result.trace.push_back(std::move(rec));
    }
    if (on_epoch) on_epoch(result.state);
  }
  return result;
}

}  // namespace fairsqp
