#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fairsqp/rng.hpp"
#include "fairsqp/sqp.hpp"

using namespace fairsqp;

namespace {

Dataset grouped_dataset(Index n, std::uint64_t seed, double p_pos_g0, double p_pos_g1) {
  SplitMix64 rng(seed);
  Dataset d;
  d.name = "grouped";
  d.features.resize(n, 2);
  d.sensitive.resize(n);
  d.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    const int s = i < n / 2 ? 0 : 1;
    d.sensitive[i] = s;
    d.features(i, 0) = double(s);
    d.features(i, 1) = rng.normal();
    d.labels[i] = rng.bernoulli(s == 0 ? p_pos_g0 : p_pos_g1) ? 1 : 0;
  }
  d.finalize();
  return d;
}

}  // namespace

TEST_CASE("state initialization copies the option defaults") {
  SqpOptions opt;
  opt.tau_init = 0.7;
  opt.initial_lr = 0.2;
  const SqpState st = SqpState::init(Eigen::VectorXd::Ones(5), opt);
  CHECK(st.w.size() == 5);
  CHECK(st.adagrad_acc.isZero());
  CHECK(st.tau == 0.7);
  CHECK(st.lr == 0.2);
  CHECK(st.base_lr == 0.2);
  CHECK(st.iteration == 0);
}

TEST_CASE("curvature accumulates squared gradients") {
  SqpOptions opt;
  SqpState st = SqpState::init(Eigen::VectorXd::Zero(2), opt);
  Eigen::VectorXd g(2);
  g << 3.0, -4.0;
  Eigen::VectorXd h = update_curvature(st, g, opt);
  CHECK_THAT(h[0], Catch::Matchers::WithinAbs(3.0 + opt.curvature_floor, 1e-15));
  CHECK_THAT(h[1], Catch::Matchers::WithinAbs(4.0 + opt.curvature_floor, 1e-15));

  g << 3.0, 4.0;
  h = update_curvature(st, g, opt);
  CHECK_THAT(h[0], Catch::Matchers::WithinAbs(std::sqrt(18.0) + opt.curvature_floor, 1e-15));
  CHECK_THAT(h[1], Catch::Matchers::WithinAbs(std::sqrt(32.0) + opt.curvature_floor, 1e-15));
  CHECK_THAT(st.adagrad_acc[0], Catch::Matchers::WithinAbs(18.0, 1e-15));
}

TEST_CASE("merit parameter shrinks only on a violation-for-objective trade") {
  SqpOptions opt;  // sigma 0.5
  QpSubproblem qp;
  qp.g.resize(2);
  qp.h_diag = Eigen::VectorXd::Ones(2);
  qp.J.resize(2, 2);
  qp.J << 1.0, 0.0, 0.0, 1.0;
  qp.r.resize(2);
  qp.r << 0.4, -0.1;
  qp.row_function = {0, 1};
  Eigen::VectorXd d(2);
  d << -0.5, 0.0;

  // Step reduces violation 0.4 -> 0 while the model objective worsens:
  // denom = g'd + d'Hd = 0.5 + 0.25, trial = 0.5 * 0.4 / 0.75.
  SqpState st = SqpState::init(Eigen::VectorXd::Zero(2), opt);
  qp.g << -1.0, 0.0;
  CHECK_THAT(update_merit_param(st, qp, d, opt),
             Catch::Matchers::WithinAbs(0.5 * 0.4 / 0.75, 1e-15));

  // Already below the trial value: unchanged.
  st.tau = 0.01;
  CHECK(update_merit_param(st, qp, d, opt) == 0.01);

  // Objective improves along d (denom <= 0): no update.
  st.tau = 1.0;
  qp.g << 1.0, 0.0;  // g'd = -0.5, d'Hd = 0.25
  CHECK(update_merit_param(st, qp, d, opt) == 1.0);

  // No predicted violation reduction: no update.
  qp.g << -1.0, 0.0;
  CHECK(update_merit_param(st, qp, Eigen::VectorXd::Zero(2), opt) == 1.0);

  // Never increases over a random sequence.
  SplitMix64 rng(5);
  double prev = st.tau;
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd step(2);
    step << rng.normal(), rng.normal();
    qp.g << rng.normal(), rng.normal();
    qp.r << rng.normal() * 0.5, rng.normal() * 0.5;
    const double tau = update_merit_param(st, qp, step, opt);
    CHECK(tau <= prev);
    prev = tau;
  }
}

TEST_CASE("rate cuts wait for the warm-up and the persistence window") {
  SqpOptions opt;  // k_min 200, interval 5, factor 10
  SqpState st = SqpState::init(Eigen::VectorXd::Zero(1), opt);

  // Flat merit: no cut before iteration 200, first cut once the
  // persistence counter reaches the interval.
  for (long k = 0; k <= 300; ++k) {
    adjust_learning_rate(st, 1.0, 0.0, opt);
    if (k < 205)
      CHECK(st.lr == 0.5);
    else if (k < 210)
      CHECK(st.lr == 0.05);
    ++st.iteration;
  }

  // Strictly improving merit never triggers a cut.
  st = SqpState::init(Eigen::VectorXd::Zero(1), opt);
  for (long k = 0; k <= 400; ++k) {
    adjust_learning_rate(st, 1000.0 - double(k), 0.0, opt);
    ++st.iteration;
  }
  CHECK(st.lr == 0.5);

  // Cuts stop once the rate falls below the eligibility floor.
  st = SqpState::init(Eigen::VectorXd::Zero(1), opt);
  for (long k = 0; k <= 20000; ++k) {
    adjust_learning_rate(st, 1.0, 0.0, opt);
    ++st.iteration;
  }
  CHECK(st.lr >= opt.lr_min / opt.lr_reduction_factor);
}

TEST_CASE("unconstrained training is exactly diagonal adagrad descent") {
  const Dataset d = grouped_dataset(24, 3, 0.4, 0.6);
  SqpProblem prob;
  prob.model = MlpSpec{{2, 3, 1}};
  SqpOptions opt;
  const long epochs = 50;

  const TrainLoopResult res = train_loop(d, prob, BatchPlan{}, epochs, 9, opt);

  Eigen::VectorXd w = init_params(prob.model, 9);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(w.size());
  for (long k = 0; k < epochs; ++k) {
    ForwardCache cache;
    const Eigen::VectorXd out = forward(prob.model, w, d.features, &cache);
    const Eigen::VectorXd g =
        backprop_preact(prob.model, w, cache, bce_preact_seed(out, d.labels));
    acc.array() += g.array().square();
    const Eigen::VectorXd h = (acc.array().sqrt() + opt.curvature_floor).matrix();
    w += opt.initial_lr * (-(g.array() / h.array())).matrix();
  }
  CHECK(res.state.w == w);  // bitwise: the empty QP is plain descent
  CHECK(res.state.iteration == epochs);
  CHECK(res.trace.size() == size_t(epochs));
}

TEST_CASE("training drives an unfair model into the parity band") {
  // Group identity is a perfect predictor, so the unconstrained fit has a
  // large positive-rate gap; the banded run must end inside the band.
  const Dataset d = grouped_dataset(80, 4, 0.15, 0.85);
  SqpProblem prob;
  prob.model = MlpSpec{{2, 4, 1}};
  SqpOptions opt;

  const TrainLoopResult plain = train_loop(d, prob, BatchPlan{}, 400, 2, opt);
  const double plain_gap = c_dp(d, prob.model, plain.state.w, SurrogateSpec{});
  REQUIRE(std::abs(plain_gap) > 0.3);

  ConstraintEntry band;
  band.kind = ConstraintKind::DemographicParityBand;
  band.threshold = 0.05;
  prob.constraints.entries = {band};
  const TrainLoopResult fair = train_loop(d, prob, BatchPlan{}, 400, 2, opt);
  const double fair_gap = c_dp(d, prob.model, fair.state.w, SurrogateSpec{});
  CHECK(std::abs(fair_gap) <= 0.05 + 1e-2);
  CHECK(fair.trace.back().violation_l1 <= 1e-2);
  CHECK(fair.trace.back().tau <= plain.trace.back().tau);
}

TEST_CASE("stratified mode runs the documented iteration count deterministically") {
  const Dataset d = grouped_dataset(40, 6, 0.5, 0.5);
  SqpProblem prob;
  prob.model = MlpSpec{{2, 1}};
  SqpOptions opt;
  BatchPlan plan;
  plan.full = false;
  plan.n0 = 4;
  plan.n1 = 4;

  const TrainLoopResult a = train_loop(d, prob, plan, 3, 11, opt);
  CHECK(a.trace.size() == 15u);  // ceil(40 / 8) iterations x 3 epochs
  CHECK(a.state.iteration == 15);
  CHECK(a.state.epoch == 2);

  const TrainLoopResult b = train_loop(d, prob, plan, 3, 11, opt);
  CHECK(a.state.w == b.state.w);
  for (size_t i = 0; i < a.trace.size(); ++i) CHECK(a.trace[i].f == b.trace[i].f);

  const TrainLoopResult c = train_loop(d, prob, plan, 3, 12, opt);
  CHECK(a.state.w != c.state.w);
}

TEST_CASE("runaway iterates raise the divergence error") {
  const Dataset d = grouped_dataset(20, 15, 0.5, 0.5);
  SqpProblem prob;
  prob.model = MlpSpec{{2, 1}};
  SqpOptions opt;
  opt.initial_lr = 1e4;
  opt.divergence_bound = 1e3;
  CHECK_THROWS_AS(train_loop(d, prob, BatchPlan{}, 5, 1, opt), DivergenceError);
}

TEST_CASE("model width must match the dataset") {
  const Dataset d = grouped_dataset(20, 16, 0.5, 0.5);
  SqpProblem prob;
  prob.model = MlpSpec{{3, 1}};
  CHECK_THROWS_AS(train_loop(d, prob, BatchPlan{}, 1, 1, SqpOptions{}), std::invalid_argument);
}
