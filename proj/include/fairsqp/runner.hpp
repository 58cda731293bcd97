#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fairsqp/csv.hpp"
#include "fairsqp/report.hpp"
#include "fairsqp/sqp.hpp"
#include "fairsqp/synthetic.hpp"

namespace fairsqp {

enum class RunMode { ConstraintOnly, RegularizationOnly, Both };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::ConstraintOnly: return "constraint-only";
    case RunMode::RegularizationOnly: return "regularization-only";
    case RunMode::Both: return "both";
  }
  return "?";
}

inline RunMode run_mode_from_string(const std::string& s) {
  if (s == "constraint-only") return RunMode::ConstraintOnly;
  if (s == "regularization-only") return RunMode::RegularizationOnly;
  if (s == "both") return RunMode::Both;
  throw std::invalid_argument("unknown mode: " + s);
}

// Complete description of one training run. Serializes to/from JSON; the
// hash of the canonical serialization ties reports to their configs.
struct ExperimentConfig {
  std::string dataset = "law";  // "law", "adult", or "csv" with explicit paths
  std::string data_dir = "data";
  std::string data_csv;     // used when dataset == "csv"
  std::string data_schema;  // idem
  std::optional<std::vector<Index>> hidden;  // unset -> per-dataset default
  SurrogateSpec surrogate;
  RunMode mode = RunMode::ConstraintOnly;
  std::vector<ConstraintKind> constraints{ConstraintKind::DisparateImpact};
  double delta = 0.8;  // ratio floor for DI/EI, band half-width for bands
  double lambda = std::numeric_limits<double>::infinity();
  long epochs = 500;
  double lr = 0.5;
  bool full_batch = true;
  Index batch_n0 = 0, batch_n1 = 0;
  std::uint64_t seed = 1;
  std::uint64_t split_seed = 42;
  double train_ratio = 0.8;
  Index subsample = 0;   // 0 keeps the whole training split
  long eval_stride = 1;  // epochs between trace-snapshot evaluations
  std::string out_dir;
  bool deterministic = true;

  void validate() const {
    surrogate.validate();
    if (!(train_ratio > 0.0 && train_ratio < 1.0))
      throw std::invalid_argument("train_ratio must be in (0,1)");
    if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
    if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
    if (mode == RunMode::ConstraintOnly && std::isfinite(lambda))
      throw std::invalid_argument("constraint-only mode requires lambda = inf");
    if (mode == RunMode::RegularizationOnly) {
      if (!constraints.empty())
        throw std::invalid_argument("regularization-only mode takes no constraint list");
      if (!std::isfinite(lambda))
        throw std::invalid_argument("regularization-only mode requires finite lambda");
    }
    if (mode == RunMode::Both && !std::isfinite(lambda))
      throw std::invalid_argument("mode 'both' requires finite lambda");
    if (!full_batch && (batch_n0 < 1 || batch_n1 < 1))
      throw std::invalid_argument("stratified batch needs positive per-group sizes");
    if (dataset == "csv" && (data_csv.empty() || data_schema.empty()))
      throw std::invalid_argument("dataset 'csv' needs data_csv and data_schema paths");
  }

  json to_json() const {
    json j;
    j["dataset"] = dataset;
    j["data_dir"] = data_dir;
    j["data_csv"] = data_csv;
    j["data_schema"] = data_schema;
    if (hidden)
      j["hidden"] = *hidden;
    else
      j["hidden"] = nullptr;
    j["surrogate"] = {{"kind", to_string(surrogate.kind)},
                      {"alpha", surrogate.alpha},
                      {"mu", surrogate.mu},
                      {"tau", surrogate.tau}};
    j["mode"] = to_string(mode);
    std::vector<std::string> kinds;
    for (auto k : constraints) kinds.emplace_back(to_string(k));
    j["constraints"] = kinds;
    j["delta"] = delta;
    j["lambda"] = std::isfinite(lambda) ? json(lambda) : json("inf");
    j["epochs"] = epochs;
    j["lr"] = lr;
    j["batch"] = full_batch ? json("full") : json({batch_n0, batch_n1});
    j["seed"] = seed;
    j["split_seed"] = split_seed;
    j["train_ratio"] = train_ratio;
    j["subsample"] = subsample;
    j["eval_stride"] = eval_stride;
    j["out_dir"] = out_dir;
    j["deterministic"] = deterministic;
    return j;
  }

  static ExperimentConfig from_json(const json& j) {
    ExperimentConfig c;
    c.dataset = j.value("dataset", c.dataset);
    c.data_dir = j.value("data_dir", c.data_dir);
    c.data_csv = j.value("data_csv", c.data_csv);
    c.data_schema = j.value("data_schema", c.data_schema);
    if (j.contains("hidden") && !j.at("hidden").is_null())
      c.hidden = j.at("hidden").get<std::vector<Index>>();
    if (j.contains("surrogate")) {
      const auto& s = j.at("surrogate");
      c.surrogate.kind = surrogate_kind_from_string(s.value("kind", "smoothed-step"));
      c.surrogate.alpha = s.value("alpha", c.surrogate.alpha);
      c.surrogate.mu = s.value("mu", c.surrogate.mu);
      c.surrogate.tau = s.value("tau", c.surrogate.tau);
    }
    c.mode = run_mode_from_string(j.value("mode", "constraint-only"));
    if (j.contains("constraints")) {
      c.constraints.clear();
      for (const auto& k : j.at("constraints"))
        c.constraints.push_back(constraint_kind_from_string(k.get<std::string>()));
    }
    c.delta = j.value("delta", c.delta);
    if (j.contains("lambda")) {
      const auto& l = j.at("lambda");
      c.lambda = l.is_string() ? std::numeric_limits<double>::infinity() : l.get<double>();
    }
    c.epochs = j.value("epochs", c.epochs);
    c.lr = j.value("lr", c.lr);
    if (j.contains("batch")) {
      const auto& b = j.at("batch");
      if (b.is_string()) {
        c.full_batch = true;
      } else {
        c.full_batch = false;
        c.batch_n0 = b.at(0).get<Index>();
        c.batch_n1 = b.at(1).get<Index>();
      }
    }
    c.seed = j.value("seed", c.seed);
    c.split_seed = j.value("split_seed", c.split_seed);
    c.train_ratio = j.value("train_ratio", c.train_ratio);
    c.subsample = j.value("subsample", c.subsample);
    c.eval_stride = j.value("eval_stride", c.eval_stride);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.deterministic = j.value("deterministic", c.deterministic);
    return c;
  }

  std::string config_hash() const { return hex64(fnv1a(to_json().dump())); }
};

struct EpochRecord {
  long epoch = 0;
  double objective = 0.0;
  double violation_l1 = 0.0;
  double acc_overall = 0.0, acc_g0 = 0.0, acc_g1 = 0.0;
  double c_di_surrogate = 0.0, c_di_hard = 0.0;
  double delta_hat_hard = 0.0;
  double tau = 0.0, lr = 0.0;
};

inline json to_json(const EpochRecord& e) {
  json j;
  j["epoch"] = e.epoch;
  j["objective"] = num_or_null(e.objective);
  j["violation_l1"] = num_or_null(e.violation_l1);
  j["acc_overall"] = num_or_null(e.acc_overall);
  j["acc_g0"] = num_or_null(e.acc_g0);
  j["acc_g1"] = num_or_null(e.acc_g1);
  j["c_di_surrogate"] = num_or_null(e.c_di_surrogate);
  j["c_di_hard"] = num_or_null(e.c_di_hard);
  j["delta_hat_hard"] = num_or_null(e.delta_hat_hard);
  j["tau"] = e.tau;
  j["lr"] = e.lr;
  return j;
}

inline EpochRecord epoch_record_from_json(const json& j) {
  EpochRecord e;
  e.epoch = j.at("epoch").get<long>();
  e.objective = num_from(j.at("objective"));
  e.violation_l1 = num_from(j.at("violation_l1"));
  e.acc_overall = num_from(j.at("acc_overall"));
  e.acc_g0 = num_from(j.at("acc_g0"));
  e.acc_g1 = num_from(j.at("acc_g1"));
  e.c_di_surrogate = num_from(j.at("c_di_surrogate"));
  e.c_di_hard = num_from(j.at("c_di_hard"));
  e.delta_hat_hard = num_from(j.at("delta_hat_hard"));
  e.tau = j.at("tau").get<double>();
  e.lr = j.at("lr").get<double>();
  return e;
}

struct TrainReport {
  json config;  // exact echo of ExperimentConfig::to_json()
  std::string config_hash;
  double wall_seconds = 0.0;
  double train_acc = 0.0, train_acc_g0 = 0.0, train_acc_g1 = 0.0;
  double test_acc = 0.0, test_acc_g0 = 0.0, test_acc_g1 = 0.0;
  FairnessReport train_fairness, test_fairness;
  std::vector<EpochRecord> epochs;
  std::string weight_checksum;
};

inline json to_json(const TrainReport& r) {
  json j;
  j["config"] = r.config;
  j["config_hash"] = r.config_hash;
  j["wall_seconds"] = r.wall_seconds;
  j["train_acc"] = r.train_acc;
  j["train_acc_g0"] = r.train_acc_g0;
  j["train_acc_g1"] = r.train_acc_g1;
  j["test_acc"] = r.test_acc;
  j["test_acc_g0"] = r.test_acc_g0;
  j["test_acc_g1"] = r.test_acc_g1;
  j["train_fairness"] = to_json(r.train_fairness);
  j["test_fairness"] = to_json(r.test_fairness);
  json eps = json::array();
  for (const auto& e : r.epochs) eps.push_back(to_json(e));
  j["epochs"] = eps;
  j["weight_checksum"] = r.weight_checksum;
  return j;
}

inline TrainReport train_report_from_json(const json& j) {
  TrainReport r;
  r.config = j.at("config");
  r.config_hash = j.at("config_hash").get<std::string>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.train_acc = j.at("train_acc").get<double>();
  r.train_acc_g0 = j.at("train_acc_g0").get<double>();
  r.train_acc_g1 = j.at("train_acc_g1").get<double>();
  r.test_acc = j.at("test_acc").get<double>();
  r.test_acc_g0 = j.at("test_acc_g0").get<double>();
  r.test_acc_g1 = j.at("test_acc_g1").get<double>();
  r.train_fairness = fairness_from_json(j.at("train_fairness"));
  r.test_fairness = fairness_from_json(j.at("test_fairness"));
  for (const auto& e : j.at("epochs")) r.epochs.push_back(epoch_record_from_json(e));
  r.weight_checksum = j.at("weight_checksum").get<std::string>();
  return r;
}

// Locates the named dataset's CSV + schema under data_dir, generating the
// stand-in files on first use.
inline synth::GeneratedFiles ensure_dataset(const std::string& name, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  synth::GeneratedFiles files{dir + "/" + name + ".csv", dir + "/" + name + ".schema.json"};
  if (fs::exists(files.csv_path) && fs::exists(files.schema_path)) return files;
  if (name == "law") return synth::generate_law(dir);
  if (name == "adult") return synth::generate_adult(dir);
  throw std::invalid_argument("unknown dataset name: " + name);
}

inline Dataset load_experiment_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset == "csv") return load_csv(cfg.data_csv, load_schema(cfg.data_schema), "csv");
  const auto files = ensure_dataset(cfg.dataset, cfg.data_dir);
  return load_csv(files.csv_path, load_schema(files.schema_path), cfg.dataset);
}

// Group-proportional random subsample of `target` rows.
inline Dataset subsample_stratified(const Dataset& data, Index target, std::uint64_t seed) {
  if (target <= 0 || target >= data.n()) return data;
  Index take1 = static_cast<Index>(
      std::llround(double(target) * double(data.n1()) / double(data.n())));
  take1 = std::max<Index>(1, std::min(take1, data.n1()));
  Index take0 = std::max<Index>(1, std::min<Index>(target - take1, data.n0()));
  std::vector<Index> g0 = data.group0, g1 = data.group1;
  seeded_shuffle(g0, seed ^ 0x9b97ull);
  seeded_shuffle(g1, seed ^ 0x7c15ull);
  std::vector<Index> keep(g0.begin(), g0.begin() + take0);
  keep.insert(keep.end(), g1.begin(), g1.begin() + take1);
  std::sort(keep.begin(), keep.end());
  return data.rows_subset(keep);
}

struct PreparedData {
  Dataset train, test;
};

inline PreparedData prepare_data(const ExperimentConfig& cfg) {
  Dataset full = load_experiment_dataset(cfg);
  auto [train, test] = split(full, cfg.train_ratio, cfg.split_seed);
  if (cfg.subsample > 0) train = subsample_stratified(train, cfg.subsample, cfg.seed);
  standardize(train, &test);
  return {std::move(train), std::move(test)};
}

inline std::vector<Index> default_hidden(const std::string& dataset) {
  if (dataset == "adult") return {128, 64};
  return {};
}

inline MlpSpec model_for(const ExperimentConfig& cfg, Index features) {
  MlpSpec spec;
  spec.widths.push_back(features);
  const std::vector<Index> hidden = cfg.hidden ? *cfg.hidden : default_hidden(cfg.dataset);
  for (Index h : hidden) spec.widths.push_back(h);
  spec.widths.push_back(1);
  return spec;
}

inline ConstraintSet constraints_for(const ExperimentConfig& cfg) {
  ConstraintSet set;
  for (auto kind : cfg.constraints) {
    ConstraintEntry e;
    e.kind = kind;
    e.threshold = cfg.delta;
    e.surrogate = cfg.surrogate;
    set.entries.push_back(e);
  }
  set.validate();
  return set;
}

namespace detail {

inline double accuracy_over(const Eigen::VectorXd& outputs, const Eigen::VectorXi& labels,
                            const std::vector<Index>& idx) {
  if (idx.empty()) return std::numeric_limits<double>::quiet_NaN();
  Index hits = 0;
  for (Index i : idx)
    if ((outputs[i] > 0.5 ? 1 : 0) == labels[i]) ++hits;
  return double(hits) / double(idx.size());
}

inline EpochRecord epoch_snapshot(const Dataset& train, const SqpProblem& prob,
                                  const SqpState& state, double delta) {
  EpochRecord rec;
  rec.epoch = state.epoch;
  rec.tau = state.tau;
  rec.lr = state.lr;
  const Eigen::VectorXd outputs = forward(prob.model, state.w, train.features);
  rec.acc_overall = hard_accuracy(outputs, train.labels);
  rec.acc_g0 = accuracy_over(outputs, train.labels, train.group0);
  rec.acc_g1 = accuracy_over(outputs, train.labels, train.group1);
  rec.objective = bce_loss(outputs, train.labels);

  const SurrogateSpec& sur =
      prob.constraints.entries.empty() ? prob.reg_surrogate : prob.constraints.entries[0].surrogate;
  const auto [p0, p1] = rates_over(outputs, train.group0, train.group1, sur);
  if (prob.regularized()) {
    const double q = p1 - p0;
    rec.objective += q * q / prob.lambda;
  }
  rec.c_di_surrogate = std::max(delta * p0 - p1, delta * p1 - p0);

  SurrogateSpec heaviside;
  heaviside.kind = SurrogateKind::Heaviside;
  heaviside.tau = sur.tau;
  const auto [h0, h1] = rates_over(outputs, train.group0, train.group1, heaviside);
  rec.c_di_hard = std::max(delta * h0 - h1, delta * h1 - h0);
  rec.delta_hat_hard = delta_hat_from_rates(h0, h1);

  double viol = 0.0;
  for (double row : {delta * p0 - p1, delta * p1 - p0}) viol += std::max(0.0, row);
  rec.violation_l1 = viol;
  return rec;
}

}  // namespace detail

// Trains one model per the config and reports metrics on the train and
// test splits. When out_dir is set, writes report.json, model.json, and
// trace.jsonl there.
inline TrainReport run_single(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  PreparedData data = prepare_data(cfg);

  SqpProblem prob;
  prob.model = model_for(cfg, data.train.f());
  prob.constraints = constraints_for(cfg);
  prob.lambda = cfg.lambda;
  prob.reg_surrogate = cfg.surrogate;

  SqpOptions opt;
  opt.initial_lr = cfg.lr;

  BatchPlan plan;
  plan.full = cfg.full_batch;
  plan.n0 = cfg.batch_n0;
  plan.n1 = cfg.batch_n1;

  std::unique_ptr<TraceWriter> tracer;
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    tracer = std::make_unique<TraceWriter>(cfg.out_dir + "/trace.jsonl");
  }

  TrainReport report;
  report.config = cfg.to_json();
  report.config_hash = cfg.config_hash();

  auto on_iteration = [&](const SqpState&, const TraceRecord& rec) {
    if (tracer) tracer->write(rec);
  };
  auto on_epoch = [&](const SqpState& state) {
    if (state.epoch % std::max<long>(1, cfg.eval_stride) == 0 || state.epoch == cfg.epochs - 1)
      report.epochs.push_back(detail::epoch_snapshot(data.train, prob, state, cfg.delta));
  };

  TrainLoopResult result;
  try {
    result = train_loop(data.train, prob, plan, cfg.epochs, cfg.seed, opt, on_iteration, on_epoch);
  } catch (...) {
    if (tracer) tracer->flush();
    throw;
  }

  const Eigen::VectorXd train_out = forward(prob.model, result.state.w, data.train.features);
  const Eigen::VectorXd test_out = forward(prob.model, result.state.w, data.test.features);
  report.train_acc = hard_accuracy(train_out, data.train.labels);
  report.train_acc_g0 = detail::accuracy_over(train_out, data.train.labels, data.train.group0);
  report.train_acc_g1 = detail::accuracy_over(train_out, data.train.labels, data.train.group1);
  report.test_acc = hard_accuracy(test_out, data.test.labels);
  report.test_acc_g0 = detail::accuracy_over(test_out, data.test.labels, data.test.group0);
  report.test_acc_g1 = detail::accuracy_over(test_out, data.test.labels, data.test.group1);
  report.train_fairness =
      fairness_report(data.train, prob.model, result.state.w, cfg.surrogate, cfg.delta);
  report.test_fairness =
      fairness_report(data.test, prob.model, result.state.w, cfg.surrogate, cfg.delta);
  report.weight_checksum = hex64(weight_checksum(result.state.w));
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!cfg.out_dir.empty()) {
    std::ofstream rj(cfg.out_dir + "/report.json");
    rj << to_json(report).dump(2) << "\n";
    save_model(cfg.out_dir + "/model.json", prob.model, result.state.w);
  }
  return report;
}

struct SweepResult {
  std::vector<std::pair<double, TrainReport>> runs;       // (grid value, report)
  std::vector<std::pair<double, std::string>> failures;   // (grid value, error)
};

// Writes the source data for the standard plots: ratio tracking, accuracy
// against threshold, and violations against threshold.
inline void emit_plot_data(const SweepResult& sweep, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream f(dir + "/delta_tracking.csv");
    f << "threshold,delta_hat_surrogate,delta_hat_hard\n";
    for (const auto& [v, r] : sweep.runs)
      f << v << "," << r.train_fairness.delta_hat_surrogate << ","
        << r.train_fairness.delta_hat_hard << "\n";
  }
  {
    std::ofstream f(dir + "/accuracy_vs_threshold.csv");
    f << "threshold,train_acc,test_acc\n";
    for (const auto& [v, r] : sweep.runs) f << v << "," << r.train_acc << "," << r.test_acc << "\n";
  }
  {
    std::ofstream f(dir + "/violation_vs_threshold.csv");
    f << "threshold,c_di_surrogate,c_di_hard,c_ei_surrogate,c_ei_hard\n";
    for (const auto& [v, r] : sweep.runs)
      f << v << "," << r.train_fairness.c_di_surrogate << "," << r.train_fairness.c_di_hard << ","
        << r.train_fairness.c_ei_surrogate << "," << r.train_fairness.c_ei_hard << "\n";
  }
}

// One run per grid value (the constraint threshold in constraint modes,
// lambda in regularization-only mode), sharing the base seed so the grid
// value is the only difference. Runs execute concurrently; failures are
// recorded and the sweep continues.
inline SweepResult run_sweep(const ExperimentConfig& base, const std::vector<double>& grid,
                             int workers = 0) {
  if (grid.empty()) throw std::invalid_argument("run_sweep: empty grid");
  base.validate();

  std::vector<ExperimentConfig> configs;
  configs.reserve(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) {
    ExperimentConfig cfg = base;
    if (base.mode == RunMode::RegularizationOnly)
      cfg.lambda = grid[i];
    else
      cfg.delta = grid[i];
    if (!base.out_dir.empty()) {
      std::ostringstream oss;
      oss << base.out_dir << "/run_" << std::setw(3) << std::setfill('0') << i;
      cfg.out_dir = oss.str();
    }
    configs.push_back(std::move(cfg));
  }

  std::vector<std::optional<TrainReport>> reports(grid.size());
  std::vector<std::string> errors(grid.size());
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (size_t i = next.fetch_add(1); i < configs.size(); i = next.fetch_add(1)) {
      try {
        reports[i] = run_single(configs[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  int n_workers = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  n_workers = std::max(1, std::min<int>(n_workers, static_cast<int>(grid.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < n_workers; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();

  SweepResult out;
  for (size_t i = 0; i < grid.size(); ++i) {
    if (reports[i])
      out.runs.emplace_back(grid[i], std::move(*reports[i]));
    else
      out.failures.emplace_back(grid[i], errors[i]);
  }

  if (!base.out_dir.empty()) {
    std::filesystem::create_directories(base.out_dir);
    std::ofstream csv(base.out_dir + "/summary.csv");
    csv << "value,delta_hat_surrogate,delta_hat_hard,train_acc,test_acc,"
           "c_di_surrogate,c_di_hard,c_ei_hard,violation_c_di\n";
    for (const auto& [v, r] : out.runs)
      csv << v << "," << r.train_fairness.delta_hat_surrogate << ","
          << r.train_fairness.delta_hat_hard << "," << r.train_acc << "," << r.test_acc << ","
          << r.train_fairness.c_di_surrogate << "," << r.train_fairness.c_di_hard << ","
          << r.train_fairness.c_ei_hard << "," << std::max(0.0, r.train_fairness.c_di_hard)
          << "\n";
    for (const auto& [v, err] : out.failures) csv << "# failed value=" << v << " error=" << err << "\n";
    emit_plot_data(out, base.out_dir);
  }
  return out;
}

// DI + EI at a shared ratio floor, the two-constraint configuration the
// 4-row solver is sized for.
inline TrainReport run_multi_constraint(const ExperimentConfig& base, double delta) {
  ExperimentConfig cfg = base;
  cfg.mode = RunMode::ConstraintOnly;
  cfg.lambda = std::numeric_limits<double>::infinity();
  cfg.constraints = {ConstraintKind::DisparateImpact, ConstraintKind::EqualImpact};
  cfg.delta = delta;
  return run_single(cfg);
}

}  // namespace fairsqp
