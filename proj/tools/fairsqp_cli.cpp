#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairsqp/fairsqp.hpp"

namespace {

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<fairsqp::Index> parse_widths(const std::string& csv) {
  std::vector<fairsqp::Index> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stol(item));
  return out;
}

struct CliOverrides {
  std::string config_path;
  std::string dataset, data_dir, out_dir, mode, surrogate, constraints, batch, hidden;
  double delta = 0, lambda = 0, alpha = 0, mu = 0, lr = 0;
  long epochs = 0, eval_stride = 0;
  fairsqp::Index subsample = 0;
  std::uint64_t seed = 0, split_seed = 0;
  bool deterministic = false;
};

void add_common_options(CLI::App* cmd, CliOverrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file; flags override its fields");
  cmd->add_option("--dataset", o.dataset, "law, adult, or csv");
  cmd->add_option("--data-dir", o.data_dir, "directory for cached dataset files");
  cmd->add_option("--mode", o.mode, "constraint-only, regularization-only, or both");
  cmd->add_option("--constraints", o.constraints, "comma list: di, ei, dp, cov");
  cmd->add_option("--delta", o.delta, "ratio floor (di/ei) or band half-width (dp/cov)");
  cmd->add_option("--lambda", o.lambda, "regularization weight divisor (finite value)");
  cmd->add_option("--surrogate", o.surrogate, "linear, sigmoid, or smoothed-step");
  cmd->add_option("--alpha", o.alpha, "surrogate input scaling");
  cmd->add_option("--mu", o.mu, "smoothed-step smoothing parameter");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--lr", o.lr, "initial learning rate");
  cmd->add_option("--batch", o.batch, "\"full\" or per-group sizes n0,n1");
  cmd->add_option("--hidden", o.hidden, "hidden layer widths, e.g. 128,64 (\"none\" = linear)");
  cmd->add_option("--subsample", o.subsample, "cap on training rows (0 = all)");
  cmd->add_option("--seed", o.seed, "training seed");
  cmd->add_option("--split-seed", o.split_seed, "train/test split seed");
  cmd->add_option("--eval-stride", o.eval_stride, "epochs between trace snapshots");
  cmd->add_option("--out", o.out_dir, "output directory for reports");
  cmd->add_flag("--deterministic", o.deterministic, "record deterministic mode in the config");
}

fairsqp::ExperimentConfig build_config(const CLI::App* cmd, const CliOverrides& o) {
  fairsqp::ExperimentConfig cfg;
  if (cmd->count("--config")) {
    std::ifstream in(o.config_path);
    if (!in) throw std::runtime_error("cannot read config file " + o.config_path);
    cfg = fairsqp::ExperimentConfig::from_json(fairsqp::json::parse(in));
  }
  if (cmd->count("--dataset")) cfg.dataset = o.dataset;
  if (cmd->count("--data-dir")) cfg.data_dir = o.data_dir;
  if (cmd->count("--mode")) {
    cfg.mode = fairsqp::run_mode_from_string(o.mode);
    if (cfg.mode == fairsqp::RunMode::RegularizationOnly) cfg.constraints.clear();
  }
  if (cmd->count("--constraints")) {
    cfg.constraints.clear();
    std::stringstream ss(o.constraints);
    std::string item;
    while (std::getline(ss, item, ','))
      cfg.constraints.push_back(fairsqp::constraint_kind_from_string(item));
  }
  if (cmd->count("--delta")) cfg.delta = o.delta;
  if (cmd->count("--lambda")) cfg.lambda = o.lambda;
  if (cmd->count("--surrogate")) cfg.surrogate.kind = fairsqp::surrogate_kind_from_string(o.surrogate);
  if (cmd->count("--alpha")) cfg.surrogate.alpha = o.alpha;
  if (cmd->count("--mu")) cfg.surrogate.mu = o.mu;
  if (cmd->count("--epochs")) cfg.epochs = o.epochs;
  if (cmd->count("--lr")) cfg.lr = o.lr;
  if (cmd->count("--batch")) {
    if (o.batch == "full") {
      cfg.full_batch = true;
    } else {
      const auto sizes = parse_widths(o.batch);
      if (sizes.size() != 2) throw std::runtime_error("--batch takes \"full\" or n0,n1");
      cfg.full_batch = false;
      cfg.batch_n0 = sizes[0];
      cfg.batch_n1 = sizes[1];
    }
  }
  if (cmd->count("--hidden"))
    cfg.hidden = o.hidden == "none" ? std::vector<fairsqp::Index>{} : parse_widths(o.hidden);
  if (cmd->count("--subsample")) cfg.subsample = o.subsample;
  if (cmd->count("--seed")) cfg.seed = o.seed;
  if (cmd->count("--split-seed")) cfg.split_seed = o.split_seed;
  if (cmd->count("--eval-stride")) cfg.eval_stride = o.eval_stride;
  if (cmd->count("--out")) cfg.out_dir = o.out_dir;
  if (cmd->count("--deterministic")) cfg.deterministic = true;
  return cfg;
}

void print_run_summary(const fairsqp::TrainReport& r) {
  std::cout << fairsqp::to_json(r).dump(2) << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained fair-classifier training toolkit"};
  app.require_subcommand(1);

  CliOverrides o;
  std::string stats_split = "train";
  std::string grid_csv;
  int workers = 0;

  auto* stats_cmd = app.add_subcommand("stats", "Dataset overview statistics");
  add_common_options(stats_cmd, o);
  stats_cmd->add_option("--split", stats_split, "train, test, or full");

  auto* train_cmd = app.add_subcommand("train", "Single training run");
  add_common_options(train_cmd, o);

  auto* sweep_cmd = app.add_subcommand("sweep", "Grid of runs over delta (or lambda)");
  add_common_options(sweep_cmd, o);
  sweep_cmd->add_option("--grid", grid_csv, "comma list of grid values")->required();
  sweep_cmd->add_option("--workers", workers, "max concurrent runs (0 = auto)");

  auto* multi_cmd = app.add_subcommand("multi", "Joint DI + EI constrained run");
  add_common_options(multi_cmd, o);

  auto* gen_cmd = app.add_subcommand("gen-data", "Generate the stand-in dataset files");
  std::string gen_dir = "data";
  gen_cmd->add_option("--data-dir", gen_dir, "target directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*stats_cmd) {
      const auto cfg = build_config(stats_cmd, o);
      fairsqp::Dataset full = fairsqp::load_experiment_dataset(cfg);
      fairsqp::Dataset chosen = std::move(full);
      if (stats_split != "full") {
        auto [train, test] = fairsqp::split(chosen, cfg.train_ratio, cfg.split_seed);
        chosen = stats_split == "train" ? std::move(train) : std::move(test);
      }
      std::cout << fairsqp::to_json(fairsqp::compute_stats(chosen)).dump(2) << std::endl;
    } else if (*train_cmd) {
      print_run_summary(fairsqp::run_single(build_config(train_cmd, o)));
    } else if (*sweep_cmd) {
      const auto cfg = build_config(sweep_cmd, o);
      const auto result = fairsqp::run_sweep(cfg, parse_grid(grid_csv), workers);
      for (const auto& [v, r] : result.runs)
        std::cout << "value=" << v << " delta_hat_hard=" << r.train_fairness.delta_hat_hard
                  << " c_di_hard=" << r.train_fairness.c_di_hard
                  << " train_acc=" << r.train_acc << " test_acc=" << r.test_acc << "\n";
      for (const auto& [v, err] : result.failures)
        std::cout << "value=" << v << " FAILED: " << err << "\n";
      if (!result.failures.empty()) return 1;
    } else if (*multi_cmd) {
      const auto cfg = build_config(multi_cmd, o);
      print_run_summary(fairsqp::run_multi_constraint(cfg, cfg.delta));
    } else if (*gen_cmd) {
      const auto law = fairsqp::synth::generate_law(gen_dir);
      const auto adult = fairsqp::synth::generate_adult(gen_dir);
      std::cout << "wrote " << law.csv_path << " and " << adult.csv_path << std::endl;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
