#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fairsqp/csv.hpp"

namespace fairsqp {
namespace synth {

// Deterministic generators for stand-in versions of the two benchmark
// datasets. The real raw files cannot be fetched in every environment, so
// these replicas reproduce what the toolkit's tests and experiments depend
// on: the full-scale sizes, the joint (label, group) cell proportions of the
// published training-split overview table, the post-encoding feature widths
// (11 and 90), and feature signal calibrated so a trained model shows the
// documented accuracy and group-rate behavior. The files go through the same
// CSV + schema path as any real data.

namespace detail {

struct CellRow {
  int y;  // observed label
  int s;  // group
};

// Rows with exact per-(y,s) cell counts, order shuffled deterministically.
inline std::vector<CellRow> cell_rows(long c_y1s1, long c_y1s0, long c_y0s1, long c_y0s0,
                                      std::uint64_t seed) {
  std::vector<CellRow> rows;
  rows.reserve(static_cast<size_t>(c_y1s1 + c_y1s0 + c_y0s1 + c_y0s0));
  for (long i = 0; i < c_y1s1; ++i) rows.push_back({1, 1});
  for (long i = 0; i < c_y1s0; ++i) rows.push_back({1, 0});
  for (long i = 0; i < c_y0s1; ++i) rows.push_back({0, 1});
  for (long i = 0; i < c_y0s0; ++i) rows.push_back({0, 0});
  seeded_shuffle(rows, seed);
  return rows;
}

// Flip probabilities taking the observed label to the latent, learnable one.
// Calibrated so that P(latent = 1 | s) hits a target rate while a chosen
// fraction of labels disagrees with the latent signal (the accuracy
// ceiling). a = flip rate for observed positives, b = for negatives.
struct LabelNoise {
  double a, b;
  static LabelNoise calibrate(double pi, double target_rate, double noise) {
    LabelNoise n{};
    n.a = (pi - target_rate + noise) / (2.0 * pi);
    n.b = (noise - (pi - target_rate)) / (2.0 * (1.0 - pi));
    return n;
  }
};

}  // namespace detail

struct GeneratedFiles {
  std::string csv_path;
  std::string schema_path;
};

// Law School replica: 20,798 rows, 10 numeric features + binary race
// (11 feature columns after encoding), bar-passage label.
inline GeneratedFiles generate_law(const std::string& dir, std::uint64_t seed = 7) {
  // Training-split cell proportions scaled to the full file; an 80% split
  // then reproduces the published overview numbers within split noise.
  auto rows = detail::cell_rows(16144, 2389, 1350, 915, seed ^ 0x1a57ull);

  const double pi1 = 16144.0 / 17494.0;
  const double pi0 = 2389.0 / 3304.0;
  const auto noise1 = detail::LabelNoise::calibrate(pi1, 0.895, 0.100);
  const auto noise0 = detail::LabelNoise::calibrate(pi0, 0.744, 0.100);

  struct Feat { const char* name; double m; double g; double loc; double scale; };
  // m: loading on the latent label, g: loading on the group, then
  // cosmetic location/scale (z-scoring undoes them).
  static const std::array<Feat, 10> feats = {{
      {"decile1b", 0.85, 0.10, 5.5, 1.0},
      {"decile3", 0.75, 0.05, 5.5, 1.0},
      {"lsat", 1.20, 0.40, 36.0, 4.0},
      {"ugpa", 0.65, 0.15, 3.2, 0.3},
      {"zfygpa", 0.95, 0.10, 0.0, 1.0},
      {"zgpa", 1.05, 0.10, 0.0, 1.0},
      {"fulltime", 0.35, 0.05, 1.0, 0.2},
      {"fam_inc", 0.40, 0.45, 3.5, 0.9},
      {"male", 0.00, 0.00, 0.5, 0.5},
      {"tier", 0.30, 0.35, 3.0, 0.8},
  }};

  SplitMix64 rng(seed);
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir + "/law.csv");
  if (!csv) throw std::runtime_error("generate_law: cannot write to " + dir);
  for (const auto& ft : feats) csv << ft.name << ",";
  csv << "race,pass_bar\n";
  csv.precision(6);
  for (const auto& row : rows) {
    const auto& nz = row.s == 1 ? noise1 : noise0;
    const bool flip = rng.bernoulli(row.y == 1 ? nz.a : nz.b);
    const int latent = flip ? 1 - row.y : row.y;
    const double z = latent == 1 ? 1.0 : -1.0;
    const double g = row.s == 1 ? 1.0 : -1.0;
    for (const auto& ft : feats) {
      const double v = ft.m * z + ft.g * g + rng.normal();
      csv << ft.loc + ft.scale * v << ",";
    }
    csv << (row.s == 1 ? "white" : "nonwhite") << "," << row.y << "\n";
  }
  csv.close();

  DataSchema schema;
  schema.label_column = "pass_bar";
  schema.label_positive = "1";
  schema.sensitive_column = "race";
  schema.sensitive_positive = "white";
  std::ofstream sj(dir + "/law.schema.json");
  sj << schema.to_json().dump(2) << "\n";
  return {dir + "/law.csv", dir + "/law.schema.json"};
}

// Adult census replica: 32,561 rows, 5 continuous + 7 categorical columns +
// binary sex; 90 feature columns after one-hot encoding.
inline GeneratedFiles generate_adult(const std::string& dir, std::uint64_t seed = 11) {
  auto rows = detail::cell_rows(6739, 1204, 15057, 9561, seed ^ 0xade1ull);

  const double pi1 = 6739.0 / 21796.0;
  const double pi0 = 1204.0 / 10765.0;
  const auto noise1 = detail::LabelNoise::calibrate(pi1, 0.300, 0.10);
  const auto noise0 = detail::LabelNoise::calibrate(pi0, 0.112, 0.06);

  struct Cont { const char* name; double m; double g; double loc; double scale; };
  static const std::array<Cont, 5> conts = {{
      {"age", 0.55, 0.15, 38.0, 11.0},
      {"education_num", 0.95, 0.10, 10.0, 2.5},
      {"capital_gain", 0.80, 0.10, 1000.0, 2500.0},
      {"capital_loss", 0.25, 0.00, 90.0, 300.0},
      {"hours_per_week", 0.70, 0.20, 40.0, 11.0},
  }};

  struct Cat { const char* name; std::vector<std::string> levels; double ky; double ks; };
  static const std::vector<Cat> cats = {
      {"workclass",
       {"Private", "Self-emp-not-inc", "Self-emp-inc", "Federal-gov", "Local-gov", "State-gov",
        "Without-pay", "Never-worked", "Other"},
       0.4, 0.2},
      {"education",
       {"Preschool", "1st-4th", "5th-6th", "7th-8th", "9th", "10th", "11th", "12th", "HS-grad",
        "Some-college", "Assoc-voc", "Assoc-acdm", "Bachelors", "Masters", "Prof-school",
        "Doctorate"},
       1.0, 0.3},
      {"marital_status",
       {"Never-married", "Married-civ-spouse", "Divorced", "Separated", "Widowed",
        "Married-spouse-absent", "Married-AF-spouse"},
       1.2, 0.5},
      {"occupation",
       {"Priv-house-serv", "Handlers-cleaners", "Other-service", "Farming-fishing",
        "Machine-op-inspct", "Adm-clerical", "Transport-moving", "Craft-repair", "Sales",
        "Tech-support", "Protective-serv", "Armed-Forces", "Exec-managerial", "Prof-specialty",
        "Unknown"},
       0.8, 0.4},
      {"relationship",
       {"Own-child", "Other-relative", "Unmarried", "Not-in-family", "Wife", "Husband"},
       1.1, 0.6},
      {"race", {"Amer-Indian-Eskimo", "Other", "Black", "Asian-Pac-Islander", "White"}, 0.2, 0.8},
      {"native_country",
       {"United-States", "Mexico", "Philippines", "Germany", "Canada", "Puerto-Rico", "India",
        "Cuba", "England", "China", "Jamaica", "South", "Italy", "Dominican-Republic", "Japan",
        "Guatemala", "Poland", "Vietnam", "Columbia", "Haiti", "Portugal", "Taiwan", "Iran",
        "Nicaragua", "Greece", "France"},
       0.2, 0.2},
  };

  SplitMix64 rng(seed);
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir + "/adult.csv");
  if (!csv) throw std::runtime_error("generate_adult: cannot write to " + dir);
  for (const auto& c : conts) csv << c.name << ",";
  for (const auto& c : cats) csv << c.name << ",";
  csv << "sex,income\n";
  csv.precision(6);
  std::vector<double> logits;
  for (const auto& row : rows) {
    const auto& nz = row.s == 1 ? noise1 : noise0;
    const bool flip = rng.bernoulli(row.y == 1 ? nz.a : nz.b);
    const int latent = flip ? 1 - row.y : row.y;
    const double z = latent == 1 ? 1.0 : -1.0;
    const double g = row.s == 1 ? 1.0 : -1.0;
    for (const auto& c : conts) {
      const double v = c.m * z + c.g * g + rng.normal();
      csv << c.loc + c.scale * v << ",";
    }
    for (const auto& c : cats) {
      const size_t L = c.levels.size();
      logits.assign(L, 0.0);
      for (size_t l = 0; l < L; ++l) {
        const double u = L > 1 ? 2.0 * (double(l) / double(L - 1)) - 1.0 : 0.0;
        logits[l] = c.ky * u * z + c.ks * u * g;
      }
      csv << c.levels[static_cast<size_t>(rng.categorical(logits))] << ",";
    }
    csv << (row.s == 1 ? "Male" : "Female") << "," << (row.y == 1 ? ">50K" : "<=50K") << "\n";
  }
  csv.close();

  DataSchema schema;
  schema.label_column = "income";
  schema.label_positive = ">50K";
  schema.sensitive_column = "sex";
  schema.sensitive_positive = "Male";
  for (const auto& c : cats) schema.categorical[c.name] = c.levels;
  std::ofstream sj(dir + "/adult.schema.json");
  sj << schema.to_json().dump(2) << "\n";
  return {dir + "/adult.csv", dir + "/adult.schema.json"};
}

}  // namespace synth
}  // namespace fairsqp
