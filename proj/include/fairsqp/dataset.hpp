#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fairsqp/errors.hpp"
#include "fairsqp/rng.hpp"

namespace fairsqp {

using Index = Eigen::Index;

// Feature-label-group tuples {(x_i, s_i, y_i)}. The sensitive attribute is
// also one of the feature columns, so models can condition on it.
struct Dataset {
  Eigen::MatrixXd features;       // N x F, finite after preprocessing
  Eigen::VectorXi sensitive;      // values in {0,1}
  Eigen::VectorXi labels;         // values in {0,1}
  std::vector<Index> group0;      // row indices with s == 0
  std::vector<Index> group1;      // row indices with s == 1
  std::vector<std::string> feature_names;
  std::vector<std::uint8_t> continuous_mask;  // columns subject to z-scoring
  std::string name;

  Index n() const { return features.rows(); }
  Index f() const { return features.cols(); }
  Index n0() const { return static_cast<Index>(group0.size()); }
  Index n1() const { return static_cast<Index>(group1.size()); }

  // Rebuild group index lists and check invariants; call after any
  // construction or row-level mutation.
  void finalize() {
    const Index rows = features.rows();
    if (rows == 0) throw InvalidDatasetError(name + ": empty dataset");
    if (sensitive.size() != rows || labels.size() != rows)
      throw InvalidDatasetError(name + ": feature/label/sensitive length mismatch");
    group0.clear();
    group1.clear();
    for (Index i = 0; i < rows; ++i) {
      if (sensitive[i] != 0 && sensitive[i] != 1)
        throw InvalidDatasetError(name + ": sensitive values must be 0/1");
      if (labels[i] != 0 && labels[i] != 1)
        throw InvalidDatasetError(name + ": labels must be 0/1");
      (sensitive[i] == 0 ? group0 : group1).push_back(i);
    }
    if (group0.empty() || group1.empty())
      throw InvalidDatasetError(name + ": both sensitive groups must be nonempty");
    if (!features.allFinite())
      throw InvalidDatasetError(name + ": non-finite feature values");
  }

  Dataset rows_subset(const std::vector<Index>& idx) const {
    Dataset out;
    out.features.resize(static_cast<Index>(idx.size()), features.cols());
    out.sensitive.resize(static_cast<Index>(idx.size()));
    out.labels.resize(static_cast<Index>(idx.size()));
    for (Index k = 0; k < static_cast<Index>(idx.size()); ++k) {
      out.features.row(k) = features.row(idx[static_cast<size_t>(k)]);
      out.sensitive[k] = sensitive[idx[static_cast<size_t>(k)]];
      out.labels[k] = labels[idx[static_cast<size_t>(k)]];
    }
    out.feature_names = feature_names;
    out.continuous_mask = continuous_mask;
    out.name = name;
    out.finalize();
    return out;
  }
};

// Empirical counterparts of the dataset-overview table: cell counts, the
// conditional probabilities, and the rote-learning fairness scores (what a
// model that predicts every label perfectly would achieve).
struct DatasetStats {
  long n = 0;
  long n_s0 = 0, n_s1 = 0;
  long n_y0 = 0, n_y1 = 0;
  long n_y1_s1 = 0, n_y1_s0 = 0, n_y0_s1 = 0, n_y0_s0 = 0;
  double p_y1_given_s1 = std::numeric_limits<double>::quiet_NaN();
  double p_y1_given_s0 = std::numeric_limits<double>::quiet_NaN();
  double p_s1_given_y1 = std::numeric_limits<double>::quiet_NaN();
  double p_s0_given_y1 = std::numeric_limits<double>::quiet_NaN();
  double dp_rote = std::numeric_limits<double>::quiet_NaN();
  double eo_rote = std::numeric_limits<double>::quiet_NaN();
  double di_rote = std::numeric_limits<double>::quiet_NaN();
  double all_zero_acc = std::numeric_limits<double>::quiet_NaN();
  double all_one_acc = std::numeric_limits<double>::quiet_NaN();
};

inline DatasetStats compute_stats(const Dataset& data) {
  DatasetStats st;
  st.n = static_cast<long>(data.n());
  for (Index i = 0; i < data.n(); ++i) {
    const bool s = data.sensitive[i] == 1;
    const bool y = data.labels[i] == 1;
    (s ? st.n_s1 : st.n_s0)++;
    (y ? st.n_y1 : st.n_y0)++;
    if (y && s) st.n_y1_s1++;
    if (y && !s) st.n_y1_s0++;
    if (!y && s) st.n_y0_s1++;
    if (!y && !s) st.n_y0_s0++;
  }
  if (st.n_s1 > 0) st.p_y1_given_s1 = double(st.n_y1_s1) / double(st.n_s1);
  if (st.n_s0 > 0) st.p_y1_given_s0 = double(st.n_y1_s0) / double(st.n_s0);
  if (st.n_y1 > 0) {
    st.p_s1_given_y1 = double(st.n_y1_s1) / double(st.n_y1);
    st.p_s0_given_y1 = double(st.n_y1_s0) / double(st.n_y1);
    st.eo_rote = std::fabs(st.p_s1_given_y1 - st.p_s0_given_y1);
  }
  if (st.n_s1 > 0 && st.n_s0 > 0) {
    const double p1 = st.p_y1_given_s1, p0 = st.p_y1_given_s0;
    st.dp_rote = std::fabs(p1 - p0);
    if (p0 == 0.0 && p1 == 0.0)
      st.di_rote = 1.0;
    else if (p0 == 0.0 || p1 == 0.0)
      st.di_rote = 0.0;
    else
      st.di_rote = std::min(p0 / p1, p1 / p0);
  }
  st.all_zero_acc = double(st.n_y0) / double(st.n);
  st.all_one_acc = double(st.n_y1) / double(st.n);
  return st;
}

// Deterministic row split: floor(ratio*N) rows into train, remainder into
// test, assignment by a seeded permutation.
inline std::pair<Dataset, Dataset> split(const Dataset& data, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split: ratio must be in (0,1)");
  std::vector<Index> perm(static_cast<size_t>(data.n()));
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<Index>(i);
  seeded_shuffle(perm, seed);
  const size_t n_train = static_cast<size_t>(std::floor(ratio * double(data.n())));
  std::vector<Index> train_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<Index> test_idx(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  return {data.rows_subset(train_idx), data.rows_subset(test_idx)};
}

struct StandardizeParams {
  Eigen::VectorXd mean;  // per column; zero for untouched columns
  Eigen::VectorXd scale; // one for untouched columns
};

// Z-score the continuous columns of both splits using statistics of the
// training split only. Returns the applied transform. Re-running on the
// result is a no-op up to floating error (mean 0, scale 1).
inline StandardizeParams standardize(Dataset& train, Dataset* test) {
  const Index f = train.f();
  StandardizeParams p;
  p.mean = Eigen::VectorXd::Zero(f);
  p.scale = Eigen::VectorXd::Ones(f);
  for (Index j = 0; j < f; ++j) {
    const bool continuous = train.continuous_mask.empty() ||
                            train.continuous_mask[static_cast<size_t>(j)] != 0;
    if (!continuous) continue;
    const double mean = train.features.col(j).mean();
    const double var =
        (train.features.col(j).array() - mean).square().sum() / double(train.n());
    const double sd = std::sqrt(var);
    p.mean[j] = mean;
    p.scale[j] = sd > 1e-12 ? sd : 1.0;
    train.features.col(j) = (train.features.col(j).array() - p.mean[j]) / p.scale[j];
    if (test) test->features.col(j) = (test->features.col(j).array() - p.mean[j]) / p.scale[j];
  }
  return p;
}

}  // namespace fairsqp
