#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairsqp/rng.hpp"
#include "fairsqp/surrogate.hpp"

namespace fairsqp {

using Index = Eigen::Index;

// Fully-connected net with leaky-ReLU hidden layers and a single logistic
// output unit. Parameters live in one flat vector (per layer: column-major
// weight block, then bias block) so the optimizer can treat the model as a
// plain function R^P -> R^B.
struct MlpSpec {
  std::vector<Index> widths;  // input width, hidden widths..., 1
  double leak = 0.01;

  Index layers() const { return static_cast<Index>(widths.size()) - 1; }

  void validate() const {
    if (widths.size() < 2) throw std::invalid_argument("MlpSpec: need at least input and output");
    if (widths.back() != 1) throw std::invalid_argument("MlpSpec: output width must be 1");
    for (Index w : widths)
      if (w < 1) throw std::invalid_argument("MlpSpec: widths must be positive");
  }
};

inline Index param_count(const MlpSpec& spec) {
  Index p = 0;
  for (size_t l = 0; l + 1 < spec.widths.size(); ++l)
    p += spec.widths[l + 1] * (spec.widths[l] + 1);
  return p;
}

// Glorot-uniform weights, zero biases.
inline Eigen::VectorXd init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Eigen::VectorXd w(param_count(spec));
  SplitMix64 rng(seed);
  Index off = 0;
  for (size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const Index m = spec.widths[l], n = spec.widths[l + 1];
    const double r = std::sqrt(6.0 / double(m + n));
    for (Index k = 0; k < n * m; ++k) w[off + k] = r * (2.0 * rng.uniform() - 1.0);
    off += n * m;
    w.segment(off, n).setZero();
    off += n;
  }
  return w;
}

// Everything backward passes need from a forward pass. acts[l] is the input
// to layer l (widths[l] x B); pre[l] its preactivation (widths[l+1] x B).
struct ForwardCache {
  std::vector<Eigen::MatrixXd> acts;
  std::vector<Eigen::MatrixXd> pre;
  Eigen::VectorXd outputs;
};

// X has one example per row. Returns the logistic outputs in (0,1).
inline Eigen::VectorXd forward(const MlpSpec& spec, const Eigen::VectorXd& w,
                               const Eigen::MatrixXd& X, ForwardCache* cache = nullptr) {
  const Index L = spec.layers();
  if (X.cols() != spec.widths[0])
    throw std::invalid_argument("forward: input has " + std::to_string(X.cols()) +
                                " columns, model expects " + std::to_string(spec.widths[0]));
  if (w.size() != param_count(spec))
    throw std::invalid_argument("forward: parameter vector has wrong size");

  Eigen::MatrixXd a = X.transpose();
  if (cache) {
    cache->acts.assign(static_cast<size_t>(L), Eigen::MatrixXd());
    cache->pre.assign(static_cast<size_t>(L), Eigen::MatrixXd());
  }
  Index off = 0;
  for (Index l = 0; l < L; ++l) {
    const Index m = spec.widths[static_cast<size_t>(l)];
    const Index n = spec.widths[static_cast<size_t>(l) + 1];
    Eigen::Map<const Eigen::MatrixXd> W(w.data() + off, n, m);
    Eigen::Map<const Eigen::VectorXd> b(w.data() + off + n * m, n);
    off += n * (m + 1);
    if (cache) cache->acts[static_cast<size_t>(l)] = a;
    Eigen::MatrixXd z = (W * a).colwise() + b;
    if (cache) cache->pre[static_cast<size_t>(l)] = z;
    if (l + 1 < L) {
      a = z.unaryExpr([&spec](double v) { return v > 0.0 ? v : spec.leak * v; });
    } else {
      a = z.unaryExpr([](double v) { return stable_sigmoid(v); });
    }
  }
  Eigen::VectorXd out = a.row(0).transpose();
  if (cache) cache->outputs = out;
  return out;
}

// Gradient of sum_i seed_i * z_out_i with respect to the flat parameters,
// where z_out is the output preactivation. Loss and constraint gradients
// both reduce to a choice of seed.
inline Eigen::VectorXd backprop_preact(const MlpSpec& spec, const Eigen::VectorXd& w,
                                       const ForwardCache& cache, const Eigen::VectorXd& seed) {
  const Index L = spec.layers();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(w.size());
  Eigen::MatrixXd delta = seed.transpose();  // 1 x B

  std::vector<Index> offsets(static_cast<size_t>(L));
  Index off = 0;
  for (Index l = 0; l < L; ++l) {
    offsets[static_cast<size_t>(l)] = off;
    off += spec.widths[static_cast<size_t>(l) + 1] * (spec.widths[static_cast<size_t>(l)] + 1);
  }

  for (Index l = L - 1; l >= 0; --l) {
    const Index m = spec.widths[static_cast<size_t>(l)];
    const Index n = spec.widths[static_cast<size_t>(l) + 1];
    const Index o = offsets[static_cast<size_t>(l)];
    Eigen::Map<Eigen::MatrixXd>(grad.data() + o, n, m) =
        delta * cache.acts[static_cast<size_t>(l)].transpose();
    Eigen::Map<Eigen::VectorXd>(grad.data() + o + n * m, n) = delta.rowwise().sum();
    if (l > 0) {
      Eigen::Map<const Eigen::MatrixXd> W(w.data() + o, n, m);
      delta = (W.transpose() * delta).array() *
              cache.pre[static_cast<size_t>(l) - 1]
                  .unaryExpr([&spec](double v) { return v > 0.0 ? 1.0 : spec.leak; })
                  .array();
    }
  }
  return grad;
}

// Gradient of sum_i v_i * o_i: the logistic derivative folds the output
// weights into a preactivation seed.
inline Eigen::VectorXd output_weighted_grad(const MlpSpec& spec, const Eigen::VectorXd& w,
                                            const ForwardCache& cache, const Eigen::VectorXd& v) {
  const Eigen::VectorXd seed =
      v.array() * cache.outputs.array() * (1.0 - cache.outputs.array());
  return backprop_preact(spec, w, cache, seed);
}

// Per-example output gradients, one row per example. O(B*P) memory; meant
// for small-scale checks, the optimizer itself never materializes this.
inline Eigen::MatrixXd output_grads(const MlpSpec& spec, const Eigen::VectorXd& w,
                                    const ForwardCache& cache) {
  const Index B = cache.outputs.size();
  Eigen::MatrixXd G(B, w.size());
  for (Index i = 0; i < B; ++i) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(B);
    v[i] = 1.0;
    G.row(i) = output_weighted_grad(spec, w, cache, v).transpose();
  }
  return G;
}

// Mean binary cross-entropy. Outputs are clamped away from {0,1} in the
// loss value; the gradient seed uses the exact logistic-composition form.
inline double bce_loss(const Eigen::VectorXd& outputs, const Eigen::VectorXi& labels) {
  if (outputs.size() != labels.size())
    throw std::invalid_argument("bce_loss: outputs/labels size mismatch");
  double total = 0.0;
  for (Index i = 0; i < outputs.size(); ++i) {
    const double o = std::min(1.0 - 1e-12, std::max(1e-12, outputs[i]));
    total += labels[i] == 1 ? -std::log(o) : -std::log(1.0 - o);
  }
  return total / double(outputs.size());
}

inline Eigen::VectorXd bce_preact_seed(const Eigen::VectorXd& outputs,
                                       const Eigen::VectorXi& labels) {
  Eigen::VectorXd seed(outputs.size());
  for (Index i = 0; i < outputs.size(); ++i)
    seed[i] = (outputs[i] - double(labels[i])) / double(outputs.size());
  return seed;
}

inline double hard_accuracy(const Eigen::VectorXd& outputs, const Eigen::VectorXi& labels) {
  Index hits = 0;
  for (Index i = 0; i < outputs.size(); ++i)
    if ((outputs[i] > 0.5 ? 1 : 0) == labels[i]) ++hits;
  return double(hits) / double(outputs.size());
}

}  // namespace fairsqp
