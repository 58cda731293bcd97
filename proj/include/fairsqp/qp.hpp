#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fairsqp/errors.hpp"

namespace fairsqp {

// Inequality-constrained quadratic subproblem
//   min_d  g'd + 1/2 d'Hd   s.t.  J d <= -r
// with diagonal positive definite H. Rows encode finite constraint bounds
// (a row per finite lower/upper bound); rows with infinite bounds are never
// emitted. row_function maps each row to the scalar constraint function it
// bounds, so the active-set enumeration can skip pairs that bound the same
// function from both sides (those can never be tight together).
struct QpSubproblem {
  Eigen::VectorXd g;
  Eigen::VectorXd h_diag;
  Eigen::MatrixXd J;
  Eigen::VectorXd r;
  std::vector<int> row_function;

  Eigen::Index rows() const { return J.rows(); }

  void validate() const {
    if (h_diag.size() != g.size()) throw std::invalid_argument("QpSubproblem: g/h size mismatch");
    if ((h_diag.array() <= 0.0).any())
      throw std::invalid_argument("QpSubproblem: curvature diagonal must be strictly positive");
    if (J.rows() != r.size()) throw std::invalid_argument("QpSubproblem: J/r row mismatch");
    if (J.rows() > 0 && J.cols() != g.size())
      throw std::invalid_argument("QpSubproblem: J column count != variable count");
    if (static_cast<Eigen::Index>(row_function.size()) != J.rows())
      throw std::invalid_argument("QpSubproblem: row_function size != row count");
    if (J.rows() > 4) throw std::invalid_argument("QpSubproblem: solver handles at most 4 rows");
  }
};

struct KktSolution {
  Eigen::VectorXd d;
  Eigen::VectorXd y;  // multipliers of the active rows, in active order
};

struct QpSolution {
  Eigen::VectorXd d;
  std::vector<int> active;
  Eigen::VectorXd y;
  double objective = 0.0;
};

namespace detail {

inline double qp_objective(const QpSubproblem& qp, const Eigen::VectorXd& d) {
  return qp.g.dot(d) + 0.5 * d.dot((qp.h_diag.array() * d.array()).matrix());
}

constexpr double kFeasibilityTol = 1e-8;
constexpr double kConditionLimit = 1e12;
constexpr double kDualTol = 1e-9;

inline bool qp_feasible(const QpSubproblem& qp, const Eigen::VectorXd& d) {
  for (Eigen::Index i = 0; i < qp.rows(); ++i)
    if (qp.J.row(i).dot(d) + qp.r[i] > kFeasibilityTol) return false;
  return true;
}

}  // namespace detail

// Equality-constrained solve for a fixed active set, via the Schur
// complement S = J_A H^-1 J_A' (at most 4x4):
//   y = S^-1 (r_A - J_A H^-1 g),  d = -H^-1 (g + J_A' y).
inline KktSolution solve_kkt(const QpSubproblem& qp, const std::vector<int>& active) {
  if (active.empty()) {
    KktSolution sol;
    sol.d = -(qp.g.array() / qp.h_diag.array()).matrix();
    sol.y.resize(0);
    return sol;
  }
  const Eigen::Index m = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd Ja(m, qp.g.size());
  Eigen::VectorXd ra(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    Ja.row(a) = qp.J.row(active[static_cast<size_t>(a)]);
    ra[a] = qp.r[active[static_cast<size_t>(a)]];
  }
  const Eigen::ArrayXd hinv = qp.h_diag.array().inverse();
  const Eigen::MatrixXd JaHinv = Ja.array().rowwise() * hinv.transpose();
  const Eigen::MatrixXd S = JaHinv * Ja.transpose();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()[0];
  const double smin = svd.singularValues()[m - 1];
  if (!(smin > 0.0) || smax / smin > detail::kConditionLimit) {
    std::ostringstream oss;
    oss << "active set {";
    for (size_t a = 0; a < active.size(); ++a) oss << (a ? "," : "") << active[a];
    oss << "} has Schur condition " << (smin > 0.0 ? smax / smin : std::nan(""));
    throw DegenerateActiveSetError(oss.str());
  }
  KktSolution sol;
  sol.y = svd.solve(ra - JaHinv * qp.g);
  sol.d = -((qp.g + Ja.transpose() * sol.y).array() * hinv).matrix();
  return sol;
}

namespace detail {

inline void consider(const QpSubproblem& qp, const std::vector<int>& active, bool strict,
                     bool& found, QpSolution& best) {
  KktSolution kkt;
  try {
    kkt = solve_kkt(qp, active);
  } catch (const DegenerateActiveSetError&) {
    return;
  }
  if (!qp_feasible(qp, kkt.d)) return;
  if (strict && kkt.y.size() > 0 && kkt.y.minCoeff() < -kDualTol) return;
  const double obj = qp_objective(qp, kkt.d);
  if (!found || obj < best.objective) {
    best.d = kkt.d;
    best.active = active;
    best.y = kkt.y;
    best.objective = obj;
    found = true;
  }
}

}  // namespace detail

// Active-set enumeration: the unconstrained minimizer first, then single
// rows, then row pairs bounding distinct functions, taking at each stage
// the feasible candidate with the least model objective. In strict mode
// (used by tests and verification) every subset is tried and candidates
// must also pass the dual sign condition, which pins the exact optimum.
inline QpSolution solve_qp(const QpSubproblem& qp, bool strict = false) {
  qp.validate();
  const int n_rows = static_cast<int>(qp.rows());
  QpSolution best;
  bool found = false;

  if (!strict) {
    detail::consider(qp, {}, false, found, best);
    if (found) return best;
    for (int i = 0; i < n_rows; ++i) detail::consider(qp, {i}, false, found, best);
    if (found) return best;
    for (int i = 0; i < n_rows; ++i)
      for (int j = i + 1; j < n_rows; ++j) {
        if (qp.row_function[static_cast<size_t>(i)] == qp.row_function[static_cast<size_t>(j)])
          continue;
        detail::consider(qp, {i, j}, false, found, best);
      }
    if (found) return best;
  } else {
    const int max_size = static_cast<int>(std::min<Eigen::Index>(n_rows, qp.g.size()));
    for (int size = 0; size <= max_size; ++size) {
      // enumerate subsets of the given size lexicographically
      std::vector<int> idx(static_cast<size_t>(size));
      for (int k = 0; k < size; ++k) idx[static_cast<size_t>(k)] = k;
      while (true) {
        if (size == 0) {
          detail::consider(qp, {}, true, found, best);
          break;
        }
        detail::consider(qp, idx, true, found, best);
        int k = size - 1;
        while (k >= 0 && idx[static_cast<size_t>(k)] == n_rows - size + k) --k;
        if (k < 0) break;
        ++idx[static_cast<size_t>(k)];
        for (int j = k + 1; j < size; ++j)
          idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
      }
    }
    if (found) return best;
  }

  std::ostringstream oss;
  oss << "no feasible active-set candidate; residuals r = [";
  for (Eigen::Index i = 0; i < qp.r.size(); ++i) oss << (i ? ", " : "") << qp.r[i];
  oss << "], |g| = " << qp.g.norm();
  throw QpInfeasibleError(oss.str());
}

}  // namespace fairsqp
