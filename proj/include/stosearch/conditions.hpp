#pragma once

// Regularity-condition diagnostics: plug-in design/error statistics
// (summand-negligibility and Lindeberg forms), the weight-vector statistics,
// and the explicit bound on the mean deviation of a randomly permuted
// weighted sum used to justify them.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "stosearch/regression.hpp"
#include "stosearch/weights.hpp"

namespace stosearch {

struct ConditionReport {
  std::optional<double> gram_gap;  // Frobenius distance of the gram to its
                                   // large-n target, when the target is known
  double d3_stat = 0.0;            // sum L_i min(L_i, 1)
  std::map<double, double> lindeberg;  // delta -> sum L_i 1{L_i > delta}
  std::optional<double> weight_var_stat;         // n^{-1} sum (w_i - 1)^2
  std::map<double, double> weight_tail_stat;     // K -> n^{-1} sum w^2 1{w>=K}
};

// L_i = n^{-1} (1 + e_i^2) ||x_i||^2 with e the supplied errors or
// residuals. The weight statistics are filled when a weight vector is
// supplied; the gram gap when a target matrix is supplied.
inline ConditionReport design_condition_stats(
    const RegressionProblem& problem, const Eigen::VectorXd& errors,
    const std::vector<double>& deltas, const std::vector<double>& tail_ks,
    const std::optional<WeightVector>& weights = std::nullopt,
    const std::optional<Eigen::MatrixXd>& gram_target = std::nullopt) {
  if (errors.size() != problem.n())
    throw std::invalid_argument("design_condition_stats: errors length");
  const Eigen::Index n = problem.n();
  const double dn = static_cast<double>(n);

  ConditionReport report;
  Eigen::VectorXd l(n);
  for (Eigen::Index i = 0; i < n; ++i)
    l(i) = (1.0 + errors(i) * errors(i)) * problem.X.row(i).squaredNorm() / dn;
  for (Eigen::Index i = 0; i < n; ++i)
    report.d3_stat += l(i) * std::min(l(i), 1.0);
  for (double delta : deltas) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (l(i) > delta) s += l(i);
    report.lindeberg[delta] = s;
  }
  if (gram_target)
    report.gram_gap = (gram_matrix(problem) - *gram_target).norm();
  if (weights) {
    report.weight_var_stat = weight_variance_statistic(*weights);
    for (double k : tail_ks)
      report.weight_tail_stat[k] = weight_tail_statistic(*weights, k);
  }
  return report;
}

struct MomentSummary {
  double mean_norm;          // E ||M_i||
  double mean_norm_clamped;  // E ||M_i|| min(||M_i||, 1)
};

struct PermutationSumBound {
  double r_k;    // n^{-1} sum v_i 1{v_i > K}
  double s;      // sum E ||M_i||
  double l;      // sum E ||M_i|| min(||M_i||, 1)
  double bound;  // 2 R(K) S + 2 vbar L + sqrt(n/(n-1) K vbar L)
};

// Upper bound on E || sum V_i M_i - vbar sum E M_i || where V is a uniform
// random permutation of the fixed nonnegative vector v and the M_i are
// independent with the given norm moments.
inline PermutationSumBound permutation_sum_bound(
    const Eigen::VectorXd& v, const std::vector<MomentSummary>& moments,
    double threshold) {
  const Eigen::Index n = v.size();
  if (n < 2) throw std::invalid_argument("permutation_sum_bound: n < 2");
  if (static_cast<Eigen::Index>(moments.size()) != n)
    throw std::invalid_argument("permutation_sum_bound: moments length");
  if (threshold < 0.0)
    throw std::invalid_argument("permutation_sum_bound: K < 0");
  if ((v.array() < 0.0).any())
    throw std::invalid_argument("permutation_sum_bound: v must be >= 0");

  PermutationSumBound out{0.0, 0.0, 0.0, 0.0};
  const double dn = static_cast<double>(n);
  const double vbar = v.sum() / dn;
  for (Eigen::Index i = 0; i < n; ++i)
    if (v(i) > threshold) out.r_k += v(i);
  out.r_k /= dn;
  for (const auto& m : moments) {
    out.s += m.mean_norm;
    out.l += m.mean_norm_clamped;
  }
  out.bound = 2.0 * out.r_k * out.s + 2.0 * vbar * out.l +
              std::sqrt(dn / (dn - 1.0) * threshold * vbar * out.l);
  return out;
}

}  // namespace stosearch
