#pragma once

// Exchangeable random weight vectors for the weighted bootstrap, plus the
// empirical statistics used to diagnose the weight conditions. Both schemes
// produce vectors summing to n: multinomial counts of n uniform cell draws
// (target constant c = 1), and subsampling without replacement with m
// entries equal to n/m (c = sqrt(n/m - 1)).

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "stosearch/regression.hpp"
#include "stosearch/rng.hpp"

namespace stosearch {

enum class WeightScheme { multinomial, subsample };

inline const char* to_string(WeightScheme s) {
  return s == WeightScheme::multinomial ? "multinomial" : "subsample";
}

struct WeightVector {
  Eigen::VectorXd w;
  WeightScheme scheme;
  double c_nominal = 1.0;
  std::optional<Eigen::Index> m;  // subsample size, subsample scheme only
};

// Category counts of n uniform draws over n cells, so the sum is exactly n
// at every sample size (no normal approximation).
inline WeightVector multinomial_weights(Eigen::Index n, RandomStream& rng) {
  if (n < 2) throw std::invalid_argument("multinomial_weights: n < 2");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    w(static_cast<Eigen::Index>(rng.uniform_index(
        static_cast<std::uint64_t>(n)))) += 1.0;
  return WeightVector{std::move(w), WeightScheme::multinomial, 1.0,
                      std::nullopt};
}

// Uniform random permutation of (n/m, ..., n/m, 0, ..., 0) with m nonzero
// entries.
inline WeightVector subsample_weights(Eigen::Index n, Eigen::Index m,
                                      RandomStream& rng) {
  if (n < 2) throw std::invalid_argument("subsample_weights: n < 2");
  if (m < 1 || m > n - 1)
    throw std::invalid_argument("subsample_weights: m outside [1, n-1]");
  const double value = static_cast<double>(n) / static_cast<double>(m);
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index i = 0; i < m; ++i) v[static_cast<std::size_t>(i)] = value;
  rng.shuffle(v);
  Eigen::VectorXd w =
      Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(n));
  const double c = std::sqrt(value - 1.0);
  return WeightVector{std::move(w), WeightScheme::subsample, c, m};
}

// Subsample size realizing a target constant c: m = round(n / (c^2 + 1)),
// clamped to the admissible range.
inline Eigen::Index subsample_size_for_c(Eigen::Index n, double c) {
  if (n < 2) throw std::invalid_argument("subsample_size_for_c: n < 2");
  if (!(c > 0.0)) throw std::invalid_argument("subsample_size_for_c: c <= 0");
  const auto m = static_cast<Eigen::Index>(
      std::llround(static_cast<double>(n) / (c * c + 1.0)));
  return std::max<Eigen::Index>(1, std::min(n - 1, m));
}

// n^{-1} sum (w_i - 1)^2, the empirical counterpart of the scheme constant
// c^2.
inline double weight_variance_statistic(const WeightVector& wv) {
  return (wv.w.array() - 1.0).square().sum() /
         static_cast<double>(wv.w.size());
}

// n^{-1} sum w_i^2 1{w_i >= K}; nonincreasing in K, zero once K exceeds the
// largest entry.
inline double weight_tail_statistic(const WeightVector& wv, double threshold) {
  if (threshold < 0.0)
    throw std::invalid_argument("weight_tail_statistic: negative threshold");
  double s = 0.0;
  for (Eigen::Index i = 0; i < wv.w.size(); ++i)
    if (wv.w(i) >= threshold) s += wv.w(i) * wv.w(i);
  return s / static_cast<double>(wv.w.size());
}

// Draw one weight vector under a scheme descriptor. For the subsample
// scheme the size m is derived from the requested c; the multinomial scheme
// has c = 1 by construction.
inline WeightVector draw_weights(WeightScheme scheme, double c,
                                 Eigen::Index n, RandomStream& rng) {
  if (scheme == WeightScheme::multinomial) return multinomial_weights(n, rng);
  return subsample_weights(n, subsample_size_for_c(n, c), rng);
}

// Realized constant of a scheme at sample size n (multinomial: exactly 1;
// subsample: sqrt(n/m - 1) for the rounded m).
inline double effective_c(WeightScheme scheme, double c, Eigen::Index n) {
  if (scheme == WeightScheme::multinomial) return 1.0;
  const Eigen::Index m = subsample_size_for_c(n, c);
  return std::sqrt(static_cast<double>(n) / static_cast<double>(m) - 1.0);
}

inline Estimate wls_fit(const RegressionProblem& problem,
                        const WeightVector& wv) {
  return wls_fit(problem, wv.w);
}

}  // namespace stosearch
