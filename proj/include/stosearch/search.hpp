#pragma once

// Candidate-set construction (OLS plus randomly weighted LS replicates),
// profile-likelihood search over the candidates, and tuning-constant rules.

#include <Eigen/Dense>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "stosearch/logconcave.hpp"
#include "stosearch/regression.hpp"
#include "stosearch/rng.hpp"
#include "stosearch/special_functions.hpp"
#include "stosearch/weights.hpp"

namespace stosearch {

struct CandidateSet {
  std::vector<Estimate> candidates;  // index 0 is the OLS fit
  int B = 0;
  WeightScheme scheme = WeightScheme::multinomial;
  double c = 1.0;
  std::uint64_t seed = 0;
};

struct SearchResult {
  Eigen::VectorXd theta_hat;          // intercept-recentered winner
  int best_index = 0;
  std::vector<double> profile_values;  // -inf marks skipped candidates
  LogConcaveFit fit;                   // recentered fit at the winner
};

// Candidate b >= 1 draws its weights from substream (seed, b), so for a
// fixed seed the candidate set for B is a prefix of the one for B' > B.
inline CandidateSet build_candidates(const RegressionProblem& problem,
                                     WeightScheme scheme, double c, int B,
                                     std::uint64_t seed) {
  if (B < 0) throw std::invalid_argument("build_candidates: B < 0");
  CandidateSet set;
  set.B = B;
  set.scheme = scheme;
  set.c = c;
  set.seed = seed;
  set.candidates.reserve(static_cast<std::size_t>(B) + 1);
  set.candidates.push_back(ols_fit(problem));
  for (int b = 1; b <= B; ++b) {
    RandomStream rng(seed, static_cast<std::uint64_t>(b));
    set.candidates.push_back(
        wls_fit(problem, draw_weights(scheme, c, problem.n(), rng)));
  }
  return set;
}

namespace detail {

inline int argmax_first(const std::vector<double>& values) {
  int best = -1;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > best_value) {
      best_value = values[i];
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace detail

// Profile-likelihood maximizer over the candidate set. Candidates whose
// residuals are degenerate are skipped with a warning; ties break toward
// the smallest index.
inline SearchResult stochastic_search_fit(const RegressionProblem& problem,
                                          WeightScheme scheme, double c, int B,
                                          std::uint64_t seed,
                                          double tol = 1e-7) {
  if (!problem.intercept_col)
    throw std::invalid_argument(
        "stochastic_search_fit: design has no intercept column");
  const CandidateSet set = build_candidates(problem, scheme, c, B, seed);

  SearchResult result;
  result.profile_values.assign(set.candidates.size(),
                               -std::numeric_limits<double>::infinity());
  for (std::size_t b = 0; b < set.candidates.size(); ++b) {
    try {
      result.profile_values[b] =
          profile_loglik(problem, set.candidates[b].theta, tol);
    } catch (const std::runtime_error&) {
      std::cerr << "warning: candidate b=" << b
                << " skipped (degenerate residuals)\n";
    }
  }
  result.best_index = detail::argmax_first(result.profile_values);
  if (result.best_index < 0 ||
      !std::isfinite(result.profile_values[result.best_index]))
    throw std::runtime_error("no valid candidate");

  const Estimate& winner = set.candidates[result.best_index];
  const LogConcaveFit fit =
      fit_logconcave(residuals(problem, winner.theta), tol);
  auto [recentered, adjusted] =
      recenter_to_mean_zero(fit, winner, problem.intercept_col);
  result.fit = std::move(recentered);
  result.theta_hat = adjusted.theta;
  return result;
}

struct MinDistance {
  double min_all;
  double min_excl0;
};

// min_b sqrt(n) ||theta_b - theta_true||, with and without the OLS entry.
inline MinDistance min_distance_to(const CandidateSet& cands,
                                   const Eigen::VectorXd& theta_true,
                                   Eigen::Index n) {
  const double root_n = std::sqrt(static_cast<double>(n));
  double best_all = std::numeric_limits<double>::infinity();
  double best_excl = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < cands.candidates.size(); ++b) {
    const double d =
        root_n * (cands.candidates[b].theta - theta_true).norm();
    best_all = std::min(best_all, d);
    if (b >= 1) best_excl = std::min(best_excl, d);
  }
  if (cands.B < 1)
    throw std::invalid_argument("min_distance_to: need B >= 1 for min_excl0");
  return {best_all, best_excl};
}

enum class CMethod { unit, median_rule };

// Tuning constant for the weight scheme: 1, or the median of S^2/q with
// S^2 chi-square(q). (A pointwise-optimality argument would suggest the
// square root of that median instead; only the median rule itself is
// implemented.)
inline double choose_c(int q, CMethod method) {
  if (q < 1) throw std::invalid_argument("choose_c: q < 1");
  if (method == CMethod::unit) return 1.0;
  return chi_square_median(q) / static_cast<double>(q);
}

}  // namespace stosearch
