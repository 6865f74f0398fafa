#pragma once

// Log-concave maximum likelihood density estimation on a univariate sample
// and the resulting profile log-likelihood for regression residuals.
//
// The estimate maximizes the self-normalizing objective
//
//     G(phi) = (1/n) sum_i phi(r_i) - integral(exp(phi)) + 1
//
// over concave piecewise-linear phi whose kinks lie on the distinct sorted
// sample values. At the optimum integral(exp(phi)) = 1, so phi is a genuine
// log-density. The solver is an active-set method: it maintains the current
// kink set, solves the smooth restricted problem by damped Newton (the
// Hessian couples only neighboring kinks, hence is tridiagonal), removes
// kinks whose concavity constraint becomes tight during the line search,
// and adds the best inactive kink while the directional derivative of the
// corresponding tent perturbation stays positive.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stosearch/regression.hpp"

namespace stosearch {

struct LogConcaveFit {
  Eigen::VectorXd knots;  // kink locations, strictly increasing
  Eigen::VectorXd phi;    // fitted log-density at the knots
  double loglik = 0.0;    // sum of phi over the original sample
  double integral = 1.0;  // integral of exp(phi)
  double mean = 0.0;      // integral of y exp(phi(y))
  double tol = 0.0;
};

struct DensityEval {
  double log_density;
  double density;
  double cdf;
};

namespace detail {

// Normalized exponential moments m_k(d) = integral_0^1 u^k exp(d u) du.
// Near d = 0 the closed forms cancel catastrophically, so a truncated
// series takes over below |d| = 0.02 (both branches are ~1e-12 accurate
// at the crossover).
struct ExpMoments {
  double m0, m1, m2;
};

inline ExpMoments exp_moments(double d) {
  ExpMoments r;
  if (std::abs(d) < 0.02) {
    const double d2 = d * d;
    const double d3 = d2 * d;
    const double d4 = d2 * d2;
    const double d5 = d4 * d;
    r.m0 = 1.0 + d / 2 + d2 / 6 + d3 / 24 + d4 / 120 + d5 / 720;
    r.m1 = 0.5 + d / 3 + d2 / 8 + d3 / 30 + d4 / 144 + d5 / 840;
    r.m2 = 1.0 / 3 + d / 4 + d2 / 10 + d3 / 36 + d4 / 168 + d5 / 960;
  } else {
    const double ed = std::exp(d);
    r.m0 = std::expm1(d) / d;
    r.m1 = (ed * (d - 1.0) + 1.0) / (d * d);
    r.m2 = (ed * (d * d - 2.0 * d + 2.0) - 2.0) / (d * d * d);
  }
  return r;
}

// integral of exp(a + (b-a) s / len) over s in [0, len].
inline double segment_exp_integral(double a, double b, double len) {
  return len * std::exp(a) * exp_moments(b - a).m0;
}

class LogConcaveSolver {
 public:
  LogConcaveSolver(Eigen::VectorXd support, Eigen::VectorXd mass, double tol)
      : t_(std::move(support)), p_(std::move(mass)), tol_(tol) {
    m_ = static_cast<int>(t_.size());
    knots_ = {0, m_ - 1};
    const double range = t_(m_ - 1) - t_(0);
    psi_ = {-std::log(range), -std::log(range)};
  }

  void run() {
    rebuild_linear_coeffs();
    solve_restricted(-1);
    double prev_obj = objective(psi_vec());
    const int max_outer = 4 * m_ + 100;
    for (int outer = 0; outer < max_outer; ++outer) {
      const auto [idx, gain] = best_new_knot();
      if (idx < 0 || gain <= add_threshold()) break;
      insert_knot(idx);
      solve_restricted(idx);
      const double obj = objective(psi_vec());
      const bool settled =
          std::abs(obj - prev_obj) <= tol_ * std::max(1.0, std::abs(obj));
      prev_obj = obj;
      if (settled && std::abs(current_integral() - 1.0) <= tol_) break;
    }
    prune_collinear();
  }

  LogConcaveFit fit(Eigen::Index n_original) const {
    LogConcaveFit f;
    const int k = static_cast<int>(knots_.size());
    f.knots.resize(k);
    f.phi.resize(k);
    for (int i = 0; i < k; ++i) {
      f.knots(i) = t_(knots_[i]);
      f.phi(i) = psi_[i];
    }
    double integral = 0.0, mean = 0.0;
    for (int s = 0; s + 1 < k; ++s) {
      const double len = f.knots(s + 1) - f.knots(s);
      const double base = std::exp(f.phi(s));
      const auto mm = exp_moments(f.phi(s + 1) - f.phi(s));
      const double seg = len * base * mm.m0;
      integral += seg;
      mean += f.knots(s) * seg + len * len * base * mm.m1;
    }
    f.integral = integral;
    f.mean = mean;
    double avg = 0.0;
    for (int i = 0; i < static_cast<int>(a_.size()); ++i) avg += a_[i] * psi_[i];
    f.loglik = static_cast<double>(n_original) * avg;
    f.tol = tol_;
    return f;
  }

 private:
  Eigen::VectorXd t_, p_;
  int m_ = 0;
  double tol_;
  std::vector<int> knots_;
  std::vector<double> psi_;
  std::vector<double> a_;  // linear objective coefficients per knot

  double add_threshold() const { return std::max(1e-12, 1e-4 * tol_); }

  Eigen::Map<const Eigen::VectorXd> psi_vec() const {
    return {psi_.data(), static_cast<Eigen::Index>(psi_.size())};
  }

  void rebuild_linear_coeffs() {
    const int k = static_cast<int>(knots_.size());
    a_.assign(k, 0.0);
    for (int i = 0; i < k; ++i) a_[i] += p_(knots_[i]);
    for (int s = 0; s + 1 < k; ++s) {
      const int lo = knots_[s], hi = knots_[s + 1];
      const double tl = t_(lo), span = t_(hi) - tl;
      for (int j = lo + 1; j < hi; ++j) {
        const double lam = (t_(j) - tl) / span;
        a_[s] += p_(j) * (1.0 - lam);
        a_[s + 1] += p_(j) * lam;
      }
    }
  }

  double exp_total(const Eigen::VectorXd& psi) const {
    const int k = static_cast<int>(knots_.size());
    double total = 0.0;
    for (int s = 0; s + 1 < k; ++s) {
      const double len = t_(knots_[s + 1]) - t_(knots_[s]);
      if (psi(s) > 100.0 || psi(s + 1) > 100.0)
        return std::numeric_limits<double>::infinity();
      total += len * std::exp(psi(s)) * exp_moments(psi(s + 1) - psi(s)).m0;
    }
    return total;
  }

  double objective(const Eigen::VectorXd& psi) const {
    double lin = 0.0;
    for (int i = 0; i < static_cast<int>(a_.size()); ++i) lin += a_[i] * psi(i);
    return lin - exp_total(psi);
  }

  double current_integral() const { return exp_total(psi_vec()); }

  // Gradient of the objective and the (negated, SPD) tridiagonal Hessian.
  void derivatives(Eigen::VectorXd& grad, Eigen::VectorXd& hdiag,
                   Eigen::VectorXd& hoff) const {
    const int k = static_cast<int>(knots_.size());
    grad.setZero(k);
    hdiag.setZero(k);
    hoff.setZero(std::max(0, k - 1));
    for (int i = 0; i < k; ++i) grad(i) = a_[i];
    for (int s = 0; s + 1 < k; ++s) {
      const double len = t_(knots_[s + 1]) - t_(knots_[s]);
      const double base = len * std::exp(psi_[s]);
      const auto mm = exp_moments(psi_[s + 1] - psi_[s]);
      grad(s) -= base * (mm.m0 - mm.m1);
      grad(s + 1) -= base * mm.m1;
      hdiag(s) += base * (mm.m0 - 2.0 * mm.m1 + mm.m2);
      hdiag(s + 1) += base * mm.m2;
      hoff(s) += base * (mm.m1 - mm.m2);
    }
  }

  static Eigen::VectorXd solve_tridiag(Eigen::VectorXd diag,
                                       const Eigen::VectorXd& off,
                                       Eigen::VectorXd rhs) {
    const int k = static_cast<int>(diag.size());
    const double ridge = 1e-13 * diag.maxCoeff() + 1e-300;
    for (int i = 0; i < k; ++i) diag(i) += ridge;
    std::vector<double> c(std::max(0, k - 1));
    for (int i = 0; i + 1 < k; ++i) {
      c[i] = off(i) / diag(i);
      diag(i + 1) -= off(i) * c[i];
      rhs(i + 1) -= c[i] * rhs(i);
    }
    Eigen::VectorXd x(k);
    x(k - 1) = rhs(k - 1) / diag(k - 1);
    for (int i = k - 2; i >= 0; --i) x(i) = rhs(i) / diag(i) - c[i] * x(i + 1);
    return x;
  }

  double slope(int s) const {
    return (psi_[s + 1] - psi_[s]) / (t_(knots_[s + 1]) - t_(knots_[s]));
  }

  // Concavity slack at interior knot i (must stay <= 0).
  double slack(const Eigen::VectorXd& psi, int i) const {
    const double dl = t_(knots_[i]) - t_(knots_[i - 1]);
    const double dr = t_(knots_[i + 1]) - t_(knots_[i]);
    return (psi(i + 1) - psi(i)) / dr - (psi(i) - psi(i - 1)) / dl;
  }

  void remove_knots(const std::vector<int>& positions) {
    // positions are indices into knots_, interior only, descending order
    for (int pos : positions) {
      knots_.erase(knots_.begin() + pos);
      psi_.erase(psi_.begin() + pos);
    }
    rebuild_linear_coeffs();
  }

  // Damped Newton on the current knot set; just_added is the support index
  // of a freshly inserted kink (or -1), used to escape the boundary where
  // its concavity constraint starts out tight.
  void solve_restricted(int just_added) {
    const double gtol = std::min(1e-10, tol_ * 1e-3);
    Eigen::VectorXd grad, hdiag, hoff;
    for (int it = 0; it < 200; ++it) {
      const int k = static_cast<int>(knots_.size());
      derivatives(grad, hdiag, hoff);
      if (grad.lpNorm<Eigen::Infinity>() <= gtol) return;
      Eigen::VectorXd dir = solve_tridiag(hdiag, hoff, grad);

      // Furthest feasible step along dir before a slope inversion.
      double alpha_max = std::numeric_limits<double>::infinity();
      std::vector<int> blockers;
      Eigen::VectorXd psi0 = psi_vec();
      for (int i = 1; i + 1 < k; ++i) {
        const double c0 = slack(psi0, i);
        const double cd = slack(psi0 + dir, i) - c0;
        if (cd > 1e-300) {
          const double ai = std::max(0.0, -c0 / cd);
          if (ai < alpha_max) alpha_max = ai;
        }
      }
      if (alpha_max < 1e-10) {
        // Pushing straight into the boundary. If the fresh kink is the
        // blocker, lift it off the boundary along its own coordinate;
        // otherwise drop the tight kinks and re-solve.
        for (int i = k - 2; i >= 1; --i) {
          const double c0 = slack(psi0, i);
          const double cd = slack(psi0 + dir, i) - c0;
          if (cd > 1e-300 && -c0 / cd < 1e-10) {
            if (knots_[i] == just_added && grad(i) > 0.0) {
              if (coordinate_push(i)) {
                blockers.clear();
                break;
              }
            }
            blockers.push_back(i);
          }
        }
        if (!blockers.empty()) remove_knots(blockers);
        continue;
      }

      const double g_dot_d = grad.dot(dir);
      const double obj0 = objective(psi0);
      double alpha = std::min(1.0, alpha_max);
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Eigen::VectorXd trial = psi0 + alpha * dir;
        const double obj = objective(trial);
        if (std::isfinite(obj) && obj >= obj0 + 1e-4 * alpha * g_dot_d) {
          for (int i = 0; i < k; ++i) psi_[i] = trial(i);
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) return;  // no further numeric progress

      if (alpha == std::min(1.0, alpha_max) && alpha_max <= 1.0) {
        // Step landed on the boundary: deactivate the tight kinks.
        Eigen::VectorXd cur = psi_vec();
        std::vector<int> tight;
        for (int i = static_cast<int>(knots_.size()) - 2; i >= 1; --i) {
          const double sc =
              1e-12 * (1.0 + std::abs(slope(i - 1)) + std::abs(slope(i)));
          if (slack(cur, i) >= -sc) tight.push_back(i);
        }
        if (!tight.empty()) remove_knots(tight);
      }
    }
  }

  // One-dimensional ascent on a single knot value (used when the fresh kink
  // sits on its constraint boundary). Returns true if it moved.
  bool coordinate_push(int i) {
    const int k = static_cast<int>(knots_.size());
    Eigen::VectorXd grad, hdiag, hoff;
    bool moved = false;
    for (int it = 0; it < 30; ++it) {
      derivatives(grad, hdiag, hoff);
      if (grad(i) <= 0.0) break;
      double step = grad(i) / std::max(hdiag(i), 1e-300);
      // Raising psi_i only loosens constraint i; neighbors may tighten.
      Eigen::VectorXd psi0 = psi_vec();
      Eigen::VectorXd dir = Eigen::VectorXd::Zero(k);
      dir(i) = 1.0;
      for (int jn : {i - 1, i + 1}) {
        if (jn >= 1 && jn + 1 < k) {
          const double c0 = slack(psi0, jn);
          const double cd = slack(psi0 + dir, jn) - c0;
          if (cd > 1e-300) step = std::min(step, std::max(0.0, -c0 / cd));
        }
      }
      if (step <= 0.0) break;
      const double obj0 = objective(psi0);
      double alpha = step;
      for (int ls = 0; ls < 40 && alpha > 0.0; ++ls, alpha *= 0.5) {
        Eigen::VectorXd trial = psi0;
        trial(i) += alpha;
        if (objective(trial) > obj0) {
          psi_[i] = trial(i);
          moved = true;
          break;
        }
      }
      if (psi_vec()(i) == psi0(i)) break;
    }
    return moved;
  }

  // Directional derivative of a tent perturbation peaked at support index j
  // (which bends the fit concavely at t_j); positive means adding the kink
  // improves the objective.
  std::pair<int, double> best_new_knot() const {
    const int k = static_cast<int>(knots_.size());
    int best = -1;
    double best_gain = 0.0;
    for (int s = 0; s + 1 < k; ++s) {
      const int lo = knots_[s], hi = knots_[s + 1];
      if (hi - lo < 2) continue;
      const double tl = t_(lo), tr = t_(hi);
      const double span = tr - tl;
      const double pl = psi_[s], pr = psi_[s + 1];
      // prefix sums of mass and mass*location over interior points
      double a0 = 0.0, a1 = 0.0;
      std::vector<double> pre0(hi - lo), pre1(hi - lo);
      for (int j = lo + 1; j < hi; ++j) {
        a0 += p_(j);
        a1 += p_(j) * t_(j);
        pre0[j - lo - 1] = a0;
        pre1[j - lo - 1] = a1;
      }
      const double tot0 = a0, tot1 = a1;
      for (int j = lo + 1; j < hi; ++j) {
        const double tj = t_(j);
        const double lam = (tj - tl) / span;
        const double pj = pl + lam * (pr - pl);
        const double dl = tj - tl, dr = tr - tj;
        const double c0 = pre0[j - lo - 1], c1 = pre1[j - lo - 1];
        const double mass_left = (c1 - tl * c0) / dl;
        const double mass_right = (tr * (tot0 - c0) - (tot1 - c1)) / dr;
        const auto ml = exp_moments(pj - pl);
        const auto mr = exp_moments(pr - pj);
        const double integ = dl * std::exp(pl) * ml.m1 +
                             dr * std::exp(pj) * (mr.m0 - mr.m1);
        const double gain = mass_left + mass_right - integ;
        if (gain > best_gain) {
          best_gain = gain;
          best = j;
        }
      }
    }
    return {best, best_gain};
  }

  void insert_knot(int support_idx) {
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), support_idx);
    const int pos = static_cast<int>(it - knots_.begin());
    const int lo = knots_[pos - 1], hi = knots_[pos];
    const double lam = (t_(support_idx) - t_(lo)) / (t_(hi) - t_(lo));
    const double value = psi_[pos - 1] + lam * (psi_[pos] - psi_[pos - 1]);
    knots_.insert(it, support_idx);
    psi_.insert(psi_.begin() + pos, value);
    rebuild_linear_coeffs();
  }

  void prune_collinear() {
    Eigen::VectorXd cur = psi_vec();
    std::vector<int> drop;
    for (int i = static_cast<int>(knots_.size()) - 2; i >= 1; --i) {
      const double sc =
          1e-10 * (1.0 + std::abs(slope(i - 1)) + std::abs(slope(i)));
      if (slack(cur, i) >= -sc) drop.push_back(i);
    }
    if (!drop.empty()) remove_knots(drop);
  }
};

}  // namespace detail

// Maximum likelihood log-concave density for the sample r. Requires at
// least two distinct values; ties are collapsed to weighted support points.
inline LogConcaveFit fit_logconcave(const Eigen::VectorXd& r,
                                    double tol = 1e-7) {
  if (r.size() < 2)
    throw std::invalid_argument("fit_logconcave: need n >= 2 observations");
  if (!(tol > 0.0)) throw std::invalid_argument("fit_logconcave: tol <= 0");
  std::vector<double> sorted(r.data(), r.data() + r.size());
  std::sort(sorted.begin(), sorted.end());
  const double range = sorted.back() - sorted.front();
  const double glue = 1e-13 * std::max(1.0, std::abs(sorted.back()) +
                                                std::abs(sorted.front()));

  std::vector<double> support;
  std::vector<double> mass;
  for (double x : sorted) {
    if (!support.empty() && x - support.back() <= glue) {
      mass.back() += 1.0;
    } else {
      support.push_back(x);
      mass.push_back(1.0);
    }
  }
  if (support.size() < 2 || range <= glue)
    throw std::runtime_error(
        "MLE does not exist: residuals have fewer than 2 distinct values");

  const auto m = static_cast<Eigen::Index>(support.size());
  Eigen::VectorXd t = Eigen::Map<Eigen::VectorXd>(support.data(), m);
  Eigen::VectorXd p = Eigen::Map<Eigen::VectorXd>(mass.data(), m) /
                      static_cast<double>(r.size());

  detail::LogConcaveSolver solver(std::move(t), std::move(p), tol);
  solver.run();
  return solver.fit(r.size());
}

// Pointwise log-density / density / cdf of a fitted log-concave density.
inline DensityEval evaluate_fit(const LogConcaveFit& fit, double y) {
  const Eigen::Index k = fit.knots.size();
  const double t0 = fit.knots(0), tk = fit.knots(k - 1);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (y < t0) return {kNegInf, 0.0, 0.0};
  if (y >= tk) {
    const double ld = y == tk ? fit.phi(k - 1) : kNegInf;
    return {ld, y == tk ? std::exp(ld) : 0.0, fit.integral};
  }
  Eigen::Index s = 0;
  while (s + 2 < k && fit.knots(s + 1) <= y) ++s;
  double cdf = 0.0;
  for (Eigen::Index i = 0; i < s; ++i)
    cdf += detail::segment_exp_integral(fit.phi(i), fit.phi(i + 1),
                                        fit.knots(i + 1) - fit.knots(i));
  const double span = fit.knots(s + 1) - fit.knots(s);
  const double lam = (y - fit.knots(s)) / span;
  const double ld = fit.phi(s) + lam * (fit.phi(s + 1) - fit.phi(s));
  cdf += detail::segment_exp_integral(fit.phi(s), ld, y - fit.knots(s));
  return {ld, std::exp(ld), cdf};
}

// Shift the fitted density to mean zero and absorb the shift into the
// intercept coordinate of the estimate. The log-likelihood is unchanged.
inline std::pair<LogConcaveFit, Estimate> recenter_to_mean_zero(
    const LogConcaveFit& fit, const Estimate& estimate,
    std::optional<Eigen::Index> intercept_col) {
  if (!intercept_col)
    throw std::invalid_argument(
        "recenter_to_mean_zero: problem has no intercept column");
  const double mu = fit.mean;
  LogConcaveFit shifted = fit;
  shifted.knots.array() -= mu;
  double integral = 0.0, mean = 0.0;
  for (Eigen::Index s = 0; s + 1 < shifted.knots.size(); ++s) {
    const double len = shifted.knots(s + 1) - shifted.knots(s);
    const double base = std::exp(shifted.phi(s));
    const auto mm = detail::exp_moments(shifted.phi(s + 1) - shifted.phi(s));
    const double seg = len * base * mm.m0;
    integral += seg;
    mean += shifted.knots(s) * seg + len * len * base * mm.m1;
  }
  shifted.integral = integral;
  shifted.mean = mean;
  Estimate adjusted = estimate;
  adjusted.theta(*intercept_col) += mu;
  return {std::move(shifted), std::move(adjusted)};
}

// Profile log-likelihood at regression coefficient eta: the unconstrained
// log-concave MLE value of the residuals. With an intercept in the design
// this equals the mean-zero-constrained profile, since the location shift
// is absorbed by the intercept direction.
inline double profile_loglik(const RegressionProblem& problem,
                             const Eigen::VectorXd& eta, double tol = 1e-7) {
  const Eigen::VectorXd r = residuals(problem, eta);
  try {
    return fit_logconcave(r, tol).loglik;
  } catch (const std::runtime_error&) {
    throw std::runtime_error("MLE does not exist at this eta");
  }
}

}  // namespace stosearch
