#include <catch2/catch.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "stosearch/logconcave.hpp"
#include "stosearch/rng.hpp"

using namespace stosearch;

namespace {

// Independent brute-force oracle for two observations: maximize
// mean(phi) - integral(exp(phi)) + 1 over linear phi on [r0, r1] by grid
// search on the endpoint values.
double two_point_grid_oracle(double r0, double r1) {
  const double len = r1 - r0;
  double best = -1e300;
  for (double a = -3.0; a <= 3.0; a += 0.002) {
    for (double b = -3.0; b <= 3.0; b += 0.002) {
      // integral of exp along the segment by fine midpoint quadrature
      double integral = 0.0;
      const int steps = 200;
      for (int s = 0; s < steps; ++s) {
        const double u = (s + 0.5) / steps;
        integral += std::exp(a + (b - a) * u);
      }
      integral *= len / steps;
      best = std::max(best, 0.5 * (a + b) - integral + 1.0);
    }
  }
  return best;
}

double slope_between(const LogConcaveFit& f, Eigen::Index s) {
  return (f.phi(s + 1) - f.phi(s)) / (f.knots(s + 1) - f.knots(s));
}

void check_concave(const LogConcaveFit& f) {
  for (Eigen::Index s = 0; s + 2 < f.knots.size(); ++s)
    CHECK(slope_between(f, s + 1) <= slope_between(f, s) + 1e-9);
}

Eigen::VectorXd normal_sample(int n, std::uint64_t seed) {
  RandomStream rng(seed);
  Eigen::VectorXd r(n);
  for (int i = 0; i < n; ++i) r(i) = rng.normal();
  return r;
}

// Evaluate a piecewise-linear function given by (knots, values) at x
// (linear interpolation, -inf outside).
double pl_eval(const Eigen::VectorXd& t, const Eigen::VectorXd& v, double x) {
  if (x < t(0) || x > t(t.size() - 1))
    return -std::numeric_limits<double>::infinity();
  Eigen::Index s = 0;
  while (s + 2 < t.size() && t(s + 1) <= x) ++s;
  const double lam = (x - t(s)) / (t(s + 1) - t(s));
  return v(s) + lam * (v(s + 1) - v(s));
}

// integral of exp(piecewise linear) by fine quadrature (test-only oracle).
double pl_exp_integral(const Eigen::VectorXd& t, const Eigen::VectorXd& v) {
  double total = 0.0;
  for (Eigen::Index s = 0; s + 1 < t.size(); ++s) {
    const int steps = 2000;
    const double len = t(s + 1) - t(s);
    double acc = 0.0;
    for (int i = 0; i < steps; ++i) {
      const double u = (i + 0.5) / steps;
      acc += std::exp(v(s) + (v(s + 1) - v(s)) * u);
    }
    total += acc * len / steps;
  }
  return total;
}

}  // namespace

TEST_CASE("two observations give the uniform density", "[logconcave]") {
  SECTION("unit spacing") {
    const auto fit = fit_logconcave(Eigen::Vector2d(0.0, 1.0), 1e-9);
    REQUIRE(fit.knots.size() == 2);
    CHECK(fit.knots(0) == 0.0);
    CHECK(fit.knots(1) == 1.0);
    CHECK(fit.phi(0) == Approx(0.0).margin(1e-8));
    CHECK(fit.phi(1) == Approx(0.0).margin(1e-8));
    CHECK(fit.loglik == Approx(0.0).margin(1e-8));
    CHECK(fit.integral == Approx(1.0).margin(1e-8));
    CHECK(fit.mean == Approx(0.5).margin(1e-8));

    // brute-force oracle: the optimum of the objective is 0 for [0,1]
    const double oracle = two_point_grid_oracle(0.0, 1.0);
    const double ours = fit.loglik / 2.0 - fit.integral + 1.0;
    CHECK(ours >= oracle - 1e-4);
  }
  SECTION("spacing two") {
    const auto fit = fit_logconcave(Eigen::Vector2d(0.0, 2.0), 1e-9);
    CHECK(fit.phi(0) == Approx(-std::log(2.0)).margin(1e-8));
    CHECK(fit.phi(1) == Approx(-std::log(2.0)).margin(1e-8));
    CHECK(fit.loglik == Approx(-2.0 * std::log(2.0)).margin(1e-8));
    const double oracle = two_point_grid_oracle(0.0, 2.0);
    const double ours = fit.loglik / 2.0 - fit.integral + 1.0;
    CHECK(ours >= oracle - 1e-4);
  }
}

TEST_CASE("degenerate samples are rejected", "[logconcave]") {
  CHECK_THROWS_WITH(fit_logconcave(Eigen::Vector3d(1.0, 1.0, 1.0)),
                    Catch::Contains("MLE does not exist"));
  CHECK_THROWS_AS(fit_logconcave(Eigen::VectorXd::Constant(1, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("normal sample: normalization, concavity, dominance",
          "[logconcave]") {
  const Eigen::VectorXd r = normal_sample(500, 42);
  const auto fit = fit_logconcave(r, 1e-7);
  CHECK(std::abs(fit.integral - 1.0) < 1e-6);
  check_concave(fit);

  // The MLE dominates the matched-moment normal competitor.
  const double m = r.mean();
  const double var = (r.array() - m).square().sum() / r.size();
  double competitor = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double z = r(i) - m;
    competitor += -0.5 * std::log(2.0 * M_PI * var) - 0.5 * z * z / var;
  }
  CHECK(fit.loglik >= competitor);

  // ties are collapsed: duplicating the data doubles the log-likelihood
  Eigen::VectorXd doubled(2 * r.size());
  doubled << r, r;
  const auto fit2 = fit_logconcave(doubled, 1e-7);
  CHECK(fit2.loglik == Approx(2.0 * fit.loglik).epsilon(1e-6));
}

TEST_CASE("optimality against random concave competitors",
          "[logconcave][property]") {
  const Eigen::VectorXd r = normal_sample(100, 7);
  const auto fit = fit_logconcave(r, 1e-8);
  RandomStream rng(11);
  const double lo = r.minCoeff(), hi = r.maxCoeff();
  for (int trial = 0; trial < 20; ++trial) {
    // random concave piecewise-linear psi on [lo, hi], normalized
    const int k = 2 + static_cast<int>(rng.uniform_index(6));
    Eigen::VectorXd t(k), v(k);
    t(0) = lo;
    t(k - 1) = hi;
    for (int i = 1; i + 1 < k; ++i) t(i) = rng.uniform(lo, hi);
    std::sort(t.data(), t.data() + k);
    bool distinct = true;
    for (int i = 0; i + 1 < k; ++i)
      if (t(i + 1) - t(i) < 1e-6) distinct = false;
    if (!distinct) continue;
    double slope = rng.uniform(0.0, 3.0);
    v(0) = rng.uniform(-2.0, 0.0);
    for (int i = 1; i < k; ++i) {
      v(i) = v(i - 1) + slope * (t(i) - t(i - 1));
      slope -= rng.uniform(0.05, 1.5);  // strictly decreasing slopes
    }
    const double norm = pl_exp_integral(t, v);
    v.array() -= std::log(norm);
    double loglik = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) loglik += pl_eval(t, v, r(i));
    CHECK(loglik <= fit.loglik + 1e-6);
  }
}

TEST_CASE("translation and scale equivariance", "[logconcave][property]") {
  const Eigen::VectorXd r = normal_sample(160, 19);
  const auto base = fit_logconcave(r, 1e-8);
  for (double shift : {-3.5, 2.25}) {
    const auto moved = fit_logconcave((r.array() + shift).matrix(), 1e-8);
    REQUIRE(moved.knots.size() == base.knots.size());
    CHECK((moved.knots - (base.knots.array() + shift).matrix()).lpNorm<Eigen::Infinity>() <
          1e-6);
    CHECK(moved.loglik == Approx(base.loglik).margin(1e-6));
    for (Eigen::Index s = 0; s + 1 < base.knots.size(); ++s)
      CHECK(slope_between(moved, s) ==
            Approx(slope_between(base, s)).margin(1e-6));
  }
  for (double scale : {2.5, 0.4}) {
    const auto scaled = fit_logconcave((scale * r.array()).matrix(), 1e-8);
    CHECK(scaled.loglik ==
          Approx(base.loglik - r.size() * std::log(scale)).margin(1e-6));
  }
}

TEST_CASE("evaluate_fit on the uniform fits", "[logconcave]") {
  const auto fit = fit_logconcave(Eigen::Vector2d(0.0, 1.0), 1e-9);
  const auto at_half = evaluate_fit(fit, 0.5);
  CHECK(at_half.density == Approx(1.0).margin(1e-7));
  CHECK(at_half.cdf == Approx(0.5).margin(1e-7));
  const auto below = evaluate_fit(fit, -0.25);
  CHECK(below.density == 0.0);
  CHECK(below.cdf == 0.0);
  CHECK(below.log_density == -std::numeric_limits<double>::infinity());

  const auto fit2 = fit_logconcave(Eigen::Vector2d(0.0, 2.0), 1e-9);
  CHECK(evaluate_fit(fit2, 2.0).cdf == Approx(1.0).margin(1e-9));
  // cdf at the last knot equals the stored integral
  CHECK(evaluate_fit(fit2, 2.0).cdf == fit2.integral);
}

TEST_CASE("segment integrals accumulate to the stored normalizer",
          "[logconcave]") {
  const Eigen::VectorXd r = normal_sample(200, 23);
  const auto fit = fit_logconcave(r, 1e-7);
  double acc = 0.0;
  for (Eigen::Index s = 0; s + 1 < fit.knots.size(); ++s)
    acc += detail::segment_exp_integral(fit.phi(s), fit.phi(s + 1),
                                        fit.knots(s + 1) - fit.knots(s));
  CHECK(acc == Approx(fit.integral).margin(1e-12));
  const auto top = evaluate_fit(fit, fit.knots(fit.knots.size() - 1));
  CHECK(top.cdf == Approx(fit.integral).margin(1e-12));
}

TEST_CASE("recenter_to_mean_zero", "[logconcave]") {
  Estimate est;
  est.theta = Eigen::Vector2d(1.0, 0.0);  // intercept is coordinate 1

  const auto fit = fit_logconcave(Eigen::Vector2d(0.0, 1.0), 1e-9);
  auto [shifted, adjusted] = recenter_to_mean_zero(fit, est, 1);
  CHECK(shifted.knots(0) == Approx(-0.5).margin(1e-7));
  CHECK(shifted.knots(1) == Approx(0.5).margin(1e-7));
  CHECK(adjusted.theta(1) == Approx(0.5).margin(1e-7));
  CHECK(shifted.mean == Approx(0.0).margin(1e-6));
  CHECK(shifted.loglik == fit.loglik);

  // already centered: identity on both outputs
  auto [again, est2] = recenter_to_mean_zero(shifted, adjusted, 1);
  CHECK(again.knots(0) == Approx(shifted.knots(0)).margin(1e-9));
  CHECK(est2.theta(1) == Approx(adjusted.theta(1)).margin(1e-9));

  // arbitrary fit recenters to mean zero
  const auto big = fit_logconcave(normal_sample(300, 31).array() + 4.0, 1e-7);
  auto [centered, est3] = recenter_to_mean_zero(big, est, 0);
  CHECK(centered.mean == Approx(0.0).margin(1e-6));

  CHECK_THROWS_AS(recenter_to_mean_zero(fit, est, std::nullopt),
                  std::invalid_argument);
}

TEST_CASE("profile log-likelihood basics", "[logconcave]") {
  RegressionProblem p(Eigen::MatrixXd::Ones(2, 1), Eigen::Vector2d(0.0, 1.0),
                      0);
  CHECK(profile_loglik(p, Eigen::VectorXd::Zero(1), 1e-9) ==
        Approx(0.0).margin(1e-8));
  // invariance along the intercept direction
  for (double c : {-2.0, 0.7, 13.5}) {
    CHECK(profile_loglik(p, Eigen::VectorXd::Constant(1, c), 1e-9) ==
          Approx(0.0).margin(1e-6));
  }
  RegressionProblem deg(Eigen::MatrixXd::Ones(2, 1), Eigen::Vector2d(1.0, 1.0),
                        0);
  CHECK_THROWS_WITH(profile_loglik(deg, Eigen::VectorXd::Zero(1), 1e-9),
                    Catch::Contains("MLE does not exist at this eta"));
}

TEST_CASE("profile invariance along the intercept on a real design",
          "[logconcave][property]") {
  RandomStream rng(3);
  const int n = 60;
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform(-1, 1);
    x(i, 1) = 1.0;
    y(i) = 2.0 * x(i, 0) + rng.exponential() - 1.0;
  }
  RegressionProblem p(x, y, 1);
  const double base = profile_loglik(p, Eigen::Vector2d(1.0, 0.0), 1e-8);
  for (double s : {-1.5, 0.3, 2.0}) {
    CHECK(profile_loglik(p, Eigen::Vector2d(1.0, s), 1e-8) ==
          Approx(base).margin(1e-6));
  }
}

TEST_CASE("profile likelihood prefers the truth over a far point",
          "[logconcave][montecarlo]") {
  int wins = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    RandomStream rng(500 + trial);
    const int n = 120;
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = rng.uniform(-1, 1);
      x(i, 1) = 1.0;
      y(i) = x(i, 0) + 1.0 + rng.normal();
    }
    RegressionProblem p(x, y, 1);
    const Eigen::Vector2d truth(1.0, 1.0);
    const Eigen::Vector2d far = truth + Eigen::Vector2d(5.0, 5.0);
    if (profile_loglik(p, truth, 1e-6) > profile_loglik(p, far, 1e-6)) ++wins;
  }
  CHECK(wins >= 19);
}
