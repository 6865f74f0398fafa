#pragma once

// Canonical data generators for the Monte Carlo experiments: a bounded
// random design (iid uniform covariates on [-1, 1] plus an intercept) and
// four error models, together with the closed-form large-n design and
// sandwich matrices they induce.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

#include "stosearch/regression.hpp"
#include "stosearch/rng.hpp"

namespace stosearch {

enum class ErrorModel {
  normal,
  centered_exponential,
  centered_gumbel,
  heteroscedastic_normal
};

inline const char* to_string(ErrorModel m) {
  switch (m) {
    case ErrorModel::normal: return "normal";
    case ErrorModel::centered_exponential: return "centered_exponential";
    case ErrorModel::centered_gumbel: return "centered_gumbel";
    default: return "heteroscedastic_normal";
  }
}

constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

// Rows (u_1, ..., u_{q-1}, 1) with independent u_j uniform on [-1, 1];
// the intercept is the last column. For q = 1 the design is intercept-only.
inline Eigen::MatrixXd uniform_design(Eigen::Index n, Eigen::Index q,
                                      RandomStream& rng) {
  if (n < 1 || q < 1) throw std::invalid_argument("uniform_design: n, q >= 1");
  Eigen::MatrixXd x(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j + 1 < q; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
    x(i, q - 1) = 1.0;
  }
  return x;
}

// Error standard deviation at a design row; sigma scales every model.
inline double error_sd(ErrorModel model, double row_squared_norm,
                       Eigen::Index q, double sigma) {
  switch (model) {
    case ErrorModel::normal: return sigma;
    case ErrorModel::centered_exponential: return sigma;
    case ErrorModel::centered_gumbel:
      return sigma * 1.28254983016186409554082713120386;  // pi / sqrt(6)
    default:
      return sigma *
             std::sqrt(1.0 + row_squared_norm / static_cast<double>(q));
  }
}

inline double draw_error(ErrorModel model, double row_squared_norm,
                         Eigen::Index q, double sigma, RandomStream& rng) {
  switch (model) {
    case ErrorModel::normal: return sigma * rng.normal();
    case ErrorModel::centered_exponential:
      return sigma * (rng.exponential() - 1.0);
    case ErrorModel::centered_gumbel:
      return sigma * (rng.gumbel() - kEulerGamma);
    default:
      return error_sd(model, row_squared_norm, q, sigma) * rng.normal();
  }
}

// Mean-zero error density; defined for the homoscedastic models only.
inline double error_density(ErrorModel model, double y, double sigma) {
  switch (model) {
    case ErrorModel::normal: {
      const double z = y / sigma;
      return std::exp(-0.5 * z * z) /
             (sigma * 2.50662827463100050241576528481105);
    }
    case ErrorModel::centered_exponential: {
      const double z = y / sigma;
      return z >= -1.0 ? std::exp(-(z + 1.0)) / sigma : 0.0;
    }
    case ErrorModel::centered_gumbel: {
      const double z = y / sigma + kEulerGamma;
      return std::exp(-z - std::exp(-z)) / sigma;
    }
    default:
      throw std::invalid_argument(
          "error_density: heteroscedastic model has no common density");
  }
}

// Large-n design matrix limit Gamma = E[x x^T] of the uniform design:
// diag(1/3, ..., 1/3, 1).
inline Eigen::MatrixXd design_gamma(Eigen::Index q) {
  Eigen::VectorXd d = Eigen::VectorXd::Constant(q, 1.0 / 3.0);
  d(q - 1) = 1.0;
  return d.asDiagonal();
}

// Large-n limit of n^{-1} sum Var(e_i) x_i x_i^T under the uniform design.
// Homoscedastic models scale Gamma by the error variance; the
// heteroscedastic model has Var(e | x) = (1 + ||x||^2/q) sigma^2, whose
// fourth-moment integrals are evaluated in closed form (E u^2 = 1/3,
// E u^4 = 1/5).
inline Eigen::MatrixXd design_gamma_eps(Eigen::Index q, ErrorModel model,
                                        double sigma) {
  const double s2 = sigma * sigma;
  switch (model) {
    case ErrorModel::normal:
      return s2 * design_gamma(q);
    case ErrorModel::centered_exponential:
      return s2 * design_gamma(q);
    case ErrorModel::centered_gumbel:
      return s2 * (1.64493406684822643647241516664603 /* pi^2/6 */) *
             design_gamma(q);
    default: {
      const double dq = static_cast<double>(q);
      Eigen::VectorXd d(q);
      const double cov_entry =
          1.0 / 3.0 +
          (1.0 / 5.0 + static_cast<double>(q - 2) / 9.0 + 1.0 / 3.0) / dq;
      for (Eigen::Index j = 0; j + 1 < q; ++j) d(j) = cov_entry;
      d(q - 1) = 1.0 + (static_cast<double>(q - 1) / 3.0 + 1.0) / dq;
      return s2 * Eigen::MatrixXd(d.asDiagonal());
    }
  }
}

// Sandwich covariance Gamma^{-1} Gamma_eps Gamma^{-1} of the scaled OLS
// error under the uniform design.
inline Eigen::MatrixXd sandwich_sigma(Eigen::Index q, ErrorModel model,
                                      double sigma) {
  const Eigen::MatrixXd g = design_gamma(q);
  const Eigen::MatrixXd ginv = g.inverse();
  return ginv * design_gamma_eps(q, model, sigma) * ginv;
}

inline Eigen::VectorXd default_theta(Eigen::Index q) {
  return Eigen::VectorXd::Ones(q);
}

struct SimulatedData {
  RegressionProblem problem;
  Eigen::VectorXd errors;
};

inline SimulatedData simulate_problem(Eigen::Index n, Eigen::Index q,
                                      ErrorModel model, double sigma,
                                      const Eigen::VectorXd& theta,
                                      RandomStream& rng) {
  Eigen::MatrixXd x = uniform_design(n, q, rng);
  Eigen::VectorXd eps(n);
  for (Eigen::Index i = 0; i < n; ++i)
    eps(i) = draw_error(model, x.row(i).squaredNorm(), q, sigma, rng);
  Eigen::VectorXd y = x * theta + eps;
  return {RegressionProblem(std::move(x), std::move(y), q - 1),
          std::move(eps)};
}

}  // namespace stosearch
