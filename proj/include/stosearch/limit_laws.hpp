#pragma once

// Closed-form constants and samplers for the nearest-neighbor limit laws of
// scaled minimum distances: the Weibull(q) limit of the nearest of B draws
// to a fixed point, and the mixture limit of min_b ||Z_0 + c Z_b|| for
// Gaussian clouds (with the rank-deficient covariance handled through the
// effective rank and the product of nonzero eigenvalues).

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "stosearch/rng.hpp"
#include "stosearch/special_functions.hpp"

namespace stosearch {

// alpha_q = sqrt(pi) Gamma(q/2 + 1)^{-1/q}; alpha_q^q is the volume of the
// q-dimensional unit ball.
inline double alpha_q(int q) {
  if (q < 1) throw std::invalid_argument("alpha_q: q < 1");
  const double dq = static_cast<double>(q);
  return std::sqrt(3.14159265358979323846264338327950288) *
         std::exp(-log_gamma(0.5 * dq + 1.0) / dq);
}

// beta_q = sqrt(2) Gamma(q/2 + 1)^{1/q}; alpha_q * beta_q = sqrt(2 pi).
inline double beta_q(int q) {
  if (q < 1) throw std::invalid_argument("beta_q: q < 1");
  const double dq = static_cast<double>(q);
  return std::sqrt(2.0) * std::exp(log_gamma(0.5 * dq + 1.0) / dq);
}

inline double weibull_cdf(double x, int q) {
  if (q < 1) throw std::invalid_argument("weibull_cdf: q < 1");
  if (x < 0.0) throw std::invalid_argument("weibull_cdf: x < 0");
  return -std::expm1(-std::pow(x, static_cast<double>(q)));
}

inline double weibull_sample(int q, RandomStream& rng) {
  if (q < 1) throw std::invalid_argument("weibull_sample: q < 1");
  return std::pow(rng.exponential(), 1.0 / static_cast<double>(q));
}

// alpha_q f(z)^{1/q} B^{1/q} min_b ||Z_b - z|| for a B x q matrix of draws.
inline double scaled_min_statistic(const Eigen::MatrixXd& points,
                                   const Eigen::VectorXd& z, double f_z,
                                   int q) {
  if (points.rows() < 1)
    throw std::invalid_argument("scaled_min_statistic: B < 1");
  if (points.cols() != z.size() || points.cols() != q)
    throw std::invalid_argument("scaled_min_statistic: dimension mismatch");
  if (!(f_z > 0.0))
    throw std::invalid_argument("scaled_min_statistic: f_z <= 0");
  double min_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index b = 0; b < points.rows(); ++b)
    min_dist = std::min(min_dist, (points.row(b).transpose() - z).norm());
  const double dq = static_cast<double>(q);
  return alpha_q(q) * std::pow(f_z, 1.0 / dq) *
         std::pow(static_cast<double>(points.rows()), 1.0 / dq) * min_dist;
}

struct LimitLawSpec {
  int q = 1;
  double c = 1.0;
  Eigen::MatrixXd sigma;
  int rank = 0;
  double pseudo_det = 1.0;  // product of the nonzero eigenvalues

  // Eigenvalues below 1e-10 times the largest count as zero.
  static LimitLawSpec make(int q, double c, Eigen::MatrixXd sigma) {
    if (q < 1) throw std::invalid_argument("LimitLawSpec: q < 1");
    if (!(c > 0.0)) throw std::invalid_argument("LimitLawSpec: c <= 0");
    if (sigma.rows() != q || sigma.cols() != q)
      throw std::invalid_argument("LimitLawSpec: sigma must be q x q");
    LimitLawSpec spec;
    spec.q = q;
    spec.c = c;
    spec.sigma = std::move(sigma);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spec.sigma);
    const double emax = es.eigenvalues().maxCoeff();
    const double cut = 1e-10 * std::max(emax, 0.0);
    spec.pseudo_det = 1.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      if (es.eigenvalues()(i) > cut && es.eigenvalues()(i) > 0.0) {
        ++spec.rank;
        spec.pseudo_det *= es.eigenvalues()(i);
      }
    }
    return spec;
  }
};

// One draw of the limit of B^{1/q} min_b ||Z_0 + c Z_b||:
//   beta_q det^{1/(2q)} c exp(S^2 / (2 c^2 q)) W
// with independent S^2 ~ chi-square(q_eff) and W ~ Weibull(q_eff), where
// q_eff is the effective rank of sigma.
inline double scaled_min_limit_sample(const LimitLawSpec& spec,
                                      RandomStream& rng) {
  if (spec.rank < 1)
    throw std::invalid_argument("scaled_min_limit_sample: rank(sigma) = 0");
  const int qe = spec.rank;
  const double dq = static_cast<double>(qe);
  const double s2 = rng.chi_square(qe);
  const double w = weibull_sample(qe, rng);
  return beta_q(qe) * std::pow(spec.pseudo_det, 1.0 / (2.0 * dq)) * spec.c *
         std::exp(s2 / (2.0 * spec.c * spec.c * dq)) * w;
}

// Factor A with A A^T = sigma (eigendecomposition; works for PSD sigma).
inline Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  return es.eigenvectors() *
         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

// Z ~ N(0, A A^T) via z = A * standard normal.
inline Eigen::VectorXd gaussian_draw(const Eigen::MatrixXd& factor,
                                     RandomStream& rng) {
  Eigen::VectorXd z(factor.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return factor * z;
}

}  // namespace stosearch
