#pragma once

// Small descriptive-statistics helpers shared by the experiment drivers
// and the test suites: medians, Kolmogorov-Smirnov distances, sample
// covariances and a log-log slope fit.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace stosearch {

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty sample");
  const std::size_t h = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + h, v.end());
  double m = v[h];
  if (v.size() % 2 == 0) {
    const double lo = *std::max_element(v.begin(), v.begin() + h);
    m = 0.5 * (lo + m);
  }
  return m;
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  if (v.size() < 2) throw std::invalid_argument("variance needs >= 2 values");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// sup_x |F_n(x) - F(x)| against a reference cdf.
inline double ks_statistic(std::vector<double> sample,
                           const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::max((static_cast<double>(i) + 1.0) / n - f,
                             f - static_cast<double>(i) / n));
  }
  return d;
}

// Two-sample sup |F_a - F_b| by a merge walk over the pooled order.
inline double ks_statistic_two_sample(std::vector<double> a,
                                      std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_statistic_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return d;
}

// Unbiased sample covariance of row-stacked observations.
inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 2)
    throw std::invalid_argument("sample_covariance needs >= 2 rows");
  const Eigen::RowVectorXd m = rows.colwise().mean();
  const Eigen::MatrixXd c = rows.rowwise() - m;
  return c.transpose() * c / static_cast<double>(rows.rows() - 1);
}

// Cross covariance Cov(u, v) of paired row-stacked observations.
inline Eigen::MatrixXd cross_covariance(const Eigen::MatrixXd& u,
                                        const Eigen::MatrixXd& v) {
  if (u.rows() != v.rows() || u.rows() < 2)
    throw std::invalid_argument("cross_covariance: shape mismatch");
  const Eigen::MatrixXd cu = u.rowwise() - u.colwise().mean();
  const Eigen::MatrixXd cv = v.rowwise() - v.colwise().mean();
  return cu.transpose() * cv / static_cast<double>(u.rows() - 1);
}

inline double frobenius_rel_error(const Eigen::MatrixXd& est,
                                  const Eigen::MatrixXd& target) {
  const double t = target.norm();
  if (t == 0.0) throw std::invalid_argument("frobenius_rel_error: zero target");
  return (est - target).norm() / t;
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x,
                           const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("loglog_slope: need >= 2 points");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace stosearch
