#pragma once

// Regression data model, CSV ingestion and (weighted) least squares with a
// generalized-inverse fallback. All returned values are immutable value
// types; every function here is pure and safe to call concurrently.

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace stosearch {

struct RegressionProblem {
  Eigen::MatrixXd X;  // n x q design, rows are observations
  Eigen::VectorXd Y;  // length-n response
  std::optional<Eigen::Index> intercept_col;

  RegressionProblem(Eigen::MatrixXd x, Eigen::VectorXd y,
                    std::optional<Eigen::Index> icol = std::nullopt)
      : X(std::move(x)), Y(std::move(y)), intercept_col(icol) {
    if (X.rows() < 1 || X.cols() < 1)
      throw std::invalid_argument("RegressionProblem: need n >= 1, q >= 1");
    if (X.rows() != Y.size())
      throw std::invalid_argument("RegressionProblem: X rows != Y length");
    if (intercept_col) {
      if (*intercept_col < 0 || *intercept_col >= X.cols())
        throw std::invalid_argument("RegressionProblem: intercept index");
      if (!(X.col(*intercept_col).array() == 1.0).all())
        throw std::invalid_argument(
            "RegressionProblem: intercept column is not all ones");
    }
  }

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index q() const { return X.cols(); }
};

struct Estimate {
  Eigen::VectorXd theta;
  Eigen::MatrixXd gram;  // (1/n) sum w_i x_i x_i^T, weights all 1 for OLS
  Eigen::Index rank = 0;
  bool used_pseudoinverse = false;
};

struct LoadOptions {
  std::string response_column;
  bool add_intercept = false;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' '))
      cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    out.push_back(cell.substr(b));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& cell, std::size_t row,
                           const std::string& col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || p != last)
    throw std::runtime_error("non-numeric cell '" + cell + "' at data row " +
                             std::to_string(row) + ", column " + col);
  return v;
}

}  // namespace detail

// Load a CSV with a header row. The named response column becomes Y; every
// other column is a covariate, in file order. With add_intercept an all-ones
// column is appended and recorded; otherwise an existing all-ones column is
// detected and recorded so downstream recentering can use it.
inline RegressionProblem load_problem(const std::string& path,
                                      const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty CSV (no header): " + path);
  const std::vector<std::string> header = detail::split_csv_line(line);

  std::ptrdiff_t response_idx = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == options.response_column) response_idx = static_cast<std::ptrdiff_t>(j);
  if (response_idx < 0)
    throw std::runtime_error("response column '" + options.response_column +
                             "' not found in header of " + path);

  std::vector<double> ys;
  std::vector<std::vector<double>> rows;
  std::size_t rownum = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rownum;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error("row " + std::to_string(rownum) + " has " +
                               std::to_string(cells.size()) +
                               " cells, header has " +
                               std::to_string(header.size()));
    std::vector<double> covs;
    covs.reserve(header.size() - 1);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const double v = detail::parse_number(cells[j], rownum, header[j]);
      if (static_cast<std::ptrdiff_t>(j) == response_idx)
        ys.push_back(v);
      else
        covs.push_back(v);
    }
    rows.push_back(std::move(covs));
  }
  if (rows.empty()) throw std::runtime_error("CSV has zero data rows: " + path);

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index qraw = static_cast<Eigen::Index>(rows.front().size());
  const Eigen::Index q = qraw + (options.add_intercept ? 1 : 0);
  if (q < 1) throw std::runtime_error("CSV has no covariate columns: " + path);

  Eigen::MatrixXd X(n, q);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < qraw; ++j) X(i, j) = rows[i][j];
    if (options.add_intercept) X(i, qraw) = 1.0;
    Y(i) = ys[i];
  }

  std::optional<Eigen::Index> icol;
  if (options.add_intercept) {
    icol = qraw;
  } else {
    for (Eigen::Index j = 0; j < q && !icol; ++j)
      if ((X.col(j).array() == 1.0).all()) icol = j;
  }
  return RegressionProblem(std::move(X), std::move(Y), icol);
}

// (1/n) sum_i x_i x_i^T.
inline Eigen::MatrixXd gram_matrix(const RegressionProblem& problem) {
  return problem.X.transpose() * problem.X /
         static_cast<double>(problem.n());
}

// Moore-Penrose inverse of a symmetric PSD matrix. Eigenvalues below
// (machine epsilon x dimension x largest eigenvalue) are treated as zero.
inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double emax = ev.size() ? ev.maxCoeff() : 0.0;
  const double cutoff = std::numeric_limits<double>::epsilon() *
                        static_cast<double>(sym.rows()) * std::max(emax, 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > cutoff && ev(i) > 0.0) inv(i) = 1.0 / ev(i);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

namespace detail {

inline Estimate weighted_ls(const RegressionProblem& problem,
                            const Eigen::VectorXd& w) {
  const Eigen::Index n = problem.n();
  const Eigen::Index q = problem.q();
  if (w.size() != n)
    throw std::invalid_argument("weights length != sample count");
  if ((w.array() < 0.0).any())
    throw std::invalid_argument("weights must be nonnegative");
  if ((w.array() == 0.0).all())
    throw std::invalid_argument("degenerate weights: all zero");

  const double dn = static_cast<double>(n);
  Estimate est;
  est.gram = problem.X.transpose() * w.asDiagonal() * problem.X / dn;
  const Eigen::VectorXd rhs =
      problem.X.transpose() * (w.cwiseProduct(problem.Y)) / dn;

  // Minimum-norm solution of gram * theta = rhs; for a consistent normal
  // system this equals the minimum-norm weighted LS minimizer.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(est.gram);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double emax = ev.maxCoeff();
  const double cutoff = std::numeric_limits<double>::epsilon() *
                        static_cast<double>(q) * std::max(emax, 0.0);
  est.theta = Eigen::VectorXd::Zero(q);
  est.rank = 0;
  for (Eigen::Index i = 0; i < q; ++i) {
    if (ev(i) > cutoff && ev(i) > 0.0) {
      ++est.rank;
      const Eigen::VectorXd v = es.eigenvectors().col(i);
      est.theta += v * (v.dot(rhs) / ev(i));
    }
  }
  est.used_pseudoinverse = est.rank < q;
  return est;
}

}  // namespace detail

inline Estimate ols_fit(const RegressionProblem& problem) {
  return detail::weighted_ls(problem,
                             Eigen::VectorXd::Ones(problem.n()));
}

inline Estimate wls_fit(const RegressionProblem& problem,
                        const Eigen::VectorXd& w) {
  return detail::weighted_ls(problem, w);
}

inline Eigen::VectorXd residuals(const RegressionProblem& problem,
                                 const Eigen::VectorXd& theta) {
  if (theta.size() != problem.q())
    throw std::invalid_argument("residuals: theta dimension mismatch");
  return problem.Y - problem.X * theta;
}

}  // namespace stosearch
