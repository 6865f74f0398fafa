#include <catch2/catch.hpp>

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <string>

#include "stosearch/regression.hpp"
#include "stosearch/rng.hpp"

using namespace stosearch;

namespace {

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& contents) {
    static int counter = 0;
    path = "regression_test_" + std::to_string(counter++) + ".csv";
    std::ofstream out(path);
    out << contents;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("load_problem parses simple CSVs", "[regression]") {
  TempCsv csv("y,x1\n1,1\n2,2\n3,3\n");

  SECTION("without intercept") {
    const auto p = load_problem(csv.path, {"y", false});
    CHECK(p.n() == 3);
    CHECK(p.q() == 1);
    CHECK(p.X(0, 0) == 1.0);
    CHECK(p.X(2, 0) == 3.0);
    CHECK(p.Y(1) == 2.0);
    CHECK_FALSE(p.intercept_col.has_value());
  }
  SECTION("with intercept appended") {
    const auto p = load_problem(csv.path, {"y", true});
    CHECK(p.q() == 2);
    CHECK((p.X.col(1).array() == 1.0).all());
    REQUIRE(p.intercept_col.has_value());
    CHECK(*p.intercept_col == 1);
  }
}

TEST_CASE("load_problem handles a wider file", "[regression]") {
  std::string body = "y,a,b,c,d\n";
  for (int i = 0; i < 100; ++i) {
    body += std::to_string(i) + ",1.5,2.5,-0.25," + std::to_string(i % 7) +
            "\n";
  }
  TempCsv csv(body);
  const auto p = load_problem(csv.path, {"y", true});
  CHECK(p.n() == 100);
  CHECK(p.q() == 5);
}

TEST_CASE("load_problem error paths", "[regression]") {
  CHECK_THROWS_WITH(load_problem("does_not_exist.csv", {"y", false}),
                    Catch::Contains("cannot open"));
  {
    TempCsv csv("y,x1\n1,banana\n");
    CHECK_THROWS_WITH(load_problem(csv.path, {"y", false}),
                      Catch::Contains("non-numeric"));
  }
  {
    TempCsv csv("y,x1\n");
    CHECK_THROWS_WITH(load_problem(csv.path, {"y", false}),
                      Catch::Contains("zero data rows"));
  }
  {
    TempCsv csv("y,x1\n1,1\n");
    CHECK_THROWS_WITH(load_problem(csv.path, {"z", false}),
                      Catch::Contains("not found"));
  }
}

TEST_CASE("gram_matrix on small designs", "[regression]") {
  {
    Eigen::MatrixXd x(2, 2);
    x << 1, 0, 0, 1;
    RegressionProblem p(x, Eigen::Vector2d(0, 0));
    CHECK((gram_matrix(p) - 0.5 * Eigen::MatrixXd::Identity(2, 2)).norm() ==
          Approx(0.0).margin(1e-15));
  }
  {
    RegressionProblem p(Eigen::MatrixXd::Ones(5, 1), Eigen::VectorXd::Zero(5),
                        0);
    CHECK(gram_matrix(p)(0, 0) == Approx(1.0));
  }
  {
    Eigen::MatrixXd x(2, 2);
    x << 1, 1, 1, -1;
    RegressionProblem p(x, Eigen::Vector2d(0, 0));
    CHECK((gram_matrix(p) - Eigen::MatrixXd::Identity(2, 2)).norm() ==
          Approx(0.0).margin(1e-15));
  }
}

TEST_CASE("ols_fit closed-form cases", "[regression]") {
  SECTION("intercept-only mean") {
    RegressionProblem p(Eigen::MatrixXd::Ones(3, 1),
                        Eigen::Vector3d(1, 2, 3), 0);
    const auto est = ols_fit(p);
    CHECK(est.theta(0) == Approx(2.0).margin(1e-12));
    CHECK(est.rank == 1);
    CHECK_FALSE(est.used_pseudoinverse);
  }
  SECTION("two-point exact line") {
    Eigen::MatrixXd x(2, 2);
    x << 0, 1, 1, 1;
    RegressionProblem p(x, Eigen::Vector2d(0, 1), 1);
    const auto est = ols_fit(p);
    CHECK(est.theta(0) == Approx(1.0).margin(1e-12));
    CHECK(est.theta(1) == Approx(0.0).margin(1e-12));
  }
  SECTION("duplicated column: minimum-norm solution") {
    Eigen::MatrixXd x(2, 2);
    x << 1, 1, 2, 2;
    RegressionProblem p(x, Eigen::Vector2d(1, 2));
    const auto est = ols_fit(p);
    CHECK(est.used_pseudoinverse);
    CHECK(est.rank == 1);
    CHECK(est.theta(0) == Approx(0.5).margin(1e-12));
    CHECK(est.theta(1) == Approx(0.5).margin(1e-12));
    // independent oracle: minimum-norm LS through the SVD of X itself
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    const Eigen::VectorXd oracle = svd.solve(p.Y);
    CHECK((est.theta - oracle).norm() == Approx(0.0).margin(1e-10));
  }
}

TEST_CASE("wls_fit examples and edge cases", "[regression]") {
  RegressionProblem p(Eigen::MatrixXd::Ones(3, 1), Eigen::Vector3d(1, 2, 3),
                      0);
  SECTION("unit weights equal OLS bit for bit") {
    const auto a = ols_fit(p);
    const auto b = wls_fit(p, Eigen::VectorXd::Ones(3));
    CHECK(a.theta(0) == b.theta(0));
    CHECK(a.gram(0, 0) == b.gram(0, 0));
    CHECK(a.rank == b.rank);
  }
  SECTION("single supported point") {
    const auto est = wls_fit(p, Eigen::Vector3d(0, 3, 0));
    CHECK(est.theta(0) == Approx(2.0).margin(1e-12));
  }
  SECTION("weighted mean oracle") {
    const auto est = wls_fit(p, Eigen::Vector3d(2, 1, 0));
    CHECK(est.theta(0) == Approx(4.0 / 3.0).epsilon(1e-12));
  }
  SECTION("degenerate weights") {
    CHECK_THROWS_WITH(wls_fit(p, Eigen::Vector3d(0, 0, 0)),
                      Catch::Contains("degenerate weights"));
    CHECK_THROWS_AS(wls_fit(p, Eigen::Vector3d(1, -1, 1)),
                    std::invalid_argument);
  }
}

TEST_CASE("residuals evaluation", "[regression]") {
  Eigen::MatrixXd x(2, 2);
  x << 0, 1, 1, 1;
  RegressionProblem p(x, Eigen::Vector2d(0, 1), 1);
  CHECK((residuals(p, Eigen::Vector2d(0, 0)) - p.Y).norm() == 0.0);
  CHECK(residuals(p, Eigen::Vector2d(1, 0)).norm() ==
        Approx(0.0).margin(1e-14));
  RegressionProblem m(Eigen::MatrixXd::Ones(3, 1), Eigen::Vector3d(1, 2, 3),
                      0);
  const Eigen::VectorXd r = residuals(m, Eigen::VectorXd::Constant(1, 2.0));
  CHECK(r(0) == -1.0);
  CHECK(r(1) == 0.0);
  CHECK(r(2) == 1.0);
  CHECK_THROWS_AS(residuals(m, Eigen::Vector2d(1, 2)), std::invalid_argument);
}

TEST_CASE("weight-scale invariance of the minimizer", "[regression]") {
  RandomStream rng(5);
  Eigen::MatrixXd x(20, 3);
  Eigen::VectorXd y(20), w(20);
  for (int i = 0; i < 20; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    x(i, 2) = 1.0;
    y(i) = rng.normal();
    w(i) = rng.u01() + 0.1;
  }
  RegressionProblem p(x, y, 2);
  const auto base = wls_fit(p, w);
  for (double s : {2.0, 3.7, 0.011}) {
    const auto scaled = wls_fit(p, (s * w).eval());
    CHECK((scaled.theta - base.theta).norm() == Approx(0.0).margin(1e-11));
  }
}

TEST_CASE("exact fit when Y lies in the column space", "[regression]") {
  RandomStream rng(9);
  Eigen::MatrixXd x(30, 3);
  for (int i = 0; i < 30; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.uniform(-2, 2);
    x(i, 2) = 1.0;
  }
  const Eigen::VectorXd truth = Eigen::Vector3d(0.5, -2.0, 3.0);
  RegressionProblem p(x, x * truth, 2);
  const auto est = ols_fit(p);
  CHECK((residuals(p, est.theta).array().abs() < 1e-10).all());
}

TEST_CASE("pseudo-inverse identity on rank-deficient grams", "[regression]") {
  RandomStream rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const int q = 4;
    const int r = 2;
    Eigen::MatrixXd a(q, r);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < r; ++j) a(i, j) = rng.normal();
    const Eigen::MatrixXd gram = a * a.transpose();  // rank deficient PSD
    const Eigen::MatrixXd pinv = pseudo_inverse(gram);
    CHECK((gram * pinv * gram - gram).norm() < 1e-10);
    CHECK((pinv * gram * pinv - pinv).norm() < 1e-10);
  }
}
