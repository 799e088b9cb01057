#include <doctest.h>

#include <cmath>
#include <functional>

#include "hospmort/error.hpp"
#include "hospmort/rng.hpp"
#include "hospmort/spline.hpp"

using namespace hospmort;

namespace {

Eigen::VectorXd lognormal_logvol(int n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = std::log(std::round(std::exp(4.4 + rng.normal())) + 1.0);
  return v;
}

}  // namespace

TEST_CASE("basis rows are a partition of unity with local support") {
  const Eigen::VectorXd v = lognormal_logvol(500, 3);
  for (int d : {0, 1, 2, 3}) {
    for (int kappa : {1, 5, 17}) {
      const auto [basis, B] = build_basis(v, d, kappa);
      CHECK(B.rows() == 500);
      CHECK(B.cols() == d + 1 + kappa);
      CHECK(basis.dimension() == d + 1 + kappa);
      for (Eigen::Index h = 0; h < B.rows(); ++h) {
        CHECK(std::abs(B.row(h).sum() - 1.0) < 1e-12);
        CHECK((B.row(h).array() != 0.0).count() <= d + 1);
        CHECK(B.row(h).minCoeff() >= 0.0);
      }
    }
  }
}

TEST_CASE("cubic basis with 17 knots on 500 log volumes is 500 x 21") {
  const auto [basis, B] = build_basis(lognormal_logvol(500, 9), 3, 17);
  CHECK(B.rows() == 500);
  CHECK(B.cols() == 21);
  for (std::size_t i = 0; i < basis.interior_knots.size(); ++i) {
    CHECK(basis.interior_knots[i] > basis.lower);
    CHECK(basis.interior_knots[i] < basis.upper);
    if (i) CHECK(basis.interior_knots[i] > basis.interior_knots[i - 1]);
  }
}

TEST_CASE("piecewise-constant basis splits at the median") {
  Eigen::VectorXd v(5);
  v << 0.0, 0.2, 0.5, 0.8, 1.0;
  const auto [basis, B] = build_basis(v, 0, 1);
  REQUIRE(B.cols() == 2);
  CHECK(basis.interior_knots[0] == doctest::Approx(0.5));
  CHECK(B(0, 0) == 1.0);
  CHECK(B(1, 0) == 1.0);
  CHECK(B(3, 1) == 1.0);
  CHECK(B(4, 1) == 1.0);
}

TEST_CASE("basis evaluation agrees with a brute-force Cox-de Boor recursion") {
  const Eigen::VectorXd v = lognormal_logvol(200, 4);
  const auto [basis, B] = build_basis(v, 3, 6);
  const auto t = basis.knot_vector();
  const int d = basis.degree;
  const auto k = basis.dimension();
  // Plain recursion on the full knot vector, right endpoint closed.
  std::function<double(int, int, double)> N = [&](int i, int p, double x) -> double {
    if (p == 0) {
      const bool last = t[i + 1] == t.back() && t[i] < t[i + 1];
      return (t[i] <= x && (x < t[i + 1] || (last && x == t[i + 1]))) ? 1.0 : 0.0;
    }
    double a = 0.0, b = 0.0;
    if (t[i + p] > t[i]) a = (x - t[i]) / (t[i + p] - t[i]) * N(i, p - 1, x);
    if (t[i + p + 1] > t[i + 1]) b = (t[i + p + 1] - x) / (t[i + p + 1] - t[i + 1]) * N(i + 1, p - 1, x);
    return a + b;
  };
  for (Eigen::Index h = 0; h < v.size(); h += 7) {
    for (Eigen::Index j = 0; j < k; ++j) {
      CHECK(std::abs(B(h, j) - N(static_cast<int>(j), d, v(h))) < 1e-12);
    }
  }
}

TEST_CASE("build_basis errors") {
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(30, 0.0, 1.0);
  CHECK_THROWS_AS(build_basis(v, -1, 3), InputError);
  CHECK_THROWS_AS(build_basis(v, 3, -1), InputError);
  Eigen::VectorXd few(6);
  few << 1, 1, 1, 2, 2, 3;
  CHECK_THROWS_AS(build_basis(few, 0, 3), InputError);
  CHECK_THROWS_AS(build_basis(Eigen::VectorXd::LinSpaced(10, 0, 1), 3, 17), InputError);
}

TEST_CASE("second-difference penalty for k = 4") {
  const auto P = build_penalty(4, 0.0);
  Eigen::Matrix4d expect;
  expect << 1, -2, 1, 0, -2, 5, -4, 1, 1, -4, 5, -2, 0, 1, -2, 1;
  CHECK((P.matrix - expect).cwiseAbs().maxCoeff() == 0.0);
  CHECK((P.matrix * Eigen::Vector4d(1, 1, 1, 1)).norm() == 0.0);
  CHECK((P.matrix * Eigen::Vector4d(1, 2, 3, 4)).norm() == 0.0);
}

TEST_CASE("penalty null space is the linear sequences and rank is k - 2") {
  for (int k : {3, 5, 10, 21}) {
    const auto P = build_penalty(k, 0.0).matrix;
    CHECK((P - P.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
    const auto& ev = es.eigenvalues();
    CHECK(ev.minCoeff() > -1e-10);
    CHECK((ev.array() > 1e-9).count() == k - 2);
    Eigen::VectorXd quad(k);
    for (int i = 0; i < k; ++i) quad(i) = i * i;
    CHECK(quad.dot(P * quad) > 1.0);
    // Band width 2.
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        if (std::abs(i - j) > 2) CHECK(P(i, j) == 0.0);
  }
}

TEST_CASE("ridge is added to the diagonal") {
  const auto P = build_penalty(6, 0.25);
  CHECK((P.matrix - P.unridged()).isApprox(0.25 * Eigen::MatrixXd::Identity(6, 6)));
  CHECK(default_ridge(6) == doctest::Approx(1e-6 * build_penalty(6, 0.0).matrix.trace() / 6));
  CHECK_THROWS_AS(build_penalty(2, 0.0), InputError);
  CHECK_THROWS_AS(build_penalty(5, -1.0), InputError);
}
