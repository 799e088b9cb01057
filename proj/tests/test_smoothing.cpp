#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "hospmort/smoothing.hpp"

using namespace hospmort;

namespace {

// Local linear regression with a Gaussian kernel.
double local_linear(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double x0, double bw) {
  double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = x(i) - x0;
    const double w = std::exp(-0.5 * d * d / (bw * bw));
    s0 += w;
    s1 += w * d;
    s2 += w * d * d;
    t0 += w * y(i);
    t1 += w * d * y(i);
  }
  return (s2 * t0 - s1 * t1) / (s0 * s2 - s1 * s1);
}

}  // namespace

TEST_CASE("binned smoother agrees with a local linear smoother") {
  RngStream rng(8, 0);
  const int n = 3000;
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x(i) = 1.0 + 6.0 * rng.uniform();
    y(i) = 0.15 + 0.05 * std::sin(x(i)) + 0.03 * rng.normal();
  }
  const SmoothCurve c = smooth_binned(x, y);
  REQUIRE(c.x.size() == 100);
  CHECK(c.x(0) >= x.minCoeff());
  CHECK(c.x(99) <= x.maxCoeff());
  double sse = 0.0;
  for (Eigen::Index g = 0; g < c.x.size(); ++g) {
    const double ref = local_linear(x, y, c.x(g), 0.4);
    sse += (c.y(g) - ref) * (c.y(g) - ref);
  }
  CHECK(std::sqrt(sse / c.x.size()) < 0.01);
}

TEST_CASE("a straight line is reproduced") {
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(500, 0.0, 10.0);
  Eigen::VectorXd y = 0.2 - 0.01 * x.array();
  const SmoothCurve c = smooth_binned(x, y, 20, 50);
  for (Eigen::Index g = 0; g < c.x.size(); ++g) {
    CHECK(std::abs(c.y(g) - (0.2 - 0.01 * c.x(g))) < 1e-5);
  }
}

TEST_CASE("svg output") {
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(50, 0.0, 1.0);
  Eigen::VectorXd y = x.array().square();
  const auto dir = testing::scratch("svg");
  write_svg_scatter(dir / "p.svg", x, y, smooth_binned(x, y, 10, 20), "t", "x", "y");
  const std::string s = testing::slurp(dir / "p.svg");
  CHECK(s.find("<svg") != std::string::npos);
  CHECK(s.find("<circle") != std::string::npos);
  CHECK(s.find("</svg>") != std::string::npos);
}
