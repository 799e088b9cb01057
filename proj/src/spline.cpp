#include "hospmort/spline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "hospmort/error.hpp"

namespace hospmort {

namespace {

// Linear-interpolation quantile of sorted data.
double sorted_quantile(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<double> SplineBasis::knot_vector() const {
  std::vector<double> t;
  t.reserve(interior_knots.size() + 2 * (degree + 1));
  t.insert(t.end(), degree + 1, lower);
  t.insert(t.end(), interior_knots.begin(), interior_knots.end());
  t.insert(t.end(), degree + 1, upper);
  return t;
}

Eigen::MatrixXd SplineBasis::evaluate(const Eigen::VectorXd& v) const {
  Eigen::MatrixXd b(v.size(), dimension());
  for (Eigen::Index h = 0; h < v.size(); ++h) b.row(h) = evaluate<double>(v(h)).transpose();
  return b;
}

std::pair<SplineBasis, Eigen::MatrixXd> build_basis(const Eigen::VectorXd& v, int degree,
                                                    int num_knots) {
  if (degree < 0) throw InputError("spline degree must be >= 0, got " + std::to_string(degree));
  if (num_knots < 0) {
    throw InputError("number of spline knots must be >= 0, got " + std::to_string(num_knots));
  }
  const std::set<double> distinct(v.data(), v.data() + v.size());
  if (static_cast<int>(distinct.size()) < num_knots + 2) {
    throw InputError("spline basis needs at least " + std::to_string(num_knots + 2) +
                     " distinct values, got " + std::to_string(distinct.size()));
  }
  const Eigen::Index k = degree + 1 + num_knots;
  if (v.size() < k) {
    throw InputError("spline basis of dimension " + std::to_string(k) + " needs at least " +
                     std::to_string(k) + " points, got " + std::to_string(v.size()));
  }

  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end());

  SplineBasis basis;
  basis.degree = degree;
  basis.lower = sorted.front();
  basis.upper = sorted.back();
  const double jitter = 1e-9 * (basis.upper - basis.lower);

  std::vector<double> knots(num_knots);
  for (int i = 0; i < num_knots; ++i) {
    knots[i] = sorted_quantile(sorted, static_cast<double>(i + 1) / (num_knots + 1));
  }
  double prev = basis.lower;
  for (double& t : knots) {
    t = std::max(t, prev + jitter);
    prev = t;
  }
  double next = basis.upper;
  for (auto it = knots.rbegin(); it != knots.rend(); ++it) {
    *it = std::min(*it, next - jitter);
    next = *it;
  }
  basis.interior_knots = std::move(knots);

  Eigen::MatrixXd b = basis.evaluate(v);
  return {std::move(basis), std::move(b)};
}

PenaltyMatrix build_penalty(Eigen::Index k, double ridge) {
  if (k < 3) throw InputError("penalty needs k >= 3, got " + std::to_string(k));
  if (ridge < 0.0) throw InputError("penalty ridge must be >= 0");
  const Eigen::MatrixXd d = second_difference(k);
  PenaltyMatrix p;
  p.matrix = d.transpose() * d;
  p.matrix.diagonal().array() += ridge;
  p.ridge = ridge;
  return p;
}

double default_ridge(Eigen::Index k) {
  const Eigen::MatrixXd d = second_difference(k);
  return 1e-6 * (d.transpose() * d).trace() / static_cast<double>(k);
}

}  // namespace hospmort
