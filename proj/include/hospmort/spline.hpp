#ifndef HOSPMORT_SPLINE_HPP
#define HOSPMORT_SPLINE_HPP

#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace hospmort {

// Clamped B-spline basis on [lower, upper] with the given interior knots.
// Dimension is (degree + 1) + number of interior knots.
struct SplineBasis {
  int degree = 3;
  std::vector<double> interior_knots;
  double lower = 0.0;
  double upper = 1.0;

  Eigen::Index dimension() const {
    return degree + 1 + static_cast<Eigen::Index>(interior_knots.size());
  }

  // Full knot vector with the boundary knots repeated degree + 1 times.
  std::vector<double> knot_vector() const;

  // Basis values at x. Points outside [lower, upper] are clamped to the
  // boundary, so every row is a partition of unity.
  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> evaluate(Scalar x) const;

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& v) const;
};

// Cox-de Boor recursion over a clamped knot vector. Returns the degree + 1
// nonzero basis values starting at index span - degree.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> de_boor_nonzero(const std::vector<double>& knots,
                                                         int degree, Eigen::Index span,
                                                         Scalar x) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> n(degree + 1);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> left(degree + 1);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> right(degree + 1);
  n(0) = Scalar(1);
  for (int j = 1; j <= degree; ++j) {
    left(j) = x - Scalar(knots[span + 1 - j]);
    right(j) = Scalar(knots[span + j]) - x;
    Scalar saved(0);
    for (int r = 0; r < j; ++r) {
      const Scalar denom = right(r + 1) + left(j - r);
      const Scalar temp = denom == Scalar(0) ? Scalar(0) : n(r) / denom;
      n(r) = saved + right(r + 1) * temp;
      saved = left(j - r) * temp;
    }
    n(j) = saved;
  }
  return n;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> SplineBasis::evaluate(Scalar x) const {
  const std::vector<double> t = knot_vector();
  const Eigen::Index k = dimension();
  if (x < Scalar(lower)) x = Scalar(lower);
  if (x > Scalar(upper)) x = Scalar(upper);

  // Largest span index with t[span] <= x < t[span + 1], restricted to the
  // nonempty spans degree .. k - 1.
  Eigen::Index span = degree;
  for (Eigen::Index i = degree; i < k; ++i) {
    if (Scalar(t[i]) <= x && t[i] < t[i + 1]) span = i;
  }

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> row = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(k);
  row.segment(span - degree, degree + 1) = de_boor_nonzero<Scalar>(t, degree, span, x);
  return row;
}

// Basis with interior knots at equally spaced quantiles of v and boundary
// knots at min(v), max(v); returns the basis and its H x k design matrix.
// Coincident quantile knots are separated by 1e-9 * range.
std::pair<SplineBasis, Eigen::MatrixXd> build_basis(const Eigen::VectorXd& v, int degree,
                                                    int num_knots);

// Second-order difference penalty D'D + ridge * I.
struct PenaltyMatrix {
  Eigen::MatrixXd matrix;
  double ridge = 0.0;

  Eigen::Index dimension() const { return matrix.rows(); }
  Eigen::MatrixXd unridged() const {
    return matrix - ridge * Eigen::MatrixXd::Identity(matrix.rows(), matrix.cols());
  }
};

// (k - 2) x k second-difference operator.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> second_difference(Eigen::Index k) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(k - 2, k);
  for (Eigen::Index i = 0; i + 2 < k; ++i) {
    d(i, i) = Scalar(1);
    d(i, i + 1) = Scalar(-2);
    d(i, i + 2) = Scalar(1);
  }
  return d;
}

PenaltyMatrix build_penalty(Eigen::Index k, double ridge);

// 1e-6 * trace(D'D) / k, the ridge that makes the penalty invertible.
double default_ridge(Eigen::Index k);

}  // namespace hospmort

#endif  // HOSPMORT_SPLINE_HPP
