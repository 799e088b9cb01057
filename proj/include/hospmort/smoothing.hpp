#ifndef HOSPMORT_SMOOTHING_HPP
#define HOSPMORT_SMOOTHING_HPP

#include <filesystem>
#include <string>

#include <Eigen/Dense>

namespace hospmort {

struct SmoothCurve {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  double lambda = 0.0;
};

// Penalized cubic B-spline through the means of `bins` equal-count bins of
// (x, y), weighted by bin size, with the smoothing parameter chosen by
// generalized cross-validation. Evaluated on `grid` equally spaced points.
SmoothCurve smooth_binned(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int bins = 25,
                          int grid = 100);

// Scatter of (x, y) with the curve overlaid.
void write_svg_scatter(const std::filesystem::path& path, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y, const SmoothCurve& curve,
                       const std::string& title, const std::string& xlabel,
                       const std::string& ylabel);

}  // namespace hospmort

#endif  // HOSPMORT_SMOOTHING_HPP
