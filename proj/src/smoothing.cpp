#include "hospmort/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <vector>

#include "hospmort/data.hpp"
#include "hospmort/error.hpp"
#include "hospmort/spline.hpp"

namespace hospmort {

SmoothCurve smooth_binned(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int bins, int grid) {
  if (x.size() != y.size()) throw InputError("smooth_binned: x and y differ in length");
  std::vector<Eigen::Index> order;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::isfinite(x(i)) && std::isfinite(y(i))) order.push_back(i);
  }
  if (order.size() < 4) throw InputError("smooth_binned: need at least 4 finite points");
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x(a) < x(b); });
  const auto n = static_cast<int>(order.size());
  bins = std::clamp(bins, 4, n);

  Eigen::VectorXd bx(bins), by(bins), bw(bins);
  for (int b = 0; b < bins; ++b) {
    const int lo = n * b / bins;
    const int hi = n * (b + 1) / bins;
    double sx = 0.0, sy = 0.0;
    for (int r = lo; r < hi; ++r) {
      sx += x(order[r]);
      sy += y(order[r]);
    }
    bw(b) = hi - lo;
    bx(b) = sx / bw(b);
    by(b) = sy / bw(b);
  }

  const double xmin = x(order.front());
  const double xmax = x(order.back());
  SplineBasis basis;
  basis.degree = 3;
  basis.lower = xmin;
  basis.upper = xmax > xmin ? xmax : xmin + 1.0;
  const int knots = std::max(0, std::min(8, bins - 4));
  for (int j = 1; j <= knots; ++j) {
    basis.interior_knots.push_back(basis.lower + (basis.upper - basis.lower) * j / (knots + 1.0));
  }
  const Eigen::MatrixXd B = basis.evaluate(bx);
  const Eigen::Index k = B.cols();
  const Eigen::MatrixXd P = build_penalty(k, 0.0).matrix;
  const Eigen::MatrixXd BtW = B.transpose() * bw.asDiagonal();
  const Eigen::MatrixXd BtWB = BtW * B;
  const Eigen::VectorXd BtWy = BtW * by;
  const double wsum = bw.sum();

  SmoothCurve curve;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_coef;
  for (int e = -60; e <= 60; ++e) {
    const double lambda = std::pow(10.0, e / 10.0);
    Eigen::MatrixXd A = BtWB + lambda * P;
    A.diagonal().array() += 1e-10;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    const Eigen::VectorXd coef = ldlt.solve(BtWy);
    const double rss = (bw.array() * (B * coef - by).array().square()).sum();
    const double edf = ldlt.solve(BtWB).trace();
    const double denom = 1.0 - edf / static_cast<double>(bins);
    if (denom <= 0.0) continue;
    const double gcv = rss / wsum / (denom * denom);
    if (gcv < best) {
      best = gcv;
      best_coef = coef;
      curve.lambda = lambda;
    }
  }
  if (best_coef.size() == 0) throw NumericalError("smooth_binned: no admissible smoothing parameter");
  curve.x = Eigen::VectorXd::LinSpaced(std::max(grid, 2), xmin, xmax);
  curve.y = basis.evaluate(curve.x) * best_coef;
  return curve;
}

void write_svg_scatter(const std::filesystem::path& path, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y, const SmoothCurve& curve,
                       const std::string& title, const std::string& xlabel,
                       const std::string& ylabel) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  const double W = 640, Hgt = 440, L = 60, R = 20, T = 40, Bm = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x(i)) || !std::isfinite(y(i))) continue;
    x0 = std::min(x0, x(i));
    x1 = std::max(x1, x(i));
    y0 = std::min(y0, y(i));
    y1 = std::max(y1, y(i));
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return Hgt - Bm - (v - y0) / (y1 - y0) * (Hgt - T - Bm); };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hgt << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << Hgt - 12 << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
  out << "<text x=\"14\" y=\"" << Hgt / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << Hgt / 2
      << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << Hgt - Bm << "\" x2=\"" << W - R << "\" y2=\"" << Hgt - Bm
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << Hgt - Bm
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4.0;
    const double yv = y0 + (y1 - y0) * t / 4.0;
    out << "<text x=\"" << px(xv) << "\" y=\"" << Hgt - Bm + 16 << "\" font-size=\"10\" text-anchor=\"middle\">"
        << format_real(std::round(xv * 1000) / 1000) << "</text>\n";
    out << "<text x=\"" << L - 4 << "\" y=\"" << py(yv) + 3 << "\" font-size=\"10\" text-anchor=\"end\">"
        << format_real(std::round(yv * 1000) / 1000) << "</text>\n";
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x(i)) || !std::isfinite(y(i))) continue;
    out << "<circle cx=\"" << px(x(i)) << "\" cy=\"" << py(y(i)) << "\" r=\"1.6\" fill=\"#4a6fa5\" fill-opacity=\"0.6\"/>\n";
  }
  out << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"";
  for (Eigen::Index i = 0; i < curve.x.size(); ++i) {
    out << px(curve.x(i)) << ',' << py(std::clamp(curve.y(i), y0, y1)) << ' ';
  }
  out << "\"/>\n</svg>\n";
}

}  // namespace hospmort
