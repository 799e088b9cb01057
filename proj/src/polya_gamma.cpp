#include "hospmort/polya_gamma.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hospmort/error.hpp"

namespace hospmort {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTrunc = 0.64;
constexpr double kSeriesCutoff = 1e-4;

// Coefficient a_n(x) of the alternating series for the J*(1, 0) density,
// piecewise at the truncation point.
double series_coef(int n, double x) {
  const double k = (n + 0.5) * kPi;
  if (x > kTrunc) return k * std::exp(-0.5 * k * k * x);
  if (x <= 0.0) return 0.0;
  const double expnt = -1.5 * (std::log(0.5 * kPi) + std::log(x)) + std::log(k) -
                       2.0 * (n + 0.5) * (n + 0.5) / x;
  return std::exp(expnt);
}

// Probability that the proposal comes from the right (exponential) piece.
double mass_right(double z) {
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double b = std::sqrt(1.0 / kTrunc) * (kTrunc * z - 1.0);
  const double a = -std::sqrt(1.0 / kTrunc) * (kTrunc * z + 1.0);
  const double x0 = std::log(fz) + fz * kTrunc;
  const double xb = x0 - z + log_normal_cdf(b);
  const double xa = x0 + z + log_normal_cdf(a);
  const double qdivp = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + qdivp);
}

// Inverse-Gaussian(1/z, 1) truncated to (0, kTrunc).
double truncated_inverse_gaussian(double z, RngStream& rng) {
  const double mu = 1.0 / z;
  double x = kTrunc + 1.0;
  if (mu > kTrunc) {
    double alpha = 0.0;
    while (rng.uniform() > alpha) {
      double e1 = 0.0;
      double e2 = 0.0;
      do {
        e1 = rng.exponential();
        e2 = rng.exponential();
      } while (e1 * e1 > 2.0 * e2 / kTrunc);
      x = kTrunc / ((1.0 + kTrunc * e1) * (1.0 + kTrunc * e1));
      alpha = std::exp(-0.5 * z * z * x);
    }
  } else {
    while (x > kTrunc) {
      const double n = rng.normal();
      const double y = n * n;
      x = mu + 0.5 * mu * mu * y - 0.5 * mu * std::sqrt(4.0 * mu * y + (mu * y) * (mu * y));
      if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
    }
  }
  return x;
}

}  // namespace

double log_normal_cdf(double x) {
  if (x > -30.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  // Mills-ratio expansion.
  const double x2 = x * x;
  return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * kPi) +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

double sample_pg1(double c, RngStream& rng) {
  if (!std::isfinite(c)) {
    throw InputError("sample_pg1: non-finite tilting parameter " + std::to_string(c));
  }
  // PG(1, c) = J*(1, c/2) / 4.
  const double z = 0.5 * std::fabs(c);
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double p_right = mass_right(z);

  for (;;) {
    double x = 0.0;
    if (rng.uniform() < p_right) {
      x = kTrunc + rng.exponential() / fz;
    } else {
      x = truncated_inverse_gaussian(z, rng);
    }

    double s = series_coef(0, x);
    const double y = rng.uniform() * s;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        s -= series_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += series_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

double pg1_mean(double c) {
  if (std::fabs(c) < kSeriesCutoff) {
    const double c2 = c * c;
    return 0.25 - c2 / 48.0 + c2 * c2 / 480.0;
  }
  return std::tanh(0.5 * c) / (2.0 * c);
}

double pg1_variance(double c) {
  const double a = std::fabs(c);
  if (a < kSeriesCutoff) return 1.0 / 24.0 - a * a / 120.0;
  if (a > 50.0) return (1.0 - 2.0 * (a + 1.0) * std::exp(-a)) / (2.0 * a * a * a);
  const double ch = std::cosh(0.5 * a);
  return (std::sinh(a) - a) / (4.0 * a * a * a * ch * ch);
}

}  // namespace hospmort
