#include "hospmort/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "hospmort/error.hpp"

namespace hospmort {

namespace {

std::vector<std::vector<double>> by_chain(const Eigen::VectorXd& x, const std::vector<int>& chain) {
  std::map<int, std::vector<double>> groups;
  for (Eigen::Index s = 0; s < x.size(); ++s) {
    groups[chain.empty() ? 0 : chain[s]].push_back(x(s));
  }
  std::vector<std::vector<double>> out;
  for (auto& [id, v] : groups) out.push_back(std::move(v));
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double a : v) s += a;
  return s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double a : v) s += (a - m) * (a - m);
  return s / static_cast<double>(v.size() - 1);
}

double chain_ess(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 4) return static_cast<double>(n);
  const double m = mean_of(v);
  double c0 = 0.0;
  for (double a : v) c0 += (a - m) * (a - m);
  c0 /= static_cast<double>(n);
  if (c0 <= 0.0) return static_cast<double>(n);
  auto rho = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (v[i] - m) * (v[i + lag] - m);
    return s / (static_cast<double>(n) * c0);
  };
  double tau = -1.0;
  for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
    const double pair = rho(lag) + rho(lag + 1);
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return static_cast<double>(n) / std::max(tau, 1.0 / static_cast<double>(n));
}

}  // namespace

double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw InputError("quantile of an empty sample");
  std::sort(x.begin(), x.end());
  const double pos = p * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return x[lo] + frac * (x[hi] - x[lo]);
}

double quantile(const Eigen::VectorXd& x, double p) {
  return quantile(std::vector<double>(x.data(), x.data() + x.size()), p);
}

double batch_means_se(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  if (n < 4) return std::numeric_limits<double>::quiet_NaN();
  const auto batches = static_cast<Eigen::Index>(std::floor(std::sqrt(static_cast<double>(n))));
  const Eigen::Index len = n / batches;
  Eigen::VectorXd means(batches);
  for (Eigen::Index b = 0; b < batches; ++b) means(b) = x.segment(b * len, len).mean();
  const double m = means.mean();
  const double var = (means.array() - m).square().sum() / static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

double effective_sample_size(const Eigen::VectorXd& x, const std::vector<int>& chain) {
  double total = 0.0;
  for (const auto& v : by_chain(x, chain)) total += chain_ess(v);
  return total;
}

double split_rhat(const Eigen::VectorXd& x, const std::vector<int>& chain) {
  std::vector<std::vector<double>> halves;
  for (const auto& v : by_chain(x, chain)) {
    const std::size_t half = v.size() / 2;
    if (half < 2) return std::numeric_limits<double>::quiet_NaN();
    halves.emplace_back(v.begin(), v.begin() + half);
    halves.emplace_back(v.end() - half, v.end());
  }
  const auto m = static_cast<double>(halves.size());
  const auto n = static_cast<double>(halves.front().size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& h : halves) {
    means.push_back(mean_of(h));
    w += variance_of(h);
  }
  w /= m;
  const double b = n * variance_of(means);
  if (w <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

std::vector<ParamSummary> summarize_parameters(const PosteriorSamples& samples) {
  if (samples.size() == 0) throw InputError("no posterior draws to summarize");
  std::vector<ParamSummary> out;
  auto add = [&](const std::string& name, const Eigen::VectorXd& x) {
    ParamSummary p;
    p.name = name;
    p.mean = x.mean();
    p.sd = x.size() > 1 ? std::sqrt((x.array() - p.mean).square().sum() / (x.size() - 1.0)) : 0.0;
    p.lo = quantile(x, 0.025);
    p.hi = quantile(x, 0.975);
    p.ess = effective_sample_size(x, samples.chain);
    p.rhat = split_rhat(x, samples.chain);
    out.push_back(p);
  };
  const auto& names = samples.transform.column_names;
  for (Eigen::Index j = 0; j < samples.beta.cols(); ++j) {
    add("beta." + std::to_string(j + 1) + (j < static_cast<Eigen::Index>(names.size()) ? "[" + names[j] + "]" : ""),
        samples.beta.col(j));
  }
  const Eigen::Index k = samples.transform.basis ? samples.transform.basis->dimension() : 0;
  const auto coef_names = mean_coef_names(samples.spec, k);
  for (Eigen::Index j = 0; j < samples.mean_coef.cols(); ++j) add(coef_names[j], samples.mean_coef.col(j));
  add("sigma2_beta", samples.sigma2_beta);
  add("sigma2_alpha", samples.sigma2_alpha);
  switch (samples.spec.mean) {
    case MeanFamily::Constant:
    case MeanFamily::LinearAttr:
      add("g", samples.g);
      break;
    case MeanFamily::SplineLinear:
      add("g_S", samples.g_spline);
      add("g_L", samples.g_linear);
      break;
    case MeanFamily::SplineVolume:
      add("g_S", samples.g_spline);
      break;
  }
  if (samples.spec.has_delta()) {
    add("delta", samples.delta);
    add("g_delta", samples.g_delta);
  }
  return out;
}

}  // namespace hospmort
