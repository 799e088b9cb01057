#ifndef HOSPMORT_TEST_HELPERS_HPP
#define HOSPMORT_TEST_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hospmort/data.hpp"
#include "hospmort/design.hpp"
#include "hospmort/gibbs.hpp"
#include "hospmort/matching.hpp"
#include "hospmort/rng.hpp"

namespace testing {

// Truncated sum-of-gammas representation of PG(1, c):
// (1 / (2 pi^2)) sum_k g_k / ((k - 1/2)^2 + c^2 / (4 pi^2)), g_k ~ Exp(1).
inline double pg1_gamma_sum(double c, hospmort::RngStream& rng, int terms = 200) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  double s = 0.0;
  for (int k = 1; k <= terms; ++k) {
    const double a = k - 0.5;
    s += rng.exponential() / (a * a + c * c / (4.0 * pi2));
  }
  return s / (2.0 * pi2);
}

// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
struct KsResult {
  double d = 0.0;
  double p = 1.0;
};

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  if (lambda < 0.2) return {d, 1.0};  // series converges too slowly; p is 1 to 1e-9
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  }
  return {d, std::clamp(p, 0.0, 1.0)};
}

// Random dataset with the given patients per hospital (volume = n_h unless
// `volumes` is given); one normal covariate, outcomes with rate near 0.3.
inline hospmort::Dataset tiny_dataset(const std::vector<int>& sizes, std::uint64_t seed,
                                      std::vector<long> volumes = {}) {
  hospmort::RngStream rng(seed, 77);
  std::vector<hospmort::HospitalRecord> hs(sizes.size());
  std::vector<hospmort::PatientRecord> ps;
  for (std::size_t h = 0; h < sizes.size(); ++h) {
    hs[h].hospital_id = "H" + std::to_string(h);
    hs[h].volume = volumes.empty() ? sizes[h] : volumes[h];
    for (int j = 0; j < sizes[h]; ++j) {
      hospmort::PatientRecord p;
      p.patient_id = "p" + std::to_string(ps.size());
      p.hospital_id = hs[h].hospital_id;
      p.age = rng.normal(75.0, 8.0);
      p.covariates = {rng.normal()};
      p.outcome = rng.bernoulli(0.3) ? 1 : 0;
      p.admit_period = 1 + static_cast<long>(rng.index(4));
      ps.push_back(p);
    }
  }
  return hospmort::Dataset({"x1"}, {}, hs, ps);
}

// S hand-made draws with the given alpha rows, a shared beta and a
// constant mean coefficient mu.
inline hospmort::PosteriorSamples fixed_samples(const hospmort::Dataset& data,
                                                const hospmort::ModelSpec& spec,
                                                const Eigen::MatrixXd& alpha,
                                                const Eigen::VectorXd& beta, double mu = -1.5) {
  hospmort::PosteriorSamples s;
  s.spec = spec;
  s.transform = hospmort::fit_design_transform(data, spec);
  for (const auto& h : data.hospitals()) s.hospital_ids.push_back(h.hospital_id);
  const Eigen::Index S = alpha.rows();
  s.alpha = alpha;
  s.beta = beta.transpose().replicate(S, 1);
  s.mean_coef = Eigen::MatrixXd::Constant(S, 1, mu);
  s.sigma2_beta = s.g = s.g_spline = s.g_linear = s.g_delta = Eigen::VectorXd::Ones(S);
  s.sigma2_alpha = Eigen::VectorXd::Constant(S, 0.1);
  s.delta = Eigen::VectorXd::Zero(S);
  s.chain.assign(static_cast<std::size_t>(S), 0);
  s.meta.data_hash = data.content_hash();
  return s;
}

inline std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Exhaustive minimum over assignments of k distinct controls per treated.
inline double brute_force_assignment(const hospmort::EdgeList& edges, int n_controls, int k) {
  const int T = static_cast<int>(edges.size());
  std::vector<std::vector<double>> cost(T, std::vector<double>(n_controls, INFINITY));
  for (int t = 0; t < T; ++t) {
    for (const auto& [c, w] : edges[t]) cost[t][c] = w;
  }
  std::vector<char> used(n_controls, 0);
  double best = INFINITY;
  std::function<void(int, int, int, double)> rec = [&](int t, int taken, int from, double acc) {
    if (acc >= best) return;
    if (t == T) {
      best = acc;
      return;
    }
    if (taken == k) {
      rec(t + 1, 0, 0, acc);
      return;
    }
    for (int c = from; c < n_controls; ++c) {
      if (used[c] || !std::isfinite(cost[t][c])) continue;
      used[c] = 1;
      rec(t, taken + 1, c + 1, acc + cost[t][c]);
      used[c] = 0;
    }
  };
  rec(0, 0, 0, 0.0);
  return best;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("hospmort_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing

#endif  // HOSPMORT_TEST_HELPERS_HPP
