#ifndef HOSPMORT_DIAGNOSTICS_HPP
#define HOSPMORT_DIAGNOSTICS_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hospmort/gibbs.hpp"

namespace hospmort {

// Sample quantile by linear interpolation between order statistics
// (position 1 + (n - 1) p in the sorted sample).
double quantile(std::vector<double> x, double p);
double quantile(const Eigen::VectorXd& x, double p);

// Monte Carlo standard error of the mean by non-overlapping batch means
// with floor(sqrt(n)) batches.
double batch_means_se(const Eigen::VectorXd& x);

// Effective sample size from the initial positive sequence of
// autocorrelations, summed over chains.
double effective_sample_size(const Eigen::VectorXd& x, const std::vector<int>& chain);

// Split potential scale reduction factor; NaN with fewer than 4 draws per
// chain.
double split_rhat(const Eigen::VectorXd& x, const std::vector<int>& chain);

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double ess = 0.0;
  double rhat = 0.0;
};

// Fixed effects, mean coefficients and the scalar hyperparameters of the
// fitted family.
std::vector<ParamSummary> summarize_parameters(const PosteriorSamples& samples);

}  // namespace hospmort

#endif  // HOSPMORT_DIAGNOSTICS_HPP
