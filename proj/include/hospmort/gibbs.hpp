#ifndef HOSPMORT_GIBBS_HPP
#define HOSPMORT_GIBBS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hospmort/data.hpp"
#include "hospmort/design.hpp"
#include "hospmort/model.hpp"
#include "hospmort/rng.hpp"

namespace hospmort {

// One state of the augmented chain. `omega` is transient and never stored.
struct ParamState {
  Eigen::VectorXd alpha;  // hospital effects, logit scale
  Eigen::VectorXd beta;   // fixed effects on the standardized design
  HyperParams hyper;
  Eigen::VectorXd omega;  // Polya-Gamma latents, one per patient
};

struct ChainConfig {
  int iterations = 6000;
  int burnin = 1000;
  int thin = 5;
  std::uint64_t seed = 1;
  int n_chains = 4;
  // Initial random-walk step for delta; <= 0 picks one from the volumes.
  double delta_step = 0.0;
  int threads = 1;
  // Fixed number of patient shards for the omega update, each with its own
  // substream; results do not depend on `threads`.
  int shards = 8;

  void validate() const;
  int retained_per_chain() const { return (iterations - burnin) / thin; }
};

// Quantities derived once from (spec, design) and reused every sweep.
struct HyperContext {
  Eigen::MatrixXd penalty;         // k x k, ridged; empty without a spline
  Eigen::Index spline_dim = 0;
  Eigen::Index linear_dim = 0;
  std::vector<int> active;         // hospitals with at least one patient
  std::vector<int> cold;           // hospitals without patients

  HyperContext(const ModelSpec& spec, const DesignBundle& design);

  // Prior precision of mean_coef in units of 1 / sigma2_alpha.
  Eigen::MatrixXd prior_precision(const ModelSpec& spec, const HyperParams& hyper) const;
};

// Random-walk Metropolis bookkeeping for delta.
struct DeltaProposal {
  double step = 1e-3;
  long proposed = 0;
  long accepted = 0;
  double acceptance() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

// omega_i ~ PG(1, alpha_h(i) + x_i' beta). The sharded overload splits the
// patients into streams.size() contiguous blocks, block s drawing from
// streams[s].
Eigen::VectorXd update_omega(const ParamState& state, const DesignBundle& design, RngStream& rng);
Eigen::VectorXd update_omega(const ParamState& state, const DesignBundle& design,
                             std::span<RngStream> streams, int threads = 1);

// alpha_h ~ N(m_h, V_h), V_h = [1/sigma2_h + sum_j omega_hj]^-1,
// m_h = V_h [mu_h / sigma2_h + sum_j (y_hj - 1/2 - omega_hj x_hj' beta)].
Eigen::VectorXd update_alpha(const ParamState& state, const DesignBundle& design,
                             const ModelSpec& spec, RngStream& rng);

// beta ~ N(m, V), V = [I / sigma2_beta + X' Omega X]^-1,
// m = V X' (y - 1/2 - Omega K alpha).
Eigen::VectorXd update_beta(const ParamState& state, const DesignBundle& design,
                            const ModelSpec& spec, RngStream& rng);

// Conjugate draws of the mean coefficients, sigma2_alpha, the g scales and
// sigma2_beta given alpha and beta, then a Metropolis step for delta.
// Hospitals without patients are integrated out.
HyperParams update_hyper(const ParamState& state, const DesignBundle& design,
                         const ModelSpec& spec, const HyperContext& context, RngStream& rng,
                         DeltaProposal& delta);

// Prior draws for hospitals without patients given the current hyper.
void redraw_cold_start(ParamState& state, const DesignBundle& design, const ModelSpec& spec,
                       const HyperContext& context, RngStream& rng);

// Deterministic starting point.
ParamState initial_state(const DesignBundle& design, const ModelSpec& spec);

struct SampleMeta {
  int iterations = 0;
  int burnin = 0;
  int thin = 1;
  std::uint64_t seed = 0;
  int n_chains = 1;
  std::uint64_t spec_hash = 0;
  std::uint64_t data_hash = 0;
  std::vector<double> delta_acceptance;  // per chain, post burn-in
  std::vector<double> delta_step;        // per chain, frozen step
  std::vector<std::string> warnings;
};

// Retained draws. Row s of every matrix belongs to the same draw.
struct PosteriorSamples {
  ModelSpec spec;
  DesignTransform transform;
  std::vector<std::string> hospital_ids;
  Eigen::MatrixXd alpha;      // S x H
  Eigen::MatrixXd beta;       // S x p
  Eigen::MatrixXd mean_coef;  // S x q
  Eigen::VectorXd sigma2_beta, g, g_spline, g_linear, sigma2_alpha, delta, g_delta;
  std::vector<int> chain;
  SampleMeta meta;

  Eigen::Index size() const { return alpha.rows(); }
  Eigen::Index num_hospitals() const { return alpha.cols(); }
  ParamState draw(Eigen::Index s) const;
  HyperParams hyper(Eigen::Index s) const;

  void reserve(Eigen::Index rows, Eigen::Index hospitals, Eigen::Index fixed, Eigen::Index q);
  void set(Eigen::Index s, int chain_id, const ParamState& state);
};

// Runs config.n_chains chains (chain c uses stream id 1000 c, its omega
// shards 1000 c + 1 + s) and stacks their retained draws in chain order.
// Throws NumericalError naming the iteration on a non-finite state.
PosteriorSamples run_chain(const ModelSpec& spec, const Dataset& data, const ChainConfig& config);
PosteriorSamples run_chain(const ModelSpec& spec, const Dataset& data, const DesignBundle& design,
                           const ChainConfig& config);

}  // namespace hospmort

#endif  // HOSPMORT_GIBBS_HPP
