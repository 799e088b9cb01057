#include "hospmort/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hospmort/error.hpp"
#include "hospmort/parallel.hpp"
#include "hospmort/polya_gamma.hpp"
#include "hospmort/spline.hpp"

namespace hospmort {

namespace {

// Draw from N(Q^-1 b, scale * Q^-1) through the Cholesky factor of Q.
Eigen::VectorXd draw_gaussian_precision(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b,
                                        double scale, RngStream& rng, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(Q);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + ": precision matrix is not positive definite");
  }
  Eigen::VectorXd mean = llt.solve(b);
  const Eigen::VectorXd z = rng.normal_vector(b.size());
  mean.noalias() += std::sqrt(scale) * llt.matrixU().solve(z);
  return mean;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

void ChainConfig::validate() const {
  if (iterations <= 0) throw InputError("iterations must be positive");
  if (burnin < 0 || burnin >= iterations) throw InputError("burnin must satisfy 0 <= burnin < iterations");
  if (thin < 1) throw InputError("thin must be >= 1");
  if (n_chains < 1) throw InputError("n_chains must be >= 1");
  if (shards < 1) throw InputError("shards must be >= 1");
}

HyperContext::HyperContext(const ModelSpec& spec, const DesignBundle& design) {
  if (spec.has_spline()) {
    spline_dim = design.basis.cols();
    penalty = build_penalty(spline_dim, design.transform.penalty_ridge).matrix;
  }
  if (spec.mean == MeanFamily::SplineLinear) {
    linear_dim = static_cast<Eigen::Index>(spec.linear_attributes.size());
  }
  for (Eigen::Index h = 0; h < design.num_hospitals(); ++h) {
    (design.group_size(h) > 0 ? active : cold).push_back(static_cast<int>(h));
  }
}

Eigen::MatrixXd HyperContext::prior_precision(const ModelSpec& spec, const HyperParams& hyper) const {
  switch (spec.mean) {
    case MeanFamily::Constant:
      return Eigen::MatrixXd::Identity(1, 1) / hyper.g;
    case MeanFamily::LinearAttr:
      return Eigen::MatrixXd::Identity(2, 2) / hyper.g;
    case MeanFamily::SplineVolume:
      return penalty / hyper.g_spline;
    case MeanFamily::SplineLinear: {
      const Eigen::Index q = spline_dim + linear_dim;
      Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(q, q);
      lambda.topLeftCorner(spline_dim, spline_dim) = penalty / hyper.g_spline;
      lambda.bottomRightCorner(linear_dim, linear_dim).diagonal().setConstant(1.0 / hyper.g_linear);
      return lambda;
    }
  }
  return {};
}

Eigen::VectorXd update_omega(const ParamState& state, const DesignBundle& design, RngStream& rng) {
  return update_omega(state, design, std::span<RngStream>(&rng, 1), 1);
}

Eigen::VectorXd update_omega(const ParamState& state, const DesignBundle& design,
                             std::span<RngStream> streams, int threads) {
  const Eigen::Index n = design.num_patients();
  Eigen::VectorXd omega(n);
  const Eigen::VectorXd xb = design.X * state.beta;
  const auto shards = static_cast<Eigen::Index>(streams.size());
  parallel_for(static_cast<int>(shards), threads, [&](int s) {
    const Eigen::Index begin = n * s / shards;
    const Eigen::Index end = n * (s + 1) / shards;
    for (Eigen::Index i = begin; i < end; ++i) {
      omega(i) = sample_pg1(state.alpha(design.hospital[i]) + xb(i), streams[s]);
    }
  });
  return omega;
}

Eigen::VectorXd update_alpha(const ParamState& state, const DesignBundle& design,
                             const ModelSpec& spec, RngStream& rng) {
  const Eigen::Index hcount = design.num_hospitals();
  const Eigen::VectorXd xb = design.X * state.beta;
  Eigen::VectorXd omega_sum = Eigen::VectorXd::Zero(hcount);
  Eigen::VectorXd kappa_sum = Eigen::VectorXd::Zero(hcount);
  for (Eigen::Index i = 0; i < design.num_patients(); ++i) {
    const int h = design.hospital[i];
    omega_sum(h) += state.omega(i);
    kappa_sum(h) += (design.y(i) - 0.5) - state.omega(i) * xb(i);
  }
  const Eigen::VectorXd mu = design.mean_design * state.hyper.mean_coef;
  Eigen::VectorXd alpha(hcount);
  for (Eigen::Index h = 0; h < hcount; ++h) {
    const double s2 = sigma2_h(spec, state.hyper, design.volume(h));
    const double v = 1.0 / (1.0 / s2 + omega_sum(h));
    if (!(v > 0.0)) throw NumericalError("update_alpha: nonpositive conditional variance");
    const double m = v * (mu(h) / s2 + kappa_sum(h));
    alpha(h) = m + std::sqrt(v) * rng.normal();
  }
  return alpha;
}

Eigen::VectorXd update_beta(const ParamState& state, const DesignBundle& design,
                            const ModelSpec& spec, RngStream& rng) {
  (void)spec;
  const Eigen::Index p = design.num_fixed();
  if (p == 0) return Eigen::VectorXd();
  const Eigen::Index n = design.num_patients();
  Eigen::VectorXd resid(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    resid(i) = (design.y(i) - 0.5) - state.omega(i) * state.alpha(design.hospital[i]);
  }
  const Eigen::MatrixXd weighted = design.X.array().colwise() * state.omega.array().sqrt();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(p, p) / state.hyper.sigma2_beta;
  Q.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose());
  Q = Q.selfadjointView<Eigen::Lower>();
  const Eigen::VectorXd b = design.X.transpose() * resid;
  return draw_gaussian_precision(Q, b, 1.0, rng, "update_beta");
}

namespace {

// Unnormalized log conditional of delta.
double delta_log_target(double delta, const Eigen::VectorXd& resid2, const Eigen::VectorXd& vol,
                        double sigma2_alpha, double g_delta) {
  double lp = -delta * delta / (2.0 * g_delta * sigma2_alpha);
  for (Eigen::Index i = 0; i < resid2.size(); ++i) {
    const double dv = delta * vol(i);
    lp += -0.5 * dv - resid2(i) * std::exp(-dv) / (2.0 * sigma2_alpha);
  }
  return lp;
}

}  // namespace

HyperParams update_hyper(const ParamState& state, const DesignBundle& design,
                         const ModelSpec& spec, const HyperContext& context, RngStream& rng,
                         DeltaProposal& delta_proposal) {
  HyperParams hyper = state.hyper;
  const auto& priors = spec.priors;
  const auto na = static_cast<Eigen::Index>(context.active.size());
  const Eigen::Index q = design.mean_design.cols();

  Eigen::MatrixXd F(na, q);
  Eigen::VectorXd a(na);
  Eigen::VectorXd vol(na);
  for (Eigen::Index j = 0; j < na; ++j) {
    const int h = context.active[j];
    F.row(j) = design.mean_design.row(h);
    a(j) = state.alpha(h);
    vol(j) = design.volume(h);
  }
  auto variance_weights = [&](double delta) {
    Eigen::VectorXd w = Eigen::VectorXd::Ones(na);
    if (spec.has_delta()) w = (-delta * vol.array()).exp();
    return w;
  };

  // (i) mean coefficients given alpha, in precision form.
  {
    const Eigen::VectorXd w = variance_weights(hyper.delta);
    const Eigen::MatrixXd Fw = F.array().colwise() * w.array();
    const Eigen::MatrixXd M = F.transpose() * Fw + context.prior_precision(spec, hyper);
    const Eigen::VectorXd rhs = Fw.transpose() * a;
    hyper.mean_coef = draw_gaussian_precision(M, rhs, hyper.sigma2_alpha, rng, "update_hyper");
  }

  const Eigen::VectorXd resid = a - F * hyper.mean_coef;
  const Eigen::MatrixXd lambda = context.prior_precision(spec, hyper);

  // (ii) sigma2_alpha scales the alpha law and every coefficient prior.
  {
    const Eigen::VectorXd w = variance_weights(hyper.delta);
    double dims = static_cast<double>(na + q);
    double quad = (w.array() * resid.array().square()).sum() +
                  hyper.mean_coef.dot(lambda * hyper.mean_coef);
    if (spec.has_delta()) {
      dims += 1.0;
      quad += hyper.delta * hyper.delta / hyper.g_delta;
    }
    hyper.sigma2_alpha = rng.inverse_gamma(priors.sigma2_alpha.shape + 0.5 * dims,
                                           priors.sigma2_alpha.scale + 0.5 * quad);
  }

  // (iii) g scales.
  const double s2a = hyper.sigma2_alpha;
  switch (spec.mean) {
    case MeanFamily::Constant:
    case MeanFamily::LinearAttr:
      hyper.g = rng.inverse_gamma(priors.g.shape + 0.5 * static_cast<double>(q),
                                  priors.g.scale + hyper.mean_coef.squaredNorm() / (2.0 * s2a));
      break;
    case MeanFamily::SplineVolume:
    case MeanFamily::SplineLinear: {
      const Eigen::Index k = context.spline_dim;
      const Eigen::VectorXd gs = hyper.mean_coef.head(k);
      hyper.g_spline = rng.inverse_gamma(priors.g_spline.shape + 0.5 * static_cast<double>(k),
                                         priors.g_spline.scale + gs.dot(context.penalty * gs) / (2.0 * s2a));
      if (spec.mean == MeanFamily::SplineLinear) {
        const Eigen::Index r = context.linear_dim;
        const Eigen::VectorXd gl = hyper.mean_coef.tail(r);
        hyper.g_linear = rng.inverse_gamma(priors.g_linear.shape + 0.5 * static_cast<double>(r),
                                           priors.g_linear.scale + gl.squaredNorm() / (2.0 * s2a));
      }
      break;
    }
  }

  // (iv) sigma2_beta.
  hyper.sigma2_beta = rng.inverse_gamma(
      priors.sigma2_beta.shape + 0.5 * static_cast<double>(state.beta.size()),
      priors.sigma2_beta.scale + 0.5 * state.beta.squaredNorm());

  // (v) g_delta, then random-walk Metropolis on delta.
  if (spec.has_delta()) {
    hyper.g_delta = rng.inverse_gamma(priors.g_delta.shape + 0.5,
                                      priors.g_delta.scale + hyper.delta * hyper.delta / (2.0 * s2a));
    const Eigen::VectorXd resid2 = resid.array().square();
    const double current = delta_log_target(hyper.delta, resid2, vol, s2a, hyper.g_delta);
    const double proposal = hyper.delta + delta_proposal.step * rng.normal();
    const double candidate = delta_log_target(proposal, resid2, vol, s2a, hyper.g_delta);
    ++delta_proposal.proposed;
    if (std::log(rng.uniform()) < candidate - current) {
      hyper.delta = proposal;
      ++delta_proposal.accepted;
    }
  }
  return hyper;
}

void redraw_cold_start(ParamState& state, const DesignBundle& design, const ModelSpec& spec,
                       const HyperContext& context, RngStream& rng) {
  for (int h : context.cold) {
    const double mu = design.mean_design.row(h).dot(state.hyper.mean_coef);
    const double s2 = sigma2_h(spec, state.hyper, design.volume(h));
    state.alpha(h) = mu + std::sqrt(s2) * rng.normal();
  }
}

ParamState initial_state(const DesignBundle& design, const ModelSpec& spec) {
  ParamState s;
  const Eigen::Index hcount = design.num_hospitals();
  const double ybar = std::clamp(design.y.size() ? design.y.mean() : 0.5, 0.01, 0.99);
  const double base = logit(ybar);
  Eigen::VectorXd deaths = Eigen::VectorXd::Zero(hcount);
  for (Eigen::Index i = 0; i < design.num_patients(); ++i) deaths(design.hospital[i]) += design.y(i);
  s.alpha.resize(hcount);
  for (Eigen::Index h = 0; h < hcount; ++h) {
    const double n = design.group_size(h);
    s.alpha(h) = logit((deaths(h) + 2.0 * ybar) / (n + 2.0));
  }
  s.beta = Eigen::VectorXd::Zero(design.num_fixed());
  s.omega = Eigen::VectorXd::Constant(design.num_patients(), 0.25);

  const Eigen::Index q = design.mean_design.cols();
  s.hyper.mean_coef = Eigen::VectorXd::Zero(q);
  switch (spec.mean) {
    case MeanFamily::Constant:
    case MeanFamily::LinearAttr:
      s.hyper.mean_coef(0) = base;
      break;
    case MeanFamily::SplineVolume:
    case MeanFamily::SplineLinear:
      // Partition of unity: a constant spline coefficient is a flat mean.
      s.hyper.mean_coef.head(design.basis.cols()).setConstant(base);
      break;
  }
  s.hyper.sigma2_alpha = 0.1;
  s.hyper.sigma2_beta = 1.0;
  return s;
}

// ---- samples ------------------------------------------------------------------

void PosteriorSamples::reserve(Eigen::Index rows, Eigen::Index hospitals, Eigen::Index fixed,
                               Eigen::Index q) {
  alpha.resize(rows, hospitals);
  beta.resize(rows, fixed);
  mean_coef.resize(rows, q);
  for (auto* v : {&sigma2_beta, &g, &g_spline, &g_linear, &sigma2_alpha, &delta, &g_delta}) {
    v->resize(rows);
  }
  chain.assign(rows, 0);
}

void PosteriorSamples::set(Eigen::Index s, int chain_id, const ParamState& state) {
  alpha.row(s) = state.alpha.transpose();
  beta.row(s) = state.beta.transpose();
  mean_coef.row(s) = state.hyper.mean_coef.transpose();
  sigma2_beta(s) = state.hyper.sigma2_beta;
  g(s) = state.hyper.g;
  g_spline(s) = state.hyper.g_spline;
  g_linear(s) = state.hyper.g_linear;
  sigma2_alpha(s) = state.hyper.sigma2_alpha;
  delta(s) = state.hyper.delta;
  g_delta(s) = state.hyper.g_delta;
  chain[s] = chain_id;
}

HyperParams PosteriorSamples::hyper(Eigen::Index s) const {
  HyperParams h;
  h.mean_coef = mean_coef.row(s).transpose();
  h.sigma2_beta = sigma2_beta(s);
  h.g = g(s);
  h.g_spline = g_spline(s);
  h.g_linear = g_linear(s);
  h.sigma2_alpha = sigma2_alpha(s);
  h.delta = delta(s);
  h.g_delta = g_delta(s);
  return h;
}

ParamState PosteriorSamples::draw(Eigen::Index s) const {
  ParamState st;
  st.alpha = alpha.row(s).transpose();
  st.beta = beta.row(s).transpose();
  st.hyper = hyper(s);
  return st;
}

// ---- driver -------------------------------------------------------------------

namespace {

struct ChainResult {
  std::vector<ParamState> draws;
  DeltaProposal delta;
  std::string warning;
};

double auto_delta_step(const DesignBundle& design, const HyperContext& context) {
  double sum = 0.0;
  for (int h : context.active) sum += design.volume(h);
  const double mean_vol = context.active.empty() ? 1.0 : sum / context.active.size();
  return 1.0 / (std::max(mean_vol, 1.0) * std::sqrt(std::max<double>(context.active.size(), 1.0)));
}

ChainResult run_single_chain(const ModelSpec& spec, const DesignBundle& design,
                             const HyperContext& context, const ChainConfig& config, int chain_id) {
  const std::uint64_t base_id = 1000ULL * static_cast<std::uint64_t>(chain_id);
  RngStream rng(config.seed, base_id);
  std::vector<RngStream> shards;
  shards.reserve(config.shards);
  for (int s = 0; s < config.shards; ++s) shards.emplace_back(config.seed, base_id + 1 + s);

  ChainResult result;
  result.delta.step = config.delta_step > 0.0 ? config.delta_step : auto_delta_step(design, context);
  result.draws.reserve(config.retained_per_chain());

  ParamState state = initial_state(design, spec);
  constexpr int kAdaptBatch = 50;
  long batch_proposed = 0;
  long batch_accepted = 0;
  int batch_index = 0;

  for (int t = 1; t <= config.iterations; ++t) {
    state.omega = update_omega(state, design, shards, 1);
    state.alpha = update_alpha(state, design, spec, rng);
    state.beta = update_beta(state, design, spec, rng);
    const long acc_before = result.delta.accepted;
    state.hyper = update_hyper(state, design, spec, context, rng, result.delta);
    redraw_cold_start(state, design, spec, context, rng);

    if (!state.alpha.allFinite() || !state.beta.allFinite() ||
        !state.hyper.mean_coef.allFinite() || !std::isfinite(state.hyper.sigma2_alpha) ||
        !std::isfinite(state.hyper.delta)) {
      throw NumericalError("non-finite chain state at iteration " + std::to_string(t) +
                           " (chain " + std::to_string(chain_id) + ")");
    }

    if (spec.has_delta()) {
      if (t <= config.burnin) {
        ++batch_proposed;
        batch_accepted += result.delta.accepted - acc_before;
        if (batch_proposed == kAdaptBatch) {
          ++batch_index;
          const double rate = static_cast<double>(batch_accepted) / kAdaptBatch;
          const double adjust = std::min(0.5, 1.0 / std::sqrt(static_cast<double>(batch_index)));
          result.delta.step *= std::exp(rate > 0.44 ? adjust : -adjust);
          batch_proposed = 0;
          batch_accepted = 0;
        }
        if (t == config.burnin) {
          result.delta.proposed = 0;
          result.delta.accepted = 0;
        }
      }
    }

    if (t > config.burnin && (t - config.burnin) % config.thin == 0) {
      ParamState kept = state;
      kept.omega.resize(0);
      result.draws.push_back(std::move(kept));
    }
  }

  if (spec.has_delta()) {
    const double rate = result.delta.acceptance();
    if (rate < 0.1 || rate > 0.7) {
      result.warning = "chain " + std::to_string(chain_id) + ": delta acceptance rate " +
                       std::to_string(rate) + " outside [0.1, 0.7]";
    }
  }
  return result;
}

}  // namespace

PosteriorSamples run_chain(const ModelSpec& spec, const Dataset& data, const ChainConfig& config) {
  return run_chain(spec, data, build_design(data, spec), config);
}

PosteriorSamples run_chain(const ModelSpec& spec, const Dataset& data, const DesignBundle& design,
                           const ChainConfig& config) {
  config.validate();
  const HyperContext context(spec, design);
  if (context.active.empty()) throw InputError("no hospital has patients in the fitting data");

  std::vector<ChainResult> results(config.n_chains);
  parallel_for(config.n_chains, config.threads, [&](int c) {
    results[c] = run_single_chain(spec, design, context, config, c);
  });

  PosteriorSamples samples;
  samples.spec = spec;
  samples.transform = design.transform;
  for (const auto& h : data.hospitals()) samples.hospital_ids.push_back(h.hospital_id);
  const Eigen::Index per_chain = config.retained_per_chain();
  samples.reserve(per_chain * config.n_chains, design.num_hospitals(), design.num_fixed(),
                  design.mean_design.cols());
  Eigen::Index row = 0;
  for (int c = 0; c < config.n_chains; ++c) {
    for (const auto& st : results[c].draws) samples.set(row++, c, st);
    samples.meta.delta_acceptance.push_back(results[c].delta.acceptance());
    samples.meta.delta_step.push_back(results[c].delta.step);
    if (!results[c].warning.empty()) samples.meta.warnings.push_back(results[c].warning);
  }
  samples.meta.iterations = config.iterations;
  samples.meta.burnin = config.burnin;
  samples.meta.thin = config.thin;
  samples.meta.seed = config.seed;
  samples.meta.n_chains = config.n_chains;
  samples.meta.spec_hash = spec.hash();
  samples.meta.data_hash = data.content_hash();
  return samples;
}

}  // namespace hospmort
