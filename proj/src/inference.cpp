#include "hospmort/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "hospmort/csv.hpp"
#include "hospmort/diagnostics.hpp"
#include "hospmort/error.hpp"
#include "hospmort/parallel.hpp"
#include "hospmort/rng.hpp"

namespace hospmort {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// Linear predictor pieces that do not depend on the treating hospital, plus
// the interaction term as a function of the target's log volume.
struct PredictorParts {
  Eigen::VectorXd base;  // x'beta without the interaction term
  double beta_int = 0.0;
  double int_center = 0.0;
  double int_scale = 1.0;
  bool interaction = false;

  PredictorParts(const DesignBundle& design, const Eigen::VectorXd& beta) {
    base = design.X * beta;
    interaction = design.transform.interaction;
    if (interaction) {
      const Eigen::Index last = design.X.cols() - 1;
      beta_int = beta(last);
      base -= beta_int * design.X.col(last);
      const auto& s = design.transform.columns.back();
      int_center = s.standardized ? s.center : 0.0;
      int_scale = s.standardized ? s.scale : 1.0;
    }
  }

  double eta(Eigen::Index i, double age, double lv) const {
    if (!interaction) return base(i);
    return base(i) + beta_int * (age * lv - int_center) / int_scale;
  }
};

// Reference weights for E_h: hospitals with patients, equal or by volume.
Eigen::VectorXd reference_weights(const DesignBundle& design, bool volume_weighted) {
  const Eigen::Index hcount = design.num_hospitals();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(hcount);
  for (Eigen::Index h = 0; h < hcount; ++h) {
    if (design.group_size(h) > 0) w(h) = volume_weighted ? design.volume(h) : 1.0;
  }
  const double total = w.sum();
  if (!(total > 0.0)) throw InputError("no reference hospitals with patients (or zero total volume)");
  return w / total;
}

void require_hc(const ModelSpec& spec) {
  if (spec.mean != MeanFamily::Constant) {
    throw InputError("HCMean reference requires a constant mean family");
  }
}

}  // namespace

double patient_rate(const ParamState& draw, const DesignBundle& design, Eigen::Index i,
                    Eigen::Index target) {
  return inv_logit(draw.alpha(target) + design.patient_effect(i, target, draw.beta));
}

double hospital_rate_P(const ParamState& draw, const DesignBundle& design, Eigen::Index h) {
  const auto& members = design.members[h];
  if (members.empty()) throw InputError("hospital_rate_P: hospital has no patients");
  double sum = 0.0;
  for (int i : members) sum += patient_rate(draw, design, i, h);
  return sum / static_cast<double>(members.size());
}

double expected_rate_E(const ParamState& draw, const DesignBundle& design, const ModelSpec& spec,
                       Eigen::Index h, const StandardizeOptions& options) {
  const auto& members = design.members[h];
  if (members.empty()) throw InputError("expected_rate_E: hospital has no patients");
  double sum = 0.0;
  if (options.mode == ReferenceMode::HCMean) {
    require_hc(spec);
    const double mu = draw.hyper.mean_coef(0);
    for (int i : members) sum += inv_logit(mu + design.patient_effect(i, h, draw.beta));
    return sum / static_cast<double>(members.size());
  }
  const Eigen::VectorXd w = reference_weights(design, options.volume_weighted);
  if (options.approximate) {
    const PredictorParts parts(design, draw.beta);
    const double abar = w.dot(draw.alpha);
    const double lvbar = w.dot(design.log_volume);
    for (int i : members) sum += inv_logit(abar + parts.eta(i, design.age(i), lvbar));
    return sum / static_cast<double>(members.size());
  }
  for (int i : members) {
    double inner = 0.0;
    for (Eigen::Index t = 0; t < design.num_hospitals(); ++t) {
      if (w(t) > 0.0) inner += w(t) * patient_rate(draw, design, i, t);
    }
    sum += inner;
  }
  return sum / static_cast<double>(members.size());
}

double indirect_standardized(const ParamState& draw, const DesignBundle& design,
                             const ModelSpec& spec, Eigen::Index h, double ybar,
                             const StandardizeOptions& options) {
  return hospital_rate_P(draw, design, h) / expected_rate_E(draw, design, spec, h, options) * ybar;
}

double direct_standardized(const ParamState& draw, const DesignBundle& design, Eigen::Index h,
                           bool approximate) {
  const Eigen::Index n = design.num_patients();
  if (n == 0) throw InputError("direct_standardized: no patients");
  if (approximate) {
    const PredictorParts parts(design, draw.beta);
    const double mean_base = parts.base.mean();
    double eta = mean_base;
    if (parts.interaction) {
      eta += parts.beta_int * (design.age.mean() * design.log_volume(h) - parts.int_center) /
             parts.int_scale;
    }
    return inv_logit(draw.alpha(h) + eta);
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) sum += patient_rate(draw, design, i, h);
  return sum / static_cast<double>(n);
}

Eigen::MatrixXd align_alpha(const PosteriorSamples& samples, const Dataset& data,
                            std::uint64_t seed) {
  std::unordered_map<std::string, Eigen::Index> fitted;
  for (std::size_t h = 0; h < samples.hospital_ids.size(); ++h) {
    fitted.emplace(samples.hospital_ids[h], static_cast<Eigen::Index>(h));
  }
  const Eigen::Index S = samples.size();
  const auto hcount = static_cast<Eigen::Index>(data.num_hospitals());
  Eigen::MatrixXd alpha(S, hcount);
  RngStream rng(seed, 0x5eedULL);
  for (Eigen::Index h = 0; h < hcount; ++h) {
    const auto& hosp = data.hospitals()[h];
    if (auto it = fitted.find(hosp.hospital_id); it != fitted.end()) {
      alpha.col(h) = samples.alpha.col(it->second);
      continue;
    }
    Eigen::VectorXd b;
    if (samples.spec.has_spline()) {
      Eigen::VectorXd v(1);
      v(0) = log_volume(hosp.volume);
      b = samples.transform.basis->evaluate(v).row(0).transpose();
    }
    const Eigen::VectorXd f =
        mean_covariates(samples.spec, hosp, b, samples.transform.attributes);
    for (Eigen::Index s = 0; s < S; ++s) {
      const HyperParams hyper = samples.hyper(s);
      const double mu = f.dot(hyper.mean_coef);
      const double s2 = sigma2_h(samples.spec, hyper, static_cast<double>(hosp.volume));
      alpha(s, h) = mu + std::sqrt(s2) * rng.normal();
    }
  }
  return alpha;
}

RateDraws rate_draws(const PosteriorSamples& samples, const Dataset& data,
                     const StandardizeOptions& options) {
  const Eigen::Index S = samples.size();
  if (S == 0) throw InputError("no posterior draws");
  if (options.mode == ReferenceMode::HCMean) require_hc(samples.spec);
  const DesignBundle design = build_design(data, samples.spec, samples.transform);
  const Eigen::MatrixXd alpha = align_alpha(samples, data, options.seed);
  const Eigen::Index hcount = design.num_hospitals();
  const Eigen::Index n = design.num_patients();
  const double ybar = data.ybar();
  const Eigen::VectorXd w = reference_weights(design, options.volume_weighted);

  // Patients entering the direct standardization.
  RateDraws out;
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  const double terms = static_cast<double>(S) * hcount * n;
  if (!options.approximate && terms > options.budget &&
      static_cast<std::size_t>(n) > options.subsample) {
    RngStream rng(options.seed, 0xd5ULL);
    for (std::size_t k = 0; k < options.subsample; ++k) {
      const auto j = k + rng.index(pool.size() - k);
      std::swap(pool[k], pool[j]);
    }
    pool.resize(options.subsample);
    std::sort(pool.begin(), pool.end());
    out.ds_subsampled = true;
  }
  out.ds_patients = pool.size();
  std::vector<char> in_pool(n, options.approximate ? 1 : 0);
  for (int i : pool) in_pool[i] = 1;

  out.P.setConstant(S, hcount, kNaN);
  out.E.setConstant(S, hcount, kNaN);
  out.IS.setConstant(S, hcount, kNaN);
  out.DS.setZero(S, hcount);

  std::vector<int> ref;
  for (Eigen::Index t = 0; t < hcount; ++t) {
    if (w(t) > 0.0) ref.push_back(static_cast<int>(t));
  }

  parallel_for(static_cast<int>(S), options.threads, [&](int s) {
    ParamState draw;
    draw.alpha = alpha.row(s).transpose();
    draw.beta = samples.beta.row(s).transpose();
    draw.hyper = samples.hyper(s);
    const PredictorParts parts(design, draw.beta);

    Eigen::VectorXd p_sum = Eigen::VectorXd::Zero(hcount);
    Eigen::VectorXd e_sum = Eigen::VectorXd::Zero(hcount);
    Eigen::VectorXd ds_sum = Eigen::VectorXd::Zero(hcount);
    const double abar = w.dot(draw.alpha);
    const double lvbar = w.dot(design.log_volume);
    const double mu = samples.spec.mean == MeanFamily::Constant ? draw.hyper.mean_coef(0) : 0.0;

    for (Eigen::Index i = 0; i < n; ++i) {
      const int own = design.hospital[i];
      const double age = design.age(i);
      p_sum(own) += inv_logit(draw.alpha(own) + parts.eta(i, age, design.log_volume(own)));
      if (options.mode == ReferenceMode::HCMean) {
        e_sum(own) += inv_logit(mu + parts.eta(i, age, design.log_volume(own)));
      } else if (options.approximate) {
        e_sum(own) += inv_logit(abar + parts.eta(i, age, lvbar));
      }
      if (options.approximate) continue;
      const bool exact_e = options.mode == ReferenceMode::AllHospitals;
      if (!in_pool[i]) {
        if (!exact_e) continue;
        double inner = 0.0;
        for (int t : ref) inner += w(t) * inv_logit(draw.alpha(t) + parts.eta(i, age, design.log_volume(t)));
        e_sum(own) += inner;
        continue;
      }
      double inner = 0.0;
      for (Eigen::Index t = 0; t < hcount; ++t) {
        const double r = inv_logit(draw.alpha(t) + parts.eta(i, age, design.log_volume(t)));
        ds_sum(t) += r;
        inner += w(t) * r;
      }
      if (exact_e) e_sum(own) += inner;
    }

    for (Eigen::Index h = 0; h < hcount; ++h) {
      if (options.approximate) {
        double eta = parts.base.mean();
        if (parts.interaction) {
          eta += parts.beta_int * (design.age.mean() * design.log_volume(h) - parts.int_center) /
                 parts.int_scale;
        }
        out.DS(s, h) = inv_logit(draw.alpha(h) + eta);
      } else {
        out.DS(s, h) = ds_sum(h) / static_cast<double>(pool.size());
      }
      const int nh = design.group_size(h);
      if (nh == 0) continue;
      out.P(s, h) = p_sum(h) / nh;
      out.E(s, h) = e_sum(h) / nh;
      out.IS(s, h) = out.P(s, h) / out.E(s, h) * ybar;
    }
  });
  return out;
}

std::vector<Interval> summarize_draws(const Eigen::MatrixXd& draws) {
  if (draws.rows() == 0) throw InputError("no posterior draws to summarize");
  std::vector<Interval> out(draws.cols());
  for (Eigen::Index h = 0; h < draws.cols(); ++h) {
    const Eigen::VectorXd col = draws.col(h);
    if (!col.allFinite()) {
      out[h] = {kNaN, kNaN, kNaN};
      continue;
    }
    out[h] = {col.mean(), quantile(col, 0.025), quantile(col, 0.975)};
  }
  return out;
}

std::string to_string(RateClass c) {
  switch (c) {
    case RateClass::Low: return "Low";
    case RateClass::High: return "High";
    case RateClass::Average: break;
  }
  return "Average";
}

std::string to_string(VolumeFilter f) {
  switch (f) {
    case VolumeFilter::LowerQuartile: return "lower_quartile";
    case VolumeFilter::UpperQuartile: return "upper_quartile";
    case VolumeFilter::All: break;
  }
  return "all";
}

RateReport summarize(const PosteriorSamples& samples, const Dataset& data,
                     const StandardizeOptions& options, double threshold) {
  const RateDraws draws = rate_draws(samples, data, options);
  const auto P = summarize_draws(draws.P);
  const auto IS = summarize_draws(draws.IS);
  const auto DS = summarize_draws(draws.DS);

  RateReport report;
  report.ybar = data.ybar();
  report.draws = static_cast<std::size_t>(samples.size());
  report.ds_patients = draws.ds_patients;
  report.ds_subsampled = draws.ds_subsampled;
  std::vector<double> deaths(data.num_hospitals(), 0.0);
  for (std::size_t i = 0; i < data.num_patients(); ++i) {
    deaths[data.hospital_of(i)] += data.patients()[i].outcome;
  }
  for (std::size_t h = 0; h < data.num_hospitals(); ++h) {
    HospitalRate r;
    r.hospital_id = data.hospitals()[h].hospital_id;
    r.volume = data.hospitals()[h].volume;
    r.n = data.group_sizes()[h];
    r.raw = r.n ? deaths[h] / r.n : kNaN;
    r.P = P[h];
    r.IS = IS[h];
    r.DS = DS[h];
    r.label = classify(r.DS, threshold);
    report.rows.push_back(r);
  }

  // Per-draw hospital mean of P^IS over hospitals with patients.
  Eigen::VectorXd per_draw = Eigen::VectorXd::Zero(draws.IS.rows());
  int active = 0;
  for (Eigen::Index h = 0; h < draws.IS.cols(); ++h) {
    if (data.group_sizes()[h] == 0) continue;
    per_draw += draws.IS.col(h);
    ++active;
  }
  per_draw /= std::max(active, 1);
  report.is_hospital_mean = per_draw.mean();
  report.is_mcse = batch_means_se(per_draw);
  return report;
}

void write_rate_report(const RateReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  auto num = [](double x) { return std::isfinite(x) ? format_real(x) : std::string("NA"); };
  out << "hospital_id,volume,n,raw,P_mean,P_lo,P_hi,IS_mean,IS_lo,IS_hi,DS_mean,DS_lo,DS_hi,class\n";
  for (const auto& r : report.rows) {
    out << r.hospital_id << ',' << r.volume << ',' << r.n << ',' << num(r.raw);
    for (const Interval* iv : {&r.P, &r.IS, &r.DS}) {
      out << ',' << num(iv->mean) << ',' << num(iv->lo) << ',' << num(iv->hi);
    }
    out << ',' << to_string(r.label) << '\n';
  }
}

RateReport read_rate_report(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const char* cols[] = {"hospital_id", "volume", "n",     "raw",   "P_mean", "P_lo",  "P_hi",
                        "IS_mean",     "IS_lo",  "IS_hi", "DS_mean", "DS_lo", "DS_hi", "class"};
  std::vector<std::size_t> at;
  for (const char* c : cols) at.push_back(table.require_column(c, path.string()));
  auto num = [&](const std::string& text, const std::string& ctx) {
    return text == "NA" ? kNaN : parse_real(text, ctx);
  };
  RateReport report;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string ctx = path.string() + " row " + std::to_string(r + 2);
    if (row.size() != table.header.size()) throw InputError(ctx + ": wrong field count");
    HospitalRate h;
    h.hospital_id = row[at[0]];
    h.volume = parse_integer(row[at[1]], ctx);
    h.n = static_cast<int>(parse_integer(row[at[2]], ctx));
    h.raw = num(row[at[3]], ctx);
    Interval* ivs[] = {&h.P, &h.IS, &h.DS};
    for (int k = 0; k < 3; ++k) {
      ivs[k]->mean = num(row[at[4 + 3 * k]], ctx);
      ivs[k]->lo = num(row[at[5 + 3 * k]], ctx);
      ivs[k]->hi = num(row[at[6 + 3 * k]], ctx);
    }
    const std::string& label = row[at[13]];
    if (label == "Low") h.label = RateClass::Low;
    else if (label == "High") h.label = RateClass::High;
    else if (label == "Average") h.label = RateClass::Average;
    else throw InputError(ctx + ": unknown class '" + label + "'");
    report.rows.push_back(h);
  }
  return report;
}

RateClass classify(const Interval& interval, double threshold) {
  if (interval.hi < threshold) return RateClass::Low;
  if (interval.lo > threshold) return RateClass::High;
  return RateClass::Average;
}

std::vector<RateClass> classify(const RateReport& report, double threshold) {
  std::vector<RateClass> out;
  out.reserve(report.rows.size());
  for (const auto& r : report.rows) out.push_back(classify(r.DS, threshold));
  return out;
}

std::vector<std::size_t> volume_stratum(const RateReport& report, VolumeFilter filter) {
  std::vector<double> vols;
  for (const auto& r : report.rows) vols.push_back(static_cast<double>(r.volume));
  std::vector<std::size_t> out;
  if (vols.empty()) return out;
  const double q1 = quantile(vols, 0.25);
  const double q3 = quantile(vols, 0.75);
  for (std::size_t h = 0; h < vols.size(); ++h) {
    const bool keep = filter == VolumeFilter::All ||
                      (filter == VolumeFilter::LowerQuartile && vols[h] <= q1) ||
                      (filter == VolumeFilter::UpperQuartile && vols[h] >= q3);
    if (keep) out.push_back(h);
  }
  return out;
}

std::array<int, 3> class_counts(const RateReport& report, VolumeFilter filter) {
  std::array<int, 3> counts{};
  for (std::size_t h : volume_stratum(report, filter)) ++counts[static_cast<int>(report.rows[h].label)];
  return counts;
}

CrossTable cross_classify(const RateReport& a, const RateReport& b, VolumeFilter filter) {
  std::unordered_map<std::string, RateClass> b_labels;
  for (const auto& r : b.rows) b_labels.emplace(r.hospital_id, r.label);
  if (a.rows.size() != b.rows.size()) throw InputError("cross_classify: hospital sets differ");
  for (const auto& r : a.rows) {
    if (!b_labels.count(r.hospital_id)) {
      throw InputError("cross_classify: hospital " + r.hospital_id + " missing from second labeling");
    }
  }
  CrossTable table;
  for (std::size_t h : volume_stratum(a, filter)) {
    const auto& r = a.rows[h];
    ++table.counts[static_cast<int>(r.label)][static_cast<int>(b_labels.at(r.hospital_id))];
    ++table.total;
  }
  return table;
}

double log_mean_exp(const Eigen::VectorXd& values) {
  if (values.size() == 0) throw InputError("log_mean_exp of an empty vector");
  const double m = values.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((values.array() - m).exp().sum() / static_cast<double>(values.size()));
}

double predictive_log_likelihood(const PosteriorSamples& samples, const Dataset& validation,
                                 std::uint64_t seed, int threads) {
  const Eigen::Index S = samples.size();
  if (S == 0) throw InputError("no posterior draws");
  const DesignBundle design = build_design(validation, samples.spec, samples.transform);
  const Eigen::MatrixXd alpha = align_alpha(samples, validation, seed);
  Eigen::VectorXd loglik(S);
  parallel_for(static_cast<int>(S), threads, [&](int s) {
    const Eigen::VectorXd xb = design.X * samples.beta.row(s).transpose();
    double l = 0.0;
    for (Eigen::Index i = 0; i < design.num_patients(); ++i) {
      const double eta = alpha(s, design.hospital[i]) + xb(i);
      l -= design.y(i) > 0.5 ? softplus(-eta) : softplus(eta);
    }
    loglik(s) = l;
  });
  return log_mean_exp(loglik);
}

double log_predictive_bayes_factor(const PosteriorSamples& m1, const PosteriorSamples& m2,
                                   const Dataset& validation, std::uint64_t seed, int threads) {
  if (m1.meta.data_hash != m2.meta.data_hash) {
    throw InputError("models were fit on different training data (data hash mismatch)");
  }
  return predictive_log_likelihood(m1, validation, seed, threads) -
         predictive_log_likelihood(m2, validation, seed, threads);
}

}  // namespace hospmort
