#include "hospmort/synth.hpp"

#include <algorithm>
#include <cstdio>

#include "hospmort/error.hpp"
#include "hospmort/inference.hpp"
#include "hospmort/rng.hpp"

namespace hospmort {

namespace {

std::string padded(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

TruthMean parse_mean(const std::string& s) {
  if (s == "constant") return TruthMean::Constant;
  if (s == "linear") return TruthMean::LinearVolume;
  if (s == "small_elevated") return TruthMean::SmallElevated;
  if (s == "attributes") return TruthMean::Attributes;
  throw InputError("generator: unknown mean '" + s + "'");
}

const char* mean_name(TruthMean m) {
  switch (m) {
    case TruthMean::LinearVolume: return "linear";
    case TruthMean::SmallElevated: return "small_elevated";
    case TruthMean::Attributes: return "attributes";
    case TruthMean::Constant: break;
  }
  return "constant";
}

}  // namespace

void GeneratorConfig::validate() const {
  if (hospitals < 1) throw InputError("generator: hospitals must be >= 1");
  if (!(volume_log_sd >= 0.0) || !(patient_fraction > 0.0)) {
    throw InputError("generator: volume_log_sd must be >= 0 and patient_fraction > 0");
  }
  if (normal_covariates < 0) throw InputError("generator: normal_covariates must be >= 0");
  for (double p : binary_prevalence) {
    if (!(p > 0.0 && p < 1.0)) throw InputError("generator: prevalences must lie in (0, 1)");
  }
  const std::size_t d = normal_covariates + binary_prevalence.size();
  if (beta.size() != d) throw InputError("generator: beta needs one entry per covariate");
  if (!(sigma2_alpha > 0.0) || !(age_sd > 0.0)) throw InputError("generator: variances must be > 0");
  if (gamma_l.size() != 3) throw InputError("generator: gamma_l needs 3 entries (ntbr, rtbr, pci)");
  if (periods < 1) throw InputError("generator: periods must be >= 1");
  if (!(decay > 0.0)) throw InputError("generator: decay must be > 0");
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& doc) {
  GeneratorConfig c;
  try {
    c.hospitals = doc.value("hospitals", c.hospitals);
    c.volume_log_mean = doc.value("volume_log_mean", c.volume_log_mean);
    c.volume_log_sd = doc.value("volume_log_sd", c.volume_log_sd);
    c.patient_fraction = doc.value("patient_fraction", c.patient_fraction);
    c.normal_covariates = doc.value("normal_covariates", c.normal_covariates);
    c.binary_prevalence = doc.value("binary_prevalence", c.binary_prevalence);
    c.age_mean = doc.value("age_mean", c.age_mean);
    c.age_sd = doc.value("age_sd", c.age_sd);
    c.periods = doc.value("periods", c.periods);
    c.beta = doc.value("beta", c.beta);
    if (doc.contains("mean")) c.mean = parse_mean(doc.at("mean").get<std::string>());
    c.mu_alpha = doc.value("mu_alpha", c.mu_alpha);
    c.gamma0 = doc.value("gamma0", c.gamma0);
    c.gamma1 = doc.value("gamma1", c.gamma1);
    c.amplitude = doc.value("amplitude", c.amplitude);
    c.decay = doc.value("decay", c.decay);
    c.gamma_l = doc.value("gamma_l", c.gamma_l);
    c.sigma2_alpha = doc.value("sigma2_alpha", c.sigma2_alpha);
    c.delta = doc.value("delta", c.delta);
    c.beta_interaction = doc.value("beta_interaction", c.beta_interaction);
    c.confounding = doc.value("confounding", c.confounding);
    c.seed = doc.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("generator config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json GeneratorConfig::to_json() const {
  nlohmann::ordered_json doc;
  doc["hospitals"] = hospitals;
  doc["volume_log_mean"] = volume_log_mean;
  doc["volume_log_sd"] = volume_log_sd;
  doc["patient_fraction"] = patient_fraction;
  doc["normal_covariates"] = normal_covariates;
  doc["binary_prevalence"] = binary_prevalence;
  doc["age_mean"] = age_mean;
  doc["age_sd"] = age_sd;
  doc["periods"] = periods;
  doc["beta"] = beta;
  doc["mean"] = mean_name(mean);
  doc["mu_alpha"] = mu_alpha;
  doc["gamma0"] = gamma0;
  doc["gamma1"] = gamma1;
  doc["amplitude"] = amplitude;
  doc["decay"] = decay;
  doc["gamma_l"] = gamma_l;
  doc["sigma2_alpha"] = sigma2_alpha;
  doc["delta"] = delta;
  doc["beta_interaction"] = beta_interaction;
  doc["confounding"] = confounding;
  doc["seed"] = seed;
  return doc;
}

GeneratedData generate(const GeneratorConfig& config) {
  config.validate();
  RngStream rng(config.seed, 0);
  const int H = config.hospitals;

  // Hospitals and their attributes.
  std::vector<HospitalRecord> hospitals(H);
  Eigen::VectorXd lv(H);
  for (int h = 0; h < H; ++h) {
    auto& rec = hospitals[h];
    rec.hospital_id = padded("h", h + 1, 4);
    const double raw = std::exp(config.volume_log_mean + config.volume_log_sd * rng.normal());
    rec.volume = std::max(1L, std::lround(raw));
    lv(h) = log_volume(rec.volume);
  }
  const double lv_mean = lv.mean();
  const double lv_sd = H > 1 ? std::sqrt((lv.array() - lv_mean).square().sum() / (H - 1.0)) : 1.0;
  Eigen::MatrixXd z(H, 3);
  for (int h = 0; h < H; ++h) {
    const double s = lv_sd > 0 ? (lv(h) - lv_mean) / lv_sd : 0.0;
    auto& rec = hospitals[h];
    rec.attributes["ntbr"] = std::exp(0.6 + 0.15 * s + 0.3 * rng.normal());
    rec.attributes["rtbr"] = std::exp(-0.5 + 0.1 * s + 0.4 * rng.normal());
    rec.attributes["pci"] = rng.bernoulli(inv_logit(0.5 + 1.2 * s)) ? 1.0 : 0.0;
    rec.attributes["beds"] = std::max(10.0, std::round(std::exp(5.0 + 0.5 * s + 0.3 * rng.normal())));
    z(h, 0) = rec.attributes["ntbr"];
    z(h, 1) = rec.attributes["rtbr"];
    z(h, 2) = rec.attributes["pci"];
  }
  for (Eigen::Index j = 0; j < 3; ++j) {
    const double m = z.col(j).mean();
    const double sd = H > 1 ? std::sqrt((z.col(j).array() - m).square().sum() / (H - 1.0)) : 0.0;
    z.col(j) = sd > 0 ? Eigen::VectorXd((z.col(j).array() - m) / sd) : Eigen::VectorXd::Zero(H);
  }

  GeneratedData out;
  out.mu.resize(H);
  out.truth.alpha.resize(H);
  out.truth.hyper.sigma2_alpha = config.sigma2_alpha;
  out.truth.hyper.delta = config.delta;
  const Eigen::Map<const Eigen::VectorXd> gl(config.gamma_l.data(), 3);
  switch (config.mean) {
    case TruthMean::Constant:
      out.truth.hyper.mean_coef = Eigen::VectorXd::Constant(1, config.mu_alpha);
      break;
    case TruthMean::LinearVolume:
      out.truth.hyper.mean_coef = Eigen::Vector2d(config.gamma0, config.gamma1);
      break;
    case TruthMean::SmallElevated:
      out.truth.hyper.mean_coef = Eigen::Vector3d(config.mu_alpha, config.amplitude, config.decay);
      break;
    case TruthMean::Attributes:
      out.truth.hyper.mean_coef.resize(6);
      out.truth.hyper.mean_coef << config.mu_alpha, config.amplitude, config.decay, gl;
      break;
  }
  for (int h = 0; h < H; ++h) {
    double mu = config.mu_alpha;
    switch (config.mean) {
      case TruthMean::Constant:
        break;
      case TruthMean::LinearVolume:
        mu = config.gamma0 + config.gamma1 * lv(h);
        break;
      case TruthMean::SmallElevated:
      case TruthMean::Attributes:
        mu += config.amplitude * std::exp(-(lv(h) - 1.0) / config.decay);
        if (config.mean == TruthMean::Attributes) mu += z.row(h).dot(gl);
        break;
    }
    out.mu(h) = mu;
    const double s2 = std::exp(config.delta * static_cast<double>(hospitals[h].volume)) * config.sigma2_alpha;
    out.truth.alpha(h) = mu + std::sqrt(s2) * rng.normal();
  }

  // Patients.
  const int nb = static_cast<int>(config.binary_prevalence.size());
  const int d = config.normal_covariates + nb;
  out.truth.beta = Eigen::Map<const Eigen::VectorXd>(config.beta.data(), d);
  std::vector<std::string> cov_names;
  for (int j = 0; j < d; ++j) cov_names.push_back("x" + std::to_string(j + 1));
  std::vector<PatientRecord> patients;
  std::size_t next_id = 1;
  for (int h = 0; h < H; ++h) {
    const long n = std::max(1L, std::lround(static_cast<double>(hospitals[h].volume) * config.patient_fraction));
    const double sick = lv_sd > 0 ? -config.confounding * (lv(h) - lv_mean) / lv_sd : 0.0;
    for (long j = 0; j < n; ++j) {
      PatientRecord p;
      p.patient_id = padded("p", next_id++, 7);
      p.hospital_id = hospitals[h].hospital_id;
      p.age = std::max(18.0, config.age_mean + config.age_sd * (sick + rng.normal()));
      p.admit_period = 1 + static_cast<long>(rng.index(static_cast<std::uint64_t>(config.periods)));
      double eta = out.truth.alpha(h);
      for (int k = 0; k < config.normal_covariates; ++k) p.covariates.push_back(sick + rng.normal());
      for (int k = 0; k < nb; ++k) {
        const double prev = config.binary_prevalence[k];
        const double shifted = inv_logit(std::log(prev / (1.0 - prev)) + sick);
        p.covariates.push_back(rng.bernoulli(shifted) ? 1.0 : 0.0);
      }
      for (int k = 0; k < d; ++k) eta += config.beta[k] * p.covariates[k];
      eta += config.beta_interaction * (p.age * lv(h) - config.age_mean * lv_mean);
      p.outcome = rng.bernoulli(inv_logit(eta)) ? 1 : 0;
      patients.push_back(std::move(p));
    }
  }
  out.data = Dataset(cov_names, {"ntbr", "rtbr", "pci", "beds"}, std::move(hospitals), std::move(patients));
  return out;
}

}  // namespace hospmort
