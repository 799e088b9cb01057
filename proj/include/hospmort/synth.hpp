#ifndef HOSPMORT_SYNTH_HPP
#define HOSPMORT_SYNTH_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hospmort/data.hpp"
#include "hospmort/gibbs.hpp"

namespace hospmort {

// Shape of the true random-effects mean as a function of the hospital.
enum class TruthMean {
  Constant,       // mu_alpha
  LinearVolume,   // gamma0 + gamma1 log(vol + 1)
  SmallElevated,  // mu_alpha + amplitude exp(-(log(vol + 1) - 1) / decay)
  Attributes,     // SmallElevated + gamma_L' z (z standardized over hospitals)
};

struct GeneratorConfig {
  int hospitals = 300;
  // log(volume) ~ N(volume_log_mean, volume_log_sd^2); volume >= 1.
  double volume_log_mean = std::log(79.0);
  double volume_log_sd = 1.0;
  // n_h = max(1, round(volume * patient_fraction)).
  double patient_fraction = 1.0;
  int normal_covariates = 2;
  std::vector<double> binary_prevalence;  // one binary covariate each
  double age_mean = 78.0;
  double age_sd = 8.0;
  int periods = 5;  // admit_period uniform on 1..periods

  // Outcome model. beta has one entry per covariate.
  std::vector<double> beta{0.5, -0.3};
  TruthMean mean = TruthMean::Constant;
  double mu_alpha = -1.7347;
  double gamma0 = -0.6;
  double gamma1 = -0.25;
  double amplitude = 0.8;
  double decay = 1.0;
  std::vector<double> gamma_l{0.0, 0.0, 0.0};  // ntbr, rtbr, pci
  double sigma2_alpha = 0.05;
  double delta = 0.0;  // log-variance slope in raw volume
  // Coefficient on (age * log(vol + 1) - age_mean * mean log volume).
  double beta_interaction = 0.0;

  // Patients at small hospitals are sicker: each covariate mean (and age)
  // shifts by confounding * s_h, where s_h is minus the standardized log
  // volume of their hospital.
  double confounding = 0.0;

  std::uint64_t seed = 1;

  void validate() const;
  static GeneratorConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct GeneratedData {
  Dataset data;
  ParamState truth;   // realized alpha, beta; hyper.mean_coef holds the mean parameters
  Eigen::VectorXd mu; // true mean of alpha per hospital
};

GeneratedData generate(const GeneratorConfig& config);

}  // namespace hospmort

#endif  // HOSPMORT_SYNTH_HPP
