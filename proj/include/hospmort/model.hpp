#ifndef HOSPMORT_MODEL_HPP
#define HOSPMORT_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hospmort/data.hpp"

namespace hospmort {

// Mean of the hospital-effect distribution.
//   Constant      mu_h = mu_alpha
//   LinearAttr    mu_h = gamma0 + gamma1 * attribute (log(vol + 1) by default)
//   SplineVolume  mu_h = b_h' gamma_S
//   SplineLinear  mu_h = b_h' gamma_S + z_h' gamma_L
enum class MeanFamily { Constant, LinearAttr, SplineVolume, SplineLinear };

// Variance of the hospital-effect distribution.
//   Constant         sigma2_h = sigma2_alpha
//   LogLinearVolume  sigma2_h = exp(delta * vol_h) * sigma2_alpha  (raw counts)
enum class VarianceFamily { Constant, LogLinearVolume };

// Density proportional to x^(-shape-1) exp(-scale / x).
struct InverseGammaPrior {
  double shape = 1.0;
  double scale = 1.0;
};

struct PriorSet {
  InverseGammaPrior sigma2_beta;
  InverseGammaPrior g;         // mu_alpha or (gamma0, gamma1)
  InverseGammaPrior sigma2_alpha;
  InverseGammaPrior g_spline;  // gamma_S
  InverseGammaPrior g_linear;  // gamma_L
  InverseGammaPrior g_delta;
};

struct SplineConfig {
  int degree = 3;
  int knots = 17;
  // Ridge added to the difference penalty, as a multiple of trace(D'D) / k.
  double ridge_scale = 1e-6;
};

inline constexpr std::string_view kLogVolume = "log_volume";

struct ModelSpec {
  std::string name = "CC";
  MeanFamily mean = MeanFamily::Constant;
  std::string linear_attribute{kLogVolume};       // LinearAttr only
  std::vector<std::string> linear_attributes;     // SplineLinear only
  VarianceFamily variance = VarianceFamily::Constant;
  bool interaction = false;  // age x log(vol + 1) appended to the patient design
  SplineConfig spline;
  PriorSet priors;

  // CC, LC, SL and SLIL.
  static ModelSpec preset(std::string_view name);

  // Accepts {"preset": "SLIL"} or an explicit document with "mean",
  // "variance", "interaction", "spline" and optional "priors".
  static ModelSpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  bool has_spline() const {
    return mean == MeanFamily::SplineVolume || mean == MeanFamily::SplineLinear;
  }
  bool has_delta() const { return variance == VarianceFamily::LogLinearVolume; }

  // Throws InputError when attribute names do not resolve against the
  // hospital schema or the linear attributes include the spline variable.
  void validate(const std::vector<std::string>& attribute_names) const;

  std::uint64_t hash() const;
};

ModelSpec load_model_spec(const std::filesystem::path& path);

// Hyperparameters of the hospital-effect distribution plus sigma2_beta.
// `mean_coef` stacks mu_alpha | (gamma0, gamma1) | gamma_S | (gamma_S, gamma_L).
struct HyperParams {
  double sigma2_beta = 1.0;
  Eigen::VectorXd mean_coef;
  double g = 1.0;
  double g_spline = 1.0;
  double g_linear = 1.0;
  double sigma2_alpha = 1.0;
  double delta = 0.0;
  double g_delta = 1.0;
};

// Center/scale of one standardized column; `standardized == false` leaves
// the column (binary indicators) untouched.
struct ColumnScaling {
  double center = 0.0;
  double scale = 1.0;
  bool standardized = false;

  double apply(double x) const { return standardized ? (x - center) / scale : x; }
  double invert(double z) const { return standardized ? z * scale + center : z; }
};

// Hospital-level covariate row multiplying mean_coef.
Eigen::VectorXd mean_covariates(const ModelSpec& spec, const HospitalRecord& hospital,
                                const Eigen::VectorXd& basis_row,
                                const std::vector<ColumnScaling>& attribute_scaling);

double mu_h(const ModelSpec& spec, const HyperParams& hyper, const HospitalRecord& hospital,
            const Eigen::VectorXd& basis_row,
            const std::vector<ColumnScaling>& attribute_scaling = {});

double sigma2_h(const ModelSpec& spec, const HyperParams& hyper, double volume);

// Column names of mean_coef given the spline dimension.
std::vector<std::string> mean_coef_names(const ModelSpec& spec, Eigen::Index spline_dim);

inline double log_volume(long volume) { return std::log(static_cast<double>(volume) + 1.0); }

}  // namespace hospmort

#endif  // HOSPMORT_MODEL_HPP
