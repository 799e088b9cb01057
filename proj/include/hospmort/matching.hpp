#ifndef HOSPMORT_MATCHING_HPP
#define HOSPMORT_MATCHING_HPP

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hospmort/data.hpp"
#include "hospmort/gibbs.hpp"

namespace hospmort {

struct CohortDef {
  // Treated hospitals: volume at or below this volume quantile, or an
  // explicit id list.
  std::optional<double> quantile_volume_le;
  std::vector<std::string> hospital_ids;
  // Control hospitals: volume at or above this quantile; all non-treated
  // hospitals when unset.
  std::optional<double> control_quantile_volume_ge;
  int k = 5;
  double caliper_sd = 0.2;
  std::vector<std::string> exact_keys;  // "age" or covariate names
  std::size_t max_edges = 5'000'000;

  void validate() const;
  static CohortDef from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

CohortDef load_cohort(const std::filesystem::path& path);

enum class Role { Excluded, Treated, Control };

// Role of every hospital of `data`.
std::vector<Role> hospital_roles(const Dataset& data, const CohortDef& cohort);

struct LogisticFit {
  Eigen::VectorXd coef;  // intercept first
  int iterations = 0;
  bool converged = false;
  bool ridge_fallback = false;
};

// Newton-Raphson maximum likelihood for a logistic model on [1, Z].
// Coefficients running off to infinity (separation) trigger a refit with
// a 1e-4 ridge on the non-intercept coefficients.
LogisticFit fit_logistic(const Eigen::MatrixXd& Z, const Eigen::VectorXd& t, double ridge = 0.0);

// Patient-level propensity features: age then the covariates.
Eigen::MatrixXd propensity_features(const Dataset& data);

struct PropensityModel {
  LogisticFit fit;
  Eigen::VectorXd logit;  // per patient of the dataset; NaN outside the cohort
};

// Treated-group membership regressed on patient features over the treated
// and control patients.
PropensityModel fit_propensity(const Dataset& data, const CohortDef& cohort);

// Posterior-mean population-level linear predictor x'beta + mu for every
// patient of `data` (no hospital effect). mu is the mean of mu_alpha for a
// constant mean family, otherwise the mean over draws of the average alpha.
Eigen::VectorXd risk_scores(const PosteriorSamples& fit, const Dataset& data);

// Candidate edges per treated unit: (control position, cost).
using EdgeList = std::vector<std::vector<std::pair<int, double>>>;

struct Assignment {
  std::vector<std::vector<int>> controls;  // per treated unit
  double total_cost = 0.0;
};

// Exact minimum total cost assignment giving each treated unit k distinct
// controls (each control used at most once), by successive shortest paths.
// Treated units that cannot receive k controls get none.
Assignment min_cost_assignment(const EdgeList& edges, int n_controls, int k);

// Nearest available controls in treated order.
Assignment greedy_assignment(const EdgeList& edges, int n_controls, int k);

struct MatchedSet {
  int treated = 0;            // patient index
  std::vector<int> controls;  // patient indices
};

struct DroppedUnit {
  int treated = 0;
  int admissible = 0;
  std::string reason;
};

struct MatchedStudy {
  std::vector<int> treated;   // all treated patients
  std::vector<int> controls;  // all control patients
  std::vector<MatchedSet> sets;
  std::vector<DroppedUnit> dropped;
  int k = 0;
  bool greedy = false;
  double caliper = 0.0;  // on the propensity logit scale
  double total_distance = 0.0;
  std::size_t admissible_edges = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> feature_names;
  Eigen::MatrixXd features;  // patient x feature, raw scale
  Eigen::VectorXd outcome;

  std::vector<int> matched_treated() const;
  std::vector<int> matched_controls() const;
};

// Pairs every treated patient with k controls minimizing total Mahalanobis
// distance on (age, covariates, risk score) within the propensity caliper.
MatchedStudy match(const Dataset& data, const CohortDef& cohort, const Eigen::VectorXd& propensity,
                   const Eigen::VectorXd& risk);

struct BalanceRow {
  std::string name;
  double treated_mean = 0.0;          // all treated
  double matched_treated_mean = 0.0;
  double matched_control_mean = 0.0;
  double control_mean = 0.0;          // all controls
  double pooled_sd = 0.0;
  double std_diff_before = 0.0;
  double std_diff_after = 0.0;
  bool degenerate = false;
};

// (mean_t - mean_c) / sqrt((var_t + var_c) / 2)
double standardized_difference(double mean_t, double mean_c, double var_t, double var_c);

std::vector<BalanceRow> balance_table(const MatchedStudy& study);
double mean_abs_std_diff(const std::vector<BalanceRow>& table, bool after);

struct AggregationRow {
  std::string name;
  double treated = 0.0;
  double matched_controls = 0.0;
  double all_controls = 0.0;
};

// Observed mortality, then each model's mean posterior-mean predicted rate
// at the patients' own hospitals, over matched treated, matched controls
// and all controls.
std::vector<AggregationRow> aggregation_check(
    const MatchedStudy& study, const Dataset& data,
    const std::vector<std::pair<std::string, const PosteriorSamples*>>& fits,
    std::uint64_t seed = 1);

// Posterior-mean predicted rate of every patient at their own hospital.
Eigen::VectorXd predicted_patient_rates(const PosteriorSamples& fit, const Dataset& data,
                                        std::uint64_t seed = 1);

void write_balance_csv(const std::vector<BalanceRow>& table, const std::filesystem::path& path);
void write_aggregation_csv(const std::vector<AggregationRow>& table,
                           const std::filesystem::path& path);

}  // namespace hospmort

#endif  // HOSPMORT_MATCHING_HPP
