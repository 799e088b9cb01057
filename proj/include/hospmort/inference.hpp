#ifndef HOSPMORT_INFERENCE_HPP
#define HOSPMORT_INFERENCE_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hospmort/data.hpp"
#include "hospmort/design.hpp"
#include "hospmort/gibbs.hpp"

namespace hospmort {

inline double inv_logit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---- single-draw functionals ---------------------------------------------------
// `draw.alpha` is indexed like the hospitals of `design`.

// Rate for patient i if treated at hospital `target`.
double patient_rate(const ParamState& draw, const DesignBundle& design, Eigen::Index i,
                    Eigen::Index target);

// Average model rate over hospital h's own patients. Throws when n_h = 0.
double hospital_rate_P(const ParamState& draw, const DesignBundle& design, Eigen::Index h);

enum class ReferenceMode { AllHospitals, HCMean };

struct StandardizeOptions {
  ReferenceMode mode = ReferenceMode::AllHospitals;
  // Reference hospitals weighted by volume instead of equally.
  bool volume_weighted = false;
  // Use the linearized shortcuts instead of the exact double sums.
  bool approximate = false;
  // Above S * H * N terms the direct standardization averages over a
  // seeded patient subsample of this size.
  double budget = 4e9;
  std::size_t subsample = 10000;
  std::uint64_t seed = 1;
  int threads = 1;
};

// Expected rate of hospital h's patients at a reference hospital: the
// average over reference hospitals (those with patients), or the
// population mean effect for a constant-mean model.
double expected_rate_E(const ParamState& draw, const DesignBundle& design, const ModelSpec& spec,
                       Eigen::Index h, const StandardizeOptions& options = {});

// (P_h / E_h) * ybar.
double indirect_standardized(const ParamState& draw, const DesignBundle& design,
                             const ModelSpec& spec, Eigen::Index h, double ybar,
                             const StandardizeOptions& options = {});

// Average rate of every patient in `design` sent to hospital h.
double direct_standardized(const ParamState& draw, const DesignBundle& design, Eigen::Index h,
                           bool approximate = false);

// ---- posterior summaries ------------------------------------------------------

// Retained alpha draws aligned to `data`'s hospitals. Hospitals unknown to
// the fit get per-draw draws from the fitted random-effects law.
Eigen::MatrixXd align_alpha(const PosteriorSamples& samples, const Dataset& data,
                            std::uint64_t seed);

struct RateDraws {
  Eigen::MatrixXd P, E, IS, DS;  // S x H; NaN where n_h = 0 (P, E, IS)
  std::size_t ds_patients = 0;
  bool ds_subsampled = false;
};

RateDraws rate_draws(const PosteriorSamples& samples, const Dataset& data,
                     const StandardizeOptions& options = {});

struct Interval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Column-wise posterior mean and central 95% interval.
std::vector<Interval> summarize_draws(const Eigen::MatrixXd& draws);

enum class RateClass { Low, Average, High };
std::string to_string(RateClass c);

struct HospitalRate {
  std::string hospital_id;
  long volume = 0;
  int n = 0;
  double raw = 0.0;
  Interval P, IS, DS;
  RateClass label = RateClass::Average;
};

struct RateReport {
  std::vector<HospitalRate> rows;
  double ybar = 0.0;
  std::size_t draws = 0;
  std::size_t ds_patients = 0;
  bool ds_subsampled = false;
  // Hospital mean of the posterior-mean indirect rates and its batch-means
  // Monte Carlo standard error.
  double is_hospital_mean = 0.0;
  double is_mcse = 0.0;
};

RateReport summarize(const PosteriorSamples& samples, const Dataset& data,
                     const StandardizeOptions& options = {}, double threshold = 0.15);

void write_rate_report(const RateReport& report, const std::filesystem::path& path);
// Reads the per-hospital rows back; the summary fields stay at defaults.
RateReport read_rate_report(const std::filesystem::path& path);

// Low if hi < threshold, High if lo > threshold, else Average.
RateClass classify(const Interval& interval, double threshold = 0.15);
// Labels from the direct-standardized intervals.
std::vector<RateClass> classify(const RateReport& report, double threshold = 0.15);

enum class VolumeFilter { All, LowerQuartile, UpperQuartile };
std::string to_string(VolumeFilter f);

// Rows of `report` within the volume stratum.
std::vector<std::size_t> volume_stratum(const RateReport& report, VolumeFilter filter);

std::array<int, 3> class_counts(const RateReport& report, VolumeFilter filter = VolumeFilter::All);

struct CrossTable {
  std::array<std::array<int, 3>, 3> counts{};  // [label a][label b]
  int total = 0;
  double percent(int a, int b) const { return total ? 100.0 * counts[a][b] / total : 0.0; }
};

// Throws InputError when the two reports cover different hospitals.
CrossTable cross_classify(const RateReport& a, const RateReport& b,
                          VolumeFilter filter = VolumeFilter::All);

// log of the Monte Carlo posterior predictive likelihood of `validation`.
double predictive_log_likelihood(const PosteriorSamples& samples, const Dataset& validation,
                                 std::uint64_t seed = 1, int threads = 1);

double log_mean_exp(const Eigen::VectorXd& values);

// Throws InputError when the fits were trained on different data.
double log_predictive_bayes_factor(const PosteriorSamples& m1, const PosteriorSamples& m2,
                                   const Dataset& validation, std::uint64_t seed = 1,
                                   int threads = 1);

}  // namespace hospmort

#endif  // HOSPMORT_INFERENCE_HPP
