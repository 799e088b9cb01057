#ifndef HOSPMORT_DATA_HPP
#define HOSPMORT_DATA_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace hospmort {

struct PatientRecord {
  std::string patient_id;
  std::string hospital_id;
  int outcome = 0;  // 1 = death within 30 days
  double age = 0.0;
  long admit_period = 0;
  std::vector<double> covariates;
};

// Attributes are keyed by the column names of the hospitals file. A missing
// value (empty cell) is stored as NaN.
struct HospitalRecord {
  std::string hospital_id;
  long volume = 0;
  std::map<std::string, double> attributes;

  double attribute(const std::string& name) const;
};

// Validated grouped binary-outcome data. Patients keep file order; each
// carries the index of its hospital in `hospitals`.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> covariate_names, std::vector<std::string> attribute_names,
          std::vector<HospitalRecord> hospitals, std::vector<PatientRecord> patients);

  const std::vector<PatientRecord>& patients() const { return patients_; }
  const std::vector<HospitalRecord>& hospitals() const { return hospitals_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }
  const std::vector<std::string>& attribute_names() const { return attribute_names_; }

  std::size_t num_patients() const { return patients_.size(); }
  std::size_t num_hospitals() const { return hospitals_.size(); }
  std::size_t num_covariates() const { return covariate_names_.size(); }

  // Hospital index of patient i.
  int hospital_of(std::size_t i) const { return patient_hospital_[i]; }
  const std::vector<int>& patient_hospitals() const { return patient_hospital_; }
  std::optional<int> find_hospital(const std::string& id) const;

  // Patients per hospital (n_h).
  const std::vector<int>& group_sizes() const { return group_sizes_; }
  // Patient indices per hospital, in file order.
  const std::vector<std::vector<int>>& members() const { return members_; }
  // Grand mean outcome.
  double ybar() const { return ybar_; }

  // FNV-1a digest of every record; identical data gives identical hashes.
  std::uint64_t content_hash() const;

 private:
  std::vector<std::string> covariate_names_;
  std::vector<std::string> attribute_names_;
  std::vector<HospitalRecord> hospitals_;
  std::vector<PatientRecord> patients_;
  std::unordered_map<std::string, int> hospital_index_;
  std::vector<int> patient_hospital_;
  std::vector<int> group_sizes_;
  std::vector<std::vector<int>> members_;
  double ybar_ = 0.0;
};

// Reads the patients and hospitals CSV files. Schema violations, unresolved
// or duplicate hospital ids are reported with their 1-based data row.
Dataset load_dataset(const std::filesystem::path& patients_path,
                     const std::filesystem::path& hospitals_path);

// Writes both files in the same schema, with round-trip exact reals.
void write_dataset(const Dataset& data, const std::filesystem::path& patients_path,
                   const std::filesystem::path& hospitals_path);

struct PeriodSplit {
  Dataset train;
  Dataset validation;
  // Hospitals (by index, shared list) with validation patients but no
  // training patients.
  std::vector<int> cold_start;
};

// Training holds admit_period <= cutoff, validation the rest. The hospital
// list is kept whole in both halves.
PeriodSplit split_by_period(const Dataset& data, long cutoff);

// Deterministic text formatting shared by every writer: shortest
// representation that round-trips through strtod.
std::string format_real(double x);

}  // namespace hospmort

#endif  // HOSPMORT_DATA_HPP
