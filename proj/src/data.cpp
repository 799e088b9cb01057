#include "hospmort/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "hospmort/csv.hpp"
#include "hospmort/error.hpp"
#include "hospmort/hash.hpp"

namespace hospmort {

// ---- csv ------------------------------------------------------------------

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return j;
  }
  return std::nullopt;
}

std::size_t CsvTable::require_column(std::string_view name, const std::string& context) const {
  auto j = column(name);
  if (!j) throw InputError(context + ": missing column '" + std::string(name) + "'");
  return *j;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file " + path.string());
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  if (!have_header) throw InputError(path.string() + ": empty file");
  return table;
}

double parse_real(std::string_view text, const std::string& context) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw InputError(context + ": cannot parse '" + std::string(text) + "' as a number");
  }
  return value;
}

long parse_integer(std::string_view text, const std::string& context) {
  long value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw InputError(context + ": cannot parse '" + std::string(text) + "' as an integer");
  }
  return value;
}

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

// ---- records ----------------------------------------------------------------

double HospitalRecord::attribute(const std::string& name) const {
  auto it = attributes.find(name);
  if (it == attributes.end()) {
    throw InputError("hospital " + hospital_id + " has no attribute '" + name + "'");
  }
  return it->second;
}

Dataset::Dataset(std::vector<std::string> covariate_names, std::vector<std::string> attribute_names,
                 std::vector<HospitalRecord> hospitals, std::vector<PatientRecord> patients)
    : covariate_names_(std::move(covariate_names)),
      attribute_names_(std::move(attribute_names)),
      hospitals_(std::move(hospitals)),
      patients_(std::move(patients)) {
  for (std::size_t h = 0; h < hospitals_.size(); ++h) {
    const auto& rec = hospitals_[h];
    if (rec.volume < 0) {
      throw InputError("negative volume for hospital " + rec.hospital_id + " at row " +
                       std::to_string(h + 1));
    }
    if (!hospital_index_.emplace(rec.hospital_id, static_cast<int>(h)).second) {
      throw InputError("duplicate hospital_id " + rec.hospital_id + " at row " +
                       std::to_string(h + 1));
    }
  }
  group_sizes_.assign(hospitals_.size(), 0);
  members_.assign(hospitals_.size(), {});
  patient_hospital_.reserve(patients_.size());
  double deaths = 0.0;
  for (std::size_t i = 0; i < patients_.size(); ++i) {
    const auto& p = patients_[i];
    auto it = hospital_index_.find(p.hospital_id);
    if (it == hospital_index_.end()) {
      throw InputError("unresolved hospital_id " + p.hospital_id + " at row " +
                       std::to_string(i + 1));
    }
    if (p.outcome != 0 && p.outcome != 1) {
      throw InputError("non-binary outcome at row " + std::to_string(i + 1));
    }
    if (p.covariates.size() != covariate_names_.size()) {
      throw InputError("covariate count mismatch at row " + std::to_string(i + 1));
    }
    patient_hospital_.push_back(it->second);
    ++group_sizes_[it->second];
    members_[it->second].push_back(static_cast<int>(i));
    deaths += p.outcome;
  }
  ybar_ = patients_.empty() ? 0.0 : deaths / static_cast<double>(patients_.size());
}

std::optional<int> Dataset::find_hospital(const std::string& id) const {
  auto it = hospital_index_.find(id);
  if (it == hospital_index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Dataset::content_hash() const {
  Fnv1a hash;
  for (const auto& name : covariate_names_) hash.add(name);
  for (const auto& name : attribute_names_) hash.add(name);
  for (const auto& h : hospitals_) {
    hash.add(h.hospital_id);
    hash.add(h.volume);
    for (const auto& [k, v] : h.attributes) {
      hash.add(k);
      hash.add(v);
    }
  }
  for (const auto& p : patients_) {
    hash.add(p.patient_id);
    hash.add(p.hospital_id);
    hash.add(static_cast<long>(p.outcome));
    hash.add(p.age);
    hash.add(p.admit_period);
    for (double x : p.covariates) hash.add(x);
  }
  return hash.value();
}

// ---- io ---------------------------------------------------------------------

namespace {

constexpr std::size_t kPatientFixedColumns = 5;
const char* const kPatientColumns[kPatientFixedColumns] = {"patient_id", "hospital_id", "outcome",
                                                           "age", "admit_period"};

}  // namespace

Dataset load_dataset(const std::filesystem::path& patients_path,
                     const std::filesystem::path& hospitals_path) {
  if (!std::filesystem::exists(hospitals_path)) {
    throw InputError("hospitals file not found: " + hospitals_path.string());
  }
  if (!std::filesystem::exists(patients_path)) {
    throw InputError("patients file not found: " + patients_path.string());
  }

  const CsvTable htab = read_csv(hospitals_path);
  const std::string hctx = hospitals_path.string();
  const std::size_t id_col = htab.require_column("hospital_id", hctx);
  const std::size_t vol_col = htab.require_column("volume", hctx);
  std::vector<std::string> attribute_names;
  std::vector<std::size_t> attribute_cols;
  for (std::size_t j = 0; j < htab.header.size(); ++j) {
    if (j == id_col || j == vol_col) continue;
    attribute_names.push_back(htab.header[j]);
    attribute_cols.push_back(j);
  }

  std::vector<HospitalRecord> hospitals;
  hospitals.reserve(htab.rows.size());
  for (std::size_t r = 0; r < htab.rows.size(); ++r) {
    const auto& row = htab.rows[r];
    const std::string ctx = hctx + " row " + std::to_string(r + 1);
    if (row.size() != htab.header.size()) throw InputError(ctx + ": wrong number of fields");
    HospitalRecord rec;
    rec.hospital_id = row[id_col];
    rec.volume = parse_integer(row[vol_col], ctx + " volume");
    for (std::size_t a = 0; a < attribute_cols.size(); ++a) {
      const std::string& cell = row[attribute_cols[a]];
      const double value = cell.empty() ? std::numeric_limits<double>::quiet_NaN()
                                        : parse_real(cell, ctx + " " + attribute_names[a]);
      if (attribute_names[a] == "pci" && !std::isnan(value) && value != 0.0 && value != 1.0) {
        throw InputError(ctx + ": pci must be 0 or 1");
      }
      rec.attributes.emplace(attribute_names[a], value);
    }
    hospitals.push_back(std::move(rec));
  }

  const CsvTable ptab = read_csv(patients_path);
  const std::string pctx = patients_path.string();
  if (ptab.header.size() < kPatientFixedColumns) {
    throw InputError(pctx + ": header must start with patient_id,hospital_id,outcome,age,admit_period");
  }
  for (std::size_t j = 0; j < kPatientFixedColumns; ++j) {
    if (ptab.header[j] != kPatientColumns[j]) {
      throw InputError(pctx + ": missing column '" + kPatientColumns[j] + "'");
    }
  }
  std::vector<std::string> covariate_names(ptab.header.begin() + kPatientFixedColumns,
                                           ptab.header.end());
  std::vector<PatientRecord> patients;
  patients.reserve(ptab.rows.size());
  for (std::size_t r = 0; r < ptab.rows.size(); ++r) {
    const auto& row = ptab.rows[r];
    const std::string ctx = pctx + " row " + std::to_string(r + 1);
    if (row.size() != ptab.header.size()) throw InputError(ctx + ": wrong number of fields");
    PatientRecord p;
    p.patient_id = row[0];
    p.hospital_id = row[1];
    const long y = parse_integer(row[2], ctx + " outcome");
    if (y != 0 && y != 1) throw InputError("non-binary outcome at row " + std::to_string(r + 1));
    p.outcome = static_cast<int>(y);
    p.age = parse_real(row[3], ctx + " age");
    p.admit_period = parse_integer(row[4], ctx + " admit_period");
    p.covariates.reserve(covariate_names.size());
    for (std::size_t j = kPatientFixedColumns; j < row.size(); ++j) {
      p.covariates.push_back(parse_real(row[j], ctx + " " + ptab.header[j]));
    }
    patients.push_back(std::move(p));
  }
  return Dataset(std::move(covariate_names), std::move(attribute_names), std::move(hospitals),
                 std::move(patients));
}

void write_dataset(const Dataset& data, const std::filesystem::path& patients_path,
                   const std::filesystem::path& hospitals_path) {
  std::ofstream pout(patients_path);
  if (!pout) throw InputError("cannot write " + patients_path.string());
  pout << "patient_id,hospital_id,outcome,age,admit_period";
  for (const auto& name : data.covariate_names()) pout << ',' << name;
  pout << '\n';
  for (const auto& p : data.patients()) {
    pout << p.patient_id << ',' << p.hospital_id << ',' << p.outcome << ',' << format_real(p.age)
         << ',' << p.admit_period;
    for (double x : p.covariates) pout << ',' << format_real(x);
    pout << '\n';
  }

  std::ofstream hout(hospitals_path);
  if (!hout) throw InputError("cannot write " + hospitals_path.string());
  hout << "hospital_id,volume";
  for (const auto& name : data.attribute_names()) hout << ',' << name;
  hout << '\n';
  for (const auto& h : data.hospitals()) {
    hout << h.hospital_id << ',' << h.volume;
    for (const auto& name : data.attribute_names()) {
      const double v = h.attribute(name);
      hout << ',';
      if (!std::isnan(v)) hout << format_real(v);
    }
    hout << '\n';
  }
}

PeriodSplit split_by_period(const Dataset& data, long cutoff) {
  std::vector<PatientRecord> train;
  std::vector<PatientRecord> validation;
  for (const auto& p : data.patients()) {
    (p.admit_period <= cutoff ? train : validation).push_back(p);
  }
  if (train.empty()) throw InputError("empty training split");
  if (validation.empty()) throw InputError("empty validation split");

  PeriodSplit split{Dataset(data.covariate_names(), data.attribute_names(), data.hospitals(),
                            std::move(train)),
                    Dataset(data.covariate_names(), data.attribute_names(), data.hospitals(),
                            std::move(validation)),
                    {}};
  for (std::size_t h = 0; h < data.num_hospitals(); ++h) {
    if (split.train.group_sizes()[h] == 0 && split.validation.group_sizes()[h] > 0) {
      split.cold_start.push_back(static_cast<int>(h));
    }
  }
  return split;
}

}  // namespace hospmort
