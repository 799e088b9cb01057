#include "hospmort/cli.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hospmort/data.hpp"
#include "hospmort/diagnostics.hpp"
#include "hospmort/error.hpp"
#include "hospmort/gibbs.hpp"
#include "hospmort/hash.hpp"
#include "hospmort/inference.hpp"
#include "hospmort/matching.hpp"
#include "hospmort/model.hpp"
#include "hospmort/samples_io.hpp"
#include "hospmort/smoothing.hpp"
#include "hospmort/synth.hpp"

namespace fs = std::filesystem;

namespace hospmort {

namespace {

struct Globals {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = "out";
};

std::uint64_t file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  Fnv1a h;
  h.add(ss.str());
  return h.value();
}

// Accumulates the reproducibility manifest of one command.
class Manifest {
 public:
  Manifest(std::string command, const Globals& g) : command_(std::move(command)), seed_(g.seed) {
    hash_.add(command_);
    hash_.add(static_cast<long>(g.seed));
  }

  void option(const std::string& key, const std::string& value) {
    options_[key] = value;
    hash_.add(key);
    hash_.add(value);
  }
  void option(const std::string& key, double value) { option(key, format_real(value)); }
  void input(const std::string& key, const fs::path& path) {
    const auto h = file_hash(path);
    inputs_[key] = {{"path", path.string()}, {"hash", hex_digest(h)}};
    hash_.add(key);
    hash_.add(static_cast<long>(h));
  }
  void extra(const std::string& key, nlohmann::ordered_json value) { extra_[key] = std::move(value); }
  void warning(const std::string& w) { warnings_.push_back(w); }
  void output(const fs::path& p) { outputs_.push_back(p.filename().string()); }

  std::string config_hash() const { return hex_digest(hash_.value()); }
  std::uint64_t seed() const { return seed_; }

  void write(const fs::path& dir) const {
    nlohmann::ordered_json doc;
    doc["command"] = command_;
    doc["seed"] = seed_;
    doc["config_hash"] = config_hash();
    doc["options"] = options_;
    doc["inputs"] = inputs_;
    for (const auto& [k, v] : extra_.items()) doc[k] = v;
    doc["outputs"] = outputs_;
    doc["warnings"] = warnings_;
    std::ofstream out(dir / "manifest.json");
    if (!out) throw InputError("cannot write " + (dir / "manifest.json").string());
    out << doc.dump(2) << "\n";
  }

 private:
  std::string command_;
  std::uint64_t seed_;
  Fnv1a hash_;
  nlohmann::ordered_json options_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json inputs_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json extra_ = nlohmann::ordered_json::object();
  std::vector<std::string> outputs_;
  std::vector<std::string> warnings_;
};

// Prefixes a written CSV with the config hash and seed.
void stamp(const fs::path& path, Manifest& manifest) {
  std::string body;
  {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    body = ss.str();
  }
  std::ofstream out(path, std::ios::binary);
  out << "# config_hash " << manifest.config_hash() << " seed " << manifest.seed() << "\n" << body;
  manifest.output(path);
}

fs::path prepare_out(const Globals& g) {
  fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("output directory not writable: " + g.out);
  return dir;
}

struct DataArgs {
  std::string patients;
  std::string hospitals;
  long cutoff = 0;
  bool has_cutoff = false;
};

void add_data_options(CLI::App* cmd, DataArgs& a, bool cutoff_required = false) {
  cmd->add_option("--patients", a.patients, "patients CSV")->required();
  cmd->add_option("--hospitals", a.hospitals, "hospitals CSV")->required();
  auto* opt = cmd->add_option("--cutoff", a.cutoff, "last admit_period of the training split");
  if (cutoff_required) opt->required();
}

void check_exists(const std::string& path) {
  if (!fs::exists(path)) throw InputError("file not found: " + path);
}

Dataset load(const DataArgs& a, Manifest& m) {
  check_exists(a.patients);
  check_exists(a.hospitals);
  m.input("patients", a.patients);
  m.input("hospitals", a.hospitals);
  return load_dataset(a.patients, a.hospitals);
}

ModelSpec resolve_model(const std::string& model, const std::string& preset, Manifest& m) {
  if (!model.empty()) {
    check_exists(model);
    m.input("model", model);
    return load_model_spec(model);
  }
  m.option("preset", preset);
  return ModelSpec::preset(preset);
}

PosteriorSamples load_fit(const std::string& dir, const std::string& key, Manifest& m) {
  const fs::path d(dir);
  if (!fs::exists(d / "meta.json") || !fs::exists(d / "samples.csv")) {
    throw InputError("missing fit artifacts in " + dir + " (need samples.csv and meta.json)");
  }
  m.input(key + ".meta", d / "meta.json");
  m.input(key + ".samples", d / "samples.csv");
  return read_samples(d);
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

// ---- commands -------------------------------------------------------------

struct FitArgs {
  DataArgs data;
  std::string model;
  std::string preset = "CC";
  ChainConfig chain;
};

int cmd_fit(const FitArgs& a, const Globals& g, std::ostream& out) {
  Manifest m("fit", g);
  Dataset data = load(a.data, m);
  if (a.data.has_cutoff) {
    m.option("cutoff", std::to_string(a.data.cutoff));
    data = split_by_period(data, a.data.cutoff).train;
  }
  const ModelSpec spec = resolve_model(a.model, a.preset, m);
  ChainConfig chain = a.chain;
  chain.seed = g.seed;
  chain.threads = g.threads;
  m.option("iterations", std::to_string(chain.iterations));
  m.option("burnin", std::to_string(chain.burnin));
  m.option("thin", std::to_string(chain.thin));
  m.option("chains", std::to_string(chain.n_chains));
  m.option("delta_step", chain.delta_step);
  const fs::path dir = prepare_out(g);

  const PosteriorSamples samples = run_chain(spec, data, chain);
  write_samples(samples, dir);
  m.output(dir / "samples.csv");
  m.output(dir / "meta.json");

  const auto summary = summarize_parameters(samples);
  {
    std::ofstream s(dir / "summary.csv");
    s << "parameter,mean,sd,lo,hi,ess,rhat\n";
    for (const auto& p : summary) {
      s << p.name << ',' << format_real(p.mean) << ',' << format_real(p.sd) << ','
        << format_real(p.lo) << ',' << format_real(p.hi) << ',' << format_real(p.ess) << ','
        << (std::isfinite(p.rhat) ? format_real(p.rhat) : "NA") << '\n';
    }
  }
  stamp(dir / "summary.csv", m);
  for (const auto& w : samples.meta.warnings) m.warning(w);
  m.extra("spec_hash", hex_digest(samples.meta.spec_hash));
  m.extra("data_hash", hex_digest(samples.meta.data_hash));
  m.extra("samples_config_hash", hex_digest(config_hash(samples.meta)));
  m.write(dir);

  out << "model " << spec.name << ": " << samples.size() << " draws, H=" << data.num_hospitals()
      << " N=" << data.num_patients() << "\n";
  if (spec.has_delta()) {
    out << "delta acceptance:";
    for (double r : samples.meta.delta_acceptance) out << ' ' << fixed(r, 3);
    out << "\n";
  }
  for (const auto& w : samples.meta.warnings) out << "warning: " << w << "\n";
  out << std::left << std::setw(28) << "parameter" << std::right << std::setw(11) << "mean"
      << std::setw(11) << "sd" << std::setw(11) << "2.5%" << std::setw(11) << "97.5%"
      << std::setw(9) << "ess" << std::setw(8) << "rhat" << "\n";
  for (const auto& p : summary) {
    out << std::left << std::setw(28) << p.name << std::right << std::setw(11) << fixed(p.mean)
        << std::setw(11) << fixed(p.sd) << std::setw(11) << fixed(p.lo) << std::setw(11)
        << fixed(p.hi) << std::setw(9) << fixed(p.ess, 0) << std::setw(8)
        << (std::isfinite(p.rhat) ? fixed(p.rhat, 3) : "NA") << "\n";
  }
  return 0;
}

struct ReportArgs {
  DataArgs data;
  std::string fit;
  double threshold = 0.15;
  bool approximate = false;
  bool volume_weighted = false;
  bool hc_mean = false;
  bool svg = false;
  double budget = 4e9;
};

StandardizeOptions standardize_options(const ReportArgs& a, const Globals& g, Manifest& m) {
  StandardizeOptions o;
  o.approximate = a.approximate;
  o.volume_weighted = a.volume_weighted;
  o.mode = a.hc_mean ? ReferenceMode::HCMean : ReferenceMode::AllHospitals;
  o.budget = a.budget;
  o.seed = g.seed;
  o.threads = g.threads;
  m.option("threshold", a.threshold);
  m.option("approximate", a.approximate ? "true" : "false");
  m.option("volume_weighted", a.volume_weighted ? "true" : "false");
  m.option("reference", a.hc_mean ? "hc_mean" : "all_hospitals");
  m.option("budget", a.budget);
  return o;
}

Dataset report_data(const ReportArgs& a, Manifest& m) {
  Dataset data = load(a.data, m);
  if (a.data.has_cutoff) {
    m.option("cutoff", std::to_string(a.data.cutoff));
    data = split_by_period(data, a.data.cutoff).train;
  }
  return data;
}

void write_report_summary(const RateReport& report, Manifest& m) {
  m.extra("ybar", report.ybar);
  m.extra("draws", report.draws);
  m.extra("ds_patients", report.ds_patients);
  m.extra("ds_subsampled", report.ds_subsampled);
  m.extra("is_hospital_mean", report.is_hospital_mean);
  m.extra("is_mcse", report.is_mcse);
  if (report.ds_subsampled) {
    m.warning("direct standardization averaged over a seeded subsample of " +
              std::to_string(report.ds_patients) + " patients");
  }
}

void write_class_counts(const RateReport& report, const fs::path& path) {
  std::ofstream out(path);
  out << "stratum,Low,Average,High,total\n";
  for (auto f : {VolumeFilter::All, VolumeFilter::LowerQuartile, VolumeFilter::UpperQuartile}) {
    const auto c = class_counts(report, f);
    out << to_string(f) << ',' << c[0] << ',' << c[1] << ',' << c[2] << ',' << c[0] + c[1] + c[2] << '\n';
  }
}

int cmd_standardize(const ReportArgs& a, const Globals& g, std::ostream& out) {
  Manifest m("standardize", g);
  const Dataset data = report_data(a, m);
  const PosteriorSamples fit = load_fit(a.fit, "fit", m);
  const auto options = standardize_options(a, g, m);
  const fs::path dir = prepare_out(g);
  const RateReport report = summarize(fit, data, options, a.threshold);
  write_rate_report(report, dir / "rates.csv");
  stamp(dir / "rates.csv", m);
  write_report_summary(report, m);
  m.write(dir);
  out << "ybar " << fixed(report.ybar) << ", hospital mean of P^IS " << fixed(report.is_hospital_mean)
      << " (MC-SE " << fixed(report.is_mcse, 5) << ")\n";
  return 0;
}

int cmd_report(const ReportArgs& a, const Globals& g, std::ostream& out) {
  Manifest m("report", g);
  const Dataset data = report_data(a, m);
  const PosteriorSamples fit = load_fit(a.fit, "fit", m);
  const auto options = standardize_options(a, g, m);
  m.option("svg", a.svg ? "true" : "false");
  const fs::path dir = prepare_out(g);
  const RateReport report = summarize(fit, data, options, a.threshold);

  write_rate_report(report, dir / "rates.csv");
  stamp(dir / "rates.csv", m);
  write_class_counts(report, dir / "class_counts.csv");
  stamp(dir / "class_counts.csv", m);

  // Rate against log volume with the smoothing overlay, one pair per functional.
  const auto H = static_cast<Eigen::Index>(report.rows.size());
  Eigen::VectorXd lv(H);
  for (Eigen::Index h = 0; h < H; ++h) lv(h) = log_volume(report.rows[h].volume);
  const Eigen::MatrixXd alpha = align_alpha(fit, data, g.seed);
  const Eigen::VectorXd alpha_hat = alpha.colwise().mean().transpose();
  struct Series {
    std::string name;
    Eigen::VectorXd y;
  };
  std::vector<Series> series{{"raw", {}}, {"P", {}}, {"IS", {}}, {"DS", {}}, {"alpha", alpha_hat}};
  for (auto& s : series) {
    if (s.name == "alpha") continue;
    s.y.resize(H);
    for (Eigen::Index h = 0; h < H; ++h) {
      const auto& r = report.rows[h];
      s.y(h) = s.name == "raw" ? r.raw : s.name == "P" ? r.P.mean : s.name == "IS" ? r.IS.mean : r.DS.mean;
    }
  }
  for (const auto& s : series) {
    const SmoothCurve curve = smooth_binned(lv, s.y);
    const fs::path pts = dir / ("plot_" + s.name + "_points.csv");
    {
      std::ofstream o(pts);
      o << "hospital_id,volume,log_volume,value\n";
      for (Eigen::Index h = 0; h < H; ++h) {
        o << report.rows[h].hospital_id << ',' << report.rows[h].volume << ',' << format_real(lv(h))
          << ',' << (std::isfinite(s.y(h)) ? format_real(s.y(h)) : "NA") << '\n';
      }
    }
    stamp(pts, m);
    const fs::path sm = dir / ("plot_" + s.name + "_smooth.csv");
    {
      std::ofstream o(sm);
      o << "log_volume,value\n";
      for (Eigen::Index i = 0; i < curve.x.size(); ++i) {
        o << format_real(curve.x(i)) << ',' << format_real(curve.y(i)) << '\n';
      }
    }
    stamp(sm, m);
    if (a.svg) {
      const fs::path svg = dir / ("plot_" + s.name + ".svg");
      write_svg_scatter(svg, lv, s.y, curve, fit.spec.name + ": " + s.name, "log(volume + 1)", s.name);
      m.output(svg);
    }
  }
  write_report_summary(report, m);
  m.write(dir);

  out << "ybar " << fixed(report.ybar) << ", hospital mean of P^IS " << fixed(report.is_hospital_mean)
      << " (MC-SE " << fixed(report.is_mcse, 5) << ")\n";
  out << std::left << std::setw(16) << "stratum" << std::right << std::setw(8) << "Low" << std::setw(9)
      << "Average" << std::setw(8) << "High" << "\n";
  for (auto f : {VolumeFilter::All, VolumeFilter::LowerQuartile, VolumeFilter::UpperQuartile}) {
    const auto c = class_counts(report, f);
    out << std::left << std::setw(16) << to_string(f) << std::right << std::setw(8) << c[0]
        << std::setw(9) << c[1] << std::setw(8) << c[2] << "\n";
  }
  return 0;
}

struct ClassifyArgs {
  std::string rates;
  std::string rates_b;
  double threshold = 0.15;
};

int cmd_classify(const ClassifyArgs& a, const Globals& g, std::ostream& out) {
  Manifest m("classify", g);
  check_exists(a.rates);
  m.input("rates", a.rates);
  m.option("threshold", a.threshold);
  RateReport ra = read_rate_report(a.rates);
  for (auto& r : ra.rows) r.label = classify(r.DS, a.threshold);
  const fs::path dir = prepare_out(g);
  write_class_counts(ra, dir / "class_counts.csv");
  stamp(dir / "class_counts.csv", m);
  out << "stratum          Low Average High\n";
  for (auto f : {VolumeFilter::All, VolumeFilter::LowerQuartile, VolumeFilter::UpperQuartile}) {
    const auto c = class_counts(ra, f);
    out << std::left << std::setw(16) << to_string(f) << std::right << std::setw(4) << c[0]
        << std::setw(8) << c[1] << std::setw(5) << c[2] << "\n";
  }
  if (!a.rates_b.empty()) {
    check_exists(a.rates_b);
    m.input("rates_b", a.rates_b);
    RateReport rb = read_rate_report(a.rates_b);
    for (auto& r : rb.rows) r.label = classify(r.DS, a.threshold);
    const fs::path path = dir / "cross_classification.csv";
    {
      std::ofstream o(path);
      o << "stratum,label_a,label_b,count,percent\n";
      for (auto f : {VolumeFilter::All, VolumeFilter::LowerQuartile, VolumeFilter::UpperQuartile}) {
        const CrossTable t = cross_classify(ra, rb, f);
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) {
            o << to_string(f) << ',' << to_string(static_cast<RateClass>(i)) << ','
              << to_string(static_cast<RateClass>(j)) << ',' << t.counts[i][j] << ','
              << format_real(t.percent(i, j)) << '\n';
          }
        }
      }
    }
    stamp(path, m);
    const CrossTable all = cross_classify(ra, rb);
    out << "cross classification (rows: first, columns: second)\n";
    for (int i = 0; i < 3; ++i) {
      out << std::left << std::setw(8) << to_string(static_cast<RateClass>(i)) << std::right;
      for (int j = 0; j < 3; ++j) out << std::setw(7) << all.counts[i][j];
      out << "\n";
    }
  }
  m.write(dir);
  return 0;
}

struct CompareArgs {
  DataArgs data;
  std::string fit_a;
  std::string fit_b;
};

int cmd_compare(const CompareArgs& a, const Globals& g, std::ostream& out) {
  Manifest m("compare", g);
  const Dataset data = load(a.data, m);
  m.option("cutoff", std::to_string(a.data.cutoff));
  const PeriodSplit split = split_by_period(data, a.data.cutoff);
  const PosteriorSamples fa = load_fit(a.fit_a, "fit_a", m);
  const PosteriorSamples fb = load_fit(a.fit_b, "fit_b", m);
  if (fa.meta.data_hash != split.train.content_hash()) {
    throw InputError("fit " + a.fit_a + " was not trained on the training split of these data");
  }
  const double la = predictive_log_likelihood(fa, split.validation, g.seed, g.threads);
  const double lb = predictive_log_likelihood(fb, split.validation, g.seed, g.threads);
  if (fa.meta.data_hash != fb.meta.data_hash) {
    throw InputError("models were fit on different training data (data hash mismatch)");
  }
  const fs::path dir = prepare_out(g);
  const fs::path path = dir / "bayes_factor.txt";
  {
    std::ofstream o(path);
    o << "model_a " << fa.spec.name << "\n"
      << "model_b " << fb.spec.name << "\n"
      << "validation_patients " << split.validation.num_patients() << "\n"
      << "cold_start_hospitals " << split.cold_start.size() << "\n"
      << "log_predictive_a " << format_real(la) << "\n"
      << "log_predictive_b " << format_real(lb) << "\n"
      << "log_bayes_factor " << format_real(la - lb) << "\n";
  }
  stamp(path, m);
  m.extra("log_bayes_factor", la - lb);
  m.write(dir);
  out << "log predictive BF(" << fa.spec.name << ", " << fb.spec.name << ") = " << fixed(la - lb, 3)
      << "\n";
  return 0;
}

struct CalibrateArgs {
  DataArgs data;
  std::string cohort;
  std::vector<std::string> fits;  // name=dir
  std::string risk_fit;
};

int cmd_calibrate(const CalibrateArgs& a, const Globals& g, std::ostream& out) {
  Manifest m("calibrate", g);
  const Dataset data = load(a.data, m);
  m.option("cutoff", std::to_string(a.data.cutoff));
  const Dataset validation = split_by_period(data, a.data.cutoff).validation;
  check_exists(a.cohort);
  m.input("cohort", a.cohort);
  const CohortDef cohort = load_cohort(a.cohort);

  std::vector<std::pair<std::string, PosteriorSamples>> fits;
  for (const auto& spec : a.fits) {
    const auto eq = spec.find('=');
    const std::string name = eq == std::string::npos ? fs::path(spec).filename().string() : spec.substr(0, eq);
    const std::string dir = eq == std::string::npos ? spec : spec.substr(eq + 1);
    fits.emplace_back(name, load_fit(dir, "fit." + name, m));
  }
  if (fits.empty()) throw InputError("calibrate needs at least one --fit");
  PosteriorSamples risk_model = fits.front().second;
  if (!a.risk_fit.empty()) risk_model = load_fit(a.risk_fit, "risk_fit", m);

  const PropensityModel prop = fit_propensity(validation, cohort);
  if (prop.fit.ridge_fallback) m.warning("propensity fit separated; ridge 1e-4 fallback used");
  const Eigen::VectorXd risk = risk_scores(risk_model, validation);
  const MatchedStudy study = match(validation, cohort, prop.logit, risk);
  for (const auto& w : study.warnings) m.warning(w);
  m.extra("k_requested", cohort.k);
  m.extra("k_used", study.k);
  m.extra("greedy", study.greedy);
  m.extra("matched_treated", study.sets.size());
  m.extra("dropped_treated", study.dropped.size());
  m.extra("total_distance", study.total_distance);

  const fs::path dir = prepare_out(g);
  const auto balance = balance_table(study);
  write_balance_csv(balance, dir / "balance.csv");
  stamp(dir / "balance.csv", m);
  std::vector<std::pair<std::string, const PosteriorSamples*>> refs;
  for (const auto& [name, fit] : fits) refs.emplace_back(name, &fit);
  const auto agg = aggregation_check(study, validation, refs, g.seed);
  write_aggregation_csv(agg, dir / "aggregation.csv");
  stamp(dir / "aggregation.csv", m);
  {
    std::ofstream o(dir / "matches.csv");
    o << "treated,control\n";
    for (const auto& s : study.sets) {
      for (int c : s.controls) {
        o << validation.patients()[s.treated].patient_id << ',' << validation.patients()[c].patient_id << '\n';
      }
    }
    for (const auto& d : study.dropped) {
      o << validation.patients()[d.treated].patient_id << ",NA\n";
    }
  }
  stamp(dir / "matches.csv", m);
  m.write(dir);

  for (const auto& w : study.warnings) out << "warning: " << w << "\n";
  out << "matched " << study.sets.size() << " of " << study.treated.size() << " treated patients with k="
      << study.k << (study.greedy ? " (greedy)" : "") << "\n";
  out << "mean |std diff| before " << fixed(mean_abs_std_diff(balance, false), 3) << ", after "
      << fixed(mean_abs_std_diff(balance, true), 3) << "\n";
  out << std::left << std::setw(16) << "row" << std::right << std::setw(10) << "treated" << std::setw(10)
      << "matched" << std::setw(10) << "controls" << "\n";
  for (const auto& r : agg) {
    out << std::left << std::setw(16) << r.name << std::right << std::setw(10) << fixed(r.treated)
        << std::setw(10) << fixed(r.matched_controls) << std::setw(10) << fixed(r.all_controls) << "\n";
  }
  return 0;
}

struct SimulateArgs {
  std::string config;
};

int cmd_simulate(const SimulateArgs& a, const Globals& g, std::ostream& out) {
  Manifest m("simulate", g);
  nlohmann::json doc = nlohmann::json::object();
  if (!a.config.empty()) {
    check_exists(a.config);
    m.input("config", a.config);
    std::ifstream in(a.config);
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(a.config + ": " + e.what());
    }
  }
  GeneratorConfig config = GeneratorConfig::from_json(doc);
  config.seed = g.seed;
  const GeneratedData gen = generate(config);
  const fs::path dir = prepare_out(g);
  write_dataset(gen.data, dir / "patients.csv", dir / "hospitals.csv");
  m.output(dir / "patients.csv");
  m.output(dir / "hospitals.csv");
  {
    std::ofstream o(dir / "truth.csv");
    o << "hospital_id,mu,alpha\n";
    for (std::size_t h = 0; h < gen.data.num_hospitals(); ++h) {
      o << gen.data.hospitals()[h].hospital_id << ',' << format_real(gen.mu(h)) << ','
        << format_real(gen.truth.alpha(h)) << '\n';
    }
  }
  stamp(dir / "truth.csv", m);
  m.extra("generator", config.to_json());
  m.extra("data_hash", hex_digest(gen.data.content_hash()));
  m.write(dir);
  out << "generated H=" << gen.data.num_hospitals() << " N=" << gen.data.num_patients()
      << " ybar=" << fixed(gen.data.ybar()) << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical logit models for hospital mortality"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output directory")->capture_default_str();

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "run the Gibbs sampler");
  add_data_options(c_fit, fit.data);
  c_fit->add_option("--model", fit.model, "model config (JSON)");
  c_fit->add_option("--preset", fit.preset, "CC, LC, SL or SLIL when no --model")->capture_default_str();
  c_fit->add_option("--iterations", fit.chain.iterations)->capture_default_str();
  c_fit->add_option("--burnin", fit.chain.burnin)->capture_default_str();
  c_fit->add_option("--thin", fit.chain.thin)->capture_default_str();
  c_fit->add_option("--chains", fit.chain.n_chains)->capture_default_str();
  c_fit->add_option("--delta-step", fit.chain.delta_step, "initial delta step (0 = automatic)");

  ReportArgs report;
  auto* c_report = app.add_subcommand("report", "rates, classifications and plot data");
  ReportArgs standardize;
  auto* c_std = app.add_subcommand("standardize", "posterior standardized rates");
  for (auto [cmd, args] : {std::pair{c_report, &report}, std::pair{c_std, &standardize}}) {
    add_data_options(cmd, args->data);
    cmd->add_option("--fit", args->fit, "fit directory")->required();
    cmd->add_option("--threshold", args->threshold)->capture_default_str();
    cmd->add_flag("--approximate", args->approximate, "linearized standardization");
    cmd->add_flag("--volume-weighted", args->volume_weighted, "volume-weighted expected rates");
    cmd->add_flag("--hc-mean", args->hc_mean, "expected rates at the population mean effect");
    cmd->add_option("--budget", args->budget, "S*H*N cap for exact direct standardization");
  }
  c_report->add_flag("--svg", report.svg, "also render SVG scatterplots");

  ClassifyArgs classify_args;
  auto* c_class = app.add_subcommand("classify", "classification counts and cross tables");
  c_class->add_option("--rates", classify_args.rates, "rates CSV")->required();
  c_class->add_option("--rates-b", classify_args.rates_b, "second rates CSV for cross-classification");
  c_class->add_option("--threshold", classify_args.threshold)->capture_default_str();

  CompareArgs compare;
  auto* c_cmp = app.add_subcommand("compare", "out-of-sample predictive Bayes factor");
  add_data_options(c_cmp, compare.data, true);
  c_cmp->add_option("--fit-a", compare.fit_a)->required();
  c_cmp->add_option("--fit-b", compare.fit_b)->required();

  CalibrateArgs calib;
  auto* c_cal = app.add_subcommand("calibrate", "matched-cohort calibration study");
  add_data_options(c_cal, calib.data, true);
  c_cal->add_option("--cohort", calib.cohort, "study definition (JSON)")->required();
  c_cal->add_option("--fit", calib.fits, "name=fit_dir, repeatable")->required();
  c_cal->add_option("--risk-fit", calib.risk_fit, "fit used for the risk score (default: first --fit)");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "generate synthetic data");
  c_sim->add_option("--config", sim.config, "generator config (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  fit.data.has_cutoff = c_fit->count("--cutoff") > 0;
  report.data.has_cutoff = c_report->count("--cutoff") > 0;
  standardize.data.has_cutoff = c_std->count("--cutoff") > 0;

  try {
    if (c_fit->parsed()) return cmd_fit(fit, g, out);
    if (c_report->parsed()) return cmd_report(report, g, out);
    if (c_std->parsed()) return cmd_standardize(standardize, g, out);
    if (c_class->parsed()) return cmd_classify(classify_args, g, out);
    if (c_cmp->parsed()) return cmd_compare(compare, g, out);
    if (c_cal->parsed()) return cmd_calibrate(calib, g, out);
    if (c_sim->parsed()) return cmd_simulate(sim, g, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace hospmort
