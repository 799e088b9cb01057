#include "hospmort/samples_io.hpp"

#include <fstream>

#include <json.hpp>

#include "hospmort/csv.hpp"
#include "hospmort/error.hpp"
#include "hospmort/hash.hpp"

namespace hospmort {

namespace {

const char* const kScalarNames[] = {"sigma2_beta", "g",     "g_S",    "g_L",
                                    "sigma2_alpha", "delta", "g_delta"};

template <typename Samples>
auto& scalar_column(Samples& s, int j) {
  switch (j) {
    case 0: return s.sigma2_beta;
    case 1: return s.g;
    case 2: return s.g_spline;
    case 3: return s.g_linear;
    case 4: return s.sigma2_alpha;
    case 5: return s.delta;
    default: return s.g_delta;
  }
}

std::uint64_t parse_hex(const std::string& text) {
  return std::stoull(text, nullptr, 16);
}

}  // namespace

std::vector<std::string> sample_columns(const PosteriorSamples& samples) {
  std::vector<std::string> cols{"chain"};
  for (const auto& id : samples.hospital_ids) cols.push_back("alpha." + id);
  for (Eigen::Index j = 0; j < samples.beta.cols(); ++j) cols.push_back("beta." + std::to_string(j + 1));
  const Eigen::Index k = samples.transform.basis ? samples.transform.basis->dimension() : 0;
  for (const auto& name : mean_coef_names(samples.spec, k)) cols.push_back(name);
  for (const char* name : kScalarNames) cols.emplace_back(name);
  return cols;
}

std::uint64_t config_hash(const SampleMeta& meta) {
  Fnv1a h;
  h.add(static_cast<long>(meta.iterations));
  h.add(static_cast<long>(meta.burnin));
  h.add(static_cast<long>(meta.thin));
  h.add(static_cast<long>(meta.seed));
  h.add(static_cast<long>(meta.n_chains));
  h.add(static_cast<long>(meta.spec_hash));
  h.add(static_cast<long>(meta.data_hash));
  return h.value();
}

void write_samples(const PosteriorSamples& samples, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto cols = sample_columns(samples);
  {
    std::ofstream out(dir / "samples.csv");
    if (!out) throw InputError("cannot write " + (dir / "samples.csv").string());
    out << "# config_hash " << hex_digest(config_hash(samples.meta)) << " seed "
        << samples.meta.seed << "\n";
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << "\n";
    std::string line;
    for (Eigen::Index s = 0; s < samples.size(); ++s) {
      line = std::to_string(samples.chain[s]);
      auto put = [&](double v) {
        line += ',';
        line += format_real(v);
      };
      for (Eigen::Index h = 0; h < samples.alpha.cols(); ++h) put(samples.alpha(s, h));
      for (Eigen::Index j = 0; j < samples.beta.cols(); ++j) put(samples.beta(s, j));
      for (Eigen::Index j = 0; j < samples.mean_coef.cols(); ++j) put(samples.mean_coef(s, j));
      for (int j = 0; j < 7; ++j) put(scalar_column(samples, j)(s));
      out << line << "\n";
    }
  }
  const auto& m = samples.meta;
  nlohmann::ordered_json meta;
  meta["config_hash"] = hex_digest(config_hash(m));
  meta["seed"] = m.seed;
  meta["iterations"] = m.iterations;
  meta["burnin"] = m.burnin;
  meta["thin"] = m.thin;
  meta["n_chains"] = m.n_chains;
  meta["draws"] = samples.size();
  meta["spec_hash"] = hex_digest(m.spec_hash);
  meta["data_hash"] = hex_digest(m.data_hash);
  meta["delta_acceptance"] = m.delta_acceptance;
  meta["delta_step"] = m.delta_step;
  meta["warnings"] = m.warnings;
  meta["hospital_ids"] = samples.hospital_ids;
  meta["model"] = samples.spec.to_json();
  meta["design"] = samples.transform.to_json();
  std::ofstream out(dir / "meta.json");
  if (!out) throw InputError("cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << "\n";
}

PosteriorSamples read_samples(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.json";
  std::ifstream in(meta_path);
  if (!in) throw InputError("missing fit artifact " + meta_path.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(meta_path.string() + ": " + e.what());
  }

  PosteriorSamples s;
  try {
    s.spec = ModelSpec::from_json(meta.at("model"));
    s.transform = DesignTransform::from_json(meta.at("design"));
    s.hospital_ids = meta.at("hospital_ids").get<std::vector<std::string>>();
    auto& m = s.meta;
    m.seed = meta.at("seed").get<std::uint64_t>();
    m.iterations = meta.at("iterations").get<int>();
    m.burnin = meta.at("burnin").get<int>();
    m.thin = meta.at("thin").get<int>();
    m.n_chains = meta.at("n_chains").get<int>();
    m.spec_hash = parse_hex(meta.at("spec_hash").get<std::string>());
    m.data_hash = parse_hex(meta.at("data_hash").get<std::string>());
    m.delta_acceptance = meta.at("delta_acceptance").get<std::vector<double>>();
    m.delta_step = meta.at("delta_step").get<std::vector<double>>();
    m.warnings = meta.at("warnings").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(meta_path.string() + ": " + e.what());
  }

  const auto table = read_csv(dir / "samples.csv");
  const Eigen::Index hcount = static_cast<Eigen::Index>(s.hospital_ids.size());
  const Eigen::Index p = s.transform.num_columns();
  const Eigen::Index k = s.transform.basis ? s.transform.basis->dimension() : 0;
  const Eigen::Index q = static_cast<Eigen::Index>(mean_coef_names(s.spec, k).size());
  s.reserve(static_cast<Eigen::Index>(table.rows.size()), hcount, p, q);
  const auto expected = sample_columns(s);
  if (table.header != expected) throw InputError("samples.csv columns do not match meta.json");

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string ctx = "samples.csv row " + std::to_string(r + 1);
    if (row.size() != expected.size()) throw InputError(ctx + ": wrong field count");
    const auto s_idx = static_cast<Eigen::Index>(r);
    std::size_t c = 0;
    s.chain[r] = static_cast<int>(parse_integer(row[c++], ctx));
    for (Eigen::Index h = 0; h < hcount; ++h) s.alpha(s_idx, h) = parse_real(row[c++], ctx);
    for (Eigen::Index j = 0; j < p; ++j) s.beta(s_idx, j) = parse_real(row[c++], ctx);
    for (Eigen::Index j = 0; j < q; ++j) s.mean_coef(s_idx, j) = parse_real(row[c++], ctx);
    for (int j = 0; j < 7; ++j) scalar_column(s, j)(s_idx) = parse_real(row[c++], ctx);
  }
  return s;
}

}  // namespace hospmort
