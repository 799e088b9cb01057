#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "helpers.hpp"
#include "hospmort/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hospmort");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = hospmort::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream o(p);
  o << s;
}

// Simulated data shared by the CLI tests.
fs::path simulated() {
  static const fs::path dir = [] {
    const fs::path d = testing::scratch("cli");
    write_text(d / "gen.json", R"({"hospitals": 25, "volume_log_mean": 3.5, "periods": 4})");
    const Run r = cli({"--seed", "7", "--out", (d / "sim").string(), "simulate", "--config",
                       (d / "gen.json").string()});
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

std::vector<std::string> fit_args(const fs::path& d, const std::string& out, const std::string& preset) {
  return {"--seed", "3", "--out", (d / out).string(), "fit", "--patients", (d / "sim/patients.csv").string(),
          "--hospitals", (d / "sim/hospitals.csv").string(), "--cutoff", "3", "--preset", preset,
          "--iterations", "150", "--burnin", "50", "--thin", "2", "--chains", "2"};
}

}  // namespace

TEST_CASE("simulate writes the data files") {
  const fs::path d = simulated();
  CHECK(fs::exists(d / "sim/patients.csv"));
  CHECK(fs::exists(d / "sim/hospitals.csv"));
  CHECK(fs::exists(d / "sim/truth.csv"));
  CHECK(fs::exists(d / "sim/manifest.json"));
}

TEST_CASE("fit is byte-identical across reruns") {
  const fs::path d = simulated();
  Run a = cli(fit_args(d, "fit_a", "SL"));
  REQUIRE(a.code == 0);
  CHECK(a.out.find("sigma2_alpha") != std::string::npos);
  Run b = cli(fit_args(d, "fit_b", "SL"));
  REQUIRE(b.code == 0);
  CHECK(testing::slurp(d / "fit_a/samples.csv") == testing::slurp(d / "fit_b/samples.csv"));
  CHECK(testing::slurp(d / "fit_a/meta.json") == testing::slurp(d / "fit_b/meta.json"));
  CHECK(testing::slurp(d / "fit_a/samples.csv").rfind("# config_hash ", 0) == 0);
  auto args = fit_args(d, "fit_c", "SL");
  args.insert(args.begin(), {"--threads", "4"});
  REQUIRE(cli(args).code == 0);
  CHECK(testing::slurp(d / "fit_a/samples.csv") == testing::slurp(d / "fit_c/samples.csv"));
}

TEST_CASE("missing input file is a user error naming the path") {
  const fs::path d = simulated();
  auto args = fit_args(d, "fit_missing", "CC");
  args[6] = (d / "nowhere.csv").string();
  const Run r = cli(args);
  CHECK(r.code == 1);
  CHECK(r.err.find("nowhere.csv") != std::string::npos);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"--out", (d / "x").string(), "report", "--patients", (d / "sim/patients.csv").string(),
             "--hospitals", (d / "sim/hospitals.csv").string(), "--fit", (d / "no_fit").string()})
            .code == 1);
}

TEST_CASE("compare a model with itself") {
  const fs::path d = simulated();
  REQUIRE(cli(fit_args(d, "fit_cc", "CC")).code == 0);
  const Run r = cli({"--out", (d / "cmp").string(), "compare", "--patients", (d / "sim/patients.csv").string(),
                     "--hospitals", (d / "sim/hospitals.csv").string(), "--cutoff", "3", "--fit-a",
                     (d / "fit_cc").string(), "--fit-b", (d / "fit_cc").string()});
  REQUIRE(r.code == 0);
  CHECK(testing::slurp(d / "cmp/bayes_factor.txt").find("log_bayes_factor 0\n") != std::string::npos);
  // A fit trained on a different split is rejected.
  const Run bad = cli({"--out", (d / "cmp2").string(), "compare", "--patients",
                       (d / "sim/patients.csv").string(), "--hospitals", (d / "sim/hospitals.csv").string(),
                       "--cutoff", "2", "--fit-a", (d / "fit_cc").string(), "--fit-b", (d / "fit_cc").string()});
  CHECK(bad.code == 1);
}

TEST_CASE("report writes rates, counts and plot data") {
  const fs::path d = simulated();
  REQUIRE(cli(fit_args(d, "fit_rep", "CC")).code == 0);
  const Run r = cli({"--out", (d / "rep").string(), "report", "--patients", (d / "sim/patients.csv").string(),
                     "--hospitals", (d / "sim/hospitals.csv").string(), "--cutoff", "3", "--fit",
                     (d / "fit_rep").string(), "--svg"});
  REQUIRE(r.code == 0);
  for (const char* f : {"rates.csv", "class_counts.csv", "plot_DS_points.csv", "plot_DS_smooth.csv",
                        "plot_IS_smooth.csv", "plot_raw_points.csv", "manifest.json"}) {
    CHECK(fs::exists(d / "rep" / f));
  }
  std::istringstream counts(testing::slurp(d / "rep/class_counts.csv"));
  std::string line;
  std::getline(counts, line);
  CHECK(line.rfind("# config_hash", 0) == 0);
  std::getline(counts, line);
  CHECK(line == "stratum,Low,Average,High,total");
  std::getline(counts, line);
  CHECK(line.substr(line.rfind(',') + 1) == "25");
  int strata = 1;
  while (std::getline(counts, line)) {
    if (line.empty()) continue;
    ++strata;
    int total = 0;
    std::istringstream ss(line.substr(line.find(',') + 1));
    std::string cell;
    std::vector<int> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stoi(cell));
    for (int k = 0; k < 3; ++k) total += v[k];
    CHECK(total == v[3]);
    CHECK(v[3] >= 25 / 4);
  }
  CHECK(strata == 3);

  const Run c = cli({"--out", (d / "cls").string(), "classify", "--rates", (d / "rep/rates.csv").string(),
                     "--rates-b", (d / "rep/rates.csv").string()});
  REQUIRE(c.code == 0);
  CHECK(fs::exists(d / "cls/cross_classification.csv"));
}

TEST_CASE("calibrate records a reduced k in the manifest") {
  const fs::path d = simulated();
  REQUIRE(cli(fit_args(d, "fit_cal", "CC")).code == 0);
  write_text(d / "cohort.json", R"({"quantile_volume_le": 0.8, "k": 50, "caliper_sd": 5.0})");
  const Run r = cli({"--out", (d / "cal").string(), "calibrate", "--patients",
                     (d / "sim/patients.csv").string(), "--hospitals", (d / "sim/hospitals.csv").string(),
                     "--cutoff", "3", "--cohort", (d / "cohort.json").string(), "--fit",
                     "cc=" + (d / "fit_cal").string()});
  REQUIRE(r.code == 0);
  const auto manifest = nlohmann::json::parse(testing::slurp(d / "cal/manifest.json"));
  bool found = false;
  for (const auto& w : manifest.at("warnings")) found |= w.get<std::string>().find("k reduced from 50") != std::string::npos;
  CHECK(found);
  CHECK(manifest.at("k_used").get<int>() < 50);
  CHECK(fs::exists(d / "cal/balance.csv"));
  CHECK(fs::exists(d / "cal/aggregation.csv"));
}
