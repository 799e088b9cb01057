#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "hospmort/error.hpp"
#include "hospmort/matching.hpp"

using namespace hospmort;

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

// Hospitals T0.. (treated) and C0.. (controls); one patient per row of
// `features` (age, x1), the first `treated` rows at T0.
Dataset cohort_data(const std::vector<std::array<double, 2>>& features, int treated) {
  std::vector<HospitalRecord> hs = {{"T0", 5, {}}, {"C0", 500, {}}};
  std::vector<PatientRecord> ps;
  for (std::size_t i = 0; i < features.size(); ++i) {
    PatientRecord p;
    p.patient_id = "p" + std::to_string(i);
    p.hospital_id = static_cast<int>(i) < treated ? "T0" : "C0";
    p.age = features[i][0];
    p.covariates = {features[i][1]};
    p.outcome = static_cast<int>(i % 2);
    p.admit_period = 1;
    ps.push_back(p);
  }
  return Dataset({"x1"}, {}, hs, ps);
}

CohortDef explicit_cohort(int k, double caliper) {
  CohortDef c;
  c.hospital_ids = {"T0"};
  c.k = k;
  c.caliper_sd = caliper;
  return c;
}

}  // namespace

TEST_CASE("logistic fit: balanced covariate and 2x2 table") {
  Eigen::MatrixXd Z(20, 1);
  Eigen::VectorXd t(20);
  for (int i = 0; i < 20; ++i) {
    Z(i, 0) = (i % 2) ? 1.0 : -1.0;
    t(i) = i < 6 ? 1.0 : 0.0;
  }
  LogisticFit f = fit_logistic(Z, t);
  CHECK(f.converged);
  CHECK(std::abs(f.coef(1)) < 1e-6);
  CHECK(f.coef(0) == doctest::Approx(logit(0.3)).epsilon(1e-8));

  // x = 0: 10 of 40 treated; x = 1: 20 of 30 treated.
  Eigen::MatrixXd X(70, 1);
  Eigen::VectorXd y(70);
  for (int i = 0; i < 70; ++i) {
    const bool one = i >= 40;
    X(i, 0) = one ? 1.0 : 0.0;
    y(i) = one ? (i - 40 < 20) : (i < 10);
  }
  f = fit_logistic(X, y);
  CHECK(f.coef(0) == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-8));
  CHECK(f.coef(1) == doctest::Approx(std::log(6.0)).epsilon(1e-8));
  CHECK_FALSE(f.ridge_fallback);
}

TEST_CASE("logistic fit falls back to a ridge under separation") {
  Eigen::MatrixXd Z(4, 1);
  Z << -2, -1, 1, 2;
  const Eigen::Vector4d t(0, 0, 1, 1);
  const LogisticFit f = fit_logistic(Z, t);
  CHECK(f.ridge_fallback);
  CHECK(f.coef.allFinite());
  CHECK(f.coef(1) > 0.0);
}

TEST_CASE("min cost assignment equals brute force") {
  RngStream rng(17, 0);
  for (int rep = 0; rep < 60; ++rep) {
    const int T = 1 + static_cast<int>(rng.index(6));
    const int C = T + static_cast<int>(rng.index(static_cast<std::uint64_t>(13 - T)));
    const int k = (2 * T <= C && rng.uniform() < 0.5) ? 2 : 1;
    EdgeList edges(T);
    for (int t = 0; t < T; ++t) {
      for (int c = 0; c < C; ++c) {
        if (rng.uniform() < 0.8) edges[t].push_back({c, rng.uniform() * 3.0});
      }
    }
    const double best = testing::brute_force_assignment(edges, C, k);
    if (!std::isfinite(best)) continue;
    const Assignment a = min_cost_assignment(edges, C, k);
    CHECK(a.total_cost == doctest::Approx(best).epsilon(1e-12));
    std::set<int> used;
    for (const auto& cs : a.controls) {
      CHECK(cs.size() == static_cast<std::size_t>(k));
      for (int c : cs) CHECK(used.insert(c).second);
    }
  }
}

TEST_CASE("3 treated by 4 controls toy instance") {
  // Greedy in treated order takes control 0 for unit 0 and pays for it.
  EdgeList edges = {{{0, 1.0}, {1, 2.0}, {2, 9.0}, {3, 9.0}},
                    {{0, 1.5}, {1, 9.0}, {2, 9.0}, {3, 9.0}},
                    {{0, 9.0}, {1, 9.0}, {2, 1.0}, {3, 1.2}}};
  const Assignment a = min_cost_assignment(edges, 4, 1);
  CHECK(a.total_cost == doctest::Approx(testing::brute_force_assignment(edges, 4, 1)));
  CHECK(a.total_cost == doctest::Approx(4.5));
  CHECK(a.controls[0] == std::vector<int>{1});
  CHECK(a.controls[1] == std::vector<int>{0});
  const Assignment g = greedy_assignment(edges, 4, 1);
  CHECK(g.total_cost > a.total_cost);

  // Nearest of two.
  const Assignment one = min_cost_assignment({{{0, 2.0}, {1, 0.5}}}, 2, 1);
  CHECK(one.controls[0] == std::vector<int>{1});
  CHECK(one.total_cost == 0.5);
}

TEST_CASE("a unit that cannot get k controls is left unmatched") {
  EdgeList edges = {{{0, 1.0}}, {{0, 1.0}, {1, 1.0}, {2, 1.0}}};
  const Assignment a = min_cost_assignment(edges, 3, 2);
  CHECK(a.controls[0].empty());
  CHECK(a.controls[1].size() == 2);
}

TEST_CASE("match picks the nearer control and respects the caliper") {
  const Dataset data = cohort_data({{70, 0.0}, {71, 0.1}, {90, 2.0}, {60, -1.0}}, 1);
  const CohortDef cohort = explicit_cohort(1, 10.0);
  const Eigen::Vector4d prop(0.0, 0.1, 0.2, -0.1);
  const Eigen::Vector4d risk(-1.0, -1.0, 0.5, -1.5);
  const MatchedStudy m = match(data, cohort, prop, risk);
  REQUIRE(m.sets.size() == 1);
  CHECK(m.sets[0].controls == std::vector<int>{1});
  CHECK(m.treated == std::vector<int>{0});
  CHECK(m.controls.size() == 3);

  const CohortDef tight = explicit_cohort(1, 0.0);
  CHECK_THROWS_WITH_AS(match(data, tight, prop, risk), doctest::Contains("caliper too tight"),
                       InputError);
}

TEST_CASE("too few controls reduces k with a warning") {
  const Dataset data = cohort_data({{70, 0.0}, {75, 0.5}, {71, 0.1}, {74, 0.4}, {72, 0.2}}, 2);
  const CohortDef cohort = explicit_cohort(5, 100.0);
  const Eigen::VectorXd prop = Eigen::VectorXd::LinSpaced(5, 0.0, 0.4);
  const Eigen::VectorXd risk = Eigen::VectorXd::LinSpaced(5, -1.0, 0.0);
  const MatchedStudy m = match(data, cohort, prop, risk);
  CHECK(m.k == 1);
  REQUIRE_FALSE(m.warnings.empty());
  CHECK(m.warnings[0].find("k reduced from 5") != std::string::npos);
}

TEST_CASE("standardized differences and balance") {
  CHECK(standardized_difference(84.3, 77.7, 8.25 * 8.25, 8.25 * 8.25) == doctest::Approx(0.80));
  CHECK(std::isnan(standardized_difference(1.0, 1.0, 0.0, 0.0)));

  // Treated and controls with identical features.
  const Dataset data = cohort_data({{70, 0.0}, {80, 1.0}, {70, 0.0}, {80, 1.0}}, 2);
  const CohortDef cohort = explicit_cohort(1, 100.0);
  const Eigen::Vector4d prop(0.0, 0.5, 0.0, 0.5);
  const Eigen::Vector4d risk(-1.0, 0.0, -1.0, 0.0);
  const MatchedStudy m = match(data, cohort, prop, risk);
  const auto table = balance_table(m);
  REQUIRE(table.size() == 3);
  for (const auto& row : table) {
    CHECK(row.std_diff_before == 0.0);
    CHECK(row.std_diff_after == 0.0);
  }
  CHECK(mean_abs_std_diff(table, true) == 0.0);
}

TEST_CASE("cohort definition") {
  const auto c = CohortDef::from_json(nlohmann::json::parse(
      R"({"quantile_volume_le": 0.2, "control_quantile_volume_ge": 0.8, "k": 3})"));
  CHECK(*c.quantile_volume_le == 0.2);
  CHECK(c.k == 3);
  CHECK(c.caliper_sd == 0.2);
  CHECK(CohortDef::from_json(c.to_json()).to_json() == c.to_json());
  CHECK_THROWS_AS(CohortDef::from_json(nlohmann::json::parse(R"({"k": 0, "hospital_ids": ["a"]})")),
                  InputError);
  CHECK_THROWS_AS(CohortDef::from_json(nlohmann::json::parse(R"({"k": 2})")), InputError);

  const Dataset data = testing::tiny_dataset({1, 1, 1, 1, 1}, 3, {10, 20, 30, 40, 50});
  const auto roles = hospital_roles(data, c);
  // Volume quantiles 0.2 -> 18, 0.8 -> 42.
  CHECK(roles == std::vector<Role>{Role::Treated, Role::Excluded, Role::Excluded, Role::Excluded,
                                   Role::Control});
  CohortDef ids;
  ids.hospital_ids = {"H1"};
  CHECK(hospital_roles(data, ids) ==
        std::vector<Role>{Role::Control, Role::Treated, Role::Control, Role::Control, Role::Control});
  ids.hospital_ids = {"nope"};
  CHECK_THROWS_AS(hospital_roles(data, ids), InputError);
}

TEST_CASE("risk scores") {
  const Dataset data = testing::tiny_dataset({5, 6}, 4);
  const ModelSpec cc = ModelSpec::preset("CC");
  const PosteriorSamples zero =
      testing::fixed_samples(data, cc, Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(1), -1.2);
  const Eigen::VectorXd r0 = risk_scores(zero, data);
  CHECK((r0.array() == -1.2).all());

  const PosteriorSamples s =
      testing::fixed_samples(data, cc, Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Constant(1, 0.5), -1.2);
  const Eigen::VectorXd r = risk_scores(s, data);
  const auto& cols = s.transform.columns;
  const auto& p = data.patients()[3];
  CHECK(r(3) == doctest::Approx(-1.2 + 0.5 * cols[0].apply(p.covariates[0])).epsilon(1e-14));
  // Monotone in a covariate with a positive coefficient.
  for (std::size_t i = 0; i < data.num_patients(); ++i) {
    for (std::size_t j = 0; j < data.num_patients(); ++j) {
      if (data.patients()[i].covariates[0] > data.patients()[j].covariates[0]) CHECK(r(i) > r(j));
    }
  }
}

TEST_CASE("aggregation check") {
  const Dataset data = testing::tiny_dataset({20, 40, 40}, 5, {5, 200, 300});
  CohortDef cohort;
  cohort.hospital_ids = {"H0"};
  cohort.k = 1;
  cohort.caliper_sd = 100.0;
  const PropensityModel prop = fit_propensity(data, cohort);
  const ModelSpec cc = ModelSpec::preset("CC");
  const PosteriorSamples fit =
      testing::fixed_samples(data, cc, Eigen::MatrixXd::Constant(2, 3, -1.0), Eigen::VectorXd::Constant(1, 0.1));
  const MatchedStudy m = match(data, cohort, prop.logit, risk_scores(fit, data));
  const auto rows = aggregation_check(m, data, {{"a", &fit}, {"b", &fit}});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].name == "observed");
  CHECK(rows[1].treated == rows[2].treated);
  CHECK(rows[1].matched_controls == rows[2].matched_controls);
  CHECK(rows[1].all_controls == rows[2].all_controls);

  double obs = 0.0;
  for (int i : m.matched_treated()) obs += data.patients()[i].outcome;
  CHECK(rows[0].treated == doctest::Approx(obs / m.matched_treated().size()));

  // Every emitted pair respects the caliper; no control is reused.
  std::set<int> used;
  for (const auto& set : m.sets) {
    for (int c : set.controls) {
      CHECK(std::abs(prop.logit(set.treated) - prop.logit(c)) <= m.caliper + 1e-12);
      CHECK(used.insert(c).second);
    }
  }
}
