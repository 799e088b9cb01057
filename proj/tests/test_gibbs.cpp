#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "hospmort/design.hpp"
#include "hospmort/error.hpp"
#include "hospmort/gibbs.hpp"
#include "hospmort/polya_gamma.hpp"
#include "hospmort/samples_io.hpp"

using namespace hospmort;

TEST_CASE("omega at zero linear predictor has the PG(1,0) moments") {
  const Dataset data = testing::tiny_dataset(std::vector<int>(40, 500), 3);
  const ModelSpec spec = ModelSpec::preset("CC");
  const DesignBundle design = build_design(data, spec);
  ParamState s = initial_state(design, spec);
  s.alpha.setZero();
  s.beta.setZero();
  RngStream rng(11, 0);
  const Eigen::VectorXd w = update_omega(s, design, rng);
  const double n = static_cast<double>(w.size());
  const double mean = w.mean();
  const double var = (w.array() - mean).square().sum() / (n - 1);
  CHECK(std::abs(mean - 0.25) < 4.0 * std::sqrt(1.0 / 24.0 / n));
  CHECK(var == doctest::Approx(1.0 / 24.0).epsilon(0.05));
  CHECK((w.array() > 0.0).all());
}

TEST_CASE("sharded omega does not depend on thread count") {
  const Dataset data = testing::tiny_dataset(std::vector<int>(10, 300), 4);
  const ModelSpec spec = ModelSpec::preset("LC");
  const DesignBundle design = build_design(data, spec);
  const ParamState s = initial_state(design, spec);
  auto run = [&](int threads) {
    std::vector<RngStream> streams;
    for (int k = 0; k < 8; ++k) streams.emplace_back(5, 1 + k);
    return update_omega(s, design, streams, threads);
  };
  const Eigen::VectorXd a = run(1);
  const Eigen::VectorXd b = run(4);
  CHECK(a == b);
}

TEST_CASE("alpha conditional matches its closed form") {
  const Dataset data = testing::tiny_dataset({3, 8, 20}, 5);
  const ModelSpec spec = ModelSpec::preset("LC");
  const DesignBundle design = build_design(data, spec);
  ParamState s = initial_state(design, spec);
  s.beta = Eigen::VectorXd::LinSpaced(design.num_fixed(), -0.3, 0.4);
  s.hyper.mean_coef = Eigen::Vector2d(-1.0, -0.2);
  s.hyper.sigma2_alpha = 0.3;
  RngStream wrng(9, 0);
  s.omega = update_omega(s, design, wrng);

  const Eigen::Index H = design.num_hospitals();
  Eigen::VectorXd m(H), v(H);
  for (Eigen::Index h = 0; h < H; ++h) {
    const double mu = design.mean_design.row(h).dot(s.hyper.mean_coef);
    double prec = 1.0 / 0.3, lin = mu / 0.3;
    for (int i : design.members[h]) {
      prec += s.omega(i);
      lin += design.y(i) - 0.5 - s.omega(i) * design.X.row(i).dot(s.beta);
    }
    v(h) = 1.0 / prec;
    m(h) = v(h) * lin;
  }
  const int reps = 40000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(H), sq = Eigen::VectorXd::Zero(H);
  RngStream rng(21, 0);
  for (int r = 0; r < reps; ++r) {
    const Eigen::VectorXd a = update_alpha(s, design, spec, rng);
    sum += a;
    sq += a.array().square().matrix();
  }
  for (Eigen::Index h = 0; h < H; ++h) {
    const double mean = sum(h) / reps;
    const double var = sq(h) / reps - mean * mean;
    CHECK(std::abs(mean - m(h)) < 4.0 * std::sqrt(v(h) / reps));
    CHECK(var == doctest::Approx(v(h)).epsilon(0.03));
  }
}

TEST_CASE("alpha with vanishing omega and balanced outcomes follows the prior") {
  const Dataset data = testing::tiny_dataset({2, 2}, 6);
  const ModelSpec spec = ModelSpec::preset("CC");
  const DesignBundle design = build_design(data, spec);
  ParamState s = initial_state(design, spec);
  s.hyper.mean_coef = Eigen::VectorXd::Constant(1, -1.5);
  s.hyper.sigma2_alpha = 0.2;
  s.omega = Eigen::VectorXd::Constant(design.num_patients(), 1e-14);
  // Sum of (y - 1/2) is what pulls alpha; replace outcomes so it cancels.
  DesignBundle d = design;
  d.y << 1, 0, 0, 1;
  RngStream rng(2, 0);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(2);
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) sum += update_alpha(s, d, spec, rng);
  CHECK(std::abs(sum(0) / reps + 1.5) < 4.0 * std::sqrt(0.2 / reps));
  CHECK(std::abs(sum(1) / reps + 1.5) < 4.0 * std::sqrt(0.2 / reps));
}

TEST_CASE("beta conditional matches its closed form") {
  const Dataset data = testing::tiny_dataset({30, 30, 30}, 7);
  const ModelSpec spec = ModelSpec::preset("CC");
  const DesignBundle design = build_design(data, spec);
  ParamState s = initial_state(design, spec);
  s.alpha << -1.0, -0.5, 0.2;
  s.beta.setZero();
  s.hyper.sigma2_beta = 0.7;
  RngStream wrng(3, 0);
  s.omega = update_omega(s, design, wrng);

  const Eigen::Index p = design.num_fixed();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(p, p) / 0.7;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  for (Eigen::Index i = 0; i < design.num_patients(); ++i) {
    const Eigen::VectorXd x = design.X.row(i).transpose();
    Q += s.omega(i) * x * x.transpose();
    b += x * (design.y(i) - 0.5 - s.omega(i) * s.alpha(design.hospital[i]));
  }
  const Eigen::MatrixXd V = Q.inverse();
  const Eigen::VectorXd m = V * b;

  const int reps = 30000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(p, p);
  RngStream rng(4, 0);
  for (int r = 0; r < reps; ++r) {
    const Eigen::VectorXd d = update_beta(s, design, spec, rng);
    sum += d;
    sq += d * d.transpose();
  }
  const Eigen::VectorXd mean = sum / reps;
  const Eigen::MatrixXd cov = sq / reps - mean * mean.transpose();
  for (Eigen::Index j = 0; j < p; ++j) {
    CHECK(std::abs(mean(j) - m(j)) < 4.0 * std::sqrt(V(j, j) / reps));
    CHECK(cov(j, j) == doctest::Approx(V(j, j)).epsilon(0.04));
  }
}

TEST_CASE("constant-mean hyper update: mean then variance") {
  const Dataset data = testing::tiny_dataset({5, 5, 5, 5}, 8);
  const ModelSpec spec = ModelSpec::preset("CC");
  const DesignBundle design = build_design(data, spec);
  const HyperContext ctx(spec, design);
  ParamState s = initial_state(design, spec);
  s.alpha << -1, -1, 1, 1;
  s.hyper.sigma2_alpha = 0.8;
  s.hyper.g = 2.0;
  DeltaProposal dp;
  RngStream rng(12, 0);
  const int reps = 100000;
  double mu_sum = 0, mu_sq = 0, s2_sum = 0, cond_sum = 0;
  for (int r = 0; r < reps; ++r) {
    const HyperParams h = update_hyper(s, design, spec, ctx, rng, dp);
    const double mu = h.mean_coef(0);
    mu_sum += mu;
    mu_sq += mu * mu;
    s2_sum += h.sigma2_alpha;
    // E[sigma2 | mu] under IG(1 + (4 + 1)/2, 1 + quad/2).
    const double quad = 2 * (1 + mu) * (1 + mu) + 2 * (1 - mu) * (1 - mu) + mu * mu / 2.0;
    cond_sum += (1.0 + quad / 2.0) / (3.5 - 1.0);
  }
  const double vmu = 0.8 / (4.0 + 0.5);
  CHECK(std::abs(mu_sum / reps) < 4.0 * std::sqrt(vmu / reps));
  CHECK(mu_sq / reps == doctest::Approx(vmu).epsilon(0.02));
  CHECK(s2_sum / reps == doctest::Approx(cond_sum / reps).epsilon(0.01));
  // At mu = 0 the conditional is IG(3.5, 3), mean 1.2.
  CHECK((1.0 + 0.5 * 4.0) / 2.5 == doctest::Approx(1.2));
}

TEST_CASE("flat prior on the mean recovers the average effect") {
  const Dataset data = testing::tiny_dataset({5, 5, 5, 5, 5}, 9);
  const ModelSpec spec = ModelSpec::preset("CC");
  const DesignBundle design = build_design(data, spec);
  const HyperContext ctx(spec, design);
  ParamState s = initial_state(design, spec);
  s.alpha << -2.0, -1.0, -1.5, -1.2, -0.8;
  s.hyper.sigma2_alpha = 0.01;
  s.hyper.g = 1e12;
  DeltaProposal dp;
  RngStream rng(13, 0);
  double sum = 0;
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) sum += update_hyper(s, design, spec, ctx, rng, dp).mean_coef(0);
  CHECK(sum / reps == doctest::Approx(-1.3).epsilon(1e-3));
}

TEST_CASE("hospitals without patients are drawn from the prior") {
  Dataset data = testing::tiny_dataset({10, 10, 0}, 10, {10, 10, 500});
  const ModelSpec spec = ModelSpec::from_json(
      nlohmann::json::parse(R"({"mean": "linear", "variance": "loglinear_volume"})"));
  const DesignBundle design = build_design(data, spec);
  const HyperContext ctx(spec, design);
  REQUIRE(ctx.cold == std::vector<int>{2});
  REQUIRE(ctx.active == std::vector<int>{0, 1});
  ParamState s = initial_state(design, spec);
  s.hyper.mean_coef = Eigen::VectorXd::LinSpaced(design.mean_design.cols(), -2.0, -1.0);
  s.hyper.sigma2_alpha = 0.3;
  s.hyper.delta = -0.001;
  const double mu = design.mean_design.row(2).dot(s.hyper.mean_coef);
  const double v = 0.3 * std::exp(-0.5);
  RngStream rng(14, 0);
  std::vector<double> draws;
  for (int r = 0; r < 20000; ++r) {
    redraw_cold_start(s, design, spec, ctx, rng);
    draws.push_back(s.alpha(2));
  }
  RngStream ref(15, 0);
  std::vector<double> oracle;
  for (int r = 0; r < 20000; ++r) oracle.push_back(mu + std::sqrt(v) * ref.normal());
  CHECK(testing::ks_two_sample(draws, oracle).p > 0.001);
}

TEST_CASE("run_chain is reproducible and keeps the retained count") {
  const Dataset data = testing::tiny_dataset({20, 40, 60, 80, 10, 0}, 11);
  const ModelSpec spec = ModelSpec::from_json(nlohmann::json::parse(R"({"preset": "SL", "spline": {"knots": 2}})"));
  ChainConfig cfg;
  cfg.iterations = 120;
  cfg.burnin = 20;
  cfg.thin = 3;
  cfg.n_chains = 2;
  cfg.seed = 99;
  const PosteriorSamples a = run_chain(spec, data, cfg);
  cfg.threads = 3;
  const PosteriorSamples b = run_chain(spec, data, cfg);
  CHECK(a.size() == 2 * ((120 - 20) / 3));
  CHECK(a.alpha == b.alpha);
  CHECK(a.beta == b.beta);
  CHECK(a.delta == b.delta);
  CHECK(a.chain.front() == 0);
  CHECK(a.chain.back() == 1);
  CHECK(a.meta.data_hash == data.content_hash());
  CHECK(a.meta.spec_hash == spec.hash());
  cfg.seed = 100;
  CHECK(run_chain(spec, data, cfg).alpha != a.alpha);
}

TEST_CASE("chain configuration is validated") {
  const Dataset data = testing::tiny_dataset({5, 5}, 12);
  ChainConfig cfg;
  cfg.iterations = 10;
  cfg.burnin = 10;
  CHECK_THROWS_AS(run_chain(ModelSpec::preset("CC"), data, cfg), InputError);
  cfg.burnin = 2;
  cfg.thin = 0;
  CHECK_THROWS_AS(run_chain(ModelSpec::preset("CC"), data, cfg), InputError);
}

TEST_CASE("samples survive a write/read round trip") {
  const Dataset data = testing::tiny_dataset({20, 30, 40, 25, 35}, 13);
  ChainConfig cfg;
  cfg.iterations = 40;
  cfg.burnin = 10;
  cfg.thin = 2;
  cfg.n_chains = 2;
  const PosteriorSamples a = run_chain(
      ModelSpec::from_json(nlohmann::json::parse(R"({"preset": "SL", "spline": {"knots": 1}})")), data, cfg);
  const auto dir = testing::scratch("samples_io");
  write_samples(a, dir);
  const PosteriorSamples b = read_samples(dir);
  CHECK(b.alpha == a.alpha);
  CHECK(b.beta == a.beta);
  CHECK(b.mean_coef == a.mean_coef);
  CHECK(b.sigma2_alpha == a.sigma2_alpha);
  CHECK(b.delta == a.delta);
  CHECK(b.chain == a.chain);
  CHECK(b.hospital_ids == a.hospital_ids);
  CHECK(b.spec.hash() == a.spec.hash());
  CHECK(b.meta.data_hash == a.meta.data_hash);
  CHECK(config_hash(b.meta) == config_hash(a.meta));
  CHECK(b.transform.to_json() == a.transform.to_json());
  CHECK_THROWS_AS(read_samples(dir / "nope"), InputError);
}
