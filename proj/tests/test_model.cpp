#include <doctest.h>

#include <cmath>

#include "hospmort/error.hpp"
#include "hospmort/model.hpp"
#include "hospmort/spline.hpp"

using namespace hospmort;

namespace {

HospitalRecord hospital(long volume, double ntbr = 0.5, double rtbr = 0.2, double pci = 1.0) {
  HospitalRecord h;
  h.hospital_id = "h";
  h.volume = volume;
  h.attributes = {{"ntbr", ntbr}, {"rtbr", rtbr}, {"pci", pci}};
  return h;
}

}  // namespace

TEST_CASE("presets") {
  const auto cc = ModelSpec::preset("CC");
  CHECK(cc.mean == MeanFamily::Constant);
  CHECK(cc.variance == VarianceFamily::Constant);
  CHECK_FALSE(cc.interaction);
  const auto slil = ModelSpec::preset("SLIL");
  CHECK(slil.mean == MeanFamily::SplineLinear);
  CHECK(slil.variance == VarianceFamily::LogLinearVolume);
  CHECK(slil.interaction);
  CHECK(slil.linear_attributes == std::vector<std::string>{"ntbr", "rtbr", "pci"});
  CHECK(slil.priors.sigma2_alpha.shape == 1.0);
  CHECK(slil.priors.sigma2_alpha.scale == 1.0);
  CHECK_THROWS_AS(ModelSpec::preset("XX"), InputError);
}

TEST_CASE("mu_h per family") {
  HyperParams hp;
  ModelSpec cc = ModelSpec::preset("CC");
  hp.mean_coef = Eigen::VectorXd::Constant(1, -1.7);
  CHECK(mu_h(cc, hp, hospital(5), {}) == -1.7);
  CHECK(mu_h(cc, hp, hospital(5000), {}) == -1.7);

  ModelSpec lc = ModelSpec::preset("LC");
  hp.mean_coef = Eigen::Vector2d(0.0, -0.106);
  CHECK(mu_h(lc, hp, hospital(99), {}) == doctest::Approx(-0.106 * std::log(100.0)).epsilon(1e-15));

  ModelSpec slil = ModelSpec::preset("SLIL");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(21);
  b(3) = 1.0;
  hp.mean_coef = Eigen::VectorXd::Zero(24);
  hp.mean_coef(21) = 1.0;
  CHECK(mu_h(slil, hp, hospital(40, 0.5), b) == 0.5);
}

TEST_CASE("sigma2_h") {
  HyperParams hp;
  ModelSpec sl = ModelSpec::preset("SL");
  hp.sigma2_alpha = 0.04;
  hp.delta = 0.0;
  CHECK(sigma2_h(sl, hp, 1000) == 0.04);
  hp.delta = -0.00112;
  CHECK(sigma2_h(sl, hp, 1000) == doctest::Approx(0.04 * std::exp(-1.12)).epsilon(1e-15));
  hp.delta = -0.001;
  CHECK(sigma2_h(sl, hp, 0) == 0.04);
  CHECK(sigma2_h(ModelSpec::preset("CC"), hp, 1000) == 0.04);
  hp.delta = 0.01;
  CHECK(sigma2_h(sl, hp, 1e4) > 0.0);
}

TEST_CASE("nesting of the mean families") {
  const HospitalRecord h = hospital(57);
  HyperParams cc_hp, lc_hp;
  cc_hp.mean_coef = Eigen::VectorXd::Constant(1, -1.3);
  lc_hp.mean_coef = Eigen::Vector2d(-1.3, 0.0);
  CHECK(mu_h(ModelSpec::preset("LC"), lc_hp, h, {}) == mu_h(ModelSpec::preset("CC"), cc_hp, h, {}));

  // A spline with coefficients in the penalty null space is linear in the
  // knot index; with a constant sequence it is constant.
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(60, 0.0, 6.0);
  const auto [basis, B] = build_basis(v, 3, 5);
  HyperParams sl_hp;
  sl_hp.mean_coef = Eigen::VectorXd::Constant(B.cols(), -1.3);
  const ModelSpec sl = ModelSpec::preset("SL");
  for (Eigen::Index i = 0; i < B.rows(); ++i) {
    CHECK(mu_h(sl, sl_hp, h, B.row(i).transpose()) == doctest::Approx(-1.3).epsilon(1e-12));
  }

  // SLIL with gamma_L = 0 reduces to SL.
  ModelSpec slil = ModelSpec::preset("SLIL");
  HyperParams slil_hp;
  slil_hp.mean_coef = Eigen::VectorXd::Zero(B.cols() + 3);
  slil_hp.mean_coef.head(B.cols()) = Eigen::VectorXd::LinSpaced(B.cols(), -2, 0);
  sl_hp.mean_coef = slil_hp.mean_coef.head(B.cols());
  for (Eigen::Index i = 0; i < B.rows(); i += 5) {
    const Eigen::VectorXd row = B.row(i).transpose();
    CHECK(mu_h(slil, slil_hp, h, row) == doctest::Approx(mu_h(sl, sl_hp, h, row)).epsilon(1e-14));
  }
}

TEST_CASE("json round trip, hash and validation") {
  const auto spec = ModelSpec::from_json(nlohmann::json::parse(R"({
    "mean": {"family": "spline_linear", "attributes": ["ntbr", "beds"]},
    "variance": "loglinear_volume", "interaction": true,
    "spline": {"degree": 2, "knots": 9},
    "priors": {"g_S": [2, 0.5]}
  })"));
  CHECK(spec.mean == MeanFamily::SplineLinear);
  CHECK(spec.linear_attributes == std::vector<std::string>{"ntbr", "beds"});
  CHECK(spec.spline.knots == 9);
  CHECK(spec.priors.g_spline.shape == 2.0);
  const auto again = ModelSpec::from_json(spec.to_json());
  CHECK(again.hash() == spec.hash());
  CHECK(ModelSpec::from_json(nlohmann::json::parse(R"({"preset": "SLIL"})")).hash() ==
        ModelSpec::preset("SLIL").hash());
  CHECK(ModelSpec::preset("CC").hash() != ModelSpec::preset("LC").hash());
  CHECK_THROWS_AS(spec.validate({"ntbr"}), InputError);
  CHECK_NOTHROW(spec.validate({"ntbr", "beds"}));
  CHECK_THROWS_AS(ModelSpec::from_json(nlohmann::json::parse(R"({"mean": "cubic"})")), InputError);
  CHECK_THROWS_AS(ModelSpec::from_json(nlohmann::json::parse(R"({"priors": {"g": [0, 1]}})")), InputError);
}
