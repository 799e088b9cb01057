#include "hospmort/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hospmort/error.hpp"
#include "hospmort/hash.hpp"

namespace hospmort {

using nlohmann::json;

namespace {

const char* mean_name(MeanFamily m) {
  switch (m) {
    case MeanFamily::Constant: return "constant";
    case MeanFamily::LinearAttr: return "linear";
    case MeanFamily::SplineVolume: return "spline";
    case MeanFamily::SplineLinear: return "spline_linear";
  }
  return "?";
}

MeanFamily parse_mean(const std::string& s) {
  if (s == "constant") return MeanFamily::Constant;
  if (s == "linear") return MeanFamily::LinearAttr;
  if (s == "spline") return MeanFamily::SplineVolume;
  if (s == "spline_linear") return MeanFamily::SplineLinear;
  throw InputError("unknown mean family '" + s + "'");
}

const char* variance_name(VarianceFamily v) {
  return v == VarianceFamily::Constant ? "constant" : "loglinear_volume";
}

VarianceFamily parse_variance(const std::string& s) {
  if (s == "constant") return VarianceFamily::Constant;
  if (s == "loglinear_volume") return VarianceFamily::LogLinearVolume;
  throw InputError("unknown variance family '" + s + "'");
}

json prior_json(const InverseGammaPrior& p) { return json::array({p.shape, p.scale}); }

void read_prior(const json& doc, const char* key, InverseGammaPrior& p) {
  if (!doc.contains(key)) return;
  const auto& v = doc.at(key);
  if (!v.is_array() || v.size() != 2) {
    throw InputError(std::string("prior '") + key + "' must be [shape, scale]");
  }
  p.shape = v[0].get<double>();
  p.scale = v[1].get<double>();
  if (!(p.shape > 0.0) || !(p.scale > 0.0)) {
    throw InputError(std::string("prior '") + key + "' needs positive shape and scale");
  }
}

}  // namespace

ModelSpec ModelSpec::preset(std::string_view name) {
  ModelSpec spec;
  spec.name = std::string(name);
  if (name == "CC") return spec;
  if (name == "LC") {
    spec.mean = MeanFamily::LinearAttr;
    return spec;
  }
  if (name == "SL") {
    spec.mean = MeanFamily::SplineVolume;
    spec.variance = VarianceFamily::LogLinearVolume;
    return spec;
  }
  if (name == "SLIL") {
    spec.mean = MeanFamily::SplineLinear;
    spec.linear_attributes = {"ntbr", "rtbr", "pci"};
    spec.variance = VarianceFamily::LogLinearVolume;
    spec.interaction = true;
    return spec;
  }
  throw InputError("unknown model preset '" + std::string(name) + "'");
}

ModelSpec ModelSpec::from_json(const json& doc) {
  try {
    ModelSpec spec;
    if (doc.contains("preset")) {
      spec = preset(doc.at("preset").get<std::string>());
    } else {
      spec.name = doc.value("name", std::string("custom"));
    }
    if (doc.contains("mean")) {
      const auto& m = doc.at("mean");
      spec.mean = parse_mean(m.is_string() ? m.get<std::string>() : m.at("family").get<std::string>());
      if (m.is_object()) {
        spec.linear_attribute = m.value("attribute", std::string(kLogVolume));
        if (m.contains("attributes")) {
          spec.linear_attributes = m.at("attributes").get<std::vector<std::string>>();
        }
      }
      if (spec.mean == MeanFamily::SplineLinear && spec.linear_attributes.empty()) {
        spec.linear_attributes = {"ntbr", "rtbr", "pci"};
      }
    }
    if (doc.contains("variance")) {
      const auto& v = doc.at("variance");
      spec.variance =
          parse_variance(v.is_string() ? v.get<std::string>() : v.at("family").get<std::string>());
    }
    if (doc.contains("interaction")) spec.interaction = doc.at("interaction").get<bool>();
    if (doc.contains("spline")) {
      const auto& s = doc.at("spline");
      spec.spline.degree = s.value("degree", spec.spline.degree);
      spec.spline.knots = s.value("knots", spec.spline.knots);
      spec.spline.ridge_scale = s.value("ridge_scale", spec.spline.ridge_scale);
    }
    if (doc.contains("priors")) {
      const auto& p = doc.at("priors");
      read_prior(p, "sigma2_beta", spec.priors.sigma2_beta);
      read_prior(p, "g", spec.priors.g);
      read_prior(p, "sigma2_alpha", spec.priors.sigma2_alpha);
      read_prior(p, "g_S", spec.priors.g_spline);
      read_prior(p, "g_L", spec.priors.g_linear);
      read_prior(p, "g_delta", spec.priors.g_delta);
    }
    return spec;
  } catch (const json::exception& e) {
    throw InputError(std::string("model configuration: ") + e.what());
  }
}

json ModelSpec::to_json() const {
  json mean_doc = {{"family", mean_name(mean)}};
  if (mean == MeanFamily::LinearAttr) mean_doc["attribute"] = linear_attribute;
  if (mean == MeanFamily::SplineLinear) mean_doc["attributes"] = linear_attributes;
  return json{{"name", name},
              {"mean", mean_doc},
              {"variance", {{"family", variance_name(variance)}}},
              {"interaction", interaction},
              {"spline",
               {{"degree", spline.degree},
                {"knots", spline.knots},
                {"ridge_scale", spline.ridge_scale}}},
              {"priors",
               {{"sigma2_beta", prior_json(priors.sigma2_beta)},
                {"g", prior_json(priors.g)},
                {"sigma2_alpha", prior_json(priors.sigma2_alpha)},
                {"g_S", prior_json(priors.g_spline)},
                {"g_L", prior_json(priors.g_linear)},
                {"g_delta", prior_json(priors.g_delta)}}}};
}

void ModelSpec::validate(const std::vector<std::string>& attribute_names) const {
  auto known = [&](const std::string& a) {
    return std::find(attribute_names.begin(), attribute_names.end(), a) != attribute_names.end();
  };
  if (mean == MeanFamily::LinearAttr && linear_attribute != kLogVolume && !known(linear_attribute)) {
    throw InputError("missing attribute '" + linear_attribute + "' in hospital schema");
  }
  if (mean == MeanFamily::SplineLinear) {
    for (const auto& a : linear_attributes) {
      if (a == kLogVolume || a == "volume") {
        throw InputError("linear attributes must exclude the spline variable '" + a + "'");
      }
      if (!known(a)) throw InputError("missing attribute '" + a + "' in hospital schema");
    }
  }
  if (has_spline() && (spline.degree < 0 || spline.knots < 0)) {
    throw InputError("spline degree and knots must be nonnegative");
  }
}

std::uint64_t ModelSpec::hash() const {
  Fnv1a h;
  h.add(to_json().dump());
  return h.value();
}

ModelSpec load_model_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model configuration " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return ModelSpec::from_json(doc);
}

Eigen::VectorXd mean_covariates(const ModelSpec& spec, const HospitalRecord& hospital,
                                const Eigen::VectorXd& basis_row,
                                const std::vector<ColumnScaling>& attribute_scaling) {
  switch (spec.mean) {
    case MeanFamily::Constant:
      return Eigen::VectorXd::Ones(1);
    case MeanFamily::LinearAttr: {
      Eigen::VectorXd f(2);
      f(0) = 1.0;
      f(1) = spec.linear_attribute == kLogVolume ? log_volume(hospital.volume)
                                                 : hospital.attribute(spec.linear_attribute);
      if (std::isnan(f(1))) {
        throw InputError("missing attribute '" + spec.linear_attribute + "' for hospital " +
                         hospital.hospital_id);
      }
      return f;
    }
    case MeanFamily::SplineVolume:
      return basis_row;
    case MeanFamily::SplineLinear: {
      const Eigen::Index k = basis_row.size();
      const auto r = static_cast<Eigen::Index>(spec.linear_attributes.size());
      Eigen::VectorXd f(k + r);
      f.head(k) = basis_row;
      for (Eigen::Index j = 0; j < r; ++j) {
        const auto& name = spec.linear_attributes[j];
        const double raw = hospital.attribute(name);
        if (std::isnan(raw)) {
          throw InputError("missing attribute '" + name + "' for hospital " + hospital.hospital_id);
        }
        f(k + j) = j < static_cast<Eigen::Index>(attribute_scaling.size())
                       ? attribute_scaling[j].apply(raw)
                       : raw;
      }
      return f;
    }
  }
  return {};
}

double mu_h(const ModelSpec& spec, const HyperParams& hyper, const HospitalRecord& hospital,
            const Eigen::VectorXd& basis_row, const std::vector<ColumnScaling>& attribute_scaling) {
  return mean_covariates(spec, hospital, basis_row, attribute_scaling).dot(hyper.mean_coef);
}

double sigma2_h(const ModelSpec& spec, const HyperParams& hyper, double volume) {
  if (spec.variance == VarianceFamily::Constant) return hyper.sigma2_alpha;
  return std::exp(hyper.delta * volume) * hyper.sigma2_alpha;
}

std::vector<std::string> mean_coef_names(const ModelSpec& spec, Eigen::Index spline_dim) {
  std::vector<std::string> names;
  switch (spec.mean) {
    case MeanFamily::Constant:
      names = {"mu_alpha"};
      break;
    case MeanFamily::LinearAttr:
      names = {"gamma0", "gamma1"};
      break;
    case MeanFamily::SplineVolume:
    case MeanFamily::SplineLinear:
      for (Eigen::Index j = 0; j < spline_dim; ++j) names.push_back("gamma_S." + std::to_string(j + 1));
      if (spec.mean == MeanFamily::SplineLinear) {
        for (const auto& a : spec.linear_attributes) names.push_back("gamma_L." + a);
      }
      break;
  }
  return names;
}

}  // namespace hospmort
