#include "hospmort/design.hpp"

#include <cmath>

#include "hospmort/error.hpp"

namespace hospmort {

using nlohmann::json;

namespace {

constexpr const char* kInteractionName = "age_x_logvol";

bool is_binary(const Eigen::VectorXd& col) {
  return (col.array() == 0.0 || col.array() == 1.0).all();
}

// Mean and sample standard deviation; binary columns are left alone.
ColumnScaling fit_scaling(const Eigen::VectorXd& col, const std::string& name, bool force) {
  const auto n = static_cast<double>(col.size());
  const double mean = col.mean();
  const double var = n > 1 ? (col.array() - mean).square().sum() / (n - 1.0) : 0.0;
  if (!(var > 0.0)) throw InputError("zero-variance column '" + name + "' cannot be standardized");
  ColumnScaling s;
  if (!force && is_binary(col)) return s;
  s.center = mean;
  s.scale = std::sqrt(var);
  s.standardized = true;
  return s;
}

json scaling_json(const ColumnScaling& s) {
  return json{{"center", s.center}, {"scale", s.scale}, {"standardized", s.standardized}};
}

ColumnScaling scaling_from_json(const json& j) {
  ColumnScaling s;
  s.center = j.at("center").get<double>();
  s.scale = j.at("scale").get<double>();
  s.standardized = j.at("standardized").get<bool>();
  return s;
}

Eigen::MatrixXd raw_covariates(const Dataset& data, bool interaction) {
  const auto n = static_cast<Eigen::Index>(data.num_patients());
  const auto d = static_cast<Eigen::Index>(data.num_covariates());
  Eigen::MatrixXd raw(n, d + (interaction ? 1 : 0));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = data.patients()[i];
    for (Eigen::Index j = 0; j < d; ++j) raw(i, j) = p.covariates[j];
    if (interaction) {
      if (!(p.age > 0.0)) {
        throw InputError("patient " + p.patient_id + " needs age > 0 for the interaction");
      }
      const auto& h = data.hospitals()[data.hospital_of(i)];
      raw(i, d) = p.age * log_volume(h.volume);
    }
  }
  return raw;
}

Eigen::VectorXd hospital_log_volume(const Dataset& data) {
  Eigen::VectorXd v(data.num_hospitals());
  for (std::size_t h = 0; h < data.num_hospitals(); ++h) v(h) = log_volume(data.hospitals()[h].volume);
  return v;
}

}  // namespace

json DesignTransform::to_json() const {
  json cols = json::array();
  for (std::size_t j = 0; j < columns.size(); ++j) {
    json c = scaling_json(columns[j]);
    c["name"] = column_names[j];
    cols.push_back(c);
  }
  json attrs = json::array();
  for (std::size_t j = 0; j < attributes.size(); ++j) {
    json a = scaling_json(attributes[j]);
    a["name"] = attribute_names[j];
    attrs.push_back(a);
  }
  json doc{{"columns", cols}, {"interaction", interaction}, {"attributes", attrs},
           {"penalty_ridge", penalty_ridge}};
  if (basis) {
    doc["basis"] = {{"degree", basis->degree},
                    {"lower", basis->lower},
                    {"upper", basis->upper},
                    {"interior_knots", basis->interior_knots}};
  }
  return doc;
}

DesignTransform DesignTransform::from_json(const json& doc) {
  DesignTransform t;
  for (const auto& c : doc.at("columns")) {
    t.column_names.push_back(c.at("name").get<std::string>());
    t.columns.push_back(scaling_from_json(c));
  }
  t.interaction = doc.at("interaction").get<bool>();
  for (const auto& a : doc.at("attributes")) {
    t.attribute_names.push_back(a.at("name").get<std::string>());
    t.attributes.push_back(scaling_from_json(a));
  }
  t.penalty_ridge = doc.value("penalty_ridge", 0.0);
  if (doc.contains("basis")) {
    SplineBasis b;
    const auto& jb = doc.at("basis");
    b.degree = jb.at("degree").get<int>();
    b.lower = jb.at("lower").get<double>();
    b.upper = jb.at("upper").get<double>();
    b.interior_knots = jb.at("interior_knots").get<std::vector<double>>();
    t.basis = std::move(b);
  }
  return t;
}

DesignTransform fit_design_transform(const Dataset& data, const ModelSpec& spec) {
  spec.validate(data.attribute_names());
  if (data.num_patients() < 2) throw InputError("design needs at least two patients");

  DesignTransform t;
  t.interaction = spec.interaction;
  t.column_names = data.covariate_names();
  if (spec.interaction) t.column_names.emplace_back(kInteractionName);

  const Eigen::MatrixXd raw = raw_covariates(data, spec.interaction);
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const bool is_interaction = spec.interaction && j + 1 == raw.cols();
    t.columns.push_back(fit_scaling(raw.col(j), t.column_names[j], is_interaction));
  }

  if (spec.mean == MeanFamily::SplineLinear) {
    const auto hcount = static_cast<Eigen::Index>(data.num_hospitals());
    for (const auto& name : spec.linear_attributes) {
      Eigen::VectorXd col(hcount);
      for (Eigen::Index h = 0; h < hcount; ++h) {
        col(h) = data.hospitals()[h].attribute(name);
        if (std::isnan(col(h))) {
          throw InputError("missing attribute '" + name + "' for hospital " +
                           data.hospitals()[h].hospital_id);
        }
      }
      t.attribute_names.push_back(name);
      t.attributes.push_back(fit_scaling(col, name, false));
    }
  }

  if (spec.has_spline()) {
    auto [basis, unused] = build_basis(hospital_log_volume(data), spec.spline.degree, spec.spline.knots);
    (void)unused;
    const Eigen::Index k = basis.dimension();
    t.penalty_ridge =
        spec.spline.ridge_scale * build_penalty(k, 0.0).matrix.trace() / static_cast<double>(k);
    t.basis = std::move(basis);
  }
  return t;
}

DesignBundle build_design(const Dataset& data, const ModelSpec& spec) {
  return build_design(data, spec, fit_design_transform(data, spec));
}

DesignBundle build_design(const Dataset& data, const ModelSpec& spec,
                          const DesignTransform& transform) {
  spec.validate(data.attribute_names());
  if (transform.column_names.size() !=
      data.num_covariates() + (transform.interaction ? 1u : 0u)) {
    throw InputError("design transform does not match the dataset's covariates");
  }
  DesignBundle d;
  d.transform = transform;

  Eigen::MatrixXd raw = raw_covariates(data, transform.interaction);
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const auto& s = transform.columns[j];
    if (s.standardized) raw.col(j) = (raw.col(j).array() - s.center) / s.scale;
  }
  d.X = std::move(raw);

  const auto n = static_cast<Eigen::Index>(data.num_patients());
  d.y.resize(n);
  d.age.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.y(i) = data.patients()[i].outcome;
    d.age(i) = data.patients()[i].age;
  }
  d.hospital = data.patient_hospitals();
  d.members = data.members();

  const auto hcount = static_cast<Eigen::Index>(data.num_hospitals());
  d.group_size.resize(hcount);
  d.volume.resize(hcount);
  for (Eigen::Index h = 0; h < hcount; ++h) {
    d.group_size(h) = data.group_sizes()[h];
    d.volume(h) = static_cast<double>(data.hospitals()[h].volume);
  }
  d.log_volume = hospital_log_volume(data);

  if (spec.has_spline()) {
    if (!transform.basis) throw InputError("design transform lacks the spline basis");
    d.basis = transform.basis->evaluate(d.log_volume);
  }

  Eigen::Index q = 0;
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(hcount);
  for (Eigen::Index h = 0; h < hcount; ++h) {
    const Eigen::VectorXd b = d.basis.size() ? Eigen::VectorXd(d.basis.row(h).transpose())
                                             : Eigen::VectorXd();
    rows.push_back(mean_covariates(spec, data.hospitals()[h], b, transform.attributes));
    q = rows.back().size();
  }
  d.mean_design.resize(hcount, q);
  for (Eigen::Index h = 0; h < hcount; ++h) d.mean_design.row(h) = rows[h].transpose();
  return d;
}

Eigen::MatrixXd unstandardize(const Eigen::MatrixXd& X, const DesignTransform& transform) {
  Eigen::MatrixXd raw = X;
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const auto& s = transform.columns[j];
    if (s.standardized) raw.col(j) = raw.col(j).array() * s.scale + s.center;
  }
  return raw;
}

}  // namespace hospmort
