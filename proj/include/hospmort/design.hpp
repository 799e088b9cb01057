#ifndef HOSPMORT_DESIGN_HPP
#define HOSPMORT_DESIGN_HPP

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hospmort/data.hpp"
#include "hospmort/model.hpp"
#include "hospmort/spline.hpp"

namespace hospmort {

// Everything needed to map raw records onto the fitted design: column
// standardization, the interaction column, hospital attribute scaling and
// the spline basis. Fitted once on training data and reused for
// validation data and counterfactual predictions.
struct DesignTransform {
  std::vector<std::string> column_names;
  std::vector<ColumnScaling> columns;
  bool interaction = false;
  std::vector<std::string> attribute_names;
  std::vector<ColumnScaling> attributes;
  std::optional<SplineBasis> basis;
  double penalty_ridge = 0.0;

  // Standardized age x log(vol + 1) for a patient of `age` at a hospital
  // of `volume`. Only meaningful when `interaction` is set.
  double interaction_value(double age, long volume) const {
    return columns.back().apply(age * log_volume(volume));
  }

  Eigen::Index num_columns() const { return static_cast<Eigen::Index>(columns.size()); }

  nlohmann::json to_json() const;
  static DesignTransform from_json(const nlohmann::json& doc);
};

// Model-ready arrays for one dataset.
struct DesignBundle {
  Eigen::MatrixXd X;                     // N x p, standardized
  Eigen::VectorXd y;                     // N
  Eigen::VectorXd age;                   // N, raw
  std::vector<int> hospital;             // patient -> hospital index
  std::vector<std::vector<int>> members; // hospital -> patient indices
  Eigen::VectorXi group_size;            // n_h
  Eigen::VectorXd volume;                // raw counts
  Eigen::VectorXd log_volume;            // log(vol + 1)
  Eigen::MatrixXd basis;                 // H x k; empty without a spline mean
  Eigen::MatrixXd mean_design;           // H x q rows multiplying mean_coef
  DesignTransform transform;

  Eigen::Index num_patients() const { return X.rows(); }
  Eigen::Index num_hospitals() const { return volume.size(); }
  Eigen::Index num_fixed() const { return X.cols(); }

  // x'beta for patient i treated at hospital `target`; the interaction
  // column is recomputed for the target's volume.
  double patient_effect(Eigen::Index i, Eigen::Index target, const Eigen::VectorXd& beta) const {
    double eta = X.row(i).dot(beta);
    if (transform.interaction && target != hospital[i]) {
      const Eigen::Index last = X.cols() - 1;
      const double moved =
          transform.interaction_value(age(i), static_cast<long>(volume(target)));
      eta += beta(last) * (moved - X(i, last));
    }
    return eta;
  }
};

// Fits the standardization (and spline basis) on `data`. Throws InputError
// for a zero-variance column or an unknown attribute.
DesignTransform fit_design_transform(const Dataset& data, const ModelSpec& spec);

DesignBundle build_design(const Dataset& data, const ModelSpec& spec);
DesignBundle build_design(const Dataset& data, const ModelSpec& spec,
                          const DesignTransform& transform);

// Raw covariate matrix recovered from a standardized one.
Eigen::MatrixXd unstandardize(const Eigen::MatrixXd& X, const DesignTransform& transform);

}  // namespace hospmort

#endif  // HOSPMORT_DESIGN_HPP
