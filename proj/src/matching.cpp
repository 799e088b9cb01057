#include "hospmort/matching.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>

#include "hospmort/design.hpp"
#include "hospmort/diagnostics.hpp"
#include "hospmort/error.hpp"
#include "hospmort/inference.hpp"

namespace hospmort {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sample_mean(const Eigen::VectorXd& x, const std::vector<int>& idx) {
  double s = 0.0;
  for (int i : idx) s += x(i);
  return s / static_cast<double>(idx.size());
}

double sample_var(const Eigen::VectorXd& x, const std::vector<int>& idx) {
  if (idx.size() < 2) return 0.0;
  const double m = sample_mean(x, idx);
  double s = 0.0;
  for (int i : idx) s += (x(i) - m) * (x(i) - m);
  return s / static_cast<double>(idx.size() - 1);
}

double penalized_loglik(const Eigen::MatrixXd& Z1, const Eigen::VectorXd& t, const Eigen::VectorXd& b,
                        double ridge) {
  const Eigen::VectorXd eta = Z1 * b;
  double l = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = eta(i);
    const double sp = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    l += t(i) * e - sp;
  }
  return l - 0.5 * ridge * b.tail(b.size() - 1).squaredNorm();
}

LogisticFit newton(const Eigen::MatrixXd& Z1, const Eigen::VectorXd& t, double ridge) {
  const Eigen::Index p = Z1.cols();
  LogisticFit fit;
  fit.coef = Eigen::VectorXd::Zero(p);
  const double tbar = std::clamp(t.mean(), 1e-6, 1.0 - 1e-6);
  fit.coef(0) = std::log(tbar / (1.0 - tbar));
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p, ridge);
  penalty(0) = 0.0;
  double current = penalized_loglik(Z1, t, fit.coef, ridge);
  for (fit.iterations = 0; fit.iterations < 100; ++fit.iterations) {
    const Eigen::VectorXd prob = (Z1 * fit.coef).unaryExpr([](double e) { return inv_logit(e); });
    const Eigen::VectorXd grad = Z1.transpose() * (t - prob) - penalty.cwiseProduct(fit.coef);
    if (grad.norm() < 1e-8) {
      fit.converged = true;
      break;
    }
    const Eigen::VectorXd w = prob.array() * (1.0 - prob.array());
    Eigen::MatrixXd info = Z1.transpose() * (Z1.array().colwise() * w.array()).matrix();
    info.diagonal() += penalty;
    const Eigen::VectorXd step = info.ldlt().solve(grad);
    double scale = 1.0;
    Eigen::VectorXd next = fit.coef + step;
    double value = penalized_loglik(Z1, t, next, ridge);
    while (!(value >= current) && scale > 1e-10) {
      scale *= 0.5;
      next = fit.coef + scale * step;
      value = penalized_loglik(Z1, t, next, ridge);
    }
    if (!(value >= current)) break;
    fit.coef = next;
    current = value;
  }
  return fit;
}

std::vector<int> patients_with_role(const Dataset& data, const std::vector<Role>& roles, Role role) {
  std::vector<int> out;
  for (std::size_t i = 0; i < data.num_patients(); ++i) {
    if (roles[data.hospital_of(i)] == role) out.push_back(static_cast<int>(i));
  }
  return out;
}

// Residual network for successive shortest paths.
struct FlowGraph {
  struct Edge {
    int to;
    int cap;
    double cost;
    int rev;
  };
  std::vector<std::vector<Edge>> adj;

  explicit FlowGraph(int n) : adj(n), pot(n, 0.0), dist(n, kInf), prev_node(n), prev_edge(n), done(n, 0) {}
  void add(int u, int v, int cap, double cost) {
    adj[u].push_back({v, cap, cost, static_cast<int>(adj[v].size())});
    adj[v].push_back({u, 0, -cost, static_cast<int>(adj[u].size()) - 1});
  }

  // One unit along a shortest residual path from `s` to `t` (Dijkstra on
  // reduced costs, stopped once t is settled). Potentials of settled nodes
  // move by their distance, the rest by dist(t), which keeps every
  // residual reduced cost non-negative for any later source. False when
  // t is unreachable.
  bool augment(int s, int t) {
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    std::vector<int> touched{s};
    dist[s] = 0.0;
    heap.push({0.0, s});
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (done[u]) continue;
      done[u] = 1;
      if (u == t) break;
      for (int e = 0; e < static_cast<int>(adj[u].size()); ++e) {
        const Edge& ed = adj[u][e];
        if (ed.cap <= 0 || done[ed.to]) continue;
        const double nd = d + std::max(0.0, ed.cost + pot[u] - pot[ed.to]);
        if (nd < dist[ed.to]) {
          if (dist[ed.to] == kInf) touched.push_back(ed.to);
          dist[ed.to] = nd;
          prev_node[ed.to] = u;
          prev_edge[ed.to] = e;
          heap.push({nd, ed.to});
        }
      }
    }
    const bool found = done[t];
    if (found) {
      // Only differences of potentials matter, so untouched nodes (which
      // move by dist(t)) stay put and settled ones move by dist - dist(t).
      const double dt = dist[t];
      for (int v : touched) {
        if (done[v]) pot[v] += dist[v] - dt;
      }
      for (int v = t; v != s; v = prev_node[v]) {
        Edge& ed = adj[prev_node[v]][prev_edge[v]];
        ed.cap -= 1;
        adj[v][ed.rev].cap += 1;
      }
    }
    for (int v : touched) {
      dist[v] = kInf;
      done[v] = 0;
    }
    return found;
  }

 private:
  std::vector<double> pot, dist;
  std::vector<int> prev_node, prev_edge;
  std::vector<char> done;
};

}  // namespace

void CohortDef::validate() const {
  if (k < 1) throw InputError("cohort: k must be >= 1");
  if (!(caliper_sd >= 0.0)) throw InputError("cohort: caliper_sd must be >= 0");
  if (quantile_volume_le.has_value() == !hospital_ids.empty()) {
    throw InputError("cohort: give exactly one of quantile_volume_le or hospital_ids");
  }
  for (auto q : {quantile_volume_le, control_quantile_volume_ge}) {
    if (q && !(*q >= 0.0 && *q <= 1.0)) throw InputError("cohort: quantiles must lie in [0, 1]");
  }
}

CohortDef CohortDef::from_json(const nlohmann::json& doc) {
  CohortDef c;
  try {
    if (doc.contains("quantile_volume_le")) c.quantile_volume_le = doc.at("quantile_volume_le").get<double>();
    if (doc.contains("hospital_ids")) c.hospital_ids = doc.at("hospital_ids").get<std::vector<std::string>>();
    if (doc.contains("control_quantile_volume_ge")) {
      c.control_quantile_volume_ge = doc.at("control_quantile_volume_ge").get<double>();
    }
    c.k = doc.value("k", c.k);
    c.caliper_sd = doc.value("caliper_sd", c.caliper_sd);
    if (doc.contains("exact_keys")) c.exact_keys = doc.at("exact_keys").get<std::vector<std::string>>();
    c.max_edges = doc.value("max_edges", c.max_edges);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("cohort definition: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json CohortDef::to_json() const {
  nlohmann::ordered_json doc;
  if (quantile_volume_le) doc["quantile_volume_le"] = *quantile_volume_le;
  if (!hospital_ids.empty()) doc["hospital_ids"] = hospital_ids;
  if (control_quantile_volume_ge) doc["control_quantile_volume_ge"] = *control_quantile_volume_ge;
  doc["k"] = k;
  doc["caliper_sd"] = caliper_sd;
  doc["exact_keys"] = exact_keys;
  doc["max_edges"] = max_edges;
  return doc;
}

CohortDef load_cohort(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open cohort file " + path.string());
  try {
    return CohortDef::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::vector<Role> hospital_roles(const Dataset& data, const CohortDef& cohort) {
  cohort.validate();
  std::vector<double> vols;
  for (const auto& h : data.hospitals()) vols.push_back(static_cast<double>(h.volume));
  std::vector<Role> roles(data.num_hospitals(), Role::Control);
  if (cohort.quantile_volume_le) {
    const double cut = quantile(vols, *cohort.quantile_volume_le);
    for (std::size_t h = 0; h < vols.size(); ++h) {
      if (vols[h] <= cut) roles[h] = Role::Treated;
    }
  } else {
    for (const auto& id : cohort.hospital_ids) {
      const auto h = data.find_hospital(id);
      if (!h) throw InputError("cohort: unknown hospital_id " + id);
      roles[*h] = Role::Treated;
    }
  }
  if (cohort.control_quantile_volume_ge) {
    const double cut = quantile(vols, *cohort.control_quantile_volume_ge);
    for (std::size_t h = 0; h < vols.size(); ++h) {
      if (roles[h] == Role::Control && vols[h] < cut) roles[h] = Role::Excluded;
    }
  }
  return roles;
}

LogisticFit fit_logistic(const Eigen::MatrixXd& Z, const Eigen::VectorXd& t, double ridge) {
  Eigen::MatrixXd Z1(Z.rows(), Z.cols() + 1);
  Z1.col(0).setOnes();
  Z1.rightCols(Z.cols()) = Z;
  LogisticFit fit = newton(Z1, t, ridge);
  const double max_eta = (Z1 * fit.coef).cwiseAbs().maxCoeff();
  if (ridge == 0.0 && (!fit.converged || max_eta > 30.0)) {
    fit = newton(Z1, t, 1e-4);
    fit.ridge_fallback = true;
  }
  return fit;
}

Eigen::MatrixXd propensity_features(const Dataset& data) {
  const auto n = static_cast<Eigen::Index>(data.num_patients());
  const auto d = static_cast<Eigen::Index>(data.num_covariates());
  Eigen::MatrixXd Z(n, d + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = data.patients()[i];
    Z(i, 0) = p.age;
    for (Eigen::Index j = 0; j < d; ++j) Z(i, j + 1) = p.covariates[j];
  }
  return Z;
}

PropensityModel fit_propensity(const Dataset& data, const CohortDef& cohort) {
  const auto roles = hospital_roles(data, cohort);
  const auto treated = patients_with_role(data, roles, Role::Treated);
  const auto controls = patients_with_role(data, roles, Role::Control);
  if (treated.empty() || controls.empty()) {
    throw InputError("propensity: treated and control groups must both have patients");
  }
  const Eigen::MatrixXd all = propensity_features(data);
  std::vector<int> rows = treated;
  rows.insert(rows.end(), controls.begin(), controls.end());
  Eigen::MatrixXd Z(rows.size(), all.cols());
  Eigen::VectorXd t(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Z.row(r) = all.row(rows[r]);
    t(r) = r < treated.size() ? 1.0 : 0.0;
  }
  PropensityModel model;
  model.fit = fit_logistic(Z, t);
  model.logit = Eigen::VectorXd::Constant(all.rows(), std::numeric_limits<double>::quiet_NaN());
  for (int i : rows) {
    model.logit(i) = model.fit.coef(0) + all.row(i).dot(model.fit.coef.tail(all.cols()));
  }
  return model;
}

Eigen::VectorXd risk_scores(const PosteriorSamples& fit, const Dataset& data) {
  if (fit.size() == 0) throw InputError("risk score needs posterior draws");
  const DesignBundle design = build_design(data, fit.spec, fit.transform);
  const Eigen::VectorXd beta = fit.beta.colwise().mean().transpose();
  const double mu = fit.spec.mean == MeanFamily::Constant ? fit.mean_coef.col(0).mean()
                                                          : fit.alpha.rowwise().mean().mean();
  return (design.X * beta).array() + mu;
}

Assignment min_cost_assignment(const EdgeList& edges, int n_controls, int k) {
  const int T = static_cast<int>(edges.size());
  std::vector<char> active(T, 1);
  for (;;) {
    // Nodes: treated 0..T-1, controls T..T+C-1, sink T+C.
    const int sink = T + n_controls;
    FlowGraph g(sink + 1);
    for (int t = 0; t < T; ++t) {
      if (!active[t]) continue;
      for (const auto& [c, cost] : edges[t]) g.add(t, T + c, 1, cost);
    }
    for (int c = 0; c < n_controls; ++c) g.add(T + c, sink, 1, 0.0);
    bool short_unit = false;
    for (int t = 0; t < T; ++t) {
      if (!active[t]) continue;
      for (int j = 0; j < k; ++j) {
        if (!g.augment(t, sink)) {
          active[t] = 0;
          short_unit = true;
          break;
        }
      }
    }
    if (short_unit) continue;

    Assignment a;
    a.controls.assign(T, {});
    for (int t = 0; t < T; ++t) {
      if (!active[t]) continue;
      for (const auto& e : g.adj[t]) {
        if (e.to >= T && e.to < sink && e.cap == 0) {
          a.controls[t].push_back(e.to - T);
          a.total_cost += e.cost;
        }
      }
      std::sort(a.controls[t].begin(), a.controls[t].end());
    }
    return a;
  }
}

Assignment greedy_assignment(const EdgeList& edges, int n_controls, int k) {
  Assignment a;
  a.controls.assign(edges.size(), {});
  std::vector<char> used(n_controls, 0);
  for (std::size_t t = 0; t < edges.size(); ++t) {
    auto sorted = edges[t];
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& x, const auto& y) { return x.second < y.second; });
    std::vector<std::pair<int, double>> pick;
    for (const auto& e : sorted) {
      if (static_cast<int>(pick.size()) == k) break;
      if (!used[e.first]) pick.push_back(e);
    }
    if (static_cast<int>(pick.size()) < k) continue;
    for (const auto& [c, cost] : pick) {
      used[c] = 1;
      a.controls[t].push_back(c);
      a.total_cost += cost;
    }
    std::sort(a.controls[t].begin(), a.controls[t].end());
  }
  return a;
}

std::vector<int> MatchedStudy::matched_treated() const {
  std::vector<int> out;
  for (const auto& s : sets) out.push_back(s.treated);
  return out;
}

std::vector<int> MatchedStudy::matched_controls() const {
  std::vector<int> out;
  for (const auto& s : sets) out.insert(out.end(), s.controls.begin(), s.controls.end());
  return out;
}

MatchedStudy match(const Dataset& data, const CohortDef& cohort, const Eigen::VectorXd& propensity,
                   const Eigen::VectorXd& risk) {
  const auto n = static_cast<Eigen::Index>(data.num_patients());
  if (propensity.size() != n || risk.size() != n) {
    throw InputError("match: propensity and risk scores must cover every patient");
  }
  const auto roles = hospital_roles(data, cohort);
  MatchedStudy study;
  study.treated = patients_with_role(data, roles, Role::Treated);
  study.controls = patients_with_role(data, roles, Role::Control);
  const int T = static_cast<int>(study.treated.size());
  const int C = static_cast<int>(study.controls.size());
  if (T == 0 || C == 0) throw InputError("match: treated and control groups must both have patients");

  study.k = std::min(cohort.k, C / T);
  if (study.k < cohort.k) {
    study.warnings.push_back("k reduced from " + std::to_string(cohort.k) + " to " +
                             std::to_string(study.k) + ": " + std::to_string(C) +
                             " controls for " + std::to_string(T) + " treated");
  }
  if (study.k == 0) throw InputError("match: fewer controls than treated patients");

  // Features: age, covariates, risk score.
  const Eigen::MatrixXd base = propensity_features(data);
  study.features.resize(n, base.cols() + 1);
  study.features.leftCols(base.cols()) = base;
  study.features.col(base.cols()) = risk;
  study.feature_names.push_back("age");
  for (const auto& c : data.covariate_names()) study.feature_names.push_back(c);
  study.feature_names.push_back("risk_score");
  study.outcome.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) study.outcome(i) = data.patients()[i].outcome;

  std::vector<int> pooled = study.treated;
  pooled.insert(pooled.end(), study.controls.begin(), study.controls.end());
  const Eigen::Index m = study.features.cols();
  Eigen::MatrixXd F(pooled.size(), m);
  for (std::size_t r = 0; r < pooled.size(); ++r) F.row(r) = study.features.row(pooled[r]);
  const Eigen::RowVectorXd center = F.colwise().mean();
  const Eigen::MatrixXd centered = F.rowwise() - center;
  Eigen::MatrixXd cov = centered.transpose() * centered / std::max<double>(1.0, F.rows() - 1.0);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const double reg = 1e-8 * cov.trace() / static_cast<double>(m);
  if (llt.info() != Eigen::Success || cov.diagonal().minCoeff() <= reg ||
      llt.matrixL().toDenseMatrix().diagonal().array().square().minCoeff() < reg) {
    cov.diagonal().array() += std::max(reg, 1e-300);
    llt.compute(cov);
  }
  if (llt.info() != Eigen::Success) throw NumericalError("match: covariance not positive definite");
  // Whitened features: distance is the Euclidean norm of the difference.
  const Eigen::MatrixXd W = llt.matrixL().solve(centered.transpose()).transpose();

  Eigen::VectorXd plogit(pooled.size());
  for (std::size_t r = 0; r < pooled.size(); ++r) plogit(r) = propensity(pooled[r]);
  if (!plogit.allFinite()) throw InputError("match: propensity missing for a cohort patient");
  const double sd = std::sqrt((plogit.array() - plogit.mean()).square().sum() /
                              std::max<double>(1.0, plogit.size() - 1.0));
  study.caliper = cohort.caliper_sd * sd;

  std::vector<Eigen::Index> exact_cols;
  for (const auto& key : cohort.exact_keys) {
    auto it = std::find(study.feature_names.begin(), study.feature_names.end(), key);
    if (it == study.feature_names.end() || key == "risk_score") {
      throw InputError("match: unknown exact key " + key);
    }
    exact_cols.push_back(it - study.feature_names.begin());
  }

  EdgeList edges(T);
  for (int t = 0; t < T; ++t) {
    const int ti = study.treated[t];
    for (int c = 0; c < C; ++c) {
      const int ci = study.controls[c];
      if (std::abs(plogit(t) - plogit(T + c)) > study.caliper) continue;
      bool same = true;
      for (auto col : exact_cols) same = same && study.features(ti, col) == study.features(ci, col);
      if (!same) continue;
      edges[t].push_back({c, (W.row(t) - W.row(T + c)).norm()});
    }
  }

  std::string counts;
  int feasible = 0;
  for (int t = 0; t < T; ++t) {
    const int adm = static_cast<int>(edges[t].size());
    if (adm < study.k) {
      study.dropped.push_back({study.treated[t], adm,
                               "only " + std::to_string(adm) + " admissible controls"});
      edges[t].clear();
    } else {
      ++feasible;
    }
    study.admissible_edges += edges[t].size();
    if (t < 50) counts += (t ? " " : "") + data.patients()[study.treated[t]].patient_id + ":" + std::to_string(adm);
  }
  if (feasible == 0) {
    throw InputError("infeasible matching (caliper too tight); admissible controls per treated: " +
                     counts + (T > 50 ? " ..." : ""));
  }

  study.greedy = study.admissible_edges > cohort.max_edges;
  if (study.greedy) {
    study.warnings.push_back("greedy nearest-neighbour matching: " +
                             std::to_string(study.admissible_edges) + " admissible edges exceed " +
                             std::to_string(cohort.max_edges));
  }
  const Assignment a = study.greedy ? greedy_assignment(edges, C, study.k)
                                    : min_cost_assignment(edges, C, study.k);
  study.total_distance = a.total_cost;
  for (int t = 0; t < T; ++t) {
    if (edges[t].empty()) continue;
    if (a.controls[t].empty()) {
      study.dropped.push_back({study.treated[t], static_cast<int>(edges[t].size()),
                               "controls exhausted by other treated units"});
      continue;
    }
    MatchedSet set;
    set.treated = study.treated[t];
    for (int c : a.controls[t]) set.controls.push_back(study.controls[c]);
    study.sets.push_back(std::move(set));
  }
  if (study.sets.empty()) throw InputError("match: no treated patient could be matched");
  return study;
}

double standardized_difference(double mean_t, double mean_c, double var_t, double var_c) {
  return (mean_t - mean_c) / std::sqrt((var_t + var_c) / 2.0);
}

std::vector<BalanceRow> balance_table(const MatchedStudy& study) {
  const auto mt = study.matched_treated();
  const auto mc = study.matched_controls();
  std::vector<BalanceRow> table;
  for (Eigen::Index j = 0; j < study.features.cols(); ++j) {
    const Eigen::VectorXd x = study.features.col(j);
    BalanceRow r;
    r.name = study.feature_names[j];
    r.treated_mean = sample_mean(x, study.treated);
    r.control_mean = sample_mean(x, study.controls);
    r.matched_treated_mean = sample_mean(x, mt);
    r.matched_control_mean = sample_mean(x, mc);
    r.pooled_sd = std::sqrt((sample_var(x, study.treated) + sample_var(x, study.controls)) / 2.0);
    r.degenerate = !(r.pooled_sd > 0.0);
    if (!r.degenerate) {
      r.std_diff_before = (r.treated_mean - r.control_mean) / r.pooled_sd;
      r.std_diff_after = (r.matched_treated_mean - r.matched_control_mean) / r.pooled_sd;
    }
    table.push_back(r);
  }
  return table;
}

double mean_abs_std_diff(const std::vector<BalanceRow>& table, bool after) {
  double s = 0.0;
  int n = 0;
  for (const auto& r : table) {
    if (r.degenerate) continue;
    s += std::abs(after ? r.std_diff_after : r.std_diff_before);
    ++n;
  }
  return n ? s / n : 0.0;
}

Eigen::VectorXd predicted_patient_rates(const PosteriorSamples& fit, const Dataset& data,
                                        std::uint64_t seed) {
  const DesignBundle design = build_design(data, fit.spec, fit.transform);
  const Eigen::MatrixXd alpha = align_alpha(fit, data, seed);
  const Eigen::MatrixXd xb = design.X * fit.beta.transpose();  // N x S
  Eigen::VectorXd out(design.num_patients());
  for (Eigen::Index i = 0; i < design.num_patients(); ++i) {
    const int h = design.hospital[i];
    double s = 0.0;
    for (Eigen::Index d = 0; d < fit.size(); ++d) s += inv_logit(alpha(d, h) + xb(i, d));
    out(i) = s / static_cast<double>(fit.size());
  }
  return out;
}

std::vector<AggregationRow> aggregation_check(
    const MatchedStudy& study, const Dataset& data,
    const std::vector<std::pair<std::string, const PosteriorSamples*>>& fits, std::uint64_t seed) {
  const auto mt = study.matched_treated();
  const auto mc = study.matched_controls();
  auto row = [&](const std::string& name, const Eigen::VectorXd& v) {
    return AggregationRow{name, sample_mean(v, mt), sample_mean(v, mc), sample_mean(v, study.controls)};
  };
  std::vector<AggregationRow> table{row("observed", study.outcome)};
  for (const auto& [name, fit] : fits) table.push_back(row(name, predicted_patient_rates(*fit, data, seed)));
  return table;
}

void write_balance_csv(const std::vector<BalanceRow>& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "covariate,treated_mean,matched_treated_mean,matched_control_mean,control_mean,pooled_sd,"
         "std_diff_before,std_diff_after,degenerate\n";
  for (const auto& r : table) {
    out << r.name << ',' << format_real(r.treated_mean) << ',' << format_real(r.matched_treated_mean)
        << ',' << format_real(r.matched_control_mean) << ',' << format_real(r.control_mean) << ','
        << format_real(r.pooled_sd) << ',' << format_real(r.std_diff_before) << ','
        << format_real(r.std_diff_after) << ',' << (r.degenerate ? 1 : 0) << '\n';
  }
}

void write_aggregation_csv(const std::vector<AggregationRow>& table,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "row,treated,matched_controls,all_controls\n";
  for (const auto& r : table) {
    out << r.name << ',' << format_real(r.treated) << ',' << format_real(r.matched_controls) << ','
        << format_real(r.all_controls) << '\n';
  }
}

}  // namespace hospmort
