#include "kgc/gc_engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "kgc/errors.hpp"
#include "kgc/matio.hpp"
#include "kgc/parallel.hpp"

namespace kgc::gc {

RegressionFit fit_least_squares(const Eigen::MatrixXd& Q, const Eigen::VectorXd& y, double ridge) {
  const Eigen::Index N = Q.rows();
  const Eigen::Index D = Q.cols();
  if (N < 1 || D < 1) throw ValidationError("fit_least_squares needs N >= 1 and D >= 1");
  if (y.size() != N) throw ValidationError("y length does not match Q rows");
  if (ridge < 0.0) throw ValidationError("ridge must be non-negative");

  RegressionFit fit;
  fit.n_obs = N;
  fit.ridge = ridge;

  if (ridge == 0.0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Q);
    fit.weights = cod.solve(y);
    fit.rank_deficient = cod.rank() < D;
  } else {
    // Augmented rows sqrt(ridge)*e_k for k >= 1; column 0 is the constant
    // term of every feature map and stays unpenalized.
    const double s = std::sqrt(ridge);
    Eigen::MatrixXd A(N + D - 1, D);
    A.topRows(N) = Q;
    A.bottomRows(D - 1).setZero();
    for (Eigen::Index k = 1; k < D; ++k) A(N + k - 1, k) = s;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(N + D - 1);
    b.head(N) = y;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    fit.weights = cod.solve(b);
    fit.rank_deficient = cod.rank() < D;
  }

  const Eigen::VectorXd resid = y - Q * fit.weights;
  fit.residual_variance = resid.squaredNorm() / static_cast<double>(N);
  return fit;
}

namespace {

double fit_variance(const tsio::TimeSeriesMatrix& ts, int target, const std::vector<int>& sources,
                    int p, const featmap::FeatureMapSpec& spec, double ridge, int first_row = -1) {
  const auto design = tsio::build_lagged_design(ts, target, sources, p, first_row);
  const Eigen::MatrixXd Q = featmap::expand_rows(spec, design.X);
  return fit_least_squares(Q, design.y, ridge).residual_variance;
}

}  // namespace

double gci_pair(const tsio::TimeSeriesMatrix& ts, int target, int source, int p,
                const featmap::FeatureMapSpec& spec, double ridge) {
  if (target == source) throw ValidationError("gci_pair needs target != source");
  const double restricted = fit_variance(ts, target, {target}, p, spec, ridge);
  const double augmented = fit_variance(ts, target, {target, source}, p, spec, ridge);
  const double num = std::max(restricted, kVarianceFloor);
  const double den = std::max(augmented, kVarianceFloor);
  return std::max(0.0, std::log(num / den));
}

GCMatrix gc_matrix(const tsio::TimeSeriesMatrix& ts, int p, const featmap::FeatureMapSpec& spec,
                   double ridge, int jobs) {
  const auto d = static_cast<int>(ts.n_channels());
  if (d < 2) throw ValidationError("gc_matrix needs at least 2 channels");

  GCMatrix m;
  m.lag = p;
  m.spec = spec;
  m.channel_names = ts.channel_names;
  m.values = Eigen::MatrixXd::Zero(d, d);

  // The restricted variance depends on the target only; compute each once.
  std::vector<double> restricted(static_cast<std::size_t>(d));
  parallel_for(static_cast<std::size_t>(d), jobs, [&](std::size_t i) {
    const int target = static_cast<int>(i);
    try {
      restricted[i] = fit_variance(ts, target, {target}, p, spec, ridge);
    } catch (const std::exception& ex) {
      throw std::runtime_error("target channel " + std::to_string(target) + ": " + ex.what());
    }
  });

  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(d) * (d - 1));
  for (int source = 0; source < d; ++source)
    for (int target = 0; target < d; ++target)
      if (source != target) pairs.emplace_back(source, target);

  parallel_for(pairs.size(), jobs, [&](std::size_t idx) {
    const auto [source, target] = pairs[idx];
    try {
      const double augmented = fit_variance(ts, target, {target, source}, p, spec, ridge);
      const double num = std::max(restricted[static_cast<std::size_t>(target)], kVarianceFloor);
      const double den = std::max(augmented, kVarianceFloor);
      m.values(source, target) = std::max(0.0, std::log(num / den));
    } catch (const std::exception& ex) {
      throw std::runtime_error("pair " + std::to_string(source) + "->" + std::to_string(target) +
                               ": " + ex.what());
    }
  });
  return m;
}

int select_lag_bic(const tsio::TimeSeriesMatrix& ts, int target, int p_max,
                   const featmap::FeatureMapSpec& spec) {
  const Eigen::Index T = ts.n_samples();
  if (p_max < 1 || 2 * static_cast<Eigen::Index>(p_max) >= T) {
    throw ValidationError("select_lag_bic needs 1 <= p_max < T/2");
  }
  const double n = static_cast<double>(T - p_max);
  int best_p = 1;
  double best_bic = 0.0;
  bool all_floored = true;
  for (int p = 1; p <= p_max; ++p) {
    const double var = fit_variance(ts, target, {target}, p, spec, 0.0, p_max);
    if (var > kVarianceFloor) all_floored = false;
    const double k = static_cast<double>(featmap::expanded_dim(spec, p));
    const double bic = n * std::log(std::max(var, kVarianceFloor)) + k * std::log(n);
    if (p == 1 || bic < best_bic) {
      best_bic = bic;
      best_p = p;
    }
  }
  return all_floored ? 1 : best_p;
}

LagSelection select_lag_bic_all(const tsio::TimeSeriesMatrix& ts, int p_max,
                                const featmap::FeatureMapSpec& spec) {
  LagSelection sel;
  const auto d = static_cast<int>(ts.n_channels());
  sel.per_target.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) sel.per_target[static_cast<std::size_t>(i)] = select_lag_bic(ts, i, p_max, spec);
  std::map<int, int> counts;
  for (int p : sel.per_target) counts[p]++;
  int best_count = 0;
  sel.global = 1;
  for (const auto& [p, c] : counts) {
    if (c > best_count) {  // map iterates ascending, so ties keep the smaller p
      best_count = c;
      sel.global = p;
    }
  }
  return sel;
}

double accumulated_gci(const GCMatrix& m) { return m.values.sum(); }

void write_csv(const GCMatrix& m, const std::string& path) {
  matio::write_matrix_csv(m.values, path);
}

void write_json(const GCMatrix& m, const std::string& path) {
  nlohmann::json doc;
  doc["channels"] = m.channel_names;
  doc["lag"] = m.lag;
  doc["spec"] = m.spec.to_string();
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.values.rows()));
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    rows[static_cast<std::size_t>(i)].assign(m.values.row(i).begin(), m.values.row(i).end());
  }
  doc["values"] = rows;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << doc.dump(2) << '\n';
}

GCMatrix read_matrix_file(const std::string& path) {
  GCMatrix m;
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open: " + path);
    nlohmann::json doc = nlohmann::json::parse(in);
    const auto& rows = doc.at("values");
    const auto n = static_cast<Eigen::Index>(rows.size());
    if (n == 0) throw ValidationError("empty values in " + path);
    m.values.resize(n, static_cast<Eigen::Index>(rows[0].size()));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m.values.cols(); ++j)
        m.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
    if (doc.contains("lag")) m.lag = doc["lag"].get<int>();
    if (doc.contains("spec")) m.spec = featmap::FeatureMapSpec::parse(doc["spec"].get<std::string>());
    if (doc.contains("channels")) m.channel_names = doc["channels"].get<std::vector<std::string>>();
  } else {
    m.values = matio::read_matrix_csv(path);
  }
  if (m.values.rows() != m.values.cols()) {
    throw ValidationError("GC matrix in " + path + " is not square");
  }
  return m;
}

}  // namespace kgc::gc
