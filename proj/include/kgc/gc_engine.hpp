#ifndef KGC_GC_ENGINE_HPP
#define KGC_GC_ENGINE_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "kgc/featmap.hpp"
#include "kgc/tsio.hpp"

namespace kgc::gc {

/// Residual variances below this floor are clamped before the log ratio, so
/// the causality index stays defined for deterministic-copy inputs.
inline constexpr double kVarianceFloor = 1e-12;

struct RegressionFit {
  Eigen::VectorXd weights;
  double residual_variance = 0.0;  // SSE / n_obs
  long n_obs = 0;
  double ridge = 0.0;
  bool rank_deficient = false;     // minimum-norm solution was taken
};

/// Least squares with optional ridge penalty on all columns except column 0,
/// which by convention holds the feature maps' constant term. Solved through
/// a complete orthogonal decomposition; rank-deficient systems with
/// ridge = 0 get the minimum-norm solution and are flagged.
RegressionFit fit_least_squares(const Eigen::MatrixXd& Q, const Eigen::VectorXd& y,
                                double ridge);

/// d x d matrix of causality indices; values(j, i) is F_{j->i}, the causality
/// of channel j onto channel i. Zero diagonal, non-negative entries.
struct GCMatrix {
  Eigen::MatrixXd values;
  int lag = 1;
  featmap::FeatureMapSpec spec;
  std::vector<std::string> channel_names;
};

/// F_{source->target} = max(0, ln(restricted variance / augmented variance)),
/// both variances floored at kVarianceFloor. The restricted model regresses
/// the target on its own lags; the augmented model adds the source's lags,
/// interleaved lag-major. Rows pass through the feature expansion before
/// fitting.
double gci_pair(const tsio::TimeSeriesMatrix& ts, int target, int source, int p,
                const featmap::FeatureMapSpec& spec, double ridge);

/// All ordered pairs. Pairs may be evaluated concurrently; each entry lands
/// in its fixed slot so the result is independent of scheduling.
GCMatrix gc_matrix(const tsio::TimeSeriesMatrix& ts, int p,
                   const featmap::FeatureMapSpec& spec, double ridge, int jobs = 1);

/// argmin over p in [1, p_max] of n*ln(sigma^2(p)) + k(p)*ln(n) computed on a
/// common estimation sample (the first p_max rows dropped for every
/// candidate), restricted model only. Ties break toward smaller p.
int select_lag_bic(const tsio::TimeSeriesMatrix& ts, int target, int p_max,
                   const featmap::FeatureMapSpec& spec);

/// Per-target BIC lags plus their mode (smallest mode on ties), the CLI's
/// global lag choice.
struct LagSelection {
  std::vector<int> per_target;
  int global = 1;
};
LagSelection select_lag_bic_all(const tsio::TimeSeriesMatrix& ts, int p_max,
                                const featmap::FeatureMapSpec& spec);

double accumulated_gci(const GCMatrix& m);

void write_csv(const GCMatrix& m, const std::string& path);
void write_json(const GCMatrix& m, const std::string& path);

/// Reads a GC matrix from CSV (values only) or the JSON document form.
GCMatrix read_matrix_file(const std::string& path);

}  // namespace kgc::gc

#endif  // KGC_GC_ENGINE_HPP
