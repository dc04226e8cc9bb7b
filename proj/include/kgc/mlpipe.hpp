#ifndef KGC_MLPIPE_HPP
#define KGC_MLPIPE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "kgc/featmap.hpp"

namespace kgc::mlpipe {

/// Linear decision function over raw (unstandardized) features. Training
/// standardizes internally on the training rows only and folds the transform
/// back into weights/bias.
struct LinearModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double C = 1.0;

  double decision(const Eigen::VectorXd& x) const { return weights.dot(x) + bias; }
  int predict(const Eigen::VectorXd& x) const { return decision(x) >= 0.0 ? 1 : 0; }
};

/// L2-regularized hinge loss, (1/2)|w|^2 + C * sum hinge, minimized by
/// epoch-based subgradient descent with step 1/(lambda*t), lambda = 1/(C*N),
/// returning the averaged iterate. Deterministic given the seed.
LinearModel train_linear_svm(const Eigen::MatrixXd& X, const std::vector<int>& y,
                             double C, int epochs, std::uint64_t seed);

struct EvalReport {
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::vector<double> per_repeat;
  int folds = 0;
  int repeats = 0;
  std::uint64_t seed = 0;
};

struct CVOptions {
  int folds = 10;
  int repeats = 100;
  double C = 1.0;
  int epochs = 200;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Repeated stratified k-fold cross validation; each repeat reshuffles with a
/// derived seed and reports whole-pass test accuracy. mean/std are over
/// repeats (sample standard deviation).
EvalReport cross_validate(const Eigen::MatrixXd& X, const std::vector<int>& y,
                          const CVOptions& opts);

/// Deterministic stratified fold assignment (per-class round robin after a
/// seeded shuffle); every fold's class ratio is within one subject of global.
std::vector<int> stratified_folds(const std::vector<int>& y, int k, std::uint64_t seed);

using DataBuilder =
    std::function<std::pair<Eigen::MatrixXd, std::vector<int>>(const featmap::FeatureMapSpec&)>;

struct GridPoint {
  featmap::FeatureMapSpec spec;
  EvalReport report;
};

struct GridResult {
  featmap::FeatureMapSpec best;
  EvalReport best_report;
  std::vector<GridPoint> all;
};

/// Evaluates every candidate spec through builder + cross_validate and takes
/// the best mean accuracy; ties break toward smaller r, then smaller sigma,
/// then smaller eta. Candidates may be evaluated concurrently.
GridResult grid_search(const std::vector<featmap::FeatureMapSpec>& candidates,
                       const DataBuilder& builder, const CVOptions& cv, int jobs = 1);

struct AblationStep {
  double removed_fraction = 0.0;  // of the designated set, in [0, 1]
  long removed_count = 0;
  double masked_accuracy = 0.0;
  double random_accuracy = 0.0;
};

struct AblationOptions {
  double step_fraction = 0.1;
  int random_draws = 10;
  CVOptions cv;
};

/// Removes the designated columns in ranked order, a step_fraction tranche
/// per step, re-evaluating accuracy after each step; the baseline removes
/// equally many uniformly random columns, averaged over random_draws draws.
/// The curve starts at 0% and ends when the set is exhausted.
std::vector<AblationStep> ablation(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                   const std::vector<long>& removal_ranked,
                                   const AblationOptions& opts);

std::string eval_report_to_json(const EvalReport& report);

}  // namespace kgc::mlpipe

#endif  // KGC_MLPIPE_HPP
