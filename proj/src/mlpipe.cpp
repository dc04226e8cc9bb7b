#include "kgc/mlpipe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "kgc/errors.hpp"
#include "kgc/parallel.hpp"
#include "kgc/rng.hpp"

namespace kgc::mlpipe {

namespace {

void check_labels(const Eigen::MatrixXd& X, const std::vector<int>& y) {
  if (static_cast<Eigen::Index>(y.size()) != X.rows()) {
    throw ValidationError("label count does not match feature rows");
  }
  int pos = 0, neg = 0;
  for (int v : y) {
    if (v == 1) {
      ++pos;
    } else if (v == 0) {
      ++neg;
    } else {
      throw ValidationError("labels must be 0 or 1");
    }
  }
  if (pos == 0 || neg == 0) throw ValidationError("training data must contain both classes");
}

struct ColumnStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;  // 1 for constant columns
};

ColumnStats fit_column_stats(const Eigen::MatrixXd& X) {
  ColumnStats st;
  const Eigen::Index N = X.rows();
  st.mean = X.colwise().mean();
  st.sd.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var =
        (X.col(j).array() - st.mean(j)).square().sum() / std::max<double>(1.0, N - 1);
    st.sd(j) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return st;
}

}  // namespace

LinearModel train_linear_svm(const Eigen::MatrixXd& X, const std::vector<int>& y, double C,
                             int epochs, std::uint64_t seed) {
  check_labels(X, y);
  if (C <= 0.0) throw ValidationError("C must be positive");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  const Eigen::Index N = X.rows();
  const Eigen::Index F = X.cols();

  const ColumnStats st = fit_column_stats(X);
  Eigen::MatrixXd Z(N, F);
  for (Eigen::Index j = 0; j < F; ++j) Z.col(j) = (X.col(j).array() - st.mean(j)) / st.sd(j);

  const double lambda = 1.0 / (C * static_cast<double>(N));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(F);
  double b = 0.0;
  Eigen::VectorXd w_sum = Eigen::VectorXd::Zero(F);
  double b_sum = 0.0;
  long steps = 0;
  long t = 0;

  Rng rng(seed);
  std::vector<std::size_t> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double yi = y[i] == 1 ? 1.0 : -1.0;
      const double margin = yi * (w.dot(Z.row(static_cast<Eigen::Index>(i))) + b);
      w *= (1.0 - eta * lambda);
      if (margin < 1.0) {
        w += eta * yi * Z.row(static_cast<Eigen::Index>(i)).transpose();
        b += eta * yi;  // bias stays unregularized
      }
      w_sum += w;
      b_sum += b;
      ++steps;
    }
  }
  const Eigen::VectorXd w_avg = w_sum / static_cast<double>(steps);
  const double b_avg = b_sum / static_cast<double>(steps);

  // Fold the train-set standardization back into raw-feature coefficients.
  LinearModel model;
  model.C = C;
  model.weights.resize(F);
  double shift = 0.0;
  for (Eigen::Index j = 0; j < F; ++j) {
    model.weights(j) = w_avg(j) / st.sd(j);
    shift += w_avg(j) * st.mean(j) / st.sd(j);
  }
  model.bias = b_avg - shift;
  return model;
}

std::vector<int> stratified_folds(const std::vector<int>& y, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("need k >= 2 folds");
  std::vector<int> fold(y.size(), -1);
  Rng rng(seed);
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == cls) members.push_back(i);
    rng.shuffle(members);
    for (std::size_t q = 0; q < members.size(); ++q) {
      fold[members[q]] = static_cast<int>(q % static_cast<std::size_t>(k));
    }
  }
  return fold;
}

EvalReport cross_validate(const Eigen::MatrixXd& X, const std::vector<int>& y,
                          const CVOptions& opts) {
  check_labels(X, y);
  const Eigen::Index N = X.rows();
  if (N < opts.folds) throw ValidationError("need N >= folds");
  if (opts.repeats < 1) throw ValidationError("need repeats >= 1");
  int pos = 0;
  for (int v : y) pos += v;
  if (pos < 2 || static_cast<int>(y.size()) - pos < 2) {
    throw ValidationError("each class needs >= 2 subjects for stratified folds");
  }

  EvalReport report;
  report.folds = opts.folds;
  report.repeats = opts.repeats;
  report.seed = opts.seed;
  report.per_repeat.assign(static_cast<std::size_t>(opts.repeats), 0.0);

  parallel_for(static_cast<std::size_t>(opts.repeats), opts.jobs, [&](std::size_t rep) {
    const std::uint64_t rep_seed = derive_seed(opts.seed, rep);
    const std::vector<int> fold = stratified_folds(y, opts.folds, rep_seed);
    long correct = 0;
    for (int f = 0; f < opts.folds; ++f) {
      std::vector<Eigen::Index> train_idx, test_idx;
      for (Eigen::Index i = 0; i < N; ++i) {
        (fold[static_cast<std::size_t>(i)] == f ? test_idx : train_idx).push_back(i);
      }
      if (test_idx.empty()) continue;
      Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(train_idx.size()), X.cols());
      std::vector<int> ytr(train_idx.size());
      for (std::size_t i = 0; i < train_idx.size(); ++i) {
        Xtr.row(static_cast<Eigen::Index>(i)) = X.row(train_idx[i]);
        ytr[i] = y[static_cast<std::size_t>(train_idx[i])];
      }
      const LinearModel model =
          train_linear_svm(Xtr, ytr, opts.C, opts.epochs, derive_seed(rep_seed, 1000 + f));
      for (Eigen::Index i : test_idx) {
        if (model.predict(X.row(i).transpose()) == y[static_cast<std::size_t>(i)]) ++correct;
      }
    }
    report.per_repeat[rep] = static_cast<double>(correct) / static_cast<double>(N);
  });

  double sum = 0.0;
  for (double a : report.per_repeat) sum += a;
  report.mean_accuracy = sum / static_cast<double>(opts.repeats);
  if (opts.repeats > 1) {
    double ss = 0.0;
    for (double a : report.per_repeat) {
      ss += (a - report.mean_accuracy) * (a - report.mean_accuracy);
    }
    report.std_accuracy = std::sqrt(ss / static_cast<double>(opts.repeats - 1));
  }
  return report;
}

namespace {

// Grid tie-break: smaller r, then smaller sigma, then smaller eta.
bool spec_simpler(const featmap::FeatureMapSpec& a, const featmap::FeatureMapSpec& b) {
  if (a.r != b.r) return a.r < b.r;
  if (a.sigma != b.sigma) return a.sigma < b.sigma;
  return a.eta < b.eta;
}

}  // namespace

GridResult grid_search(const std::vector<featmap::FeatureMapSpec>& candidates,
                       const DataBuilder& builder, const CVOptions& cv, int jobs) {
  if (candidates.empty()) throw ValidationError("grid_search needs candidates");
  GridResult result;
  result.all.resize(candidates.size());
  parallel_for(candidates.size(), jobs, [&](std::size_t i) {
    const auto [X, y] = builder(candidates[i]);
    CVOptions point_cv = cv;
    point_cv.jobs = 1;
    result.all[i] = GridPoint{candidates[i], cross_validate(X, y, point_cv)};
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.all.size(); ++i) {
    const double cur = result.all[i].report.mean_accuracy;
    const double top = result.all[best].report.mean_accuracy;
    if (cur > top ||
        (cur == top && spec_simpler(result.all[i].spec, result.all[best].spec))) {
      best = i;
    }
  }
  result.best = result.all[best].spec;
  result.best_report = result.all[best].report;
  return result;
}

namespace {

Eigen::MatrixXd drop_columns(const Eigen::MatrixXd& X, const std::set<long>& removed) {
  Eigen::MatrixXd out(X.rows(), X.cols() - static_cast<Eigen::Index>(removed.size()));
  Eigen::Index pos = 0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (removed.count(j)) continue;
    out.col(pos++) = X.col(j);
  }
  return out;
}

}  // namespace

std::vector<AblationStep> ablation(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                   const std::vector<long>& removal_ranked,
                                   const AblationOptions& opts) {
  check_labels(X, y);
  if (opts.step_fraction <= 0.0 || opts.step_fraction > 1.0) {
    throw ValidationError("step_fraction must lie in (0, 1]");
  }
  std::set<long> seen;
  for (long c : removal_ranked) {
    if (c < 0 || c >= X.cols()) throw ValidationError("removal column out of range");
    if (!seen.insert(c).second) throw ValidationError("duplicate removal column");
  }

  std::vector<AblationStep> curve;
  const auto run_cv = [&](const std::set<long>& removed) {
    if (removed.size() == static_cast<std::size_t>(X.cols())) return 0.5;  // nothing left: chance
    return cross_validate(drop_columns(X, removed), y, opts.cv).mean_accuracy;
  };

  AblationStep base;
  base.masked_accuracy = run_cv({});
  base.random_accuracy = base.masked_accuracy;
  curve.push_back(base);
  if (removal_ranked.empty()) return curve;

  // Pre-draw the random removal orders once; each draw is one trajectory.
  std::vector<std::vector<long>> draws(static_cast<std::size_t>(opts.random_draws));
  for (int dr = 0; dr < opts.random_draws; ++dr) {
    std::vector<long> cols(static_cast<std::size_t>(X.cols()));
    std::iota(cols.begin(), cols.end(), 0);
    Rng rng(derive_seed(opts.cv.seed, 5000 + static_cast<std::uint64_t>(dr)));
    rng.shuffle(cols);
    draws[static_cast<std::size_t>(dr)] = std::move(cols);
  }

  const auto total = static_cast<long>(removal_ranked.size());
  const long tranche = std::max<long>(1, std::lround(opts.step_fraction * static_cast<double>(total)));
  for (long cum = tranche;; cum += tranche) {
    cum = std::min(cum, total);
    AblationStep step;
    step.removed_count = cum;
    step.removed_fraction = static_cast<double>(cum) / static_cast<double>(total);

    std::set<long> masked(removal_ranked.begin(), removal_ranked.begin() + cum);
    step.masked_accuracy = run_cv(masked);

    double rand_sum = 0.0;
    for (const auto& order : draws) {
      std::set<long> removed(order.begin(), order.begin() + cum);
      rand_sum += run_cv(removed);
    }
    step.random_accuracy = rand_sum / static_cast<double>(opts.random_draws);
    curve.push_back(step);
    if (cum == total) break;
  }
  return curve;
}

std::string eval_report_to_json(const EvalReport& report) {
  nlohmann::json doc;
  doc["mean_accuracy"] = report.mean_accuracy;
  doc["std_accuracy"] = report.std_accuracy;
  doc["folds"] = report.folds;
  doc["repeats"] = report.repeats;
  doc["seed"] = report.seed;
  doc["per_repeat"] = report.per_repeat;
  return doc.dump(2);
}

}  // namespace kgc::mlpipe
