#include "kgc/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "kgc/errors.hpp"
#include "kgc/gc_engine.hpp"
#include "kgc/parallel.hpp"
#include "kgc/rng.hpp"

namespace kgc::simgen {

namespace {

constexpr int kBurnIn = 100;
constexpr double kDivergenceBound = 1e6;

}  // namespace

SimResult gen_linear(int M, std::uint64_t seed, double c2, double c3) {
  if (M < 10) throw ValidationError("simulation length M must be >= 10");
  Rng rng(seed);
  SimResult result;
  result.seed = seed;
  result.truth.d = 3;
  result.truth.edges = {{0, 1}, {0, 2}};
  result.ts.data.resize(M, 3);

  double x1 = 0.02 * rng.normal();
  double x2 = 0.02 * rng.normal();
  double x3 = 0.02 * rng.normal();
  for (int t = 0; t < kBurnIn + M; ++t) {
    const double n1 = rng.normal();
    const double n2 = rng.normal();
    const double n3 = rng.normal();
    const double prev1 = x1;
    x1 = 0.441 * prev1 + 0.02 * n1;
    x2 = c2 * prev1 + 0.02 * n2;
    x3 = c3 * prev1 + 0.02 * n3;
    if (t >= kBurnIn) {
      result.ts.data(t - kBurnIn, 0) = x1;
      result.ts.data(t - kBurnIn, 1) = x2;
      result.ts.data(t - kBurnIn, 2) = x3;
    }
  }
  return result;
}

SimResult gen_nonlinear(int M, std::uint64_t seed, double a, double s, double e) {
  if (M < 10) throw ValidationError("simulation length M must be >= 10");
  SimResult result;
  result.truth.d = 3;
  result.truth.edges = {{1, 0}, {0, 2}};

  std::uint64_t attempt_seed = seed;
  for (;;) {
    Rng rng(attempt_seed);
    double x1 = rng.uniform(-0.5, 0.5);
    double x2 = rng.uniform(-0.5, 0.5);
    double x3 = rng.uniform(-0.5, 0.5);
    result.ts.data.resize(M, 3);
    bool diverged = false;
    for (int t = 0; t < kBurnIn + M && !diverged; ++t) {
      const double n1 = rng.normal();
      const double n2 = rng.normal();
      const double n3 = rng.normal();
      const double p1 = x1, p2 = x2, p3 = x3;
      x1 = (1.0 - e) * (1.0 - a * p1 * p1) + e * (1.0 - a * p2 * p2) + s * n1;
      x2 = 1.0 - a * p2 * p2 + s * n2;
      x3 = (1.0 - e) * (1.0 - a * p3 * p3) + e * (1.0 - a * p1 * p1) + s * n3;
      if (std::abs(x1) > kDivergenceBound || std::abs(x2) > kDivergenceBound ||
          std::abs(x3) > kDivergenceBound) {
        diverged = true;
      }
      if (t >= kBurnIn) {
        result.ts.data(t - kBurnIn, 0) = x1;
        result.ts.data(t - kBurnIn, 1) = x2;
        result.ts.data(t - kBurnIn, 2) = x3;
      }
    }
    if (!diverged) {
      result.seed = attempt_seed;
      return result;
    }
    ++attempt_seed;
    ++result.resamples;
  }
}

namespace {

// True when the |edges| largest off-diagonal entries are exactly the truth.
bool detects_truth(const Eigen::MatrixXd& values, const GroundTruthGraph& truth) {
  std::vector<std::pair<double, std::pair<int, int>>> entries;
  const int d = static_cast<int>(values.rows());
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i)
      if (i != j) entries.push_back({values(j, i), {j, i}});
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::set<std::pair<int, int>> top;
  for (std::size_t k = 0; k < truth.edges.size() && k < entries.size(); ++k) {
    top.insert(entries[k].second);
  }
  for (const auto& edge : truth.edges) {
    if (!top.count(edge)) return false;
  }
  return true;
}

struct RunOutput {
  std::uint64_t seed = 0;
  int resamples = 0;
  std::vector<double> true_mean;   // per method
  std::vector<double> nonedge_mean;
  std::vector<double> accumulated;
  std::vector<int> detected;
  std::vector<int> lag;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

BenchmarkReport run_benchmark(Model model, const std::vector<featmap::FeatureMapSpec>& methods,
                              std::uint64_t seed, const BenchmarkOptions& opts) {
  if (opts.runs < 1) throw ValidationError("benchmark needs runs >= 1");
  if (methods.empty()) throw ValidationError("benchmark needs at least one method");

  BenchmarkReport report;
  report.model = model;
  report.M = opts.M;
  report.runs = opts.runs;
  report.seed = seed;
  report.truth = (model == Model::linear) ? GroundTruthGraph{3, {{0, 1}, {0, 2}}}
                                          : GroundTruthGraph{3, {{1, 0}, {0, 2}}};

  std::vector<RunOutput> outputs(static_cast<std::size_t>(opts.runs));
  parallel_for(static_cast<std::size_t>(opts.runs), opts.jobs, [&](std::size_t run) {
    RunOutput& out = outputs[run];
    const std::uint64_t run_seed = seed + run;
    SimResult sim = (model == Model::linear)
                        ? gen_linear(opts.M, run_seed, opts.c2, opts.c3)
                        : gen_nonlinear(opts.M, run_seed, opts.a, opts.s, opts.e);
    out.seed = sim.seed;
    out.resamples = sim.resamples;
    const tsio::TimeSeriesMatrix ts = opts.standardize ? tsio::standardize(sim.ts) : sim.ts;

    for (const auto& spec : methods) {
      int p = opts.lag.p;
      if (opts.lag.bic) {
        p = gc::select_lag_bic_all(ts, opts.lag.p_max, spec).global;
      }
      const gc::GCMatrix m = gc::gc_matrix(ts, p, spec, opts.ridge, 1);

      std::vector<double> true_vals, nonedge_vals;
      const std::set<std::pair<int, int>> truth_set(sim.truth.edges.begin(), sim.truth.edges.end());
      const int d = static_cast<int>(m.values.rows());
      for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) {
          if (i == j) continue;
          if (truth_set.count({j, i})) {
            true_vals.push_back(m.values(j, i));
          } else {
            nonedge_vals.push_back(m.values(j, i));
          }
        }
      }
      out.true_mean.push_back(mean_of(true_vals));
      out.nonedge_mean.push_back(mean_of(nonedge_vals));
      out.accumulated.push_back(gc::accumulated_gci(m));
      out.detected.push_back(detects_truth(m.values, sim.truth) ? 1 : 0);
      out.lag.push_back(p);
    }
  });

  report.run_seeds.resize(outputs.size());
  report.resamples.resize(outputs.size());
  for (std::size_t r = 0; r < outputs.size(); ++r) {
    report.run_seeds[r] = outputs[r].seed;
    report.resamples[r] = outputs[r].resamples;
  }
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    MethodResult mr;
    mr.spec = methods[mi];
    std::vector<double> true_means, nonedge_means;
    int detected_count = 0;
    for (const auto& out : outputs) {
      true_means.push_back(out.true_mean[mi]);
      nonedge_means.push_back(out.nonedge_mean[mi]);
      mr.accumulated.push_back(out.accumulated[mi]);
      mr.selected_lags.push_back(out.lag[mi]);
      mr.detected.push_back(out.detected[mi]);
      detected_count += out.detected[mi];
    }
    mr.detection_rate = static_cast<double>(detected_count) / static_cast<double>(opts.runs);
    mr.mean_true_gci = mean_of(true_means);
    mr.sd_true_gci = sd_of(true_means);
    mr.mean_nonedge_gci = mean_of(nonedge_means);
    mr.sd_nonedge_gci = sd_of(nonedge_means);
    report.methods.push_back(std::move(mr));
  }
  return report;
}

std::string report_to_json(const BenchmarkReport& report) {
  nlohmann::json doc;
  doc["model"] = report.model == Model::linear ? "linear" : "nonlinear";
  doc["M"] = report.M;
  doc["runs"] = report.runs;
  doc["seed"] = report.seed;
  nlohmann::json truth = nlohmann::json::array();
  for (const auto& [s, t] : report.truth.edges) truth.push_back({s, t});
  doc["truth_edges"] = truth;
  doc["run_seeds"] = report.run_seeds;
  doc["resamples"] = report.resamples;
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& m : report.methods) {
    nlohmann::json jm;
    jm["spec"] = m.spec.to_string();
    jm["detection_rate"] = m.detection_rate;
    jm["mean_true_gci"] = m.mean_true_gci;
    jm["sd_true_gci"] = m.sd_true_gci;
    jm["mean_nonedge_gci"] = m.mean_nonedge_gci;
    jm["sd_nonedge_gci"] = m.sd_nonedge_gci;
    jm["accumulated_gci"] = m.accumulated;
    jm["selected_lags"] = m.selected_lags;
    jm["detected"] = m.detected;
    methods.push_back(jm);
  }
  doc["methods"] = methods;
  return doc.dump(2);
}

}  // namespace kgc::simgen
