#include "kgc/netmetrics.hpp"

#include <cmath>
#include <limits>
#include <queue>

#include "kgc/connectome.hpp"
#include "kgc/errors.hpp"

namespace kgc::netmetrics {

WeightedDigraph make_digraph(const Eigen::MatrixXd& weights) {
  if (weights.rows() != weights.cols()) throw ValidationError("weight matrix must be square");
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    for (Eigen::Index j = 0; j < weights.cols(); ++j) {
      if (!std::isfinite(weights(i, j)) || weights(i, j) < 0.0) {
        throw ValidationError("weights must be finite and non-negative");
      }
    }
    if (weights(i, i) != 0.0) throw ValidationError("weight matrix must have zero diagonal");
  }
  return WeightedDigraph{weights};
}

std::vector<int> node_degrees(const Eigen::MatrixXi& adj) {
  if (adj.rows() != adj.cols()) throw ValidationError("adjacency must be square");
  const Eigen::Index n = adj.rows();
  std::vector<int> deg(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (adj(i, i) != 0) throw ValidationError("adjacency must have zero diagonal");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (adj(i, j)) {
        deg[static_cast<std::size_t>(i)]++;  // out
        deg[static_cast<std::size_t>(j)]++;  // in
      }
    }
  }
  return deg;
}

std::vector<int> detect_hubs(const std::vector<int>& degrees) {
  const std::size_t n = degrees.size();
  if (n < 2) throw ValidationError("detect_hubs needs >= 2 nodes");
  double mean = 0.0;
  for (int d : degrees) mean += d;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (int d : degrees) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  std::vector<int> hubs;
  if (sd == 0.0) return hubs;  // all-equal degrees: nothing is elevated
  const double threshold = mean + 2.0 * sd;
  for (std::size_t v = 0; v < n; ++v) {
    if (degrees[v] >= threshold) hubs.push_back(static_cast<int>(v));
  }
  std::sort(hubs.begin(), hubs.end(), [&](int a, int b) {
    if (degrees[static_cast<std::size_t>(a)] != degrees[static_cast<std::size_t>(b)])
      return degrees[static_cast<std::size_t>(a)] > degrees[static_cast<std::size_t>(b)];
    return a < b;
  });
  return hubs;
}

Eigen::VectorXd shortest_distances(const WeightedDigraph& g, long src) {
  const Eigen::Index n = g.size();
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, inf);
  dist(src) = 0.0;
  using Entry = std::pair<double, long>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
  heap.push({0.0, src});
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist(u)) continue;
    for (Eigen::Index v = 0; v < n; ++v) {
      const double w = g.weights(u, v);
      if (w <= 0.0) continue;
      const double cand = d + 1.0 / w;
      if (cand < dist(v)) {
        dist(v) = cand;
        heap.push({cand, v});
      }
    }
  }
  return dist;
}

double global_efficiency(const WeightedDigraph& g) {
  const Eigen::Index n = g.size();
  if (n < 2) throw ValidationError("global_efficiency needs >= 2 nodes");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd dist = shortest_distances(g, i);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (std::isfinite(dist(j)) && dist(j) > 0.0) sum += 1.0 / dist(j);
    }
  }
  return sum / (static_cast<double>(n) * static_cast<double>(n - 1));
}

LocalEfficiency local_efficiency(const WeightedDigraph& g) {
  const Eigen::Index n = g.size();
  if (n < 2) throw ValidationError("local_efficiency needs >= 2 nodes");
  LocalEfficiency result;
  result.per_node = Eigen::VectorXd::Zero(n);
  for (Eigen::Index v = 0; v < n; ++v) {
    std::vector<Eigen::Index> nbrs;
    for (Eigen::Index u = 0; u < n; ++u) {
      if (u == v) continue;
      if (g.weights(v, u) > 0.0 || g.weights(u, v) > 0.0) nbrs.push_back(u);
    }
    if (nbrs.size() < 2) continue;
    const auto m = static_cast<Eigen::Index>(nbrs.size());
    Eigen::MatrixXd sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = g.weights(nbrs[a], nbrs[b]);
    result.per_node(v) = global_efficiency(WeightedDigraph{sub});
  }
  result.mean = result.per_node.mean();
  return result;
}

GroupEfficiencyComparison compare_group_efficiency(const std::vector<WeightedDigraph>& graphs_a,
                                                   const std::vector<WeightedDigraph>& graphs_b,
                                                   double alpha) {
  if (graphs_a.size() < 2 || graphs_b.size() < 2) {
    throw ValidationError("compare_group_efficiency needs >= 2 graphs per group");
  }
  GroupEfficiencyComparison cmp;
  for (const auto& g : graphs_a) cmp.eglob_a.push_back(global_efficiency(g));
  for (const auto& g : graphs_b) cmp.eglob_b.push_back(global_efficiency(g));
  const auto test = connectome::welch_ttest(cmp.eglob_a, cmp.eglob_b);
  cmp.t = test.t;
  cmp.p = test.p;
  double sa = 0.0, sb = 0.0;
  for (double v : cmp.eglob_a) sa += v;
  for (double v : cmp.eglob_b) sb += v;
  cmp.mean_a = sa / static_cast<double>(cmp.eglob_a.size());
  cmp.mean_b = sb / static_cast<double>(cmp.eglob_b.size());
  cmp.significant = cmp.p <= alpha;
  return cmp;
}

Eigen::MatrixXi binarize(const Eigen::MatrixXd& weights, double threshold) {
  Eigen::MatrixXi adj(weights.rows(), weights.cols());
  for (Eigen::Index i = 0; i < weights.rows(); ++i)
    for (Eigen::Index j = 0; j < weights.cols(); ++j)
      adj(i, j) = (i != j && weights(i, j) > threshold) ? 1 : 0;
  return adj;
}

}  // namespace kgc::netmetrics
