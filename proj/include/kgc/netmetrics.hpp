#ifndef KGC_NETMETRICS_HPP
#define KGC_NETMETRICS_HPP

#include <Eigen/Dense>
#include <vector>

namespace kgc::netmetrics {

/// Non-negative weight matrix, zero diagonal; weight 0 means no edge. Path
/// lengths use 1/weight, the connectivity-toolbox convention.
struct WeightedDigraph {
  Eigen::MatrixXd weights;

  long size() const { return weights.rows(); }
};

WeightedDigraph make_digraph(const Eigen::MatrixXd& weights);

/// degree(v) = in-degree + out-degree on a binary adjacency matrix.
std::vector<int> node_degrees(const Eigen::MatrixXi& adj);

/// Nodes whose degree is at least two sample standard deviations above the
/// mean, sorted by degree descending (ties by node index). All-equal degree
/// distributions (sd = 0) yield the empty set.
std::vector<int> detect_hubs(const std::vector<int>& degrees);

/// Shortest directed distances from src under lengths 1/weight
/// (priority-queue Dijkstra, O(m + n log n) per source). Unreachable =
/// +infinity.
Eigen::VectorXd shortest_distances(const WeightedDigraph& g, long src);

/// Mean inverse shortest path length over ordered pairs; unreachable pairs
/// contribute 0.
double global_efficiency(const WeightedDigraph& g);

struct LocalEfficiency {
  Eigen::VectorXd per_node;
  double mean = 0.0;
};

/// Per node, the global efficiency of the subgraph induced by its neighbors
/// (union of in- and out-neighbors, the node itself excluded); nodes with
/// fewer than two neighbors score 0.
LocalEfficiency local_efficiency(const WeightedDigraph& g);

struct GroupEfficiencyComparison {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double t = 0.0;
  double p = 1.0;
  bool significant = false;
  std::vector<double> eglob_a;
  std::vector<double> eglob_b;
};

/// Per-graph global efficiencies compared with Welch's t-test at level alpha.
GroupEfficiencyComparison compare_group_efficiency(const std::vector<WeightedDigraph>& graphs_a,
                                                   const std::vector<WeightedDigraph>& graphs_b,
                                                   double alpha);

/// Weighted matrix -> binary adjacency: 1 where weight > threshold.
Eigen::MatrixXi binarize(const Eigen::MatrixXd& weights, double threshold);

}  // namespace kgc::netmetrics

#endif  // KGC_NETMETRICS_HPP
