#ifndef KGC_CONNECTOME_HPP
#define KGC_CONNECTOME_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "kgc/tsio.hpp"

namespace kgc::connectome {

/// Pearson correlation matrix: symmetric, unit diagonal, entries in [-1, 1].
/// Constant columns correlate 0 with everything by convention.
Eigen::MatrixXd pearson_fc(const tsio::TimeSeriesMatrix& ts);

enum class VectorizeMode { full, upper };

/// full: row-major d^2 vector; upper: strict upper triangle, d(d-1)/2.
Eigen::VectorXd vectorize(const Eigen::MatrixXd& m, VectorizeMode mode);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
};

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of
/// freedom; two-sided p from the regularized incomplete beta. Zero-variance
/// pairs resolve by the limit convention: p = 1 when means agree, else 0.
TTestResult welch_ttest(const std::vector<double>& a, const std::vector<double>& b);

/// Student-t two-sided p-value for statistic t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// Benjamini-Hochberg step-up at level q; returns 1 for rejected hypotheses.
std::vector<int> bh_fdr(const std::vector<double>& pvals, double q);

struct SignificanceMask {
  Eigen::MatrixXi mask;      // 0/1, zero diagonal
  double alpha = 0.0;
  double q = 0.0;
  long n_selected = 0;
  Eigen::MatrixXd pvalues;   // per-cell Welch p; 1 on the diagonal
  Eigen::MatrixXd tvalues;   // per-cell Welch t; 0 on the diagonal

  long count() const { return mask.sum(); }
};

/// Per off-diagonal cell, Welch test of group A subjects against group B; a
/// cell is selected iff p <= alpha AND it survives BH-FDR at q across all
/// tested cells. fisher_z applies atanh to the inputs first (for correlation
/// matrices).
SignificanceMask group_difference_mask(const std::vector<Eigen::MatrixXd>& group_a,
                                       const std::vector<Eigen::MatrixXd>& group_b,
                                       double alpha, double q, bool fisher_z = false);

/// Cells significant in both directions are dropped from both; only
/// uni-directional connections survive. Idempotent.
SignificanceMask prune_bidirectional(const SignificanceMask& ec_mask);

/// Makes mask(i,j) = mask(i,j) OR mask(j,i). Applied to FC masks before
/// fusion so cell (i,j) carries the undirected significance of pair {i,j}.
SignificanceMask symmetrize(const SignificanceMask& mask);

/// Element-wise AND. Commutative and monotone; fuse(m, m) = m.
SignificanceMask fuse_masks(const SignificanceMask& ec_mask,
                            const SignificanceMask& fc_mask);

/// Entrywise mean(high) - mean(low).
Eigen::MatrixXd group_mean_diff(const std::vector<Eigen::MatrixXd>& high,
                                const std::vector<Eigen::MatrixXd>& low);

enum class FeatureMode { EC, FC, ECFC };
enum class FeatureKind { EC, FC };

struct FeatureRef {
  int source = 0;
  int target = 0;
  FeatureKind kind = FeatureKind::EC;
};

struct SubjectData {
  Eigen::MatrixXd ec;
  Eigen::MatrixXd fc;
  int label = 0;  // 1 = older group, 0 = younger
};

/// N x F per-subject feature table with column provenance. EC features are
/// the full directed matrix (row-major), FC features the strict upper
/// triangle unless fc_full reproduces the full-matrix vectorization. Null
/// masks mean "keep every cell".
struct SubjectFeatureTable {
  Eigen::MatrixXd features;
  std::vector<int> labels;
  std::vector<FeatureRef> index;
};

SubjectFeatureTable assemble_features(const std::vector<SubjectData>& subjects,
                                      const SignificanceMask* mask_ec,
                                      const SignificanceMask* mask_fc,
                                      FeatureMode mode, bool fc_full = false);

void write_mask_csv(const SignificanceMask& m, const std::string& path);
void write_mask_json(const SignificanceMask& m, const std::string& path);
SignificanceMask read_mask_csv(const std::string& path);

void write_feature_table(const SubjectFeatureTable& table, const std::string& features_path,
                         const std::string& labels_path, const std::string& index_path);

}  // namespace kgc::connectome

#endif  // KGC_CONNECTOME_HPP
