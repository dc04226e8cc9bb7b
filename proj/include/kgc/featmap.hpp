#ifndef KGC_FEATMAP_HPP
#define KGC_FEATMAP_HPP

#include <Eigen/Dense>
#include <string>

namespace kgc::featmap {

enum class Kind { LIN, MP, RP, RSP };

/// Which feature expansion to apply to lagged regressor vectors.
/// LIN behaves as MP with r = 1. eta/sigma are only meaningful for RSP,
/// where the input is first mapped through eta * sinh(sigma * x) per
/// coordinate; eta = sigma = 1 is the fixed-parameter variant (RSPF).
struct FeatureMapSpec {
  Kind kind = Kind::LIN;
  int r = 1;
  double eta = 1.0;
  double sigma = 1.0;

  /// Parses CLI strings: "lin", "mp:r=2", "rp:r=3", "rsp:r=2,eta=0.5,sigma=0.3".
  /// eta/sigma default to 1 when omitted, so "rsp:r=2" is RSPF.
  static FeatureMapSpec parse(const std::string& text);
  std::string to_string() const;

  bool operator==(const FeatureMapSpec&) const = default;
};

/// Expanded feature count, constant term included.
/// MP/LIN: C(d+r, r). RP/RSP: 1 + r + d*(2r - 1).
long expanded_dim(const FeatureMapSpec& spec, long d);

/// All monomials of total degree <= r, constant first, then graded
/// lexicographic within each degree ([1, x1, x2, x1^2, x1*x2, x2^2] for
/// d = 2, r = 2). The ordering is fixed; outputs are bit-deterministic.
Eigen::VectorXd expand_mp(const Eigen::VectorXd& x, int r);

/// Reduced polynomial expansion, in fixed order: constant; element powers
/// x_j^k for k = 1..r (j inner); sum powers (sum_j x_j)^k for k = 1..r;
/// cross terms x_j * (sum_i x_i)^(k-1) for k = 2..r (j inner).
Eigen::VectorXd expand_rp(const Eigen::VectorXd& x, int r);

/// expand_rp applied to u_j = eta * sinh(sigma * x_j). Throws when
/// |sigma * x_j| is large enough for sinh to overflow, naming the coordinate.
Eigen::VectorXd expand_rsp(const Eigen::VectorXd& x, int r, double eta, double sigma);

Eigen::VectorXd expand(const FeatureMapSpec& spec, const Eigen::VectorXd& x);

/// Applies the expansion to every row of X.
Eigen::MatrixXd expand_rows(const FeatureMapSpec& spec, const Eigen::MatrixXd& X);

}  // namespace kgc::featmap

#endif  // KGC_FEATMAP_HPP
