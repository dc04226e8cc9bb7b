#ifndef KGC_TSIO_HPP
#define KGC_TSIO_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace kgc::tsio {

/// Multivariate time series: rows are time points, columns are channels.
/// Entries must be finite; T >= 2, d >= 1.
struct TimeSeriesMatrix {
  Eigen::MatrixXd data;                     // T x d
  std::vector<std::string> channel_names;   // empty, or one name per channel

  Eigen::Index n_samples() const { return data.rows(); }
  Eigen::Index n_channels() const { return data.cols(); }
};

/// Lagged autoregression design. Row t of X holds, for each lag k = 1..p and
/// each source channel in order, ts(source, t - k); y(t) is the target value.
/// Columns are lag-major: [s0@k1, s1@k1, ..., s0@k2, s1@k2, ...].
struct LaggedDesign {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  int p = 0;
  std::vector<int> source_channels;
};

TimeSeriesMatrix load_csv(const std::string& path, bool has_header);

/// True when the first line of the file contains a cell that does not parse
/// as a number. Convenience for the CLI's header auto-detection.
bool sniff_header(const std::string& path);

/// Zero mean, unit sample standard deviation per column; constant columns map
/// to all zeros so degenerate channels cannot poison downstream fits.
TimeSeriesMatrix standardize(const TimeSeriesMatrix& ts);

/// Builds the design with targets y(t) for t = first_row..T-1 (ascending
/// time). first_row < 0 means the default p. A larger first_row gives a
/// common estimation sample across candidate lags (used by BIC selection).
LaggedDesign build_lagged_design(const TimeSeriesMatrix& ts, int target,
                                 const std::vector<int>& sources, int p,
                                 int first_row = -1);

}  // namespace kgc::tsio

#endif  // KGC_TSIO_HPP
