#ifndef KGC_MATIO_HPP
#define KGC_MATIO_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace kgc::matio {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

/// Writes a numeric matrix as comma-separated rows, round-trip exact.
void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path);

/// Reads a rectangular numeric CSV (no header). Errors name row/column.
Eigen::MatrixXd read_matrix_csv(const std::string& path);

void write_labels_csv(const std::vector<int>& labels, const std::string& path);
std::vector<int> read_labels_csv(const std::string& path);

/// FNV-1a 64-bit digest, hex encoded. Used for input digests in run manifests.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::string file_digest_hex(const std::string& path);
std::string to_hex(std::uint64_t v);

}  // namespace kgc::matio

#endif  // KGC_MATIO_HPP
