#include "kgc/tsio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

#include "kgc/errors.hpp"

namespace kgc::tsio {

namespace {

std::vector<std::string> split_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool try_parse(const std::string& cell, double& out) {
  const std::string t = trimmed(cell);
  if (t.empty()) return false;
  auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

}  // namespace

bool sniff_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty file: " + path);
  double v;
  for (const auto& cell : split_line(line)) {
    if (!try_parse(cell, v)) return true;
  }
  return false;
}

TimeSeriesMatrix load_csv(const std::string& path, bool has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open: " + path);

  TimeSeriesMatrix ts;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool expect_header = has_header;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    auto cells = split_line(line);
    if (expect_header) {
      expect_header = false;
      ts.channel_names.reserve(cells.size());
      for (auto& c : cells) ts.channel_names.push_back(trimmed(c));
      continue;
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      double v;
      if (!try_parse(cells[j], v)) {
        throw ValidationError("non-numeric cell \"" + trimmed(cells[j]) + "\" at row " +
                              std::to_string(lineno) + ", column " + std::to_string(j + 1) +
                              " of " + path);
      }
      if (!std::isfinite(v)) {
        throw ValidationError("non-finite value at row " + std::to_string(lineno) + ", column " +
                              std::to_string(j + 1) + " of " + path);
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ValidationError("ragged row " + std::to_string(lineno) + " in " + path + ": got " +
                            std::to_string(row.size()) + " cells, expected " +
                            std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) {
    throw ValidationError("need at least 2 time points, got " + std::to_string(rows.size()) +
                          " in " + path);
  }
  const auto d = rows.front().size();
  if (!ts.channel_names.empty() && ts.channel_names.size() != d) {
    throw ValidationError("header has " + std::to_string(ts.channel_names.size()) +
                          " names but rows have " + std::to_string(d) + " columns in " + path);
  }
  ts.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < ts.data.rows(); ++i)
    for (Eigen::Index j = 0; j < ts.data.cols(); ++j)
      ts.data(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return ts;
}

TimeSeriesMatrix standardize(const TimeSeriesMatrix& ts) {
  const Eigen::Index T = ts.n_samples();
  const Eigen::Index d = ts.n_channels();
  if (T < 2) throw ValidationError("standardize needs T >= 2");

  TimeSeriesMatrix out;
  out.channel_names = ts.channel_names;
  out.data.resize(T, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto col = ts.data.col(j);
    if (col.maxCoeff() == col.minCoeff()) {
      out.data.col(j).setZero();
      continue;
    }
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(T - 1);
    const double sd = std::sqrt(var);
    if (sd == 0.0) {
      out.data.col(j).setZero();
      continue;
    }
    out.data.col(j) = (col.array() - mean) / sd;
  }
  return out;
}

LaggedDesign build_lagged_design(const TimeSeriesMatrix& ts, int target,
                                 const std::vector<int>& sources, int p, int first_row) {
  const Eigen::Index T = ts.n_samples();
  const Eigen::Index d = ts.n_channels();
  if (p < 1 || p >= T) {
    throw ValidationError("lag order p = " + std::to_string(p) + " must satisfy 1 <= p < T = " +
                          std::to_string(T));
  }
  if (target < 0 || target >= d) {
    throw ValidationError("target channel " + std::to_string(target) + " out of range");
  }
  if (sources.empty()) throw ValidationError("sources must be non-empty");
  for (std::size_t a = 0; a < sources.size(); ++a) {
    if (sources[a] < 0 || sources[a] >= d) {
      throw ValidationError("source channel " + std::to_string(sources[a]) + " out of range");
    }
    for (std::size_t b = a + 1; b < sources.size(); ++b) {
      if (sources[a] == sources[b]) {
        throw ValidationError("duplicate source channel " + std::to_string(sources[a]));
      }
    }
  }
  if (first_row < 0) first_row = p;
  if (first_row < p || first_row >= T) {
    throw ValidationError("first_row must lie in [p, T)");
  }

  const Eigen::Index n = T - first_row;
  const auto S = static_cast<Eigen::Index>(sources.size());
  LaggedDesign design;
  design.p = p;
  design.source_channels = sources;
  design.X.resize(n, static_cast<Eigen::Index>(p) * S);
  design.y.resize(n);
  for (Eigen::Index row = 0; row < n; ++row) {
    const Eigen::Index t = first_row + row;
    design.y(row) = ts.data(t, target);
    for (int k = 1; k <= p; ++k) {
      for (Eigen::Index s = 0; s < S; ++s) {
        design.X(row, static_cast<Eigen::Index>(k - 1) * S + s) = ts.data(t - k, sources[s]);
      }
    }
  }
  return design;
}

}  // namespace kgc::tsio
