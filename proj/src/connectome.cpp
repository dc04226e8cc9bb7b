#include "kgc/connectome.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "kgc/errors.hpp"
#include "kgc/matio.hpp"

namespace kgc::connectome {

Eigen::MatrixXd pearson_fc(const tsio::TimeSeriesMatrix& ts) {
  const Eigen::Index T = ts.n_samples();
  const Eigen::Index d = ts.n_channels();
  if (T < 3) throw ValidationError("pearson_fc needs T >= 3");

  Eigen::MatrixXd centered(T, d);
  Eigen::VectorXd norms(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto col = ts.data.col(j);
    if (col.maxCoeff() == col.minCoeff()) {
      centered.col(j).setZero();
      norms(j) = 0.0;
      continue;
    }
    centered.col(j) = col.array() - col.mean();
    norms(j) = centered.col(j).norm();
  }
  Eigen::MatrixXd fc = Eigen::MatrixXd::Identity(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      double r = 0.0;
      if (norms(i) > 0.0 && norms(j) > 0.0) {
        r = centered.col(i).dot(centered.col(j)) / (norms(i) * norms(j));
      }
      fc(i, j) = r;
      fc(j, i) = r;
    }
  }
  return fc;
}

Eigen::VectorXd vectorize(const Eigen::MatrixXd& m, VectorizeMode mode) {
  const Eigen::Index d = m.rows();
  if (mode == VectorizeMode::full) {
    Eigen::VectorXd v(d * m.cols());
    Eigen::Index pos = 0;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) v(pos++) = m(i, j);
    return v;
  }
  if (m.rows() != m.cols()) throw ValidationError("upper vectorization needs a square matrix");
  Eigen::VectorXd v(d * (d - 1) / 2);
  Eigen::Index pos = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) v(pos++) = m(i, j);
  return v;
}

namespace {

// Continued-fraction evaluation of the regularized incomplete beta
// (modified Lentz), good to ~1e-14 relative.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * betacf(a, b, x) / a;
  }
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double sample_mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

double student_t_two_sided_p(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  if (t == 0.0) return 1.0;
  const double x = df / (df + t * t);
  return reg_inc_beta(0.5 * df, 0.5, x);
}

TTestResult welch_ttest(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw ValidationError("welch_ttest needs >= 2 values per sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = sample_mean(a);
  const double mb = sample_mean(b);
  const double va = sample_var(a, ma);
  const double vb = sample_var(b, mb);

  TTestResult res;
  const double se2 = va / na + vb / nb;
  if (se2 == 0.0) {
    // Degenerate zero-variance pair: limit convention.
    res.t = (ma == mb) ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
    res.p = (ma == mb) ? 1.0 : 0.0;
    res.df = na + nb - 2.0;
    return res;
  }
  res.t = (ma - mb) / std::sqrt(se2);
  const double ta = va / na, tb = vb / nb;
  double denom = 0.0;
  if (va > 0.0) denom += ta * ta / (na - 1.0);
  if (vb > 0.0) denom += tb * tb / (nb - 1.0);
  res.df = se2 * se2 / denom;
  res.p = student_t_two_sided_p(res.t, res.df);
  return res;
}

std::vector<int> bh_fdr(const std::vector<double>& pvals, double q) {
  const std::size_t m = pvals.size();
  std::vector<int> keep(m, 0);
  if (m == 0) return keep;
  for (double p : pvals) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p-values must lie in [0, 1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return pvals[x] < pvals[y]; });
  std::size_t cutoff = 0;  // number of rejections
  for (std::size_t k = m; k >= 1; --k) {
    if (pvals[order[k - 1]] <= static_cast<double>(k) * q / static_cast<double>(m)) {
      cutoff = k;
      break;
    }
  }
  for (std::size_t k = 0; k < cutoff; ++k) keep[order[k]] = 1;
  return keep;
}

SignificanceMask group_difference_mask(const std::vector<Eigen::MatrixXd>& group_a,
                                       const std::vector<Eigen::MatrixXd>& group_b,
                                       double alpha, double q, bool fisher_z) {
  if (group_a.size() < 2 || group_b.size() < 2) {
    throw ValidationError("group_difference_mask needs >= 2 subjects per group");
  }
  const Eigen::Index d = group_a.front().rows();
  auto check = [&](const Eigen::MatrixXd& m) {
    if (m.rows() != d || m.cols() != d) throw ValidationError("subject matrix dimension mismatch");
  };
  for (const auto& m : group_a) check(m);
  for (const auto& m : group_b) check(m);

  auto transform = [&](double v) {
    if (!fisher_z) return v;
    const double c = std::clamp(v, -1.0 + 1e-12, 1.0 - 1e-12);
    return std::atanh(c);
  };

  SignificanceMask out;
  out.alpha = alpha;
  out.q = q;
  out.mask = Eigen::MatrixXi::Zero(d, d);
  out.pvalues = Eigen::MatrixXd::Ones(d, d);
  out.tvalues = Eigen::MatrixXd::Zero(d, d);

  std::vector<double> pvec;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
  std::vector<double> a_vals(group_a.size()), b_vals(group_b.size());
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (i == j) continue;
      for (std::size_t s = 0; s < group_a.size(); ++s) a_vals[s] = transform(group_a[s](i, j));
      for (std::size_t s = 0; s < group_b.size(); ++s) b_vals[s] = transform(group_b[s](i, j));
      const auto test = welch_ttest(a_vals, b_vals);
      out.pvalues(i, j) = test.p;
      out.tvalues(i, j) = test.t;
      pvec.push_back(test.p);
      cells.emplace_back(i, j);
    }
  }
  const std::vector<int> fdr_keep = bh_fdr(pvec, q);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (pvec[k] <= alpha && fdr_keep[k]) {
      out.mask(cells[k].first, cells[k].second) = 1;
    }
  }
  out.n_selected = out.mask.sum();
  return out;
}

SignificanceMask prune_bidirectional(const SignificanceMask& ec_mask) {
  SignificanceMask out = ec_mask;
  const Eigen::Index d = out.mask.rows();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      if (out.mask(i, j) == 1 && out.mask(j, i) == 1) {
        out.mask(i, j) = 0;
        out.mask(j, i) = 0;
      }
    }
  }
  out.n_selected = out.mask.sum();
  return out;
}

SignificanceMask symmetrize(const SignificanceMask& mask) {
  SignificanceMask out = mask;
  const Eigen::Index d = out.mask.rows();
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const int v = (mask.mask(i, j) || mask.mask(j, i)) ? 1 : 0;
      out.mask(i, j) = v;
      out.mask(j, i) = v;
    }
  out.n_selected = out.mask.sum();
  return out;
}

SignificanceMask fuse_masks(const SignificanceMask& ec_mask, const SignificanceMask& fc_mask) {
  if (ec_mask.mask.rows() != fc_mask.mask.rows() || ec_mask.mask.cols() != fc_mask.mask.cols()) {
    throw ValidationError("fuse_masks dimension mismatch");
  }
  SignificanceMask out = ec_mask;
  out.mask = ec_mask.mask.cwiseProduct(fc_mask.mask);
  out.n_selected = out.mask.sum();
  return out;
}

Eigen::MatrixXd group_mean_diff(const std::vector<Eigen::MatrixXd>& high,
                                const std::vector<Eigen::MatrixXd>& low) {
  if (high.empty() || low.empty()) throw ValidationError("group_mean_diff needs >= 1 subject per group");
  Eigen::MatrixXd mh = Eigen::MatrixXd::Zero(high.front().rows(), high.front().cols());
  Eigen::MatrixXd ml = Eigen::MatrixXd::Zero(low.front().rows(), low.front().cols());
  for (const auto& m : high) {
    if (m.rows() != mh.rows() || m.cols() != mh.cols()) throw ValidationError("dimension mismatch");
    mh += m;
  }
  for (const auto& m : low) {
    if (m.rows() != ml.rows() || m.cols() != ml.cols()) throw ValidationError("dimension mismatch");
    ml += m;
  }
  mh /= static_cast<double>(high.size());
  ml /= static_cast<double>(low.size());
  if (mh.rows() != ml.rows() || mh.cols() != ml.cols()) throw ValidationError("dimension mismatch");
  return mh - ml;
}

SubjectFeatureTable assemble_features(const std::vector<SubjectData>& subjects,
                                      const SignificanceMask* mask_ec,
                                      const SignificanceMask* mask_fc,
                                      FeatureMode mode, bool fc_full) {
  if (subjects.empty()) throw ValidationError("assemble_features needs subjects");
  const Eigen::Index d =
      (mode == FeatureMode::FC) ? subjects.front().fc.rows() : subjects.front().ec.rows();
  for (const auto& s : subjects) {
    if (mode != FeatureMode::FC && (s.ec.rows() != d || s.ec.cols() != d))
      throw ValidationError("EC matrix dimension mismatch across subjects");
    if (mode != FeatureMode::EC && (s.fc.rows() != d || s.fc.cols() != d))
      throw ValidationError("FC matrix dimension mismatch across subjects");
  }
  if (mask_ec && (mask_ec->mask.rows() != d || mask_ec->mask.cols() != d))
    throw ValidationError("EC mask dimension mismatch");
  if (mask_fc && (mask_fc->mask.rows() != d || mask_fc->mask.cols() != d))
    throw ValidationError("FC mask dimension mismatch");

  SubjectFeatureTable table;
  // EC block: full directed matrix, row-major.
  if (mode == FeatureMode::EC || mode == FeatureMode::ECFC) {
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) {
        if (mask_ec && mask_ec->mask(i, j) == 0) continue;
        table.index.push_back({static_cast<int>(i), static_cast<int>(j), FeatureKind::EC});
      }
  }
  // FC block: strict upper triangle unless fc_full reproduces the full
  // row-major vectorization.
  if (mode == FeatureMode::FC || mode == FeatureMode::ECFC) {
    if (fc_full) {
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
          if (mask_fc && mask_fc->mask(i, j) == 0) continue;
          table.index.push_back({static_cast<int>(i), static_cast<int>(j), FeatureKind::FC});
        }
    } else {
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i + 1; j < d; ++j) {
          if (mask_fc && !(mask_fc->mask(i, j) || mask_fc->mask(j, i))) continue;
          table.index.push_back({static_cast<int>(i), static_cast<int>(j), FeatureKind::FC});
        }
    }
  }

  const auto N = static_cast<Eigen::Index>(subjects.size());
  const auto F = static_cast<Eigen::Index>(table.index.size());
  table.features.resize(N, F);
  table.labels.reserve(subjects.size());
  for (Eigen::Index s = 0; s < N; ++s) {
    const auto& subj = subjects[static_cast<std::size_t>(s)];
    for (Eigen::Index c = 0; c < F; ++c) {
      const auto& ref = table.index[static_cast<std::size_t>(c)];
      const auto& src = (ref.kind == FeatureKind::EC) ? subj.ec : subj.fc;
      table.features(s, c) = src(ref.source, ref.target);
    }
    table.labels.push_back(subj.label);
  }
  for (Eigen::Index s = 0; s < N; ++s)
    for (Eigen::Index c = 0; c < F; ++c)
      if (!std::isfinite(table.features(s, c)))
        throw ValidationError("non-finite feature for subject " + std::to_string(s));
  return table;
}

void write_mask_csv(const SignificanceMask& m, const std::string& path) {
  matio::write_matrix_csv(m.mask.cast<double>(), path);
}

void write_mask_json(const SignificanceMask& m, const std::string& path) {
  nlohmann::json doc;
  doc["alpha"] = m.alpha;
  doc["q"] = m.q;
  doc["n_selected"] = m.n_selected;
  doc["d"] = m.mask.rows();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << doc.dump(2) << '\n';
}

SignificanceMask read_mask_csv(const std::string& path) {
  SignificanceMask m;
  const Eigen::MatrixXd values = matio::read_matrix_csv(path);
  if (values.rows() != values.cols()) throw ValidationError("mask in " + path + " is not square");
  m.mask.resize(values.rows(), values.cols());
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const double v = values(i, j);
      if (v != 0.0 && v != 1.0) throw ValidationError("mask entries must be 0/1 in " + path);
      m.mask(i, j) = static_cast<int>(v);
    }
  m.n_selected = m.mask.sum();
  m.pvalues = Eigen::MatrixXd::Ones(values.rows(), values.cols());
  return m;
}

void write_feature_table(const SubjectFeatureTable& table, const std::string& features_path,
                         const std::string& labels_path, const std::string& index_path) {
  matio::write_matrix_csv(table.features, features_path);
  matio::write_labels_csv(table.labels, labels_path);
  nlohmann::json idx = nlohmann::json::array();
  for (const auto& ref : table.index) {
    idx.push_back({{"source", ref.source},
                   {"target", ref.target},
                   {"kind", ref.kind == FeatureKind::EC ? "EC" : "FC"}});
  }
  std::ofstream out(index_path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + index_path);
  out << idx.dump(2) << '\n';
}

}  // namespace kgc::connectome
