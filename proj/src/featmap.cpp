#include "kgc/featmap.hpp"

#include <charconv>
#include <cmath>
#include <vector>

#include "kgc/errors.hpp"

namespace kgc::featmap {

namespace {

long binomial(long n, long k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned long long result = 1;
  for (long i = 1; i <= k; ++i) {
    result = result * static_cast<unsigned long long>(n - k + i) /
             static_cast<unsigned long long>(i);
  }
  return static_cast<long>(result);
}

// Powers table: pows(j, e) = x_j^e by successive multiplication, so repeated
// calls are bit-identical.
Eigen::MatrixXd power_table(const Eigen::VectorXd& x, int max_exp) {
  Eigen::MatrixXd pows(x.size(), max_exp + 1);
  pows.col(0).setOnes();
  for (int e = 1; e <= max_exp; ++e) pows.col(e) = pows.col(e - 1).cwiseProduct(x);
  return pows;
}

void check_finite(const Eigen::VectorXd& x) {
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x(j))) {
      throw ValidationError("non-finite input at coordinate " + std::to_string(j));
    }
  }
}

void emit_monomials(const Eigen::MatrixXd& pows, Eigen::Index j, int degree_left, double partial,
                    Eigen::VectorXd& out, Eigen::Index& pos) {
  const Eigen::Index d = pows.rows();
  if (j == d - 1) {
    out(pos++) = partial * pows(j, degree_left);
    return;
  }
  for (int e = degree_left; e >= 0; --e) {
    emit_monomials(pows, j + 1, degree_left - e, partial * pows(j, e), out, pos);
  }
}

int parse_int_param(const std::string& token, const std::string& value) {
  int v = 0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ValidationError("bad integer in method token \"" + token + "\"");
  }
  return v;
}

double parse_double_param(const std::string& token, const std::string& value) {
  double v = 0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ValidationError("bad number in method token \"" + token + "\"");
  }
  return v;
}

}  // namespace

long expanded_dim(const FeatureMapSpec& spec, long d) {
  if (d < 1) throw ValidationError("expanded_dim needs d >= 1");
  switch (spec.kind) {
    case Kind::LIN:
      return d + 1;
    case Kind::MP:
      return binomial(d + spec.r, spec.r);
    case Kind::RP:
    case Kind::RSP:
      return 1 + spec.r + d * (2L * spec.r - 1);
  }
  throw std::runtime_error("unreachable feature kind");
}

Eigen::VectorXd expand_mp(const Eigen::VectorXd& x, int r) {
  if (r < 1) throw ValidationError("polynomial order r must be >= 1");
  check_finite(x);
  const Eigen::Index d = x.size();
  Eigen::VectorXd out(binomial(d + r, r));
  const Eigen::MatrixXd pows = power_table(x, r);
  Eigen::Index pos = 0;
  for (int g = 0; g <= r; ++g) {
    emit_monomials(pows, 0, g, 1.0, out, pos);
  }
  return out;
}

Eigen::VectorXd expand_rp(const Eigen::VectorXd& x, int r) {
  if (r < 1) throw ValidationError("polynomial order r must be >= 1");
  check_finite(x);
  const Eigen::Index d = x.size();
  const Eigen::MatrixXd pows = power_table(x, r);
  double total = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) total += x(j);
  std::vector<double> sum_pows(static_cast<std::size_t>(r) + 1, 1.0);
  for (int k = 1; k <= r; ++k) sum_pows[static_cast<std::size_t>(k)] = sum_pows[k - 1] * total;

  Eigen::VectorXd out(1 + r + d * (2L * r - 1));
  Eigen::Index pos = 0;
  out(pos++) = 1.0;
  for (int k = 1; k <= r; ++k)
    for (Eigen::Index j = 0; j < d; ++j) out(pos++) = pows(j, k);
  for (int k = 1; k <= r; ++k) out(pos++) = sum_pows[static_cast<std::size_t>(k)];
  for (int k = 2; k <= r; ++k)
    for (Eigen::Index j = 0; j < d; ++j) out(pos++) = x(j) * sum_pows[static_cast<std::size_t>(k - 1)];
  return out;
}

Eigen::VectorXd expand_rsp(const Eigen::VectorXd& x, int r, double eta, double sigma) {
  if (eta <= 0.0 || sigma <= 0.0) throw ValidationError("rsp requires eta > 0 and sigma > 0");
  check_finite(x);
  Eigen::VectorXd u(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double scaled = sigma * x(j);
    // sinh(709) is already past DBL_MAX; refuse rather than silently saturate.
    if (std::abs(scaled) > 700.0) {
      throw ValidationError("sinh overflow at coordinate " + std::to_string(j) +
                            ": |sigma*x| = " + std::to_string(std::abs(scaled)));
    }
    u(j) = eta * std::sinh(scaled);
  }
  return expand_rp(u, r);
}

Eigen::VectorXd expand(const FeatureMapSpec& spec, const Eigen::VectorXd& x) {
  switch (spec.kind) {
    case Kind::LIN:
      return expand_mp(x, 1);
    case Kind::MP:
      return expand_mp(x, spec.r);
    case Kind::RP:
      return expand_rp(x, spec.r);
    case Kind::RSP:
      return expand_rsp(x, spec.r, spec.eta, spec.sigma);
  }
  throw std::runtime_error("unreachable feature kind");
}

Eigen::MatrixXd expand_rows(const FeatureMapSpec& spec, const Eigen::MatrixXd& X) {
  const long D = expanded_dim(spec, X.cols());
  Eigen::MatrixXd Q(X.rows(), D);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Q.row(i) = expand(spec, X.row(i).transpose()).transpose();
  }
  return Q;
}

FeatureMapSpec FeatureMapSpec::parse(const std::string& text) {
  FeatureMapSpec spec;
  std::string kind_str = text;
  std::string params;
  if (auto pos = text.find(':'); pos != std::string::npos) {
    kind_str = text.substr(0, pos);
    params = text.substr(pos + 1);
  }
  if (kind_str == "lin") {
    spec.kind = Kind::LIN;
  } else if (kind_str == "mp") {
    spec.kind = Kind::MP;
  } else if (kind_str == "rp") {
    spec.kind = Kind::RP;
  } else if (kind_str == "rsp") {
    spec.kind = Kind::RSP;
  } else {
    throw ValidationError("unknown feature map \"" + text + "\"");
  }
  if (spec.kind == Kind::LIN) {
    if (!params.empty()) throw ValidationError("\"lin\" takes no parameters: \"" + text + "\"");
    return spec;
  }
  bool have_r = false;
  std::size_t start = 0;
  while (start <= params.size() && !params.empty()) {
    std::size_t pos = params.find(',', start);
    const std::string token =
        params.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ValidationError("bad method token \"" + token + "\"");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "r") {
      spec.r = parse_int_param(token, value);
      have_r = true;
    } else if (key == "eta" && spec.kind == Kind::RSP) {
      spec.eta = parse_double_param(token, value);
    } else if (key == "sigma" && spec.kind == Kind::RSP) {
      spec.sigma = parse_double_param(token, value);
    } else {
      throw ValidationError("unknown parameter \"" + key + "\" in \"" + text + "\"");
    }
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (!have_r) throw ValidationError("missing r in \"" + text + "\"");
  if (spec.r < 1) throw ValidationError("order r must be >= 1 in \"" + text + "\"");
  if (spec.kind == Kind::RSP && (spec.eta <= 0.0 || spec.sigma <= 0.0)) {
    throw ValidationError("eta and sigma must be positive in \"" + text + "\"");
  }
  return spec;
}

std::string FeatureMapSpec::to_string() const {
  auto fmt = [](double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  };
  switch (kind) {
    case Kind::LIN:
      return "lin";
    case Kind::MP:
      return "mp:r=" + std::to_string(r);
    case Kind::RP:
      return "rp:r=" + std::to_string(r);
    case Kind::RSP:
      return "rsp:r=" + std::to_string(r) + ",eta=" + fmt(eta) + ",sigma=" + fmt(sigma);
  }
  return "?";
}

}  // namespace kgc::featmap
