#include "kgc/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kgc/errors.hpp"
#include "kgc/matio.hpp"
#include "kgc/parallel.hpp"
#include "kgc/simgen.hpp"

namespace fs = std::filesystem;

namespace kgc::cli {

void RunManifest::add_input(const std::string& path) {
  input_digests[path] = matio::file_digest_hex(path);
}

void RunManifest::add_output(const std::string& path) { outputs.push_back(path); }

std::string RunManifest::run_id() const {
  std::string canon = command;
  for (const auto& [k, v] : flags) canon += "|" + k + "=" + v;
  canon += "|seed=" + std::to_string(seed);
  for (const auto& [k, v] : input_digests) canon += "|" + k + ":" + v;
  return matio::to_hex(matio::fnv1a64(canon.data(), canon.size()));
}

std::string RunManifest::to_json() const {
  nlohmann::json doc;
  doc["command"] = command;
  doc["flags"] = flags;
  doc["seed"] = seed;
  doc["input_digests"] = input_digests;
  doc["outputs"] = outputs;
  doc["version"] = version;
  doc["timestamp"] = timestamp;
  doc["run_id"] = run_id();
  return doc.dump(2);
}

void RunManifest::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << to_json() << '\n';
}

std::string current_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ValidationError("bad section header at line " + std::to_string(lineno));
      section = trim(t.substr(1, t.size() - 2));
      cfg.sections_[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("expected key = value at line " + std::to_string(lineno));
    }
    cfg.sections_[section][trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) const {
  if (!has(section, key)) return fallback;
  return std::stoi(get(section, key));
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  return std::stod(get(section, key));
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError("bad boolean \"" + v + "\" for " + section + "." + key);
}

std::vector<double> Config::get_double_list(const std::string& section,
                                            const std::string& key) const {
  std::vector<double> out;
  const std::string v = get(section, key);
  std::size_t start = 0;
  while (start <= v.size() && !v.empty()) {
    std::size_t pos = v.find(',', start);
    const std::string tok =
        trim(v.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (!tok.empty()) out.push_back(std::stod(tok));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

tsio::TimeSeriesMatrix load_series(const std::string& path, HeaderMode header) {
  bool has_header = false;
  switch (header) {
    case HeaderMode::yes:
      has_header = true;
      break;
    case HeaderMode::no:
      has_header = false;
      break;
    case HeaderMode::automatic:
      has_header = tsio::sniff_header(path);
      break;
  }
  return tsio::load_csv(path, has_header);
}

std::vector<std::string> list_input_files(const std::string& path) {
  std::vector<std::string> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") {
        files.push_back(entry.path().string());
      }
    }
    std::sort(files.begin(), files.end());
  } else if (fs::exists(path)) {
    files.push_back(path);
  } else {
    throw ValidationError("input not found: " + path);
  }
  if (files.empty()) throw ValidationError("no .csv inputs under " + path);
  return files;
}

std::vector<featmap::FeatureMapSpec> parse_method_list(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start <= text.size() && !text.empty()) {
    std::size_t pos = text.find(',', start);
    tokens.push_back(text.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  std::vector<std::string> merged;
  for (const auto& raw : tokens) {
    const std::string tok = trim(raw);
    if (tok.empty()) continue;
    const bool continuation = tok.find('=') != std::string::npos &&
                              tok.find(':') == std::string::npos && !merged.empty();
    if (continuation) {
      merged.back() += "," + tok;
    } else {
      merged.push_back(tok);
    }
  }
  if (merged.empty()) throw ValidationError("empty method list");
  std::vector<featmap::FeatureMapSpec> specs;
  specs.reserve(merged.size());
  for (const auto& m : merged) specs.push_back(featmap::FeatureMapSpec::parse(m));
  return specs;
}

namespace {

std::string subject_stem(const std::string& path) { return fs::path(path).stem().string(); }

}  // namespace

GcBatchResult run_gc_batch(const std::vector<std::string>& inputs, const GcOptions& opts,
                           const std::string& out_dir, RunManifest& manifest) {
  fs::create_directories(out_dir);
  GcBatchResult result;
  result.matrix_files.resize(inputs.size());
  result.selected_lags.assign(inputs.size(), opts.lag);

  std::vector<std::string> errors(inputs.size());
  parallel_for(inputs.size(), opts.jobs, [&](std::size_t i) {
    try {
      tsio::TimeSeriesMatrix ts = load_series(inputs[i], opts.header);
      if (opts.standardize) ts = tsio::standardize(ts);
      int p = opts.lag;
      if (opts.bic) {
        p = gc::select_lag_bic_all(ts, opts.p_max, opts.spec).global;
      }
      const gc::GCMatrix m = gc::gc_matrix(ts, p, opts.spec, opts.ridge, 1);
      const std::string out_path = (fs::path(out_dir) / (subject_stem(inputs[i]) + ".gc.csv")).string();
      gc::write_csv(m, out_path);
      result.matrix_files[i] = out_path;
      result.selected_lags[i] = p;
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  });

  nlohmann::json meta;
  meta["spec"] = opts.spec.to_string();
  meta["ridge"] = opts.ridge;
  meta["standardize"] = opts.standardize;
  meta["lag_mode"] = opts.bic ? "bic" : "fixed";
  nlohmann::json subjects = nlohmann::json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    manifest.add_input(inputs[i]);
    if (!errors[i].empty()) {
      result.failed_inputs.push_back(inputs[i]);
      subjects.push_back({{"input", inputs[i]}, {"error", errors[i]}});
      continue;
    }
    subjects.push_back({{"input", inputs[i]},
                        {"output", result.matrix_files[i]},
                        {"lag", result.selected_lags[i]}});
    manifest.add_output(result.matrix_files[i]);
  }
  meta["subjects"] = subjects;
  const std::string meta_path = (fs::path(out_dir) / "gc_meta.json").string();
  std::ofstream out(meta_path, std::ios::binary);
  out << meta.dump(2) << '\n';
  manifest.add_output(meta_path);

  // Drop failed entries from the file list but keep their report above.
  std::vector<std::string> ok_files;
  std::vector<int> ok_lags;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (errors[i].empty()) {
      ok_files.push_back(result.matrix_files[i]);
      ok_lags.push_back(result.selected_lags[i]);
    }
  }
  result.matrix_files = std::move(ok_files);
  result.selected_lags = std::move(ok_lags);
  return result;
}

namespace {

struct PipelineData {
  std::vector<tsio::TimeSeriesMatrix> series;  // group A then group B
  std::vector<int> labels;                     // 1 = group A (older), 0 = group B
  std::vector<std::string> names;
  std::size_t n_a = 0;
};

PipelineData load_pipeline_data(const Config& cfg, RunManifest& manifest) {
  const std::string dir_a = cfg.get("data", "group_a");
  const std::string dir_b = cfg.get("data", "group_b");
  if (dir_a.empty() || dir_b.empty()) {
    throw ValidationError("[data] group_a and group_b are required");
  }
  HeaderMode header = HeaderMode::automatic;
  const std::string h = cfg.get("data", "header", "auto");
  if (h == "yes") header = HeaderMode::yes;
  else if (h == "no") header = HeaderMode::no;
  else if (h != "auto") throw ValidationError("[data] header must be auto|yes|no");
  const bool standardize = cfg.get_bool("data", "standardize", true);

  PipelineData data;
  for (int group = 0; group < 2; ++group) {
    const auto files = list_input_files(group == 0 ? dir_a : dir_b);
    for (const auto& f : files) {
      manifest.add_input(f);
      tsio::TimeSeriesMatrix ts = load_series(f, header);
      if (standardize) ts = tsio::standardize(ts);
      data.series.push_back(std::move(ts));
      data.labels.push_back(group == 0 ? 1 : 0);
      data.names.push_back((group == 0 ? "a_" : "b_") + subject_stem(f));
    }
    if (group == 0) data.n_a = data.series.size();
  }
  if (data.n_a < 2 || data.series.size() - data.n_a < 2) {
    throw ValidationError("each group needs >= 2 subjects");
  }
  const Eigen::Index d = data.series.front().n_channels();
  for (const auto& ts : data.series) {
    if (ts.n_channels() != d) throw ValidationError("channel count differs across subjects");
  }
  return data;
}

std::vector<gc::GCMatrix> compute_gc_matrices(const PipelineData& data,
                                              const featmap::FeatureMapSpec& spec, bool bic,
                                              int lag, int p_max, double ridge, int jobs) {
  std::vector<gc::GCMatrix> out(data.series.size());
  parallel_for(data.series.size(), jobs, [&](std::size_t i) {
    int p = lag;
    if (bic) p = gc::select_lag_bic_all(data.series[i], p_max, spec).global;
    out[i] = gc::gc_matrix(data.series[i], p, spec, ridge, 1);
  });
  return out;
}

mlpipe::GridResult run_grid_stage(const PipelineData& data, const Config& cfg, int jobs,
                                  const std::string& out_path) {
  const bool bic = cfg.get_bool("gc", "bic", false);
  (void)bic;  // grid scoring always uses the fixed lag; BIC applies to the final matrices
  const int lag = cfg.get_int("gc", "lag", 1);
  const double ridge = cfg.get_double("gc", "ridge", 0.0);

  const std::string kind = cfg.get("grid", "kind", "rsp");
  std::vector<featmap::FeatureMapSpec> candidates;
  const auto r_list = cfg.get_double_list("grid", "r");
  if (r_list.empty()) throw ValidationError("[grid] r list is required");
  auto eta_list = cfg.get_double_list("grid", "eta");
  auto sigma_list = cfg.get_double_list("grid", "sigma");
  if (eta_list.empty()) eta_list = {1.0};
  if (sigma_list.empty()) sigma_list = {1.0};
  for (double rv : r_list) {
    featmap::FeatureMapSpec c;
    c.r = static_cast<int>(rv);
    if (kind == "rsp") {
      c.kind = featmap::Kind::RSP;
      for (double eta : eta_list) {
        for (double sig : sigma_list) {
          c.eta = eta;
          c.sigma = sig;
          candidates.push_back(c);
        }
      }
    } else if (kind == "mp" || kind == "rp") {
      c.kind = featmap::FeatureMapSpec::parse(kind + ":r=1").kind;
      candidates.push_back(c);
    } else {
      throw ValidationError("[grid] kind must be rsp|mp|rp");
    }
  }
  mlpipe::CVOptions grid_cv;
  grid_cv.folds = cfg.get_int("grid", "folds", 10);
  grid_cv.repeats = cfg.get_int("grid", "repeats", 5);
  grid_cv.C = cfg.get_double("grid", "C", 1.0);
  grid_cv.seed = static_cast<std::uint64_t>(cfg.get_int("grid", "seed", 1));
  const mlpipe::DataBuilder builder = [&](const featmap::FeatureMapSpec& cand) {
    const auto mats = compute_gc_matrices(data, cand, false, lag, 5, ridge, 1);
    std::vector<connectome::SubjectData> subjects(mats.size());
    for (std::size_t i = 0; i < mats.size(); ++i) {
      subjects[i].ec = mats[i].values;
      subjects[i].label = data.labels[i];
    }
    const auto table =
        connectome::assemble_features(subjects, nullptr, nullptr, connectome::FeatureMode::EC);
    return std::make_pair(table.features, table.labels);
  };
  const auto grid = mlpipe::grid_search(candidates, builder, grid_cv, jobs);

  nlohmann::json doc;
  doc["winner"] = grid.best.to_string();
  doc["winner_mean_accuracy"] = grid.best_report.mean_accuracy;
  nlohmann::json points = nlohmann::json::array();
  for (const auto& gp : grid.all) {
    points.push_back({{"spec", gp.spec.to_string()},
                      {"mean_accuracy", gp.report.mean_accuracy},
                      {"std_accuracy", gp.report.std_accuracy}});
  }
  doc["points"] = points;
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + out_path);
  out << doc.dump(2) << '\n';
  return grid;
}

connectome::FeatureMode parse_mode(const std::string& name) {
  if (name == "ec") return connectome::FeatureMode::EC;
  if (name == "fc") return connectome::FeatureMode::FC;
  if (name == "ec+fc") return connectome::FeatureMode::ECFC;
  throw ValidationError("unknown classify mode \"" + name + "\" (want ec|fc|ec+fc)");
}

void write_ablation_csv(const std::vector<mlpipe::AblationStep>& curve, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << "removed_fraction,removed_count,masked_accuracy,random_accuracy\n";
  for (const auto& s : curve) {
    out << matio::format_double(s.removed_fraction) << ',' << s.removed_count << ','
        << matio::format_double(s.masked_accuracy) << ','
        << matio::format_double(s.random_accuracy) << '\n';
  }
}

}  // namespace

PipelineOutcome run_pipeline(const Config& cfg, const std::string& config_path, int jobs) {
  PipelineOutcome outcome;
  RunManifest manifest;
  manifest.command = "pipeline";
  manifest.flags["config"] = config_path;
  manifest.seed = static_cast<std::uint64_t>(cfg.get_int("classify", "seed", 0));
  manifest.timestamp = current_timestamp();
  if (!config_path.empty() && fs::exists(config_path)) manifest.add_input(config_path);

  const std::string out_dir = cfg.get("output", "dir");
  if (out_dir.empty()) throw ValidationError("[output] dir is required");
  fs::create_directories(out_dir);
  outcome.out_dir = out_dir;
  const bool write_matrices = cfg.get_bool("output", "write_matrices", true);

  auto stage = [](const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& ex) {
      throw std::runtime_error("pipeline stage \"" + name + "\" failed: " + ex.what());
    }
  };

  PipelineData data;
  stage("load", [&] { data = load_pipeline_data(cfg, manifest); });

  const bool bic = cfg.get_bool("gc", "bic", false);
  const int lag = cfg.get_int("gc", "lag", 1);
  const int p_max = cfg.get_int("gc", "p_max", 5);
  const double ridge = cfg.get_double("gc", "ridge", 0.0);

  // Parameter selection: grid search over candidate feature maps, scored by
  // cross-validated accuracy on the vectorized causality matrices.
  featmap::FeatureMapSpec spec = featmap::FeatureMapSpec::parse(cfg.get("gc", "spec", "lin"));
  if (cfg.has("grid", "r")) {
    stage("grid", [&] {
      const std::string path = (fs::path(out_dir) / "grid.json").string();
      const auto grid = run_grid_stage(data, cfg, jobs, path);
      outcome.grid_used = true;
      outcome.grid_points = grid.all;
      spec = grid.best;
      manifest.add_output(path);
    });
  }
  outcome.chosen_spec = spec;

  std::vector<gc::GCMatrix> ec_mats;
  std::vector<Eigen::MatrixXd> fc_mats;
  stage("gc", [&] {
    ec_mats = compute_gc_matrices(data, spec, bic, lag, p_max, ridge, jobs);
    if (write_matrices) {
      fs::create_directories(fs::path(out_dir) / "ec");
      for (std::size_t i = 0; i < ec_mats.size(); ++i) {
        const std::string path = (fs::path(out_dir) / "ec" / (data.names[i] + ".csv")).string();
        gc::write_csv(ec_mats[i], path);
        manifest.add_output(path);
      }
    }
  });
  stage("fc", [&] {
    fc_mats.resize(data.series.size());
    parallel_for(data.series.size(), jobs,
                 [&](std::size_t i) { fc_mats[i] = connectome::pearson_fc(data.series[i]); });
    if (write_matrices) {
      fs::create_directories(fs::path(out_dir) / "fc");
      for (std::size_t i = 0; i < fc_mats.size(); ++i) {
        const std::string path = (fs::path(out_dir) / "fc" / (data.names[i] + ".csv")).string();
        matio::write_matrix_csv(fc_mats[i], path);
        manifest.add_output(path);
      }
    }
  });

  std::vector<Eigen::MatrixXd> ec_a, ec_b, fc_a, fc_b;
  for (std::size_t i = 0; i < data.series.size(); ++i) {
    (i < data.n_a ? ec_a : ec_b).push_back(ec_mats[i].values);
    (i < data.n_a ? fc_a : fc_b).push_back(fc_mats[i]);
  }

  connectome::SignificanceMask ec_mask, fc_mask, fused;
  stage("mask", [&] {
    const double alpha = cfg.get_double("mask", "alpha", 0.01);
    const double q = cfg.get_double("mask", "q", 0.05);
    const bool fisher_z = cfg.get_bool("mask", "fisher_z", false);
    ec_mask = connectome::group_difference_mask(ec_a, ec_b, alpha, q, false);
    if (cfg.get_bool("mask", "prune_bidirectional", true)) {
      ec_mask = connectome::prune_bidirectional(ec_mask);
    }
    fc_mask = connectome::symmetrize(connectome::group_difference_mask(fc_a, fc_b, alpha, q, fisher_z));
    fused = connectome::fuse_masks(ec_mask, fc_mask);
    outcome.ec_mask_count = ec_mask.n_selected;
    outcome.fc_mask_count = fc_mask.n_selected;
    outcome.fused_count = fused.n_selected;

    fs::create_directories(fs::path(out_dir) / "masks");
    const auto mask_out = [&](const connectome::SignificanceMask& m, const std::string& name) {
      const std::string csv = (fs::path(out_dir) / "masks" / (name + ".csv")).string();
      const std::string json = (fs::path(out_dir) / "masks" / (name + ".json")).string();
      connectome::write_mask_csv(m, csv);
      connectome::write_mask_json(m, json);
      manifest.add_output(csv);
      manifest.add_output(json);
    };
    mask_out(ec_mask, "ec_mask");
    mask_out(fc_mask, "fc_mask");
    mask_out(fused, "fused_mask");
    const std::string diff_path = (fs::path(out_dir) / "masks" / "ec_mean_diff.csv").string();
    matio::write_matrix_csv(connectome::group_mean_diff(ec_a, ec_b), diff_path);
    manifest.add_output(diff_path);
  });

  std::vector<connectome::SubjectData> subjects(data.series.size());
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    subjects[i].ec = ec_mats[i].values;
    subjects[i].fc = fc_mats[i];
    subjects[i].label = data.labels[i];
  }

  mlpipe::CVOptions classify_cv;
  classify_cv.folds = cfg.get_int("classify", "folds", 10);
  classify_cv.repeats = cfg.get_int("classify", "repeats", 10);
  classify_cv.C = cfg.get_double("classify", "C", 1.0);
  classify_cv.seed = static_cast<std::uint64_t>(cfg.get_int("classify", "seed", 0));
  classify_cv.jobs = jobs;
  const bool fc_full = cfg.get_bool("classify", "fc_full", false);

  // Which mask (if any) filters the classification features; the paper-style
  // run classifies the unmasked vectorized matrices.
  const std::string apply_mask = cfg.get("classify", "apply_mask", "none");
  const connectome::SignificanceMask* cls_ec_mask = nullptr;
  const connectome::SignificanceMask* cls_fc_mask = nullptr;
  if (apply_mask == "fused") {
    cls_ec_mask = &fused;
    cls_fc_mask = &fused;
  } else if (apply_mask == "ec") {
    cls_ec_mask = &ec_mask;
  } else if (apply_mask != "none") {
    throw ValidationError("[classify] apply_mask must be none|ec|fused");
  }

  stage("classify", [&] {
    fs::create_directories(fs::path(out_dir) / "features");
    fs::create_directories(fs::path(out_dir) / "classify");
    std::string modes_text = cfg.get("classify", "modes", "ec,fc,ec+fc");
    std::istringstream ms(modes_text);
    std::string mode_name;
    while (std::getline(ms, mode_name, ',')) {
      mode_name = trim(mode_name);
      if (mode_name.empty()) continue;
      const auto mode = parse_mode(mode_name);
      const auto table =
          connectome::assemble_features(subjects, cls_ec_mask, cls_fc_mask, mode, fc_full);
      std::string safe = mode_name;
      std::replace(safe.begin(), safe.end(), '+', '_');
      const std::string feat = (fs::path(out_dir) / "features" / ("features_" + safe + ".csv")).string();
      const std::string lab = (fs::path(out_dir) / "features" / "labels.csv").string();
      const std::string idx = (fs::path(out_dir) / "features" / ("index_" + safe + ".json")).string();
      connectome::write_feature_table(table, feat, lab, idx);
      manifest.add_output(feat);
      manifest.add_output(idx);

      const auto report = mlpipe::cross_validate(table.features, table.labels, classify_cv);
      outcome.reports[mode_name] = report;
      const std::string rep_path = (fs::path(out_dir) / "classify" / ("eval_" + safe + ".json")).string();
      std::ofstream out(rep_path, std::ios::binary);
      out << mlpipe::eval_report_to_json(report) << '\n';
      manifest.add_output(rep_path);
    }
    manifest.add_output((fs::path(out_dir) / "features" / "labels.csv").string());
  });

  if (cfg.get_bool("ablate", "enabled", true)) {
    stage("ablate", [&] {
      // Full EC feature pool; the removal set is the fused-mask cells ranked
      // by the EC-test p-value (most significant first).
      const auto table = connectome::assemble_features(subjects, nullptr, nullptr,
                                                       connectome::FeatureMode::EC);
      const Eigen::Index d = subjects.front().ec.rows();
      std::vector<std::pair<double, long>> ranked;
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
          if (fused.mask(i, j)) ranked.push_back({ec_mask.pvalues(i, j), i * d + j});
      std::sort(ranked.begin(), ranked.end());
      std::vector<long> removal;
      removal.reserve(ranked.size());
      for (const auto& [p, col] : ranked) removal.push_back(col);

      mlpipe::AblationOptions ab;
      ab.step_fraction = cfg.get_double("ablate", "step", 0.1);
      ab.random_draws = cfg.get_int("ablate", "draws", 10);
      ab.cv.folds = cfg.get_int("ablate", "folds", 10);
      ab.cv.repeats = cfg.get_int("ablate", "repeats", 3);
      ab.cv.C = cfg.get_double("ablate", "C", 1.0);
      ab.cv.seed = static_cast<std::uint64_t>(cfg.get_int("ablate", "seed", 0));
      ab.cv.jobs = jobs;
      outcome.ablation = mlpipe::ablation(table.features, table.labels, removal, ab);
      const std::string path = (fs::path(out_dir) / "ablation.csv").string();
      write_ablation_csv(outcome.ablation, path);
      manifest.add_output(path);
    });
  }

  if (cfg.get_bool("metrics", "enabled", true)) {
    stage("metrics", [&] {
      std::vector<netmetrics::WeightedDigraph> graphs_a, graphs_b;
      for (const auto& m : ec_a) graphs_a.push_back(netmetrics::make_digraph(m));
      for (const auto& m : ec_b) graphs_b.push_back(netmetrics::make_digraph(m));
      const double alpha = cfg.get_double("metrics", "alpha", 0.01);
      outcome.efficiency = netmetrics::compare_group_efficiency(graphs_a, graphs_b, alpha);

      const double threshold = cfg.get_double("metrics", "binarize_threshold", 0.0);
      nlohmann::json doc;
      doc["eglob_mean_group_a"] = outcome.efficiency.mean_a;
      doc["eglob_mean_group_b"] = outcome.efficiency.mean_b;
      doc["welch_t"] = outcome.efficiency.t;
      doc["welch_p"] = outcome.efficiency.p;
      doc["significant"] = outcome.efficiency.significant;
      doc["eglob_group_a"] = outcome.efficiency.eglob_a;
      doc["eglob_group_b"] = outcome.efficiency.eglob_b;
      for (int g = 0; g < 2; ++g) {
        const auto& mats = g == 0 ? ec_a : ec_b;
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(mats.front().rows(), mats.front().cols());
        for (const auto& m : mats) mean += m;
        mean /= static_cast<double>(mats.size());
        const auto adj = netmetrics::binarize(mean, threshold);
        const auto degrees = netmetrics::node_degrees(adj);
        const auto hubs = netmetrics::detect_hubs(degrees);
        nlohmann::json jg;
        jg["degrees"] = degrees;
        nlohmann::json hub_list = nlohmann::json::array();
        for (int h : hubs) {
          hub_list.push_back({{"node", h}, {"degree", degrees[static_cast<std::size_t>(h)]}});
        }
        jg["hubs"] = hub_list;
        const auto leff = netmetrics::local_efficiency(
            netmetrics::make_digraph(mean));
        jg["eloc_mean"] = leff.mean;
        doc[g == 0 ? "group_a" : "group_b"] = jg;
      }
      const std::string path = (fs::path(out_dir) / "metrics.json").string();
      std::ofstream out(path, std::ios::binary);
      out << doc.dump(2) << '\n';
      manifest.add_output(path);
    });
  }

  nlohmann::json summary;
  summary["chosen_spec"] = outcome.chosen_spec.to_string();
  summary["grid_used"] = outcome.grid_used;
  summary["ec_mask_count"] = outcome.ec_mask_count;
  summary["fc_mask_count"] = outcome.fc_mask_count;
  summary["fused_count"] = outcome.fused_count;
  nlohmann::json reports;
  for (const auto& [mode, rep] : outcome.reports) {
    reports[mode] = {{"mean_accuracy", rep.mean_accuracy}, {"std_accuracy", rep.std_accuracy}};
  }
  summary["classification"] = reports;
  summary["run_id"] = manifest.run_id();
  const std::string summary_path = (fs::path(out_dir) / "summary.json").string();
  {
    std::ofstream out(summary_path, std::ios::binary);
    out << summary.dump(2) << '\n';
  }
  manifest.add_output(summary_path);
  manifest.write((fs::path(out_dir) / "manifest.json").string());
  return outcome;
}

mlpipe::GridResult run_grid_command(const Config& cfg, const std::string& config_path, int jobs,
                                    const std::string& out_path) {
  RunManifest manifest;
  manifest.command = "grid";
  manifest.flags["config"] = config_path;
  manifest.seed = static_cast<std::uint64_t>(cfg.get_int("grid", "seed", 1));
  manifest.timestamp = current_timestamp();
  if (!config_path.empty() && fs::exists(config_path)) manifest.add_input(config_path);
  const PipelineData data = load_pipeline_data(cfg, manifest);
  const auto grid = run_grid_stage(data, cfg, jobs, out_path);
  manifest.add_output(out_path);
  manifest.write(out_path + ".manifest.json");
  return grid;
}

}  // namespace kgc::cli
