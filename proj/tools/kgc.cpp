// kgc: kernel Granger causality toolkit.
//
// Subcommands cover the whole pipeline: simulate | gc | fc | mask | fuse |
// assemble | classify | grid | ablate | metrics | pipeline.
// Exit codes: 0 success, 2 usage/validation error, 1 internal error; errors
// go to stderr as a JSON envelope.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "kgc/cli.hpp"
#include "kgc/connectome.hpp"
#include "kgc/errors.hpp"
#include "kgc/featmap.hpp"
#include "kgc/gc_engine.hpp"
#include "kgc/matio.hpp"
#include "kgc/mlpipe.hpp"
#include "kgc/netmetrics.hpp"
#include "kgc/simgen.hpp"
#include "kgc/tsio.hpp"

namespace fs = std::filesystem;
using namespace kgc;

namespace {

std::string current_timestamp_iso();

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

cli::HeaderMode parse_header_mode(const std::string& v) {
  if (v == "auto") return cli::HeaderMode::automatic;
  if (v == "yes") return cli::HeaderMode::yes;
  if (v == "no") return cli::HeaderMode::no;
  throw ValidationError("--header must be auto|yes|no");
}

std::vector<Eigen::MatrixXd> load_matrix_group(const std::string& path) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& f : cli::list_input_files(path)) {
    out.push_back(gc::read_matrix_file(f).values);
  }
  return out;
}

struct SimulateArgs {
  std::string model = "linear";
  int runs = 50;
  int length = 1000;
  std::uint64_t seed = 0;
  std::string methods = "lin,mp:r=2,rp:r=2,rsp:r=2,eta=1,sigma=1";
  int lag = 1;
  bool bic = false;
  int p_max = 5;
  double ridge = 0.0;
  bool no_standardize = false;
  int jobs = 1;
  std::string out;
  std::string dump_series;
  double c2 = 0.8, c3 = -0.7;
  double a = 1.8, s = 0.02, e = 0.2;
};

void cmd_simulate(const SimulateArgs& args) {
  const auto methods = cli::parse_method_list(args.methods);
  simgen::Model model;
  if (args.model == "linear") {
    model = simgen::Model::linear;
  } else if (args.model == "nonlinear") {
    model = simgen::Model::nonlinear;
  } else {
    throw ValidationError("--model must be linear|nonlinear");
  }
  simgen::BenchmarkOptions opts;
  opts.M = args.length;
  opts.runs = args.runs;
  opts.lag.bic = args.bic;
  opts.lag.p = args.lag;
  opts.lag.p_max = args.p_max;
  opts.ridge = args.ridge;
  opts.standardize = !args.no_standardize;
  opts.jobs = args.jobs;
  opts.c2 = args.c2;
  opts.c3 = args.c3;
  opts.a = args.a;
  opts.s = args.s;
  opts.e = args.e;

  cli::RunManifest manifest;
  manifest.command = "simulate";
  manifest.flags = {{"model", args.model},
                    {"runs", std::to_string(args.runs)},
                    {"length", std::to_string(args.length)},
                    {"methods", args.methods},
                    {"lag", args.bic ? "bic" : std::to_string(args.lag)},
                    {"ridge", matio::format_double(args.ridge)},
                    {"standardize", opts.standardize ? "true" : "false"}};
  manifest.seed = args.seed;
  manifest.timestamp = current_timestamp_iso();

  if (!args.dump_series.empty()) {
    fs::create_directories(args.dump_series);
    for (int run = 0; run < args.runs; ++run) {
      const std::uint64_t run_seed = args.seed + static_cast<std::uint64_t>(run);
      const auto sim = (model == simgen::Model::linear)
                           ? simgen::gen_linear(args.length, run_seed, args.c2, args.c3)
                           : simgen::gen_nonlinear(args.length, run_seed, args.a, args.s, args.e);
      char name[32];
      std::snprintf(name, sizeof(name), "run_%04d.csv", run);
      const std::string path = (fs::path(args.dump_series) / name).string();
      matio::write_matrix_csv(sim.ts.data, path);
      manifest.add_output(path);
    }
  }

  const auto report = simgen::run_benchmark(model, methods, args.seed, opts);
  const std::string json = simgen::report_to_json(report);
  if (args.out.empty()) {
    std::cout << json << '\n';
  } else {
    write_text(args.out, json);
    manifest.add_output(args.out);
    manifest.write(args.out + ".manifest.json");
  }
}

struct GcArgs {
  std::string input;
  std::string spec = "lin";
  int lag = 1;
  bool bic = false;
  int p_max = 5;
  double ridge = 0.0;
  bool no_standardize = false;
  std::string header = "auto";
  std::string out = "gc_out";
  int jobs = 1;
};

int cmd_gc(const GcArgs& args) {
  cli::GcOptions opts;
  opts.spec = featmap::FeatureMapSpec::parse(args.spec);
  opts.bic = args.bic;
  opts.lag = args.lag;
  opts.p_max = args.p_max;
  opts.ridge = args.ridge;
  opts.standardize = !args.no_standardize;
  opts.header = parse_header_mode(args.header);
  opts.jobs = args.jobs;

  cli::RunManifest manifest;
  manifest.command = "gc";
  manifest.flags = {{"input", args.input},
                    {"spec", args.spec},
                    {"lag", args.bic ? "bic" : std::to_string(args.lag)},
                    {"ridge", matio::format_double(args.ridge)},
                    {"standardize", opts.standardize ? "true" : "false"},
                    {"out", args.out}};
  manifest.timestamp = current_timestamp_iso();

  const auto inputs = cli::list_input_files(args.input);
  const auto result = cli::run_gc_batch(inputs, opts, args.out, manifest);
  manifest.write((fs::path(args.out) / "manifest.json").string());
  if (!result.failed_inputs.empty()) {
    nlohmann::json err;
    err["error"] = {{"type", "batch"},
                    {"message", std::to_string(result.failed_inputs.size()) + " input(s) failed"},
                    {"inputs", result.failed_inputs}};
    std::cerr << err.dump() << '\n';
    return 1;
  }
  return 0;
}

struct FcArgs {
  std::string input;
  std::string header = "auto";
  std::string out = "fc_out";
};

void cmd_fc(const FcArgs& args) {
  cli::RunManifest manifest;
  manifest.command = "fc";
  manifest.flags = {{"input", args.input}, {"out", args.out}};
  manifest.timestamp = current_timestamp_iso();
  fs::create_directories(args.out);
  for (const auto& f : cli::list_input_files(args.input)) {
    manifest.add_input(f);
    const auto ts = cli::load_series(f, parse_header_mode(args.header));
    const auto fc = connectome::pearson_fc(ts);
    const std::string path = (fs::path(args.out) / (fs::path(f).stem().string() + ".fc.csv")).string();
    matio::write_matrix_csv(fc, path);
    manifest.add_output(path);
  }
  manifest.write((fs::path(args.out) / "manifest.json").string());
}

struct MaskArgs {
  std::string group_a, group_b;
  double alpha = 0.01;
  double q = 0.05;
  bool prune = false;
  bool fisher_z = false;
  bool symmetrize = false;
  std::string t_sweep;
  std::string out = "mask.csv";
  std::string json_out;
};

void cmd_mask(const MaskArgs& args) {
  const auto a = load_matrix_group(args.group_a);
  const auto b = load_matrix_group(args.group_b);
  auto mask = connectome::group_difference_mask(a, b, args.alpha, args.q, args.fisher_z);
  if (args.prune) mask = connectome::prune_bidirectional(mask);
  if (args.symmetrize) mask = connectome::symmetrize(mask);
  connectome::write_mask_csv(mask, args.out);
  nlohmann::json doc;
  doc["alpha"] = mask.alpha;
  doc["q"] = mask.q;
  doc["n_selected"] = mask.n_selected;
  doc["d"] = mask.mask.rows();
  if (!args.t_sweep.empty()) {
    // Count of cells exceeding each |t| threshold, the raw-threshold sweep.
    nlohmann::json sweep = nlohmann::json::array();
    std::istringstream ss(args.t_sweep);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const double thr = std::stod(tok);
      long count = 0;
      for (Eigen::Index i = 0; i < mask.tvalues.rows(); ++i)
        for (Eigen::Index j = 0; j < mask.tvalues.cols(); ++j)
          if (i != j && std::abs(mask.tvalues(i, j)) > thr) ++count;
      sweep.push_back({{"threshold", thr}, {"count", count}});
    }
    doc["t_sweep"] = sweep;
  }
  const std::string json_path = args.json_out.empty() ? args.out + ".json" : args.json_out;
  write_text(json_path, doc.dump(2));

  cli::RunManifest manifest;
  manifest.command = "mask";
  manifest.flags = {{"group_a", args.group_a}, {"group_b", args.group_b},
                    {"alpha", matio::format_double(args.alpha)},
                    {"q", matio::format_double(args.q)}};
  manifest.timestamp = current_timestamp_iso();
  for (const auto& f : cli::list_input_files(args.group_a)) manifest.add_input(f);
  for (const auto& f : cli::list_input_files(args.group_b)) manifest.add_input(f);
  manifest.add_output(args.out);
  manifest.add_output(json_path);
  manifest.write(args.out + ".manifest.json");
}

struct FuseArgs {
  std::string ec, fc;
  bool symmetrize_fc = false;
  std::string out = "fused.csv";
};

void cmd_fuse(const FuseArgs& args) {
  const auto ec = connectome::read_mask_csv(args.ec);
  auto fc = connectome::read_mask_csv(args.fc);
  if (args.symmetrize_fc) fc = connectome::symmetrize(fc);
  const auto fused = connectome::fuse_masks(ec, fc);
  connectome::write_mask_csv(fused, args.out);
  connectome::write_mask_json(fused, args.out + ".json");

  cli::RunManifest manifest;
  manifest.command = "fuse";
  manifest.flags = {{"ec", args.ec}, {"fc", args.fc}};
  manifest.timestamp = current_timestamp_iso();
  manifest.add_input(args.ec);
  manifest.add_input(args.fc);
  manifest.add_output(args.out);
  manifest.write(args.out + ".manifest.json");
}

struct AssembleArgs {
  std::string ec_dir, fc_dir, labels;
  std::string mode = "ec";
  std::string mask_ec, mask_fc;
  bool fc_full = false;
  std::string out_features = "features.csv";
  std::string out_labels = "labels_out.csv";
  std::string out_index = "feature_index.json";
};

void cmd_assemble(const AssembleArgs& args) {
  const auto labels = matio::read_labels_csv(args.labels);
  std::vector<std::string> ec_files, fc_files;
  if (!args.ec_dir.empty()) ec_files = cli::list_input_files(args.ec_dir);
  if (!args.fc_dir.empty()) fc_files = cli::list_input_files(args.fc_dir);
  const std::size_t n = std::max(ec_files.size(), fc_files.size());
  if (n == 0) throw ValidationError("need --ec-dir and/or --fc-dir");
  if (!ec_files.empty() && ec_files.size() != n) throw ValidationError("EC/FC subject counts differ");
  if (!fc_files.empty() && fc_files.size() != n) throw ValidationError("EC/FC subject counts differ");
  if (labels.size() != n) {
    throw ValidationError("label count " + std::to_string(labels.size()) +
                          " does not match subject count " + std::to_string(n));
  }
  std::vector<connectome::SubjectData> subjects(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!ec_files.empty()) subjects[i].ec = gc::read_matrix_file(ec_files[i]).values;
    if (!fc_files.empty()) subjects[i].fc = gc::read_matrix_file(fc_files[i]).values;
    subjects[i].label = labels[i];
  }
  connectome::FeatureMode mode;
  if (args.mode == "ec") mode = connectome::FeatureMode::EC;
  else if (args.mode == "fc") mode = connectome::FeatureMode::FC;
  else if (args.mode == "ec+fc") mode = connectome::FeatureMode::ECFC;
  else throw ValidationError("--mode must be ec|fc|ec+fc");

  connectome::SignificanceMask mask_ec, mask_fc;
  const connectome::SignificanceMask* pec = nullptr;
  const connectome::SignificanceMask* pfc = nullptr;
  if (!args.mask_ec.empty()) {
    mask_ec = connectome::read_mask_csv(args.mask_ec);
    pec = &mask_ec;
  }
  if (!args.mask_fc.empty()) {
    mask_fc = connectome::read_mask_csv(args.mask_fc);
    pfc = &mask_fc;
  }
  const auto table = connectome::assemble_features(subjects, pec, pfc, mode, args.fc_full);
  connectome::write_feature_table(table, args.out_features, args.out_labels, args.out_index);

  cli::RunManifest manifest;
  manifest.command = "assemble";
  manifest.flags = {{"mode", args.mode}, {"fc_full", args.fc_full ? "true" : "false"}};
  manifest.timestamp = current_timestamp_iso();
  for (const auto& f : ec_files) manifest.add_input(f);
  for (const auto& f : fc_files) manifest.add_input(f);
  manifest.add_input(args.labels);
  manifest.add_output(args.out_features);
  manifest.add_output(args.out_labels);
  manifest.add_output(args.out_index);
  manifest.write(args.out_features + ".manifest.json");
}

struct ClassifyArgs {
  std::string features, labels;
  int folds = 10;
  int repeats = 100;
  double C = 1.0;
  int epochs = 200;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;
};

void cmd_classify(const ClassifyArgs& args) {
  const Eigen::MatrixXd X = matio::read_matrix_csv(args.features);
  const auto y = matio::read_labels_csv(args.labels);
  mlpipe::CVOptions opts;
  opts.folds = args.folds;
  opts.repeats = args.repeats;
  opts.C = args.C;
  opts.epochs = args.epochs;
  opts.seed = args.seed;
  opts.jobs = args.jobs;
  const auto report = mlpipe::cross_validate(X, y, opts);
  const std::string json = mlpipe::eval_report_to_json(report);
  if (args.out.empty()) {
    std::cout << json << '\n';
  } else {
    write_text(args.out, json);
    cli::RunManifest manifest;
    manifest.command = "classify";
    manifest.flags = {{"features", args.features}, {"labels", args.labels},
                      {"folds", std::to_string(args.folds)},
                      {"repeats", std::to_string(args.repeats)},
                      {"C", matio::format_double(args.C)}};
    manifest.seed = args.seed;
    manifest.timestamp = current_timestamp_iso();
    manifest.add_input(args.features);
    manifest.add_input(args.labels);
    manifest.add_output(args.out);
    manifest.write(args.out + ".manifest.json");
  }
}

struct AblateArgs {
  std::string features, labels, removal;
  double step = 0.1;
  int draws = 10;
  int folds = 10;
  int repeats = 3;
  double C = 1.0;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out = "ablation.csv";
};

void cmd_ablate(const AblateArgs& args) {
  const Eigen::MatrixXd X = matio::read_matrix_csv(args.features);
  const auto y = matio::read_labels_csv(args.labels);
  std::vector<long> removal;
  {
    std::ifstream in(args.removal, std::ios::binary);
    if (!in) throw ValidationError("cannot open: " + args.removal);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      removal.push_back(std::stol(line));
    }
  }
  mlpipe::AblationOptions opts;
  opts.step_fraction = args.step;
  opts.random_draws = args.draws;
  opts.cv.folds = args.folds;
  opts.cv.repeats = args.repeats;
  opts.cv.C = args.C;
  opts.cv.seed = args.seed;
  opts.cv.jobs = args.jobs;
  const auto curve = mlpipe::ablation(X, y, removal, opts);
  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + args.out);
  out << "removed_fraction,removed_count,masked_accuracy,random_accuracy\n";
  for (const auto& s : curve) {
    out << matio::format_double(s.removed_fraction) << ',' << s.removed_count << ','
        << matio::format_double(s.masked_accuracy) << ','
        << matio::format_double(s.random_accuracy) << '\n';
  }
  cli::RunManifest manifest;
  manifest.command = "ablate";
  manifest.flags = {{"features", args.features}, {"removal", args.removal},
                    {"step", matio::format_double(args.step)}};
  manifest.seed = args.seed;
  manifest.timestamp = current_timestamp_iso();
  manifest.add_input(args.features);
  manifest.add_input(args.labels);
  manifest.add_input(args.removal);
  manifest.add_output(args.out);
  manifest.write(args.out + ".manifest.json");
}

struct MetricsArgs {
  std::string input;
  double binarize_threshold = 0.0;
  std::string out;
};

void cmd_metrics(const MetricsArgs& args) {
  const auto m = gc::read_matrix_file(args.input);
  const auto g = netmetrics::make_digraph(m.values);
  const double eglob = netmetrics::global_efficiency(g);
  const auto eloc = netmetrics::local_efficiency(g);
  const auto adj = netmetrics::binarize(m.values, args.binarize_threshold);
  const auto degrees = netmetrics::node_degrees(adj);
  const auto hubs = netmetrics::detect_hubs(degrees);

  nlohmann::json doc;
  doc["input"] = args.input;
  doc["binarize_threshold"] = args.binarize_threshold;
  doc["eglob"] = eglob;
  doc["eloc_mean"] = eloc.mean;
  doc["eloc_per_node"] = std::vector<double>(eloc.per_node.begin(), eloc.per_node.end());
  doc["degrees"] = degrees;
  nlohmann::json hub_list = nlohmann::json::array();
  for (int h : hubs) {
    hub_list.push_back({{"node", h}, {"degree", degrees[static_cast<std::size_t>(h)]}});
  }
  doc["hubs"] = hub_list;
  if (args.out.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    write_text(args.out, doc.dump(2));
    cli::RunManifest manifest;
    manifest.command = "metrics";
    manifest.flags = {{"input", args.input},
                      {"binarize_threshold", matio::format_double(args.binarize_threshold)}};
    manifest.timestamp = current_timestamp_iso();
    manifest.add_input(args.input);
    manifest.add_output(args.out);
    manifest.write(args.out + ".manifest.json");
  }
}

std::string current_timestamp_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kgc: linear and kernel-based Granger causality toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Run the synthetic causality benchmarks");
  c_sim->add_option("--model", sim.model, "linear|nonlinear")->required();
  c_sim->add_option("--runs", sim.runs);
  c_sim->add_option("--length", sim.length);
  c_sim->add_option("--seed", sim.seed);
  c_sim->add_option("--methods", sim.methods, "comma-separated feature map specs");
  c_sim->add_option("--lag", sim.lag);
  c_sim->add_flag("--bic", sim.bic, "select lag by BIC per run");
  c_sim->add_option("--p-max", sim.p_max);
  c_sim->add_option("--ridge", sim.ridge);
  c_sim->add_flag("--no-standardize", sim.no_standardize);
  c_sim->add_option("--jobs", sim.jobs);
  c_sim->add_option("--out", sim.out, "report JSON path (default stdout)");
  c_sim->add_option("--dump-series", sim.dump_series, "directory for per-run series CSVs");
  c_sim->add_option("--c2", sim.c2, "linear model: X2 coupling");
  c_sim->add_option("--c3", sim.c3, "linear model: X3 coupling");
  c_sim->add_option("--a", sim.a, "nonlinear map parameter a");
  c_sim->add_option("--s", sim.s, "nonlinear noise scale s");
  c_sim->add_option("--e", sim.e, "nonlinear coupling e");

  GcArgs gc_args;
  auto* c_gc = app.add_subcommand("gc", "Granger causality matrices for subject CSVs");
  c_gc->add_option("--input", gc_args.input, "CSV file or directory")->required();
  c_gc->add_option("--spec", gc_args.spec, "feature map spec");
  c_gc->add_option("--lag", gc_args.lag);
  c_gc->add_flag("--bic", gc_args.bic);
  c_gc->add_option("--p-max", gc_args.p_max);
  c_gc->add_option("--ridge", gc_args.ridge);
  c_gc->add_flag("--no-standardize", gc_args.no_standardize);
  c_gc->add_option("--header", gc_args.header, "auto|yes|no");
  c_gc->add_option("--out", gc_args.out, "output directory");
  c_gc->add_option("--jobs", gc_args.jobs);

  FcArgs fc_args;
  auto* c_fc = app.add_subcommand("fc", "Pearson functional connectivity matrices");
  c_fc->add_option("--input", fc_args.input)->required();
  c_fc->add_option("--header", fc_args.header, "auto|yes|no");
  c_fc->add_option("--out", fc_args.out, "output directory");

  MaskArgs mask_args;
  auto* c_mask = app.add_subcommand("mask", "Group-difference significance mask");
  c_mask->add_option("--group-a", mask_args.group_a)->required();
  c_mask->add_option("--group-b", mask_args.group_b)->required();
  c_mask->add_option("--alpha", mask_args.alpha);
  c_mask->add_option("--q", mask_args.q);
  c_mask->add_flag("--prune-bidirectional", mask_args.prune);
  c_mask->add_flag("--fisher-z", mask_args.fisher_z);
  c_mask->add_flag("--symmetrize", mask_args.symmetrize);
  c_mask->add_option("--t-sweep", mask_args.t_sweep, "comma-separated |t| thresholds to count");
  c_mask->add_option("--out", mask_args.out);
  c_mask->add_option("--json", mask_args.json_out);

  FuseArgs fuse_args;
  auto* c_fuse = app.add_subcommand("fuse", "Element-wise AND of two masks");
  c_fuse->add_option("--ec", fuse_args.ec)->required();
  c_fuse->add_option("--fc", fuse_args.fc)->required();
  c_fuse->add_flag("--symmetrize-fc", fuse_args.symmetrize_fc);
  c_fuse->add_option("--out", fuse_args.out);

  AssembleArgs asm_args;
  auto* c_asm = app.add_subcommand("assemble", "Subject feature table from EC/FC matrices");
  c_asm->add_option("--ec-dir", asm_args.ec_dir);
  c_asm->add_option("--fc-dir", asm_args.fc_dir);
  c_asm->add_option("--labels", asm_args.labels)->required();
  c_asm->add_option("--mode", asm_args.mode, "ec|fc|ec+fc");
  c_asm->add_option("--mask-ec", asm_args.mask_ec);
  c_asm->add_option("--mask-fc", asm_args.mask_fc);
  c_asm->add_flag("--fc-full", asm_args.fc_full, "vectorize the full FC matrix, not upper triangle");
  c_asm->add_option("--out-features", asm_args.out_features);
  c_asm->add_option("--out-labels", asm_args.out_labels);
  c_asm->add_option("--out-index", asm_args.out_index);

  ClassifyArgs cls_args;
  auto* c_cls = app.add_subcommand("classify", "Cross-validated linear SVM accuracy");
  c_cls->add_option("--features", cls_args.features)->required();
  c_cls->add_option("--labels", cls_args.labels)->required();
  c_cls->add_option("--folds", cls_args.folds);
  c_cls->add_option("--repeats", cls_args.repeats);
  c_cls->add_option("--C", cls_args.C);
  c_cls->add_option("--epochs", cls_args.epochs);
  c_cls->add_option("--seed", cls_args.seed);
  c_cls->add_option("--jobs", cls_args.jobs);
  c_cls->add_option("--out", cls_args.out, "report JSON path (default stdout)");

  std::string grid_config, grid_out = "grid.json";
  int grid_jobs = 1;
  auto* c_grid = app.add_subcommand("grid", "Feature map grid search from a config file");
  c_grid->add_option("--config", grid_config)->required();
  c_grid->add_option("--out", grid_out);
  c_grid->add_option("--jobs", grid_jobs);

  AblateArgs abl_args;
  auto* c_abl = app.add_subcommand("ablate", "Ranked-set removal curve vs random baseline");
  c_abl->add_option("--features", abl_args.features)->required();
  c_abl->add_option("--labels", abl_args.labels)->required();
  c_abl->add_option("--removal", abl_args.removal, "ranked column indices, one per line")->required();
  c_abl->add_option("--step", abl_args.step);
  c_abl->add_option("--draws", abl_args.draws);
  c_abl->add_option("--folds", abl_args.folds);
  c_abl->add_option("--repeats", abl_args.repeats);
  c_abl->add_option("--C", abl_args.C);
  c_abl->add_option("--seed", abl_args.seed);
  c_abl->add_option("--jobs", abl_args.jobs);
  c_abl->add_option("--out", abl_args.out);

  MetricsArgs met_args;
  auto* c_met = app.add_subcommand("metrics", "Graph metrics of a GC matrix");
  c_met->add_option("--input", met_args.input)->required();
  c_met->add_option("--binarize-threshold", met_args.binarize_threshold);
  c_met->add_option("--out", met_args.out, "JSON path (default stdout)");

  std::string pipe_config;
  int pipe_jobs = 1;
  auto* c_pipe = app.add_subcommand("pipeline", "End-to-end run from a config file");
  c_pipe->add_option("--config", pipe_config)->required();
  c_pipe->add_option("--jobs", pipe_jobs);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*c_sim) cmd_simulate(sim);
    if (*c_gc) return cmd_gc(gc_args);
    if (*c_fc) cmd_fc(fc_args);
    if (*c_mask) cmd_mask(mask_args);
    if (*c_fuse) cmd_fuse(fuse_args);
    if (*c_asm) cmd_assemble(asm_args);
    if (*c_cls) cmd_classify(cls_args);
    if (*c_grid) {
      const auto cfg = cli::Config::parse_file(grid_config);
      const auto grid = cli::run_grid_command(cfg, grid_config, grid_jobs, grid_out);
      std::cout << "winner: " << grid.best.to_string() << " mean_accuracy "
                << grid.best_report.mean_accuracy << '\n';
    }
    if (*c_abl) cmd_ablate(abl_args);
    if (*c_met) cmd_metrics(met_args);
    if (*c_pipe) {
      const auto cfg = cli::Config::parse_file(pipe_config);
      const auto outcome = cli::run_pipeline(cfg, pipe_config, pipe_jobs);
      std::cout << "pipeline complete: " << outcome.out_dir << '\n';
    }
  } catch (const ValidationError& ex) {
    nlohmann::json err;
    err["error"] = {{"type", "validation"}, {"message", ex.what()}};
    std::cerr << err.dump() << '\n';
    return 2;
  } catch (const std::exception& ex) {
    nlohmann::json err;
    err["error"] = {{"type", "internal"}, {"message", ex.what()}};
    std::cerr << err.dump() << '\n';
    return 1;
  }
  return 0;
}
