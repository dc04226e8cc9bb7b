#ifndef KGC_CLI_HPP
#define KGC_CLI_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kgc/connectome.hpp"
#include "kgc/featmap.hpp"
#include "kgc/gc_engine.hpp"
#include "kgc/mlpipe.hpp"
#include "kgc/netmetrics.hpp"

namespace kgc::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Provenance record written next to every command's outputs. The run_id is
/// a digest of (command, flags, seed, input digests), so identical runs get
/// identical ids; the timestamp is the only wall-clock field in any output.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> flags;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_digests;
  std::vector<std::string> outputs;
  std::string version = kVersion;
  std::string timestamp;

  void add_input(const std::string& path);
  void add_output(const std::string& path);
  std::string run_id() const;
  std::string to_json() const;
  void write(const std::string& path) const;
};

/// Flat key/value configuration with [section] headers; '#' starts a comment.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback = "") const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& section, const std::string& key) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

enum class HeaderMode { automatic, yes, no };

tsio::TimeSeriesMatrix load_series(const std::string& path, HeaderMode header);

/// Lists the CSV inputs for a path that may be a single file or a directory
/// (directory contents sorted by name).
std::vector<std::string> list_input_files(const std::string& path);

/// Splits a comma-separated method list into specs. Bare "key=value" tokens
/// (no kind prefix) continue the previous spec, so
/// "lin,rsp:r=2,eta=1,sigma=1" parses as two methods.
std::vector<featmap::FeatureMapSpec> parse_method_list(const std::string& text);

struct GcOptions {
  featmap::FeatureMapSpec spec;
  bool bic = false;
  int lag = 1;
  int p_max = 5;
  double ridge = 0.0;
  bool standardize = true;
  HeaderMode header = HeaderMode::automatic;
  int jobs = 1;
};

struct GcBatchResult {
  std::vector<std::string> matrix_files;
  std::vector<int> selected_lags;          // per subject (global mode when BIC)
  std::vector<std::string> failed_inputs;  // inputs that raised errors
};

/// Computes one GC matrix per input subject into out_dir (CSV + JSON
/// metadata). Per-file failures are reported and the batch continues.
GcBatchResult run_gc_batch(const std::vector<std::string>& inputs, const GcOptions& opts,
                           const std::string& out_dir, RunManifest& manifest);

struct PipelineOutcome {
  featmap::FeatureMapSpec chosen_spec;
  bool grid_used = false;
  std::vector<mlpipe::GridPoint> grid_points;
  long ec_mask_count = 0;
  long fc_mask_count = 0;
  long fused_count = 0;
  std::map<std::string, mlpipe::EvalReport> reports;  // keyed by mode name
  std::vector<mlpipe::AblationStep> ablation;
  netmetrics::GroupEfficiencyComparison efficiency;
  std::string out_dir;
};

/// Runs the full chain: (grid ->) gc -> fc -> masks -> fuse -> assemble ->
/// classify -> ablate -> metrics, writing every intermediate artifact plus a
/// manifest under [output] dir. Stage failures abort with the stage named;
/// artifacts written so far are left in place.
PipelineOutcome run_pipeline(const Config& cfg, const std::string& config_path, int jobs);

/// The pipeline's parameter-selection stage on its own: loads [data], builds
/// the [grid] candidates and scores each by cross-validated accuracy on the
/// vectorized causality matrices, writing the results to out_path.
mlpipe::GridResult run_grid_command(const Config& cfg, const std::string& config_path, int jobs,
                                    const std::string& out_path);

}  // namespace kgc::cli

#endif  // KGC_CLI_HPP
