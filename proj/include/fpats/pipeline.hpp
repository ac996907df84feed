#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpats/blocklist.hpp"
#include "fpats/error.hpp"
#include "fpats/features.hpp"
#include "fpats/forest.hpp"
#include "fpats/labeling.hpp"
#include "fpats/synth.hpp"

namespace fpats {

inline constexpr std::string_view kVersion = "1.0.0";

namespace fs = std::filesystem;

// Failure inside a stage (exit code 1).
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Bad invocation or missing input (exit code 2).
class UsageError : public Error {
 public:
  UsageError(std::string stage, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct StageContext {
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::ostream* log = nullptr;
};

// Records what a stage read and how it was parameterized. Written as
// manifest.json next to the stage outputs, without timestamps.
class Manifest {
 public:
  void input(const std::string& role, const fs::path& path);
  void param(const std::string& key, const std::string& value);
  void param(const std::string& key, double value);
  void param(const std::string& key, std::int64_t value);
  std::string to_json(std::string_view stage, std::uint64_t seed, const fs::path& output_dir) const;

 private:
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> string_params_;
  std::map<std::string, double> number_params_;
  std::map<std::string, std::int64_t> int_params_;
};

// Runs body in "<out_dir>.partial", writes the manifest and moves the
// directory into place. On failure the partial directory is removed.
void run_stage(std::string_view stage, const StageContext& ctx, const fs::path& out_dir,
               const std::function<void(const fs::path& work, Manifest& manifest)>& body);

// Trace files (*.jsonl) of a directory, parsed and validated in file order.
std::vector<CrawlTrace> load_trace_dir(std::string_view stage, const fs::path& dir, unsigned jobs);
std::vector<PageGraph> build_graphs(std::span<const CrawlTrace> traces, unsigned jobs);

// Joins feature rows with ATS/NonATS labels; Unknown and unlabeled rows are
// left out.
TrainingSet make_training_set(const FeatureTable& table, const std::vector<CookieLabel>& labels);

struct LabelSummary {
  std::size_t instances = 0;
  std::size_t labeled_before = 0;  // ATS or NonATS before propagation
  std::size_t labeled_after = 0;
  std::size_t propagated = 0;
  std::size_t missing_setter = 0;
};

std::vector<CookieLabel> label_corpus(std::span<const PageGraph> graphs, const RuleSet& rules, const PurposeDb& db,
                                      LabelSummary* summary = nullptr);

RuleSet load_rule_set(std::string_view stage, const std::vector<fs::path>& lists);

void stage_ingest(const StageContext& ctx, const fs::path& in_dir, const fs::path& out_dir);
void stage_synth(const StageContext& ctx, const SynthOptions& options, const fs::path& out_dir);
void stage_build_graph(const StageContext& ctx, const fs::path& traces, const fs::path& out_dir);
void stage_label(const StageContext& ctx, const fs::path& traces, const std::vector<fs::path>& lists,
                 const fs::path& purpose_db, const fs::path& out_dir);
void stage_featurize(const StageContext& ctx, const fs::path& traces, const fs::path& out_dir);
void stage_train(const StageContext& ctx, const fs::path& features, const fs::path& labels, const Hyperparams& hp,
                 const fs::path& out_dir);
void stage_cv(const StageContext& ctx, const fs::path& features, const fs::path& labels, const Hyperparams& hp,
              std::size_t folds, const fs::path& out_dir);
void stage_predict(const StageContext& ctx, const fs::path& model, const fs::path& traces, const fs::path& out_dir);

struct AnalyzeInputs {
  std::optional<fs::path> allowed_traces;
  std::optional<fs::path> blocked_traces;
  std::vector<fs::path> lists;
  std::optional<fs::path> features;
  std::optional<fs::path> labels;
  std::optional<fs::path> predictions;
  std::size_t total_sites = 0;  // prevalence denominator; 0 = sites in the predictions
  std::size_t top_k = 25;
};
// which: any of "diff", "presence", "flows", "prevalence".
void stage_analyze(const StageContext& ctx, const std::vector<std::string>& which, const AnalyzeInputs& inputs,
                   const fs::path& out_dir);

// Renames cookies in every trace; with a model, also scores the original and
// renamed corpora and reports how many predictions are bit-identical.
void stage_attack_rename(const StageContext& ctx, const fs::path& traces, const std::optional<fs::path>& model,
                         const fs::path& out_dir);

// Writes the ablated feature table; with labels, also cross-validates the
// ablated dictionary (and the full one for comparison).
void stage_ablate(const StageContext& ctx, const fs::path& features, const std::optional<fs::path>& labels,
                  const Hyperparams& hp, std::size_t folds, const fs::path& out_dir);

void stage_emit(const StageContext& ctx, const fs::path& predictions, const EmitOptions& options,
                const std::string& format, const fs::path& out_dir);

struct PipelineConfig {
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  fs::path out = "artifacts";
  std::size_t synth_sites = 0;  // > 0 generates the input corpus
  bool encoding_substitution = false;
  bool endpoint_rotation = false;
  std::optional<fs::path> traces;
  std::optional<fs::path> blocked_traces;
  std::optional<fs::path> predict_traces;
  std::vector<fs::path> lists;
  std::optional<fs::path> purpose_db;
  Hyperparams hyperparams;
  std::size_t folds = 10;
  double threshold = 0.5;
  Scope scope = Scope::PerSite;
  double global_fraction = 0.5;
  std::size_t top_k = 25;
  std::vector<std::string> stages;

  // `key = value` lines; '#' starts a comment; values may be quoted.
  // Relative paths are resolved against base_dir.
  static PipelineConfig parse(std::string_view text, const fs::path& base_dir);
  static PipelineConfig load(const fs::path& path);
};

const std::vector<std::string>& pipeline_stage_names();

void run_pipeline(const PipelineConfig& config, std::ostream& log);

}  // namespace fpats
