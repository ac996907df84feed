#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fpats/pipeline.hpp"

namespace {

using fpats::fs::path;

struct Globals {
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::optional<std::string> out;
};

struct HyperparamFlags {
  int trees = 100;
  int max_depth = 0;
  int min_leaf = 1;
  int mtry = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--trees", trees, "Number of trees")->check(CLI::PositiveNumber);
    cmd->add_option("--max-depth", max_depth, "Maximum tree depth (0 = unbounded)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--min-leaf", min_leaf, "Minimum samples per leaf")->check(CLI::PositiveNumber);
    cmd->add_option("--mtry", mtry, "Features tried per split (0 = sqrt)")->check(CLI::NonNegativeNumber);
  }
  fpats::Hyperparams get(std::uint64_t seed) const { return {trees, max_depth, min_leaf, mtry, seed}; }
};

std::vector<path> to_paths(const std::vector<std::string>& items) { return {items.begin(), items.end()}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detects first-party cookies used for tracking from crawl traces."};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(fpats::kVersion));

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--out", g.out, "Output directory");

  auto out_dir = [&](const std::string& fallback) { return path(g.out.value_or("artifacts/" + fallback)); };
  auto ctx = [&] { return fpats::StageContext{g.seed, g.jobs, &std::cerr}; };

  std::string in, blocked, model, features, labels, predictions, purpose_db, config;
  std::vector<std::string> lists;
  HyperparamFlags hp;
  std::size_t folds = 10;

  auto* ingest = app.add_subcommand("ingest", "Validate and normalize a trace directory");
  ingest->add_option("--validate,--in", in, "Trace directory")->required();

  fpats::SynthOptions synth_opts;
  bool sync_only = false, no_blocked = false;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic crawl corpus with ground truth");
  synth->add_option("--sites", synth_opts.sites, "Number of sites")->check(CLI::PositiveNumber);
  synth->add_flag("--sync-only", sync_only, "Plant only the cookie-sync scenario");
  synth->add_flag("--encoding-substitution", synth_opts.encoding_substitution, "Double-encode exfiltrated values");
  synth->add_flag("--endpoint-rotation", synth_opts.endpoint_rotation, "Rotate partner endpoints per site");
  synth->add_flag("--no-blocked", no_blocked, "Skip the third-party-blocked twin crawl");

  auto* graph = app.add_subcommand("build-graph", "Build execution graphs");
  graph->add_option("--in", in, "Trace directory")->required();

  auto* label = app.add_subcommand("label", "Label cookies from filter lists and a purpose database");
  label->add_option("--in", in, "Trace directory")->required();
  label->add_option("--lists", lists, "Filter list files")->required()->delimiter(',');
  label->add_option("--purpose-db", purpose_db, "Purpose database CSV")->required();

  auto* featurize = app.add_subcommand("featurize", "Compute cookie feature vectors");
  featurize->add_option("--in", in, "Trace directory")->required();

  auto* train = app.add_subcommand("train", "Train the classifier");
  train->add_option("--features", features, "Feature table CSV")->required();
  train->add_option("--labels", labels, "Labels CSV")->required();
  hp.add(train);

  auto* cv = app.add_subcommand("cv", "Site-disjoint cross-validation");
  cv->add_option("--features", features, "Feature table CSV")->required();
  cv->add_option("--labels", labels, "Labels CSV")->required();
  cv->add_option("--folds", folds, "Number of folds")->check(CLI::Range(2, 1000));
  hp.add(cv);

  auto* predict = app.add_subcommand("predict", "Classify every cookie of a trace directory");
  predict->add_option("--model", model, "Model JSON")->required();
  predict->add_option("--in", in, "Trace directory")->required();

  fpats::AnalyzeInputs analyze_in;
  std::string report;
  auto* analyze = app.add_subcommand("analyze", "Measurement reports");
  analyze->add_option("report", report, "diff | presence | flows | prevalence")
      ->required()
      ->check(CLI::IsMember({"diff", "presence", "flows", "prevalence"}));
  analyze->add_option("--in", in, "Trace directory (3P-allowed crawl)");
  analyze->add_option("--blocked", blocked, "Trace directory (3P-blocked crawl)");
  analyze->add_option("--lists", lists, "Filter list files")->delimiter(',');
  analyze->add_option("--features", features, "Feature table CSV");
  analyze->add_option("--labels", labels, "Labels CSV");
  analyze->add_option("--predictions", predictions, "Predictions CSV");
  analyze->add_option("--total-sites", analyze_in.total_sites, "Prevalence denominator");
  analyze->add_option("--top-k", analyze_in.top_k, "Rows per ranking");

  std::string attack_kind;
  auto* attack = app.add_subcommand("attack", "Robustness attacks");
  attack->add_option("kind", attack_kind, "rename")->required()->check(CLI::IsMember({"rename"}));
  attack->add_option("--in", in, "Trace directory")->required();
  attack->add_option("--model", model, "Model used to compare predictions");

  std::string ablate_kind;
  auto* ablate = app.add_subcommand("ablate", "Feature ablation");
  ablate->add_option("kind", ablate_kind, "flows")->required()->check(CLI::IsMember({"flows"}));
  ablate->add_option("--features", features, "Feature table CSV")->required();
  ablate->add_option("--labels", labels, "Labels CSV (enables evaluation)");
  ablate->add_option("--folds", folds, "Number of folds")->check(CLI::Range(2, 1000));
  hp.add(ablate);

  fpats::EmitOptions emit_opts;
  std::string scope = "per-site", format = "native";
  auto* emit = app.add_subcommand("emit", "Emit a cookie blocklist");
  emit->add_option("--predictions", predictions, "Predictions CSV")->required();
  emit->add_option("--threshold", emit_opts.threshold, "Score threshold in [0, 1]");
  emit->add_option("--scope", scope, "per-site | global")->check(CLI::IsMember({"per-site", "global"}));
  emit->add_option("--global-fraction", emit_opts.global_fraction, "Occurrence fraction for global entries");
  emit->add_option("--format", format, "native | extension")->check(CLI::IsMember({"native", "extension"}));

  auto* run = app.add_subcommand("run", "Run the pipeline described by a config file");
  run->add_option("--config", config, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*ingest) {
      fpats::stage_ingest(ctx(), in, out_dir("ingest"));
    } else if (*synth) {
      synth_opts.seed = g.seed;
      synth_opts.blocked_twin = !no_blocked;
      if (sync_only) synth_opts.mix = fpats::ScenarioMix::only(fpats::Scenario::CookieSync);
      fpats::stage_synth(ctx(), synth_opts, out_dir("synth"));
    } else if (*graph) {
      fpats::stage_build_graph(ctx(), in, out_dir("graphs"));
    } else if (*label) {
      fpats::stage_label(ctx(), in, to_paths(lists), purpose_db, out_dir("label"));
    } else if (*featurize) {
      fpats::stage_featurize(ctx(), in, out_dir("featurize"));
    } else if (*train) {
      fpats::stage_train(ctx(), features, labels, hp.get(g.seed), out_dir("train"));
    } else if (*cv) {
      fpats::stage_cv(ctx(), features, labels, hp.get(g.seed), folds, out_dir("cv"));
    } else if (*predict) {
      fpats::stage_predict(ctx(), model, in, out_dir("predict"));
    } else if (*analyze) {
      if (!in.empty()) analyze_in.allowed_traces = path(in);
      if (!blocked.empty()) analyze_in.blocked_traces = path(blocked);
      analyze_in.lists = to_paths(lists);
      if (!features.empty()) analyze_in.features = path(features);
      if (!labels.empty()) analyze_in.labels = path(labels);
      if (!predictions.empty()) analyze_in.predictions = path(predictions);
      fpats::stage_analyze(ctx(), {report}, analyze_in, out_dir("analyze"));
    } else if (*attack) {
      std::optional<path> m;
      if (!model.empty()) m = path(model);
      fpats::stage_attack_rename(ctx(), in, m, out_dir("attack"));
    } else if (*ablate) {
      std::optional<path> l;
      if (!labels.empty()) l = path(labels);
      fpats::stage_ablate(ctx(), features, l, hp.get(g.seed), folds, out_dir("ablate"));
    } else if (*emit) {
      emit_opts.scope = fpats::scope_from_string(scope);
      fpats::stage_emit(ctx(), predictions, emit_opts, format, out_dir("emit"));
    } else if (*run) {
      auto cfg = fpats::PipelineConfig::load(config);
      if (app.get_option("--seed")->count()) cfg.seed = g.seed;
      if (app.get_option("--jobs")->count()) cfg.jobs = g.jobs;
      if (g.out) cfg.out = *g.out;
      fpats::run_pipeline(cfg, std::cerr);
    }
  } catch (const fpats::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fpats::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
