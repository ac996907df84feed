#include "fpats/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <ostream>
#include <set>

#include "fpats/analysis.hpp"
#include "fpats/encoding.hpp"
#include "fpats/io.hpp"
#include "fpats/parallel.hpp"
#include "fpats/predictions.hpp"
#include "fpats/robustness.hpp"
#include "fpats/strings.hpp"
#include "json.hpp"

namespace fpats {

using nlohmann::json;

namespace {

std::vector<fs::path> regular_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string generic(const fs::path& p) { return p.generic_string(); }

void log_line(const StageContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << "\n";
}

}  // namespace

void Manifest::input(const std::string& role, const fs::path& path) {
  if (fs::is_directory(path)) {
    for (const auto& file : regular_files(path)) {
      inputs_[role + "/" + generic(fs::relative(file, path))] = sha256_hex(read_file(file));
    }
  } else {
    inputs_[role + "/" + generic(path.filename())] = sha256_hex(read_file(path));
  }
}

void Manifest::param(const std::string& key, const std::string& value) { string_params_[key] = value; }
void Manifest::param(const std::string& key, double value) { number_params_[key] = value; }
void Manifest::param(const std::string& key, std::int64_t value) { int_params_[key] = value; }

std::string Manifest::to_json(std::string_view stage, std::uint64_t seed, const fs::path& output_dir) const {
  json params = json::object();
  for (const auto& [k, v] : string_params_) params[k] = v;
  for (const auto& [k, v] : number_params_) params[k] = v;
  for (const auto& [k, v] : int_params_) params[k] = v;
  json outputs = json::object();
  for (const auto& file : regular_files(output_dir)) {
    const std::string rel = generic(fs::relative(file, output_dir));
    if (rel == "manifest.json") continue;
    outputs[rel] = sha256_hex(read_file(file));
  }
  json j{{"stage", stage},  {"version", kVersion}, {"seed", seed},
         {"params", params}, {"inputs", inputs_},   {"outputs", outputs}};
  return j.dump(2) + "\n";
}

void run_stage(std::string_view stage, const StageContext& ctx, const fs::path& out_dir,
               const std::function<void(const fs::path& work, Manifest& manifest)>& body) {
  const fs::path work = out_dir.string() + ".partial";
  std::error_code ec;
  fs::remove_all(work, ec);
  log_line(ctx, "[" + std::string(stage) + "] -> " + out_dir.string());
  try {
    fs::create_directories(work);
    Manifest manifest;
    body(work, manifest);
    write_file(work / "manifest.json", manifest.to_json(stage, ctx.seed, work));
    fs::remove_all(out_dir);
    fs::rename(work, out_dir);
  } catch (const UsageError&) {
    fs::remove_all(work, ec);
    throw;
  } catch (const StageError&) {
    fs::remove_all(work, ec);
    throw;
  } catch (const std::exception& e) {
    fs::remove_all(work, ec);
    throw StageError(std::string(stage), e.what());
  }
}

namespace {

void require_dir(std::string_view stage, const fs::path& dir, std::string_view what) {
  if (!fs::is_directory(dir)) {
    throw UsageError(std::string(stage), std::string(what) + " directory " + dir.string() + " does not exist");
  }
}

void require_file(std::string_view stage, const fs::path& file, std::string_view what) {
  if (!fs::is_regular_file(file)) {
    throw UsageError(std::string(stage), std::string(what) + " file " + file.string() + " does not exist");
  }
}

}  // namespace

std::vector<CrawlTrace> load_trace_dir(std::string_view stage, const fs::path& dir, unsigned jobs) {
  require_dir(stage, dir, "trace");
  const auto files = list_files(dir, ".jsonl");
  std::vector<CrawlTrace> traces(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    try {
      traces[i] = load_trace(files[i]);
    } catch (const std::exception& e) {
      throw StageError(std::string(stage), files[i].filename().string() + ": " + e.what());
    }
  });
  return traces;
}

std::vector<PageGraph> build_graphs(std::span<const CrawlTrace> traces, unsigned jobs) {
  std::vector<PageGraph> graphs(traces.size());
  parallel_for(traces.size(), jobs, [&](std::size_t i) { graphs[i] = build_graph(traces[i]); });
  return graphs;
}

TrainingSet make_training_set(const FeatureTable& table, const std::vector<CookieLabel>& labels) {
  std::map<LabelKey, CookieClass> by_key;
  for (const auto& l : labels) by_key[l.key] = l.label;
  TrainingSet data;
  data.features = table.columns;
  for (const auto& row : table.rows) {
    auto it = by_key.find({row.site, row.name, row.setter_hash});
    if (it == by_key.end() || it->second == CookieClass::Unknown) continue;
    data.x.push_back(row.values);
    data.y.push_back(it->second == CookieClass::ATS ? 1 : 0);
    data.sites.push_back(row.site);
  }
  return data;
}

std::vector<CookieLabel> label_corpus(std::span<const PageGraph> graphs, const RuleSet& rules, const PurposeDb& db,
                                      LabelSummary* summary) {
  std::vector<CookieLabel> labels;
  LabelSummary s;
  for (const auto& graph : graphs) {
    for (const auto& cookie : storage_catalog(graph)) {
      if (label_from_filters(cookie, rules).missing_setter) ++s.missing_setter;
      labels.push_back(label_cookie(cookie, rules, db));
    }
  }
  auto known = [&] {
    return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(),
                                                   [](const auto& l) { return l.label != CookieClass::Unknown; }));
  };
  s.instances = labels.size();
  s.labeled_before = known();
  s.propagated = propagate_ats(labels);
  s.labeled_after = known();
  if (summary) *summary = s;
  return labels;
}

RuleSet load_rule_set(std::string_view stage, const std::vector<fs::path>& lists) {
  std::vector<FilterList> parsed;
  for (const auto& path : lists) {
    require_file(stage, path, "filter list");
    parsed.push_back(load_filter_list(path));
  }
  return RuleSet(parsed);
}

void stage_ingest(const StageContext& ctx, const fs::path& in_dir, const fs::path& out_dir) {
  const auto traces = load_trace_dir("ingest", in_dir, ctx.jobs);
  run_stage("ingest", ctx, out_dir, [&](const fs::path& work, Manifest& m) {
    m.input("traces", in_dir);
    std::map<std::string, std::size_t> kinds;
    std::size_t events = 0;
    for (const auto& t : traces) {
      save_trace(work / "traces" / trace_file_name(t), t);
      events += t.events.size();
      for (const auto& e : t.events) ++kinds[std::string(to_string(e.kind))];
    }
    json summary{{"traces", traces.size()}, {"events", events}, {"events_by_kind", kinds}};
    write_file(work / "summary.json", summary.dump(2) + "\n");
  });
}

void stage_synth(const StageContext& ctx, const SynthOptions& options, const fs::path& out_dir) {
  const SynthCorpus corpus = generate_corpus(options, ctx.jobs);
  run_stage("synth", ctx, out_dir, [&](const fs::path& work, Manifest& m) {
    m.param("sites", static_cast<std::int64_t>(options.sites));
    m.param("encoding_substitution", static_cast<std::int64_t>(options.encoding_substitution));
    m.param("endpoint_rotation", static_cast<std::int64_t>(options.endpoint_rotation));
    write_corpus(corpus, work);
  });
}

void stage_build_graph(const StageContext& ctx, const fs::path& traces_dir, const fs::path& out_dir) {
  const auto traces = load_trace_dir("build-graph", traces_dir, ctx.jobs);
  const auto graphs = build_graphs(traces, ctx.jobs);
  run_stage("build-graph", ctx, out_dir, [&](const fs::path& work, Manifest& m) {
    m.input("traces", traces_dir);
    json summary = json::array();
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      const auto& g = graphs[i];
      const std::string name = trace_file_name(traces[i]);
      write_file(work / "graphs" / (name.substr(0, name.size() - 6) + ".graph.jsonl"), serialize_graph(g));
      summary.push_back({{"site", g.site_etld1},
                         {"nodes", g.nodes.size()},
                         {"edges", g.edges.size()},
                         {"exfiltrations", g.flows.exfiltrations.size()},
                         {"infiltrations", g.flows.infiltrations.size()}});
    }
    write_file(work / "summary.json", summary.dump(2) + "\n");
  });
}

void stage_label(const StageContext& ctx, const fs::path& traces_dir, const std::vector<fs::path>& lists,
                 const fs::path& purpose_db, const fs::path& out_dir) {
  require_file("label", purpose_db, "purpose database");
  const RuleSet rules = load_rule_set("label", lists);
  const auto traces = load_trace_dir("label", traces_dir, ctx.jobs);
  run_stage("label", ctx, out_dir, [&](const fs::path& work, Manifest& m) {
    m.input("traces", traces_dir);
    for (const auto& l : lists) m.input("lists", l);
    m.input("purpose_db", purpose_db);
    const PurposeDb db = PurposeDb::load(purpose_db);
    const auto graphs = build_graphs(traces, ctx.jobs);
    LabelSummary s;
    const auto labels = label_corpus(graphs, rules, db, &s);
    std::map<std::string, std::size_t> by_label;
    for (const auto& l : labels) ++by_label[std::string(to_string(l.label))];
    const double n = s.instances ? static_cast<double>(s.instances) : 1.0;
    json summary{{"instances", s.instances},
                 {"labeled_before_propagation", s.labeled_before},
                 {"labeled_after_propagation", s.labeled_after},
                 {"labeled_fraction_before", static_cast<double>(s.labeled_before) / n},
                 {"labeled_fraction_after", static_cast<double>(s.labeled_after) / n},
                 {"propagated", s.propagated},
                 {"missing_setter_warnings", s.missing_setter},
                 {"by_label", by_label}};
    write_file(work / "labels.csv", serialize_labels(labels));
    write_file(work / "summary.json", summary.dump(2) + "\n");
    if (s.missing_setter) {
      log_line(ctx, "[label] warning: " + std::to_string(s.missing_setter) +
                        " cookies were written without a script setter and stay Unknown");
    }
  });
}

void stage_featurize(const StageContext& ctx, const fs::path& traces_dir, const fs::path& out_dir) {
  const auto traces = load_trace_dir("featurize", traces_dir, ctx.jobs);
  run_stage("featurize", ctx, out_dir, [&](const fs::path& work, Manifest& m) {
    m.input("traces", traces_dir);
    const auto graphs = build_graphs(traces, ctx.jobs);
    write_file(work / "features.csv", serialize_feature_table(featurize_corpus(graphs, ctx.jobs)));
  });
}

namespace {

void hyperparam_params(Manifest& m, const Hyperparams& hp) {
  m.param("n_trees", static_cast<std::int64_t>(hp.n_trees));
  m.param("max_depth", static_cast<std::int64_t>(hp.max_depth));
  m.param("min_samples_leaf", static_cast<std::int64_t>(hp.min_samples_leaf));
  m.param("features_per_split", static_cast<std::int64_t>(hp.features_per_split));
}

TrainingSet load_training_set(std::string_view stage, const fs::path& features, const fs::path& labels) {
  require_file(stage, features, "feature table");
  require_file(stage, labels, "labels");
  return make_training_set(parse_feature_table(read_file(features)), parse_labels(read_file(labels)));
}

}  // namespace

void stage_train(const StageContext& ctx, const fs::path& features, const fs::path& labels, const Hyperparams& hp,
                 const fs::path& out_dir) {
  const TrainingSet data = load_training_set("train", features, labels);
  run_stage("train", ctx, out_dir, [&](const fs::path& work, Manifest& m) {
    m.input("features", features);
    m.input("labels", labels);
    hyperparam_params(m, hp);
    const ForestModel model = train_forest(data, hp, ctx.jobs);
    std::size_t correct = 0, ats = 0;
    for (std::size_t i = 0; i < data.x.size(); ++i) {
      correct += model.predict(data.x[i]).ats == (data.y[i] == 1);
      ats += data.y[i] == 1;
    }
    json summary{{"rows", data.x.size()},
                 {"ats", ats},
                 {"non_ats", data.x.size() - ats},
                 {"training_accuracy", static_cast<double>(correct) / static_cast<double>(data.x.size())}};
    write_file(work / "model.json", model.to_json());
    write_file(work / "summary.json", summary.dump(2) + "\n");
  });
}

void stage_cv(const StageContext& ctx, const fs::path& features, const fs::path& labels, const Hyperparams& hp,
              std::size_t folds, const fs::path& out_dir) {
  const TrainingSet data = load_training_set("cv", features, labels);
  run_stage("cv", ctx, out_dir, [&](const fs::path& work, Manifest& m) {
    m.input("features", features);
    m.input("labels", labels);
    hyperparam_params(m, hp);
    m.param("folds", static_cast<std::int64_t>(folds));
    const EvalReport report = cross_validate(data, hp, folds, ctx.jobs);
    write_file(work / "eval.json", report.to_json());
    write_file(work / "eval.txt", report.to_table());
    log_line(ctx, report.to_table());
  });
}

void stage_predict(const StageContext& ctx, const fs::path& model_path, const fs::path& traces_dir,
                   const fs::path& out_dir) {
  require_file("predict", model_path, "model");
  const auto traces = load_trace_dir("predict", traces_dir, ctx.jobs);
  run_stage("predict", ctx, out_dir, [&](const fs::path& work, Manifest& m) {
    m.input("model", model_path);
    m.input("traces", traces_dir);
    const ForestModel model = ForestModel::from_json(read_file(model_path));
    const auto graphs = build_graphs(traces, ctx.jobs);
    const auto records = predict_corpus(model, graphs, ctx.jobs);
    std::set<std::string> ats_sites;
    std::size_t ats = 0;
    for (const auto& r : records) {
      if (!r.ats) continue;
      ++ats;
      ats_sites.insert(r.site);
    }
    json summary{{"sites", traces.size()},
                 {"instances", records.size()},
                 {"predicted_ats", ats},
                 {"sites_with_ats", ats_sites.size()}};
    write_file(work / "predictions.csv", serialize_predictions(records));
    write_file(work / "summary.json", summary.dump(2) + "\n");
  });
}

void stage_analyze(const StageContext& ctx, const std::vector<std::string>& which, const AnalyzeInputs& in,
                   const fs::path& out_dir) {
  auto wants = [&](std::string_view name) { return std::find(which.begin(), which.end(), name) != which.end(); };
  auto need = [&](const std::optional<fs::path>& p, std::string_view what) -> const fs::path& {
    if (!p) throw UsageError("analyze", std::string(what) + " input is required");
    return *p;
  };
  std::vector<CrawlTrace> allowed, blocked;
  if (wants("diff") || wants("presence")) allowed = load_trace_dir("analyze", need(in.allowed_traces, "traces"), ctx.jobs);
  if (wants("diff")) blocked = load_trace_dir("analyze", need(in.blocked_traces, "blocked traces"), ctx.jobs);
  if (wants("flows")) {
    require_file("analyze", need(in.features, "features"), "feature table");
    require_file("analyze", need(in.labels, "labels"), "labels");
  }
  if (wants("prevalence")) require_file("analyze", need(in.predictions, "predictions"), "predictions");
  const RuleSet rules = (wants("diff") || wants("presence")) ? load_rule_set("analyze", in.lists) : RuleSet();

  run_stage("analyze", ctx, out_dir, [&](const fs::path& work, Manifest& m) {
    m.param("reports", [&] {
      std::string joined;
      for (const auto& w : which) joined += (joined.empty() ? "" : ",") + w;
      return joined;
    }());
    if (wants("diff") || wants("presence")) {
      m.input("traces", *in.allowed_traces);
      for (const auto& l : in.lists) m.input("lists", l);
    }
    if (wants("diff")) {
      m.input("blocked_traces", *in.blocked_traces);
      const auto pairs = pair_traces(allowed, blocked);
      const auto requests = diff_request_stats(pairs, rules);
      const auto cookies = diff_cookie_stats(pairs, rules);
      write_file(work / "diff_requests.json", requests.to_json());
      write_file(work / "diff_requests.txt", requests.to_table());
      write_file(work / "diff_cookies.json", cookies.to_json());
      write_file(work / "diff_cookies.txt", cookies.to_table());
    }
    if (wants("presence")) {
      m.param("top_k", static_cast<std::int64_t>(in.top_k));
      const auto req = domain_presence(allowed, rules, PresenceKind::Requests, in.top_k);
      const auto ck = domain_presence(allowed, rules, PresenceKind::Cookies, in.top_k);
      write_file(work / "presence_requests.json", req.to_json());
      write_file(work / "presence_requests.txt", req.to_table());
      write_file(work / "presence_cookies.json", ck.to_json());
      write_file(work / "presence_cookies.txt", ck.to_table());
    }
    if (wants("flows")) {
      m.input("features", *in.features);
      m.input("labels", *in.labels);
      const auto report = flow_distribution_stats(parse_feature_table(read_file(*in.features)),
                                                  parse_labels(read_file(*in.labels)));
      write_file(work / "flows.json", report.to_json());
      write_file(work / "flows.txt", report.to_table());
    }
    if (wants("prevalence")) {
      m.input("predictions", *in.predictions);
      const auto predictions = parse_predictions(read_file(*in.predictions));
      std::size_t total = in.total_sites;
      if (total == 0) {
        std::set<std::string> sites;
        for (const auto& p : predictions) sites.insert(p.site);
        total = sites.size();
      }
      m.param("total_sites", static_cast<std::int64_t>(total));
      const auto report = prevalence_report(predictions, total, in.top_k);
      write_file(work / "prevalence.json", report.to_json());
      write_file(work / "prevalence.txt", report.to_table());
    }
  });
}

void stage_attack_rename(const StageContext& ctx, const fs::path& traces_dir, const std::optional<fs::path>& model_path,
                         const fs::path& out_dir) {
  const auto traces = load_trace_dir("attack", traces_dir, ctx.jobs);
  if (model_path) require_file("attack", *model_path, "model");
  run_stage("attack", ctx, out_dir, [&](const fs::path& work, Manifest& m) {
    m.input("traces", traces_dir);
    const auto renamed = rename_attack(traces, ctx.seed, ctx.jobs);
    for (const auto& t : renamed) save_trace(work / "traces" / trace_file_name(t), t);
    if (!model_path) return;
    m.input("model", *model_path);
    const ForestModel model = ForestModel::from_json(read_file(*model_path));
    const auto original = predict_corpus(model, build_graphs(traces, ctx.jobs), ctx.jobs);
    const auto attacked = predict_corpus(model, build_graphs(renamed, ctx.jobs), ctx.jobs);
    std::size_t identical = 0;
    for (std::size_t i = 0; i < original.size() && i < attacked.size(); ++i) {
      const auto& a = original[i];
      const auto& b = attacked[i];
      identical += a.site == b.site && a.ats == b.ats && a.score == b.score &&
                   a.most_important_feature == b.most_important_feature;
    }
    json summary{{"cookies", original.size()},
                 {"renamed_cookies", attacked.size()},
                 {"identical_predictions", identical},
                 {"identical_fraction", original.empty() ? 1.0
                                                         : static_cast<double>(identical) /
                                                               static_cast<double>(original.size())}};
    write_file(work / "predictions.csv", serialize_predictions(attacked));
    write_file(work / "summary.json", summary.dump(2) + "\n");
  });
}

void stage_ablate(const StageContext& ctx, const fs::path& features, const std::optional<fs::path>& labels,
                  const Hyperparams& hp, std::size_t folds, const fs::path& out_dir) {
  require_file("ablate", features, "feature table");
  if (labels) require_file("ablate", *labels, "labels");
  run_stage("ablate", ctx, out_dir, [&](const fs::path& work, Manifest& m) {
    m.input("features", features);
    const FeatureTable full = parse_feature_table(read_file(features));
    const FeatureTable reduced = ablate_flow_features(full);
    write_file(work / "features.csv", serialize_feature_table(reduced));
    if (!labels) return;
    m.input("labels", *labels);
    hyperparam_params(m, hp);
    m.param("folds", static_cast<std::int64_t>(folds));
    const auto label_rows = parse_labels(read_file(*labels));
    const EvalReport full_report = cross_validate(make_training_set(full, label_rows), hp, folds, ctx.jobs);
    const EvalReport reduced_report = cross_validate(make_training_set(reduced, label_rows), hp, folds, ctx.jobs);
    json summary{{"features_full", full.columns.size()},
                 {"features_ablated", reduced.columns.size()},
                 {"accuracy_full", full_report.confusion.accuracy()},
                 {"accuracy_ablated", reduced_report.confusion.accuracy()},
                 {"accuracy_drop_points",
                  100.0 * (full_report.confusion.accuracy() - reduced_report.confusion.accuracy())}};
    write_file(work / "eval.json", reduced_report.to_json());
    write_file(work / "eval.txt", reduced_report.to_table());
    write_file(work / "summary.json", summary.dump(2) + "\n");
  });
}

void stage_emit(const StageContext& ctx, const fs::path& predictions, const EmitOptions& options,
                const std::string& format, const fs::path& out_dir) {
  require_file("emit", predictions, "predictions");
  if (format != "native" && format != "extension" && format != "all") {
    throw UsageError("emit", "unknown format " + format + " (expected native, extension or all)");
  }
  run_stage("emit", ctx, out_dir, [&](const fs::path& work, Manifest& m) {
    m.input("predictions", predictions);
    m.param("threshold", options.threshold);
    m.param("scope", std::string(to_string(options.scope)));
    m.param("global_fraction", options.global_fraction);
    m.param("format", format);
    const auto entries = emit_blocklist(parse_predictions(read_file(predictions)), options);
    if (format != "extension") {
      write_file(work / "blocklist.tsv", serialize_blocklist(entries, options));
      write_file(work / "blocklist.json", blocklist_sidecar_json(entries, options));
    }
    if (format != "native") write_file(work / "blocklist.ext.txt", export_extension_list(entries));
  });
}

// --- configuration -------------------------------------------------------

namespace {

std::string unquote(std::string_view v) {
  v = trim(v);
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    return std::string(v.substr(1, v.size() - 2));
  }
  return std::string(v);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw UsageError("config", "bad value for " + key + ": " + value);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError("config", "bad boolean for " + key + ": " + value);
}

std::vector<std::string> parse_list(std::string_view value) {
  std::vector<std::string> items;
  std::string_view v = trim(value);
  if (v.starts_with('[') && v.ends_with(']')) v = v.substr(1, v.size() - 2);
  for (auto item : split(v, ',')) {
    auto s = unquote(item);
    if (!s.empty()) items.push_back(s);
  }
  return items;
}

}  // namespace

const std::vector<std::string>& pipeline_stage_names() {
  static const std::vector<std::string> names = {"synth",   "ingest", "build-graph", "label",  "featurize",
                                                 "train",   "cv",     "predict",     "analyze", "attack",
                                                 "ablate",  "emit"};
  return names;
}

PipelineConfig PipelineConfig::parse(std::string_view text, const fs::path& base_dir) {
  PipelineConfig c;
  auto path = [&](const std::string& v) { return fs::path(v).is_absolute() ? fs::path(v) : base_dir / v; };
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty() || line.starts_with('[')) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config", "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value = unquote(line.substr(eq + 1));
    if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "jobs") c.jobs = parse_number<unsigned>(key, value);
    else if (key == "out") c.out = path(value);
    else if (key == "sites" || key == "synth_sites") c.synth_sites = parse_number<std::size_t>(key, value);
    else if (key == "encoding_substitution") c.encoding_substitution = parse_bool(key, value);
    else if (key == "endpoint_rotation") c.endpoint_rotation = parse_bool(key, value);
    else if (key == "traces") c.traces = path(value);
    else if (key == "blocked_traces") c.blocked_traces = path(value);
    else if (key == "predict_traces") c.predict_traces = path(value);
    else if (key == "lists") {
      c.lists.clear();
      for (const auto& item : parse_list(line.substr(eq + 1))) c.lists.push_back(path(item));
    } else if (key == "purpose_db") c.purpose_db = path(value);
    else if (key == "n_trees") c.hyperparams.n_trees = parse_number<int>(key, value);
    else if (key == "max_depth") c.hyperparams.max_depth = parse_number<int>(key, value);
    else if (key == "min_samples_leaf") c.hyperparams.min_samples_leaf = parse_number<int>(key, value);
    else if (key == "features_per_split") c.hyperparams.features_per_split = parse_number<int>(key, value);
    else if (key == "folds") c.folds = parse_number<std::size_t>(key, value);
    else if (key == "threshold") c.threshold = parse_number<double>(key, value);
    else if (key == "scope") c.scope = scope_from_string(value);
    else if (key == "global_fraction") c.global_fraction = parse_number<double>(key, value);
    else if (key == "top_k") c.top_k = parse_number<std::size_t>(key, value);
    else if (key == "stages") {
      c.stages = parse_list(line.substr(eq + 1));
      const auto& known = pipeline_stage_names();
      for (const auto& s : c.stages) {
        if (std::find(known.begin(), known.end(), s) == known.end()) throw UsageError("config", "unknown stage " + s);
      }
    } else {
      throw UsageError("config", "line " + std::to_string(line_no) + ": unknown key " + key);
    }
  }
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw UsageError("config", "config file " + path.string() + " does not exist");
  return parse(read_file(path), path.parent_path());
}

void run_pipeline(const PipelineConfig& config, std::ostream& log) {
  const StageContext ctx{config.seed, std::max(config.jobs, 1u), &log};
  const auto& all = pipeline_stage_names();
  std::vector<std::string> stages = config.stages;
  if (stages.empty()) {
    stages = all;
    if (config.synth_sites == 0) stages.erase(stages.begin());
  }
  auto enabled = [&](std::string_view s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };
  const fs::path out = config.out;
  fs::create_directories(out);

  std::optional<fs::path> traces = config.traces;
  std::optional<fs::path> blocked = config.blocked_traces;
  std::vector<fs::path> lists = config.lists;
  std::optional<fs::path> purpose_db = config.purpose_db;
  if (config.synth_sites > 0) {
    const fs::path synth = out / "synth";
    if (!traces) traces = synth / "traces" / "allowed";
    if (!blocked) blocked = synth / "traces" / "blocked";
    if (lists.empty()) lists = {synth / "lists" / "easylist.txt", synth / "lists" / "easyprivacy.txt"};
    if (!purpose_db) purpose_db = synth / "purpose_db.csv";
  }
  auto need = [](const std::optional<fs::path>& p, std::string_view stage, std::string_view key) -> const fs::path& {
    if (!p) throw UsageError(std::string(stage), "config key '" + std::string(key) + "' is required");
    return *p;
  };

  Hyperparams hp = config.hyperparams;
  hp.seed = config.seed;

  if (enabled("synth")) {
    if (config.synth_sites == 0) throw UsageError("synth", "config key 'sites' must be positive");
    SynthOptions options;
    options.seed = config.seed;
    options.sites = config.synth_sites;
    options.encoding_substitution = config.encoding_substitution;
    options.endpoint_rotation = config.endpoint_rotation;
    stage_synth(ctx, options, out / "synth");
  }
  if (enabled("ingest")) {
    stage_ingest(ctx, need(traces, "ingest", "traces"), out / "ingest");
    traces = out / "ingest" / "traces";
  }
  const fs::path& train_traces = need(traces, stages.front(), "traces");
  const fs::path predict_traces = config.predict_traces.value_or(train_traces);
  if (enabled("build-graph")) stage_build_graph(ctx, predict_traces, out / "graphs");
  if (enabled("label")) {
    stage_label(ctx, train_traces, lists, need(purpose_db, "label", "purpose_db"), out / "label");
  }
  if (enabled("featurize")) stage_featurize(ctx, train_traces, out / "featurize");
  const fs::path features = out / "featurize" / "features.csv";
  const fs::path labels = out / "label" / "labels.csv";
  if (enabled("train")) stage_train(ctx, features, labels, hp, out / "train");
  if (enabled("cv")) stage_cv(ctx, features, labels, hp, config.folds, out / "cv");
  const fs::path model = out / "train" / "model.json";
  if (enabled("predict")) stage_predict(ctx, model, predict_traces, out / "predict");
  const fs::path predictions = out / "predict" / "predictions.csv";
  if (enabled("analyze")) {
    AnalyzeInputs in;
    in.allowed_traces = train_traces;
    in.blocked_traces = blocked;
    in.lists = lists;
    in.features = features;
    in.labels = labels;
    in.predictions = predictions;
    in.total_sites = list_files(predict_traces, ".jsonl").size();
    in.top_k = config.top_k;
    std::vector<std::string> which{"presence", "flows", "prevalence"};
    if (blocked) which.insert(which.begin(), "diff");
    stage_analyze(ctx, which, in, out / "analyze");
  }
  if (enabled("attack")) stage_attack_rename(ctx, predict_traces, model, out / "attack");
  if (enabled("ablate")) stage_ablate(ctx, features, labels, hp, config.folds, out / "ablate");
  if (enabled("emit")) {
    EmitOptions options{config.threshold, config.scope, config.global_fraction};
    stage_emit(ctx, predictions, options, "all", out / "emit");
  }
}

}  // namespace fpats
