#include "fpats/predictions.hpp"

#include <algorithm>
#include <charconv>

#include "fpats/csv.hpp"
#include "fpats/features.hpp"
#include "fpats/parallel.hpp"
#include "fpats/strings.hpp"

namespace fpats {

std::vector<double> select_features(const ForestModel& model, const std::vector<std::string>& columns,
                                    const std::vector<double>& values) {
  if (columns == model.features()) return values;
  std::vector<double> selected;
  selected.reserve(model.features().size());
  for (const auto& feature : model.features()) {
    auto it = std::find(columns.begin(), columns.end(), feature);
    if (it == columns.end()) throw Error("model feature " + feature + " is missing from the input");
    selected.push_back(values[static_cast<std::size_t>(it - columns.begin())]);
  }
  return selected;
}

std::vector<PredictionRecord> predict_corpus(const ForestModel& model, std::span<const PageGraph> graphs,
                                             unsigned jobs) {
  const std::vector<std::string> columns(kFeatureNames.begin(), kFeatureNames.end());
  std::vector<std::vector<PredictionRecord>> per_graph(graphs.size());
  parallel_for(graphs.size(), jobs, [&](std::size_t g) {
    const auto& graph = graphs[g];
    for (const auto& cookie : storage_catalog(graph)) {
      const auto v = featurize(graph, cookie);
      const auto x = select_features(model, columns, {v.begin(), v.end()});
      const auto prediction = model.predict(x);
      const auto contributions = model.contributions(x);
      PredictionRecord r;
      r.site = cookie.site;
      r.name = cookie.name;
      r.setter_hash = cookie.setter_key();
      r.setter_etld1 = cookie.setter_etld1;
      r.ats = prediction.ats;
      r.score = prediction.score;
      r.most_important_feature = model.features()[contributions.most_important];
      for (auto e : cookie.exfiltration_edges) ++r.destinations[graph.nodes[graph.edges[e].dst].request().etld1];
      per_graph[g].push_back(std::move(r));
    }
  });
  std::vector<PredictionRecord> records;
  for (auto& rows : per_graph) {
    for (auto& r : rows) records.push_back(std::move(r));
  }
  return records;
}

std::string serialize_predictions(const std::vector<PredictionRecord>& records) {
  std::string out = "site,name,setter_hash,setter_etld1,label,score,most_important_feature,destinations\n";
  for (const auto& r : records) {
    std::string destinations;
    for (const auto& [domain, count] : r.destinations) {
      if (!destinations.empty()) destinations += ';';
      destinations += domain + ":" + std::to_string(count);
    }
    out += csv::join_row({r.site, r.name, r.setter_hash, r.setter_etld1, r.ats ? "ATS" : "NonATS",
                          format_double(r.score), r.most_important_feature, destinations}) +
           "\n";
  }
  return out;
}

std::vector<PredictionRecord> parse_predictions(std::string_view csv_text) {
  std::vector<PredictionRecord> records;
  const auto rows = csv::parse(csv_text);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    const std::string where = "predictions row " + std::to_string(i + 1);
    if (f.size() != 8) throw Error(where + ": expected 8 fields");
    PredictionRecord r{f[0], f[1], f[2], f[3], f[4] == "ATS", 0, f[6], {}};
    auto [ptr, ec] = std::from_chars(f[5].data(), f[5].data() + f[5].size(), r.score);
    if (ec != std::errc() || ptr != f[5].data() + f[5].size()) throw Error(where + ": bad score");
    for (auto item : split(f[7], ';')) {
      if (item.empty()) continue;
      const auto colon = item.rfind(':');
      if (colon == std::string_view::npos) throw Error(where + ": bad destination list");
      std::size_t count = 0;
      auto digits = item.substr(colon + 1);
      auto [p, e] = std::from_chars(digits.data(), digits.data() + digits.size(), count);
      if (e != std::errc() || p != digits.data() + digits.size()) throw Error(where + ": bad destination count");
      r.destinations[std::string(item.substr(0, colon))] = count;
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace fpats
