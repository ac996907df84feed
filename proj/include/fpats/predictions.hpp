#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpats/forest.hpp"
#include "fpats/graph.hpp"

namespace fpats {

// Model output for one cookie instance, with the evidence needed by the
// reports and block lists.
struct PredictionRecord {
  std::string site;
  std::string name;
  std::string setter_hash;
  std::string setter_etld1;
  bool ats = false;
  double score = 0;
  std::string most_important_feature;
  std::map<std::string, std::size_t> destinations;  // exfiltration edges per destination domain
  bool operator==(const PredictionRecord&) const = default;
};

// Scores every storage_catalog entry of every graph, in graph order.
std::vector<PredictionRecord> predict_corpus(const ForestModel& model, std::span<const PageGraph> graphs,
                                             unsigned jobs = 1);

// Uses only the model columns present in `columns`; throws Error when a
// model feature is missing.
std::vector<double> select_features(const ForestModel& model, const std::vector<std::string>& columns,
                                    const std::vector<double>& values);

// CSV site,name,setter_hash,setter_etld1,label,score,most_important_feature,destinations
// where destinations is "domain:count;domain:count".
std::string serialize_predictions(const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> parse_predictions(std::string_view csv_text);

}  // namespace fpats
