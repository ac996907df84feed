#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpats/error.hpp"

namespace fpats {

class EmptyTable : public Error {
 public:
  EmptyTable() : Error("no labeled rows to train on") {}
};
class SingleClass : public Error {
 public:
  SingleClass() : Error("training data contains a single class") {}
};
class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got)
      : Error("expected " + std::to_string(expected) + " features, got " + std::to_string(got)) {}
};
class TooFewSites : public Error {
 public:
  TooFewSites(std::size_t sites, std::size_t folds)
      : Error(std::to_string(sites) + " distinct sites cannot fill " + std::to_string(folds) + " folds") {}
};

struct Hyperparams {
  int n_trees = 100;
  int max_depth = 0;          // 0 = unbounded
  int min_samples_leaf = 1;
  int features_per_split = 0;  // 0 = ceil(sqrt(feature count))
  std::uint64_t seed = 0;
  bool operator==(const Hyperparams&) const = default;
};

// Leaves have feature == -1. Every node keeps its (bootstrap-weighted)
// class counts so that path contributions can be computed.
struct TreeNode {
  int feature = -1;
  double threshold = 0;  // x <= threshold goes left
  int left = -1;
  int right = -1;
  double non_ats = 0;
  double ats = 0;

  bool is_leaf() const { return feature < 0; }
  double ats_fraction() const { return ats / (ats + non_ats); }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  const TreeNode& leaf_for(std::span<const double> x) const;
  bool operator==(const DecisionTree&) const = default;
};

struct Prediction {
  bool ats = false;
  double score = 0;  // mean leaf ATS fraction over trees
};

struct Contributions {
  double prior = 0;  // mean root ATS fraction
  std::vector<double> per_feature;
  std::size_t most_important = 0;  // largest push towards the predicted class
};

class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(Hyperparams hp, std::vector<std::string> features, std::vector<DecisionTree> trees)
      : hyperparams_(hp), features_(std::move(features)), trees_(std::move(trees)) {}

  const Hyperparams& hyperparams() const { return hyperparams_; }
  const std::vector<std::string>& features() const { return features_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  // ATS iff score > 0.5; an exact tie is NonATS.
  Prediction predict(std::span<const double> x) const;
  Contributions contributions(std::span<const double> x) const;

  std::string to_json() const;
  static ForestModel from_json(std::string_view text);

  bool operator==(const ForestModel&) const = default;

 private:
  Hyperparams hyperparams_;
  std::vector<std::string> features_;
  std::vector<DecisionTree> trees_;
};

// Row-major training data; labels are 1 for ATS and 0 for NonATS.
struct TrainingSet {
  std::vector<std::string> features;
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  std::vector<std::string> sites;  // one per row, used for grouped folds
};

// Bagged Gini trees. Tree t draws from a generator seeded with seed + t, so
// the model does not depend on `jobs`.
ForestModel train_forest(const TrainingSet& data, const Hyperparams& hp, unsigned jobs = 1);

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
  double accuracy() const;
  double precision() const;
  double recall() const;
};

struct FoldReport {
  std::size_t fold = 0;
  std::size_t sites = 0;
  Confusion confusion;
};

struct EvalReport {
  std::size_t folds = 0;
  Confusion confusion;  // aggregated over held-out predictions
  std::vector<FoldReport> per_fold;

  std::string to_json() const;
  std::string to_table() const;
};

// Site assignment to folds: distinct sites sorted, shuffled with the seed and
// dealt round-robin.
std::vector<std::size_t> assign_site_folds(const std::vector<std::string>& sites, std::size_t k,
                                           std::uint64_t seed);

EvalReport cross_validate(const TrainingSet& data, const Hyperparams& hp, std::size_t k,
                          unsigned jobs = 1);

}  // namespace fpats
