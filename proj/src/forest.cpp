#include "fpats/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include "fpats/parallel.hpp"
#include "fpats/rng.hpp"
#include "fpats/strings.hpp"
#include "json.hpp"

namespace fpats {

using nlohmann::json;

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i];
}

Prediction ForestModel::predict(std::span<const double> x) const {
  if (x.size() != features_.size()) throw DimensionMismatch(features_.size(), x.size());
  double sum = 0;
  for (const auto& tree : trees_) sum += tree.leaf_for(x).ats_fraction();
  const double score = trees_.empty() ? 0.0 : sum / static_cast<double>(trees_.size());
  return {score > 0.5, score};
}

Contributions ForestModel::contributions(std::span<const double> x) const {
  if (x.size() != features_.size()) throw DimensionMismatch(features_.size(), x.size());
  Contributions c;
  c.per_feature.assign(features_.size(), 0.0);
  if (trees_.empty()) return c;
  const double n = static_cast<double>(trees_.size());
  for (const auto& tree : trees_) {
    std::size_t i = 0;
    c.prior += tree.nodes[0].ats_fraction() / n;
    while (!tree.nodes[i].is_leaf()) {
      const auto& node = tree.nodes[i];
      const auto f = static_cast<std::size_t>(node.feature);
      const auto next = static_cast<std::size_t>(x[f] <= node.threshold ? node.left : node.right);
      c.per_feature[f] += (tree.nodes[next].ats_fraction() - node.ats_fraction()) / n;
      i = next;
    }
  }
  const bool ats = predict(x).ats;
  for (std::size_t f = 1; f < c.per_feature.size(); ++f) {
    const double best = c.per_feature[c.most_important];
    if (ats ? c.per_feature[f] > best : c.per_feature[f] < best) c.most_important = f;
  }
  return c;
}

namespace {

constexpr int kModelVersion = 1;

struct Sample {
  std::size_t row;
  double weight;
};

struct SplitChoice {
  int feature = -1;
  double threshold = 0;
  double decrease = 0;
};

double weighted_gini(double non_ats, double ats) {
  const double n = non_ats + ats;
  if (n <= 0) return 0;
  return n - (non_ats * non_ats + ats * ats) / n;  // n * gini
}

class TreeBuilder {
 public:
  TreeBuilder(const TrainingSet& data, const Hyperparams& hp, std::uint64_t seed)
      : data_(data), hp_(hp), rng_(seed) {
    const std::size_t f = data.features.size();
    k_ = hp.features_per_split > 0
             ? std::min<std::size_t>(static_cast<std::size_t>(hp.features_per_split), f)
             : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(f))));
    k_ = std::max<std::size_t>(k_, 1);
  }

  DecisionTree build() {
    const std::size_t n = data_.x.size();
    std::vector<double> draws(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) draws[rng_.below(n)] += 1;
    std::vector<Sample> samples;
    for (std::size_t i = 0; i < n; ++i) {
      if (draws[i] > 0) samples.push_back({i, draws[i]});
    }
    DecisionTree tree;
    grow(tree, samples, 0);
    return tree;
  }

 private:
  int grow(DecisionTree& tree, std::vector<Sample>& samples, int depth) {
    TreeNode node;
    for (const auto& s : samples) (data_.y[s.row] ? node.ats : node.non_ats) += s.weight;
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);

    const bool pure = node.ats == 0 || node.non_ats == 0;
    const bool depth_limited = hp_.max_depth > 0 && depth >= hp_.max_depth;
    const double min_leaf = std::max(hp_.min_samples_leaf, 1);
    if (pure || depth_limited || node.ats + node.non_ats < 2 * min_leaf) return index;

    const SplitChoice split = best_split(samples, node, min_leaf);
    if (split.feature < 0) return index;

    std::vector<Sample> left, right;
    for (const auto& s : samples) {
      (data_.x[s.row][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();
    const int l = grow(tree, left, depth + 1);
    const int r = grow(tree, right, depth + 1);
    auto& stored = tree.nodes[static_cast<std::size_t>(index)];
    stored.feature = split.feature;
    stored.threshold = split.threshold;
    stored.left = l;
    stored.right = r;
    return index;
  }

  SplitChoice best_split(const std::vector<Sample>& samples, const TreeNode& node, double min_leaf) {
    const std::size_t f_count = data_.features.size();
    std::vector<std::size_t> order(f_count);
    std::iota(order.begin(), order.end(), 0);
    // Fisher-Yates over the feature indices; the first k non-constant ones
    // are evaluated, more only while no valid split has been found.
    for (std::size_t i = f_count; i > 1; --i) std::swap(order[i - 1], order[rng_.below(i)]);

    const double parent = weighted_gini(node.non_ats, node.ats);
    SplitChoice best;
    std::size_t visited = 0;
    std::vector<std::pair<double, const Sample*>> column(samples.size());
    for (std::size_t f : order) {
      if (visited >= k_ && best.feature >= 0) break;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        column[i] = {data_.x[samples[i].row][f], &samples[i]};
      }
      std::sort(column.begin(), column.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.second->row < b.second->row;
      });
      if (column.front().first == column.back().first) continue;  // constant here
      ++visited;
      double left_non = 0, left_ats = 0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        const Sample& s = *column[i].second;
        (data_.y[s.row] ? left_ats : left_non) += s.weight;
        if (column[i].first == column[i + 1].first) continue;
        const double right_non = node.non_ats - left_non;
        const double right_ats = node.ats - left_ats;
        if (left_non + left_ats < min_leaf || right_non + right_ats < min_leaf) continue;
        const double decrease =
            parent - weighted_gini(left_non, left_ats) - weighted_gini(right_non, right_ats);
        if (decrease > best.decrease + 1e-12) {
          const double a = column[i].first;
          const double b = column[i + 1].first;
          double mid = a + (b - a) / 2;
          if (!(mid < b)) mid = a;
          best = {static_cast<int>(f), mid, decrease};
        }
      }
    }
    return best;
  }

  const TrainingSet& data_;
  const Hyperparams& hp_;
  Rng rng_;
  std::size_t k_ = 1;
};

void check_training_set(const TrainingSet& data) {
  if (data.x.empty()) throw EmptyTable();
  if (data.y.size() != data.x.size()) throw Error("label count does not match row count");
  for (const auto& row : data.x) {
    if (row.size() != data.features.size()) throw DimensionMismatch(data.features.size(), row.size());
  }
  const bool has_ats = std::find(data.y.begin(), data.y.end(), 1) != data.y.end();
  const bool has_non = std::find(data.y.begin(), data.y.end(), 0) != data.y.end();
  if (!has_ats || !has_non) throw SingleClass();
}

}  // namespace

ForestModel train_forest(const TrainingSet& data, const Hyperparams& hp, unsigned jobs) {
  check_training_set(data);
  if (hp.n_trees <= 0) throw Error("n_trees must be positive");
  std::vector<DecisionTree> trees(static_cast<std::size_t>(hp.n_trees));
  parallel_for(trees.size(), jobs, [&](std::size_t t) {
    trees[t] = TreeBuilder(data, hp, hp.seed + t).build();
  });
  return ForestModel(hp, data.features, std::move(trees));
}

std::string ForestModel::to_json() const {
  json trees = json::array();
  for (const auto& tree : trees_) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         counts = json::array();
    for (const auto& n : tree.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      counts.push_back({n.non_ats, n.ats});
    }
    trees.push_back({{"feature", feature},
                     {"threshold", threshold},
                     {"left", left},
                     {"right", right},
                     {"counts", counts}});
  }
  json j{{"format", "fpats-forest"},
         {"version", kModelVersion},
         {"class_labels", {"NonATS", "ATS"}},
         {"hyperparams",
          {{"n_trees", hyperparams_.n_trees},
           {"max_depth", hyperparams_.max_depth},
           {"min_samples_leaf", hyperparams_.min_samples_leaf},
           {"features_per_split", hyperparams_.features_per_split},
           {"seed", hyperparams_.seed}}},
         {"features", features_},
         {"trees", trees}};
  return j.dump() + "\n";
}

ForestModel ForestModel::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("model: ") + e.what());
  }
  try {
    if (j.at("format") != "fpats-forest") throw Error("model: not a forest model");
    if (j.at("version").get<int>() != kModelVersion) throw Error("model: unsupported version");
    Hyperparams hp;
    const auto& h = j.at("hyperparams");
    hp.n_trees = h.at("n_trees");
    hp.max_depth = h.at("max_depth");
    hp.min_samples_leaf = h.at("min_samples_leaf");
    hp.features_per_split = h.at("features_per_split");
    hp.seed = h.at("seed");
    auto features = j.at("features").get<std::vector<std::string>>();
    std::vector<DecisionTree> trees;
    for (const auto& t : j.at("trees")) {
      DecisionTree tree;
      const auto& f = t.at("feature");
      for (std::size_t i = 0; i < f.size(); ++i) {
        TreeNode n;
        n.feature = f[i];
        n.threshold = t.at("threshold")[i];
        n.left = t.at("left")[i];
        n.right = t.at("right")[i];
        n.non_ats = t.at("counts")[i][0];
        n.ats = t.at("counts")[i][1];
        const auto size = static_cast<int>(f.size());
        if (n.feature >= static_cast<int>(features.size()) ||
            (!n.is_leaf() && (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) ||
                              n.left >= size || n.right >= size))) {
          throw Error("model: malformed tree");
        }
        tree.nodes.push_back(n);
      }
      if (tree.nodes.empty()) throw Error("model: empty tree");
      trees.push_back(std::move(tree));
    }
    return ForestModel(hp, std::move(features), std::move(trees));
  } catch (const json::exception& e) {
    throw Error(std::string("model: ") + e.what());
  }
}

double Confusion::accuracy() const {
  return total() ? static_cast<double>(tp + tn) / static_cast<double>(total()) : 0.0;
}
double Confusion::precision() const {
  return tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
}
double Confusion::recall() const {
  return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
}

namespace {

json confusion_json(const Confusion& c) {
  return {{"tp", c.tp},
          {"fp", c.fp},
          {"tn", c.tn},
          {"fn", c.fn},
          {"accuracy", c.accuracy()},
          {"precision", c.precision()},
          {"recall", c.recall()}};
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", fraction * 100.0);
  return buf;
}

}  // namespace

std::string EvalReport::to_json() const {
  json folds_json = json::array();
  for (const auto& f : per_fold) {
    auto entry = confusion_json(f.confusion);
    entry["fold"] = f.fold;
    entry["sites"] = f.sites;
    folds_json.push_back(std::move(entry));
  }
  json j{{"folds", folds}, {"overall", confusion_json(confusion)}, {"per_fold", folds_json}};
  return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %6s %6s %6s %6s %6s %10s %10s %10s\n", "fold", "sites", "tp",
                "fp", "tn", "fn", "accuracy", "precision", "recall");
  out += line;
  auto row = [&](const std::string& name, std::size_t sites, const Confusion& c) {
    std::snprintf(line, sizeof line, "%-8s %6zu %6zu %6zu %6zu %6zu %10s %10s %10s\n", name.c_str(), sites,
                  c.tp, c.fp, c.tn, c.fn, percent(c.accuracy()).c_str(), percent(c.precision()).c_str(),
                  percent(c.recall()).c_str());
    out += line;
  };
  std::size_t all_sites = 0;
  for (const auto& f : per_fold) {
    row(std::to_string(f.fold), f.sites, f.confusion);
    all_sites += f.sites;
  }
  row("overall", all_sites, confusion);
  return out;
}

std::vector<std::size_t> assign_site_folds(const std::vector<std::string>& sites, std::size_t k,
                                           std::uint64_t seed) {
  const std::set<std::string> unique(sites.begin(), sites.end());
  std::vector<std::string> distinct(unique.begin(), unique.end());
  if (k < 2 || distinct.size() < k) throw TooFewSites(distinct.size(), k);
  Rng rng(seed);
  for (std::size_t i = distinct.size(); i > 1; --i) std::swap(distinct[i - 1], distinct[rng.below(i)]);
  std::map<std::string, std::size_t, std::less<>> fold_of;
  for (std::size_t i = 0; i < distinct.size(); ++i) fold_of[distinct[i]] = i % k;
  std::vector<std::size_t> folds;
  folds.reserve(sites.size());
  for (const auto& s : sites) folds.push_back(fold_of.at(s));
  return folds;
}

EvalReport cross_validate(const TrainingSet& data, const Hyperparams& hp, std::size_t k, unsigned jobs) {
  check_training_set(data);
  if (data.sites.size() != data.x.size()) throw Error("site count does not match row count");
  const auto folds = assign_site_folds(data.sites, k, hp.seed);
  EvalReport report;
  report.folds = k;
  for (std::size_t fold = 0; fold < k; ++fold) {
    TrainingSet train;
    train.features = data.features;
    std::vector<std::size_t> held_out;
    std::set<std::string> fold_sites;
    for (std::size_t i = 0; i < data.x.size(); ++i) {
      if (folds[i] == fold) {
        held_out.push_back(i);
        fold_sites.insert(data.sites[i]);
      } else {
        train.x.push_back(data.x[i]);
        train.y.push_back(data.y[i]);
        train.sites.push_back(data.sites[i]);
      }
    }
    const ForestModel model = train_forest(train, hp, jobs);
    FoldReport fr;
    fr.fold = fold;
    fr.sites = fold_sites.size();
    for (auto i : held_out) {
      const bool predicted = model.predict(data.x[i]).ats;
      const bool actual = data.y[i] == 1;
      auto& c = fr.confusion;
      if (predicted && actual) ++c.tp;
      else if (predicted) ++c.fp;
      else if (actual) ++c.fn;
      else ++c.tn;
    }
    report.confusion.tp += fr.confusion.tp;
    report.confusion.fp += fr.confusion.fp;
    report.confusion.tn += fr.confusion.tn;
    report.confusion.fn += fr.confusion.fn;
    report.per_fold.push_back(fr);
  }
  return report;
}

}  // namespace fpats
