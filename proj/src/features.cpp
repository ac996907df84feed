#include "fpats/features.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include "fpats/csv.hpp"
#include "fpats/parallel.hpp"
#include "fpats/strings.hpp"

namespace fpats {

std::size_t feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const auto full = kFeatureNames[i];
    if (full == name) return i;
    const auto prefix = full.substr(0, full.find('_'));
    if (prefix == name) return i;
  }
  throw Error("unknown feature: " + std::string(name));
}

namespace {

// Creation-chain length from the page root to the actor.
int ancestry_depth(const PageGraph& graph, const ActorRef& actor) {
  int depth = 0;
  ActorRef current = actor;
  // Chains are acyclic because actors must be declared before use; the bound
  // is a guard against malformed graphs.
  for (std::size_t guard = 0; guard <= graph.nodes.size() && !current.is_parser(); ++guard) {
    auto index = graph.find(node_id(current));
    if (!index) break;
    ++depth;
    const auto& node = graph.nodes[*index];
    current = node.kind == NodeKind::Script ? node.script().creator : node.request().initiator;
  }
  return depth;
}

}  // namespace

FeatureVector featurize(const PageGraph& graph, const CookieInstance& cookie) {
  if (cookie.node >= graph.nodes.size() || graph.nodes[cookie.node].kind != NodeKind::Storage ||
      graph.nodes[cookie.node].storage().name != cookie.name) {
    throw UnknownCookie("cookie '" + cookie.name + "' is not a storage node of " + graph.site_url);
  }
  const std::size_t self = cookie.node;
  const auto& storage = graph.nodes[self].storage();
  FeatureVector v{};
  auto set = [&](std::string_view key, double value) { v[feature_index(key)] = value; };

  // Accessors and their storage footprint.
  std::map<std::string, std::set<std::size_t>> touched_by;  // actor node id -> storage nodes
  std::set<std::string> own_accessors;
  for (const auto& edge : graph.edges) {
    std::size_t actor = 0, target = 0;
    switch (edge.kind) {
      case EdgeKind::WritesStorage:
      case EdgeKind::DeletesStorage: actor = edge.src; target = edge.dst; break;
      case EdgeKind::ReadsStorage: actor = edge.dst; target = edge.src; break;
      default: continue;
    }
    touched_by[graph.nodes[actor].id].insert(target);
    if (target == self) own_accessors.insert(graph.nodes[actor].id);
  }
  double max_other = 0, sum_other = 0;
  for (const auto& actor : own_accessors) {
    const double others = static_cast<double>(touched_by[actor].size() - 1);
    max_other = std::max(max_other, others);
    sum_other += others;
  }
  set("s1", static_cast<double>(own_accessors.size()));
  set("s4", max_other);
  set("s5", own_accessors.empty() ? 0.0 : sum_other / static_cast<double>(own_accessors.size()));

  double in_degree = 0, out_degree = 0;
  double exfil_url = 0, exfil_header = 0, exfil_body = 0, infil = 0;
  std::set<std::string> destinations;
  std::set<Encoding> encodings;
  for (const auto& edge : graph.edges) {
    if (edge.dst == self && (edge.kind == EdgeKind::WritesStorage || edge.kind == EdgeKind::DeletesStorage ||
                             edge.kind == EdgeKind::Infiltrates)) {
      ++in_degree;
    }
    if (edge.src == self && (edge.kind == EdgeKind::ReadsStorage || edge.kind == EdgeKind::Exfiltrates)) {
      ++out_degree;
    }
    if (edge.kind == EdgeKind::Exfiltrates && edge.src == self) {
      switch (*edge.location) {
        case Location::UrlQueryValue:
        case Location::UrlPathSegment: ++exfil_url; break;
        case Location::HeaderValue: ++exfil_header; break;
        default: ++exfil_body; break;
      }
      destinations.insert(graph.nodes[edge.dst].request().etld1);
      encodings.insert(*edge.encoding);
    }
    if (edge.kind == EdgeKind::Infiltrates && edge.dst == self) {
      ++infil;
      encodings.insert(*edge.encoding);
    }
  }
  set("s2", in_degree);
  set("s3", out_degree);

  const std::string& setter_domain = cookie.setter_etld1;
  set("s6", !setter_domain.empty() && setter_domain != graph.site_etld1 ? 1.0 : 0.0);
  set("s7", cookie.setter_actor ? ancestry_depth(graph, *cookie.setter_actor) : 0);

  double reads_js = 0, writes_js = 0, writes_http = 0, deletes = 0, ls_sets = 0;
  for (const auto& a : storage.accesses) {
    const bool js = a.channel == Channel::JavaScript;
    switch (a.op) {
      case EventKind::StorageGet: reads_js += js; break;
      case EventKind::StorageSet:
        (js ? writes_js : writes_http) += 1;
        ls_sets += js && a.store == StoreKind::LocalStorage;
        break;
      case EventKind::StorageDelete: ++deletes; break;
      default: break;
    }
  }
  set("f1", reads_js);
  set("f2", writes_js);
  set("f3", writes_http);
  set("f4", deletes);
  set("f5", ls_sets);
  set("f6", exfil_url);
  set("f7", exfil_header);
  set("f8", exfil_body);
  set("f9", infil);
  set("f10", static_cast<double>(destinations.size()));
  set("f11", static_cast<double>(encodings.size()));

  double endpoint_for_others = 0, redirects_sent = 0, redirects_received = 0;
  if (!setter_domain.empty()) {
    for (const auto& edge : graph.edges) {
      if (edge.kind == EdgeKind::Exfiltrates && edge.src != self &&
          graph.nodes[edge.dst].request().etld1 == setter_domain) {
        ++endpoint_for_others;
      }
      if (edge.kind == EdgeKind::RedirectsTo) {
        redirects_sent += graph.nodes[edge.src].request().etld1 == setter_domain;
        redirects_received += graph.nodes[edge.dst].request().etld1 == setter_domain;
      }
    }
  }
  set("f12", endpoint_for_others);
  set("f13", redirects_sent);
  set("f14", redirects_received);
  set("f15", redirects_sent + redirects_received > 0 ? 1.0 : 0.0);
  return v;
}

std::size_t FeatureTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw Error("feature table has no column " + std::string(name));
}

FeatureTable empty_feature_table() {
  FeatureTable table;
  table.columns.assign(kFeatureNames.begin(), kFeatureNames.end());
  return table;
}

FeatureTable featurize_corpus(std::span<const PageGraph> graphs, unsigned jobs) {
  std::vector<std::vector<FeatureRow>> per_graph(graphs.size());
  parallel_for(graphs.size(), jobs, [&](std::size_t g) {
    for (const auto& cookie : storage_catalog(graphs[g])) {
      const auto v = featurize(graphs[g], cookie);
      per_graph[g].push_back(
          {cookie.site, cookie.name, cookie.setter_key(), cookie.setter_etld1, {v.begin(), v.end()}});
    }
  });
  FeatureTable table = empty_feature_table();
  for (auto& rows : per_graph) {
    for (auto& row : rows) table.rows.push_back(std::move(row));
  }
  return table;
}

std::string serialize_feature_table(const FeatureTable& table) {
  std::vector<std::string> header{"site", "name", "setter_hash", "setter_etld1"};
  header.insert(header.end(), table.columns.begin(), table.columns.end());
  std::string out = csv::join_row(header) + "\n";
  for (const auto& row : table.rows) {
    std::vector<std::string> fields{row.site, row.name, row.setter_hash, row.setter_etld1};
    for (double value : row.values) fields.push_back(format_double(value));
    out += csv::join_row(fields) + "\n";
  }
  return out;
}

FeatureTable parse_feature_table(std::string_view csv_text) {
  const auto rows = csv::parse(csv_text);
  if (rows.empty() || rows[0].size() < 4 || rows[0][0] != "site") {
    throw Error("feature table: missing header");
  }
  FeatureTable table;
  table.columns.assign(rows[0].begin() + 4, rows[0].end());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != rows[0].size()) {
      throw Error("feature table row " + std::to_string(i + 1) + ": wrong field count");
    }
    FeatureRow row{r[0], r[1], r[2], r[3], {}};
    for (std::size_t c = 4; c < r.size(); ++c) {
      double value = 0;
      const auto* end = r[c].data() + r[c].size();
      auto [ptr, ec] = std::from_chars(r[c].data(), end, value);
      if (ec != std::errc() || ptr != end) {
        throw Error("feature table row " + std::to_string(i + 1) + ": bad number '" + r[c] + "'");
      }
      row.values.push_back(value);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace fpats
