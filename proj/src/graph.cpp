#include "fpats/graph.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "fpats/url.hpp"
#include "json.hpp"

namespace fpats {

using nlohmann::json;

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Script: return "Script";
    case NodeKind::Request: return "Request";
    case NodeKind::Storage: return "Storage";
    case NodeKind::Element: return "Element";
  }
  return "?";
}

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Creates: return "Creates";
    case EdgeKind::Initiates: return "Initiates";
    case EdgeKind::ReadsStorage: return "ReadsStorage";
    case EdgeKind::WritesStorage: return "WritesStorage";
    case EdgeKind::DeletesStorage: return "DeletesStorage";
    case EdgeKind::RedirectsTo: return "RedirectsTo";
    case EdgeKind::Exfiltrates: return "Exfiltrates";
    case EdgeKind::Infiltrates: return "Infiltrates";
  }
  return "?";
}

std::size_t StorageAttrs::max_value_length() const {
  std::size_t best = 0;
  for (const auto& a : accesses) {
    if (a.value) best = std::max(best, a.value->size());
  }
  return best;
}

std::string node_id(NodeKind kind, std::string_view key) {
  switch (kind) {
    case NodeKind::Script: return "script:" + std::string(key);
    case NodeKind::Request: return "request:" + std::string(key);
    case NodeKind::Storage: return "storage:" + std::string(key);
    case NodeKind::Element: return "element:" + std::string(key);
  }
  return std::string(key);
}

std::string node_id(const ActorRef& actor) {
  switch (actor.kind) {
    case ActorRef::Kind::Script: return node_id(NodeKind::Script, actor.id);
    case ActorRef::Kind::Request: return node_id(NodeKind::Request, actor.id);
    case ActorRef::Kind::Parser: break;
  }
  return {};
}

std::optional<std::size_t> PageGraph::find(std::string_view id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == id) return i;
  }
  return std::nullopt;
}

std::size_t PageGraph::count(NodeKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [&](const auto& n) { return n.kind == kind; }));
}

std::size_t PageGraph::count(EdgeKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [&](const auto& e) { return e.kind == kind; }));
}

PageGraph build_graph(const CrawlTrace& trace) { return build_graph(trace, find_flows(trace)); }

PageGraph build_graph(const CrawlTrace& trace, const FlowSet& flows) {
  PageGraph graph;
  graph.site_url = trace.site_url;
  graph.site_etld1 = trace.site_etld1;
  graph.flows = flows;

  // Nodes and edges are first collected keyed by id, then renumbered into
  // first-appearance order.
  std::vector<GraphNode> nodes;
  std::map<std::string, std::size_t, std::less<>> by_id;
  struct PendingEdge {
    std::string src, dst;
    GraphEdge edge;
  };
  std::vector<PendingEdge> pending;

  auto add_node = [&](std::string id, NodeKind kind, std::size_t event, auto attrs) -> GraphNode& {
    auto [it, inserted] = by_id.try_emplace(id, nodes.size());
    if (inserted) {
      nodes.push_back({std::move(id), kind, trace.events[event].timestamp, event, std::move(attrs)});
    }
    return nodes[it->second];
  };
  auto add_edge = [&](std::string src, std::string dst, EdgeKind kind, std::size_t event) -> GraphEdge& {
    GraphEdge edge;
    edge.kind = kind;
    edge.event_index = event;
    pending.push_back({std::move(src), std::move(dst), edge});
    return pending.back().edge;
  };

  const TraceIndex index(trace);
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const auto& e = trace.events[i];
    const std::string actor = node_id(e.actor);
    switch (e.kind) {
      case EventKind::ScriptLoad: {
        const auto& p = e.script_load();
        const std::string id = node_id(NodeKind::Script, p.script_id);
        add_node(id, NodeKind::Script, i, ScriptAttrs{*index.script(p.script_id), e.actor});
        if (!actor.empty()) add_edge(actor, id, EdgeKind::Creates, i);
        break;
      }
      case EventKind::ElementCreate: {
        const auto& p = e.element();
        const std::string id = node_id(NodeKind::Element, p.element_id);
        add_node(id, NodeKind::Element, i, ElementAttrs{p.tag, e.actor});
        if (!actor.empty()) add_edge(actor, id, EdgeKind::Creates, i);
        break;
      }
      case EventKind::Request: {
        const auto& p = e.request();
        const auto* info = index.request(p.request_id);
        const std::string id = node_id(NodeKind::Request, p.request_id);
        add_node(id, NodeKind::Request, i,
                 RequestAttrs{p.url, p.method, info->etld1, info->initiator, std::nullopt});
        if (!actor.empty()) add_edge(actor, id, EdgeKind::Initiates, i);
        break;
      }
      case EventKind::Redirect: {
        const auto& p = e.redirect();
        const auto* info = index.request(p.request_id);
        const std::string id = node_id(NodeKind::Request, p.request_id);
        add_node(id, NodeKind::Request, i,
                 RequestAttrs{p.to_url, "GET", info->etld1, info->initiator, p.from_request_id});
        add_edge(node_id(NodeKind::Request, p.from_request_id), id, EdgeKind::RedirectsTo, i);
        break;
      }
      case EventKind::Response: break;
      case EventKind::StorageSet:
      case EventKind::StorageGet:
      case EventKind::StorageDelete: {
        const auto& p = e.storage();
        const std::string id = node_id(NodeKind::Storage, p.key);
        auto& node = add_node(id, NodeKind::Storage, i, StorageAttrs{p.key, false, false, {}});
        auto& storage = std::get<StorageAttrs>(node.attrs);
        (p.store == StoreKind::Cookie ? storage.in_cookie : storage.in_local_storage) = true;
        storage.accesses.push_back({i, e.timestamp, e.kind, p.store, p.channel, e.actor, p.value});
        if (e.kind == EventKind::StorageSet) {
          add_edge(actor, id, EdgeKind::WritesStorage, i).channel = p.channel;
        } else if (e.kind == EventKind::StorageDelete) {
          add_edge(actor, id, EdgeKind::DeletesStorage, i);
        } else {
          add_edge(id, actor, EdgeKind::ReadsStorage, i);
        }
        break;
      }
    }
  }

  auto add_flow_edges = [&](const std::vector<EncodingMatch>& matches, EdgeKind kind) {
    for (std::size_t m = 0; m < matches.size(); ++m) {
      const auto& match = matches[m];
      const std::string storage = node_id(NodeKind::Storage, match.cookie.name);
      const std::string request = node_id(NodeKind::Request, match.request_id);
      const bool exfil = kind == EdgeKind::Exfiltrates;
      auto& edge = add_edge(exfil ? storage : request, exfil ? request : storage, kind,
                            index.request(match.request_id)->event_index);
      edge.encoding = match.encoding;
      edge.location = match.location;
      edge.flow_index = m;
    }
  };
  add_flow_edges(flows.exfiltrations, EdgeKind::Exfiltrates);
  add_flow_edges(flows.infiltrations, EdgeKind::Infiltrates);

  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& na = nodes[a];
    const auto& nb = nodes[b];
    if (na.first_seen != nb.first_seen) return na.first_seen < nb.first_seen;
    if (na.first_event != nb.first_event) return na.first_event < nb.first_event;
    return na.id < nb.id;
  });
  std::vector<std::size_t> position(nodes.size());
  for (std::size_t k = 0; k < order.size(); ++k) position[order[k]] = k;
  graph.nodes.reserve(nodes.size());
  for (auto k : order) graph.nodes.push_back(std::move(nodes[k]));

  graph.edges.reserve(pending.size());
  for (auto& p : pending) {
    p.edge.src = position[by_id.at(p.src)];
    p.edge.dst = position[by_id.at(p.dst)];
    graph.edges.push_back(p.edge);
  }
  return graph;
}

namespace {

json actor_json(const ActorRef& actor) { return actor.to_string(); }

}  // namespace

std::string serialize_graph(const PageGraph& graph) {
  std::string out;
  json header{{"record", "graph"},
              {"site_url", graph.site_url},
              {"site_etld1", graph.site_etld1},
              {"nodes", graph.nodes.size()},
              {"edges", graph.edges.size()}};
  out += header.dump() + "\n";
  for (const auto& node : graph.nodes) {
    json j{{"record", "node"}, {"id", node.id}, {"kind", to_string(node.kind)}, {"first_seen", node.first_seen}};
    std::visit(
        [&](const auto& a) {
          using A = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<A, ScriptAttrs>) {
            j["source_url"] = a.identity.source_url;
            j["source_etld1"] = a.identity.source_etld1;
            j["content_hash"] = a.identity.content_hash;
            j["context"] = to_string(a.identity.execution_context);
            j["creator"] = actor_json(a.creator);
          } else if constexpr (std::is_same_v<A, RequestAttrs>) {
            j["url"] = a.url;
            j["method"] = a.method;
            j["etld1"] = a.etld1;
            j["initiator"] = actor_json(a.initiator);
            if (a.redirected_from) j["redirected_from"] = *a.redirected_from;
          } else if constexpr (std::is_same_v<A, StorageAttrs>) {
            j["name"] = a.name;
            json stores = json::array();
            if (a.in_cookie) stores.push_back("Cookie");
            if (a.in_local_storage) stores.push_back("LocalStorage");
            j["stores"] = stores;
            json history = json::array();
            for (const auto& access : a.accesses) {
              json h{{"ts", access.timestamp},
                     {"op", to_string(access.op)},
                     {"store", to_string(access.store)},
                     {"channel", to_string(access.channel)},
                     {"actor", actor_json(access.actor)}};
              if (access.value) h["value"] = *access.value;
              history.push_back(std::move(h));
            }
            j["history"] = std::move(history);
          } else {
            j["tag"] = a.tag;
            j["creator"] = actor_json(a.creator);
          }
        },
        node.attrs);
    out += j.dump() + "\n";
  }
  for (const auto& edge : graph.edges) {
    json j{{"record", "edge"},
           {"src", graph.nodes[edge.src].id},
           {"dst", graph.nodes[edge.dst].id},
           {"kind", to_string(edge.kind)}};
    if (edge.channel) j["channel"] = to_string(*edge.channel);
    if (edge.encoding) j["encoding"] = to_string(*edge.encoding);
    if (edge.location) j["location"] = to_string(*edge.location);
    out += j.dump() + "\n";
  }
  return out;
}

std::string CookieInstance::setter_key() const {
  if (!setter) return {};
  return setter->content_hash.empty() ? setter->source_url : setter->content_hash;
}

std::vector<CookieInstance> storage_catalog(const PageGraph& graph) {
  std::vector<CookieInstance> catalog;
  std::vector<std::vector<std::size_t>> exfil(graph.nodes.size()), infil(graph.nodes.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto& edge = graph.edges[e];
    if (edge.kind == EdgeKind::Exfiltrates) exfil[edge.src].push_back(e);
    if (edge.kind == EdgeKind::Infiltrates) infil[edge.dst].push_back(e);
  }
  for (std::size_t n = 0; n < graph.nodes.size(); ++n) {
    const auto& node = graph.nodes[n];
    if (node.kind != NodeKind::Storage) continue;
    const auto& storage = node.storage();
    const std::size_t longest = storage.max_value_length();
    if (longest < kMinIdentifierLength) continue;

    CookieInstance instance;
    instance.site = graph.site_etld1;
    instance.name = storage.name;
    instance.node = n;
    instance.accesses = storage.accesses;
    instance.exfiltration_edges = exfil[n];
    instance.infiltration_edges = infil[n];
    instance.max_value_length = longest;
    const auto first_write = std::find_if(storage.accesses.begin(), storage.accesses.end(),
                                          [](const auto& a) { return a.op == EventKind::StorageSet; });
    if (first_write != storage.accesses.end()) {
      instance.setter_actor = first_write->actor;
      if (auto idx = graph.find(node_id(first_write->actor))) {
        const auto& setter_node = graph.nodes[*idx];
        if (setter_node.kind == NodeKind::Script) {
          instance.setter = setter_node.script().identity;
          instance.setter_url = instance.setter->source_url;
          instance.setter_etld1 = instance.setter->source_etld1;
        } else if (setter_node.kind == NodeKind::Request) {
          instance.setter_url = setter_node.request().url;
          instance.setter_etld1 = setter_node.request().etld1;
        }
      }
    }
    catalog.push_back(std::move(instance));
  }
  return catalog;
}

}  // namespace fpats
