#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fpats/identifiers.hpp"
#include "fpats/trace.hpp"

namespace fpats {

enum class NodeKind { Script, Request, Storage, Element };
enum class EdgeKind {
  Creates,
  Initiates,
  ReadsStorage,
  WritesStorage,
  DeletesStorage,
  RedirectsTo,
  Exfiltrates,
  Infiltrates
};

std::string_view to_string(NodeKind kind);
std::string_view to_string(EdgeKind kind);

struct ScriptAttrs {
  ScriptIdentity identity;
  ActorRef creator;
  bool operator==(const ScriptAttrs&) const = default;
};

struct RequestAttrs {
  std::string url;
  std::string method;
  std::string etld1;
  ActorRef initiator;  // root initiator for redirect hops
  std::optional<std::string> redirected_from;
  bool operator==(const RequestAttrs&) const = default;
};

// One storage access as recorded in the trace.
struct StorageAccess {
  std::size_t event_index = 0;
  std::int64_t timestamp = 0;
  EventKind op = EventKind::StorageGet;
  StoreKind store = StoreKind::Cookie;
  Channel channel = Channel::JavaScript;
  ActorRef actor;
  std::optional<std::string> value;
  bool operator==(const StorageAccess&) const = default;
};

struct StorageAttrs {
  std::string name;
  bool in_cookie = false;
  bool in_local_storage = false;
  std::vector<StorageAccess> accesses;  // timestamp-ordered value history
  std::size_t max_value_length() const;
  bool operator==(const StorageAttrs&) const = default;
};

struct ElementAttrs {
  std::string tag;
  ActorRef creator;
  bool operator==(const ElementAttrs&) const = default;
};

struct GraphNode {
  std::string id;  // "script:<id>", "request:<id>", "storage:<name>", "element:<id>"
  NodeKind kind = NodeKind::Script;
  std::int64_t first_seen = 0;
  std::size_t first_event = 0;
  std::variant<ScriptAttrs, RequestAttrs, StorageAttrs, ElementAttrs> attrs;

  const ScriptAttrs& script() const { return std::get<ScriptAttrs>(attrs); }
  const RequestAttrs& request() const { return std::get<RequestAttrs>(attrs); }
  const StorageAttrs& storage() const { return std::get<StorageAttrs>(attrs); }
  const ElementAttrs& element() const { return std::get<ElementAttrs>(attrs); }
  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  std::size_t src = 0;  // node index
  std::size_t dst = 0;
  EdgeKind kind = EdgeKind::Creates;
  std::size_t event_index = 0;  // triggering event; for flow edges the request's declaring event
  std::optional<Channel> channel;    // WritesStorage
  std::optional<Encoding> encoding;  // Exfiltrates / Infiltrates
  std::optional<Location> location;  // Exfiltrates / Infiltrates
  std::optional<std::size_t> flow_index;  // index into the FlowSet list it came from
  bool operator==(const GraphEdge&) const = default;
};

// Execution graph of one site visit. Immutable once built.
struct PageGraph {
  std::string site_url;
  std::string site_etld1;
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  FlowSet flows;

  std::optional<std::size_t> find(std::string_view id) const;
  std::size_t count(NodeKind kind) const;
  std::size_t count(EdgeKind kind) const;
};

std::string node_id(NodeKind kind, std::string_view key);
std::string node_id(const ActorRef& actor);

// Nodes are ordered by first appearance (timestamp, then event position,
// then id); edges follow trace order with flow edges appended afterwards.
PageGraph build_graph(const CrawlTrace& trace);
PageGraph build_graph(const CrawlTrace& trace, const FlowSet& flows);

// JSONL: a header record, one record per node, then one per edge, in graph
// order.
std::string serialize_graph(const PageGraph& graph);

// Storage node projected for labeling and featurization.
struct CookieInstance {
  std::string site;  // registrable domain of the visited site
  std::string name;
  std::size_t node = 0;
  std::optional<ScriptIdentity> setter;  // script identity of the first writer
  std::optional<ActorRef> setter_actor;
  std::string setter_url;    // script source, or request URL for HTTP writes
  std::string setter_etld1;
  std::vector<StorageAccess> accesses;
  std::vector<std::size_t> exfiltration_edges;
  std::vector<std::size_t> infiltration_edges;
  std::size_t max_value_length = 0;

  // Script identity used to link instances across sites: content hash,
  // falling back to the source URL; empty when no script set the value.
  std::string setter_key() const;
};

// One instance per storage node whose longest observed value has >= 8 chars.
std::vector<CookieInstance> storage_catalog(const PageGraph& graph);

}  // namespace fpats
