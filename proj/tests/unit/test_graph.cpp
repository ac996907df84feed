#include "doctest.h"
#include "fpats/graph.hpp"
#include "fpats/strings.hpp"
#include "support.hpp"

using namespace fpats;

namespace {

CrawlTrace sync_trace() { return load_trace(testsupport::data_dir() / "sync" / "sync.jsonl"); }

}  // namespace

TEST_CASE("cookie-sync graph inventory") {
  const auto g = build_graph(sync_trace());
  CHECK(g.site_etld1 == "example.com");
  CHECK(g.count(NodeKind::Script) == 1);
  CHECK(g.count(NodeKind::Request) == 3);
  CHECK(g.count(NodeKind::Storage) == 2);
  CHECK(g.count(NodeKind::Element) == 0);
  CHECK(g.count(EdgeKind::Initiates) == 3);
  CHECK(g.count(EdgeKind::ReadsStorage) == 2);
  CHECK(g.count(EdgeKind::WritesStorage) == 2);
  CHECK(g.count(EdgeKind::Creates) == 0);
  CHECK(g.count(EdgeKind::Exfiltrates) == 3);
  CHECK(g.count(EdgeKind::Infiltrates) == 1);

  const auto id = g.find("storage:IDStore");
  REQUIRE(id.has_value());
  const auto& st = g.nodes[*id].storage();
  CHECK(st.in_cookie);
  CHECK(st.in_local_storage);
  CHECK(st.max_value_length() == std::string("trackeruid123").size());
  CHECK_FALSE(g.find("storage:nothing").has_value());
  REQUIRE(g.find("request:r2").has_value());
  CHECK(g.nodes[*g.find("request:r2")].request().etld1 == "tracker2.com");
}

TEST_CASE("empty trace gives an empty graph") {
  testsupport::TraceBuilder b("https://www.site.com/");
  const auto g = build_graph(b.trace());
  CHECK(g.nodes.empty());
  CHECK(g.edges.empty());
  CHECK(storage_catalog(g).empty());
  CHECK(split(serialize_graph(g), '\n').size() == 2);  // header line only
}

TEST_CASE("graph content matches a scan-based reference on random traces") {
  for (std::uint64_t seed = 1; seed <= 80; ++seed) {
    const auto t = testsupport::random_trace(seed, 250);
    const auto g = build_graph(t);
    INFO("seed ", seed);
    CHECK(testsupport::signature_of(g) == testsupport::reference_graph_signature(t));
  }
}

TEST_CASE("nodes are ordered by first appearance and edges are well formed") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const auto g = build_graph(testsupport::random_trace(seed, 200));
    for (std::size_t i = 1; i < g.nodes.size(); ++i) {
      const auto& a = g.nodes[i - 1];
      const auto& b = g.nodes[i];
      CHECK(std::tie(a.first_seen, a.first_event, a.id) < std::tie(b.first_seen, b.first_event, b.id));
    }
    for (const auto& e : g.edges) {
      CHECK(e.src < g.nodes.size());
      CHECK(e.dst < g.nodes.size());
    }
    for (std::size_t i = 0; i < g.nodes.size(); ++i) CHECK(g.find(g.nodes[i].id) == i);
    // Header plus one JSONL record per node and per edge.
    const auto lines = split(serialize_graph(g), '\n');
    std::size_t records = 0;
    for (auto l : lines) records += !l.empty();
    CHECK(records == 1 + g.nodes.size() + g.edges.size());
  }
}

TEST_CASE("building twice gives the same graph") {
  const auto t = testsupport::random_trace(9, 300);
  const auto a = build_graph(t);
  const auto b = build_graph(t);
  CHECK(a.nodes == b.nodes);
  CHECK(a.edges == b.edges);
  CHECK(serialize_graph(a) == serialize_graph(b));
}

TEST_CASE("storage catalog") {
  const auto g = build_graph(sync_trace());
  const auto catalog = storage_catalog(g);
  REQUIRE(catalog.size() == 2);
  std::vector<std::string> names;
  for (const auto& c : catalog) names.push_back(c.name);
  std::sort(names.begin(), names.end());
  CHECK(names == std::vector<std::string>{"IDStore", "infoCookie"});
  for (const auto& c : catalog) {
    CHECK(c.site == "example.com");
    if (c.name == "IDStore") {
      REQUIRE(c.setter.has_value());
      CHECK(c.setter_etld1 == "tracker1.com");
      CHECK(c.exfiltration_edges.size() == 2);
      CHECK(c.infiltration_edges.size() == 1);
      CHECK(!c.setter_key().empty());
    } else {
      // Only read in the trace, never written.
      CHECK_FALSE(c.setter.has_value());
      CHECK(c.setter_key().empty());
      CHECK(c.exfiltration_edges.size() == 1);
    }
  }

  testsupport::TraceBuilder b("https://www.site.com/");
  const auto s = b.script("s1", "https://cdn.t.com/a.js", "h");
  b.set(s, StoreKind::Cookie, "tiny", "ab");
  b.set(s, StoreKind::Cookie, "long", "abcdefgh");
  b.request("r1", s, "https://x.t.com/p");
  b.set(ActorRef::request("r1"), StoreKind::Cookie, "http_set", "session-0001");
  const auto small = storage_catalog(build_graph(b.trace()));
  REQUIRE(small.size() == 2);
  CHECK(small[0].name == "long");
  CHECK(small[0].setter_url == "https://cdn.t.com/a.js");
  CHECK(small[1].name == "http_set");
  CHECK_FALSE(small[1].setter.has_value());
  CHECK(small[1].setter_url == "https://x.t.com/p");
  CHECK(small[1].setter_etld1 == "t.com");
}
