#include "doctest.h"
#include "fpats/features.hpp"
#include "support.hpp"

using namespace fpats;

namespace {

double at(const FeatureVector& v, std::string_view name) { return v[feature_index(name)]; }

const CookieInstance& find_instance(const std::vector<CookieInstance>& catalog, std::string_view name) {
  for (const auto& c : catalog)
    if (c.name == name) return c;
  FAIL("instance not found: " << name);
  throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("feature dictionary lookups") {
  CHECK(feature_index("s1") == 0);
  CHECK(feature_index("f6") == 12);
  CHECK(feature_index("f1") == 7);
  CHECK(feature_index("f15_setter_domain_in_redirect_chain") == 21);
  CHECK_THROWS_AS(feature_index("f16"), Error);
  CHECK_THROWS_AS(feature_index("f"), Error);
}

TEST_CASE("cookie-sync identifier features") {
  const auto g = build_graph(load_trace(testsupport::data_dir() / "sync" / "sync.jsonl"));
  const auto catalog = storage_catalog(g);
  const auto v = featurize(g, find_instance(catalog, "IDStore"));
  CHECK(at(v, "f6") == 1);
  CHECK(at(v, "f7") == 1);
  CHECK(at(v, "f8") == 0);
  CHECK(at(v, "f9") == 1);
  CHECK(at(v, "f5") >= 1);
  CHECK(at(v, "f10") == 2);
  CHECK(at(v, "f2") == 2);
  CHECK(at(v, "f1") == 1);
  CHECK(at(v, "s6") == 1);
  CHECK(at(v, "s1") == 1);
  CHECK(at(v, "f10") <= at(v, "f6") + at(v, "f7") + at(v, "f8"));

  CookieInstance stranger;
  stranger.name = "nope";
  stranger.node = g.nodes.size() + 4;
  CHECK_THROWS_AS(featurize(g, stranger), UnknownCookie);
}

TEST_CASE("a session cookie that never leaves has no flow features") {
  testsupport::TraceBuilder b("https://www.shop.com/");
  const auto s = b.script("s1", "https://www.shop.com/app.js", "app");
  b.request("r1", ActorRef::parser(), "https://www.shop.com/");
  b.set(ActorRef::request("r1"), StoreKind::Cookie, "sessionid", "0123456789abcdef");
  b.get(s, StoreKind::Cookie, "sessionid", "0123456789abcdef");
  b.request("r2", s, "https://www.shop.com/api/cart", ResourceType::XmlHttpRequest,
            {{"Cookie", "sessionid=0123456789abcdef"}});
  const auto g = build_graph(b.trace());
  const auto catalog = storage_catalog(g);
  const auto v = featurize(g, find_instance(catalog, "sessionid"));
  for (auto f : {"f6", "f7", "f8", "f9", "f10", "f11"}) CHECK(at(v, f) == 0);
  CHECK(at(v, "f3") == 1);
  CHECK(at(v, "s6") == 0);
}

TEST_CASE("feature vectors match a trace-rescan reference") {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto t = testsupport::random_trace(seed, 250);
    const auto g = build_graph(t);
    for (const auto& c : storage_catalog(g)) {
      INFO("seed ", seed, " cookie ", c.name);
      const auto v = featurize(g, c);
      const auto expected = testsupport::reference_features(t, c.name);
      for (std::size_t i = 0; i < kFeatureCount; ++i) {
        INFO("feature ", kFeatureNames[i]);
        CHECK(v[i] == doctest::Approx(expected[i]).epsilon(1e-12));
      }
      for (double x : v) CHECK(x >= 0);
      CHECK(v[feature_index("f10")] <= v[feature_index("f6")] + v[feature_index("f7")] + v[feature_index("f8")]);
    }
  }
}

TEST_CASE("feature tables") {
  const auto empty = featurize_corpus({});
  CHECK(empty.rows.empty());
  CHECK(empty.columns.size() == kFeatureCount);
  CHECK(serialize_feature_table(empty).find("f15_setter_domain_in_redirect_chain") != std::string::npos);
  CHECK(parse_feature_table(serialize_feature_table(empty)).columns == empty.columns);

  std::vector<PageGraph> one{build_graph(load_trace(testsupport::data_dir() / "sync" / "sync.jsonl"))};
  CHECK(featurize_corpus(one).rows.size() == 2);

  std::vector<PageGraph> graphs;
  std::size_t expected_rows = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    graphs.push_back(build_graph(testsupport::random_trace(seed, 200)));
    expected_rows += storage_catalog(graphs.back()).size();
  }
  const auto table = featurize_corpus(graphs, 1);
  CHECK(table.rows.size() == expected_rows);
  for (const auto& row : table.rows) CHECK(row.values.size() == kFeatureCount);

  const auto parallel = featurize_corpus(graphs, 4);
  CHECK(serialize_feature_table(parallel) == serialize_feature_table(table));

  const auto text = serialize_feature_table(table);
  const auto back = parse_feature_table(text);
  CHECK(serialize_feature_table(back) == text);
  CHECK(back.column("f6_exfil_url") == 12);
  CHECK_THROWS_AS(back.column("zz"), Error);
  CHECK_THROWS(parse_feature_table("site,name\nx\n"));
}
