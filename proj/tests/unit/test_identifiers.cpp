#include <regex>

#include "doctest.h"
#include "fpats/identifiers.hpp"
#include "fpats/rng.hpp"
#include "support.hpp"

using namespace fpats;

namespace {

RequestPayload req(std::string url) {
  RequestPayload p;
  p.request_id = "r1";
  p.url = std::move(url);
  return p;
}

const std::regex kIdentifierRun("[A-Za-z0-9_=-]{8,}");

}  // namespace

TEST_CASE("identifier extraction from URLs") {
  auto tokens = extract_identifiers(req("https://t.com/p?uid=AbC123_-xZ9&q=hi"));
  REQUIRE(tokens.size() == 1);
  CHECK(tokens[0].raw == "AbC123_-xZ9");
  CHECK(tokens[0].location == Location::UrlQueryValue);
  CHECK(tokens[0].source_ref == "r1");

  CHECK(extract_identifiers(req("https://t.com/a/b")).empty());

  tokens = extract_identifiers(req("https://t.com/sync?a=dHJhY2tlcnVpZDEyMw=="));
  REQUIRE(tokens.size() == 1);
  CHECK(tokens[0].raw == "dHJhY2tlcnVpZDEyMw==");

  tokens = extract_identifiers(req("https://t.com/u/ABCDEFGH1234/x?k=v"));
  REQUIRE(tokens.size() == 1);
  CHECK(tokens[0].location == Location::UrlPathSegment);
}

TEST_CASE("identifier runs agree with a regex scan") {
  Rng rng(3);
  const std::string alphabet = "abcXYZ019_-=.;/ &%+";
  for (int i = 0; i < 2000; ++i) {
    const std::string text = rng.token(rng.below(40), alphabet);
    std::vector<std::string> expected;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), kIdentifierRun); it != std::sregex_iterator(); ++it)
      expected.push_back(it->str());
    CHECK(identifier_runs(text) == expected);
    CHECK(is_identifier(text) == std::regex_match(text, kIdentifierRun));
  }
}

TEST_CASE("candidate encodings") {
  const auto forms = candidate_encodings("trackeruid123");
  auto has = [&](Encoding e, const std::string& text) {
    return std::find(forms.begin(), forms.end(), CandidateEncoding{e, text}) != forms.end();
  };
  CHECK(has(Encoding::Plain, "trackeruid123"));
  CHECK(has(Encoding::Base64Std, "dHJhY2tlcnVpZDEyMw=="));
  CHECK(has(Encoding::Base64Std, "dHJhY2tlcnVpZDEyMw"));
  CHECK(has(Encoding::Md5Hex, testsupport::reference_digest("md5", "trackeruid123")));
  CHECK(has(Encoding::Sha256Hex, testsupport::reference_digest("sha256", "trackeruid123")));
  // No reserved characters: the percent form equals the plain form and is dropped.
  CHECK(std::none_of(forms.begin(), forms.end(), [](const auto& f) { return f.encoding == Encoding::PercentEncoded; }));
  CHECK(candidate_encodings("a b c d e").size() > 0);
  CHECK_THROWS_AS(candidate_encodings("short"), ValueTooShort);
}

TEST_CASE("cookie-sync scenario flows") {
  const auto trace = load_trace(testsupport::data_dir() / "sync" / "sync.jsonl");
  const auto flows = find_flows(trace);
  auto exfil = [&](const std::string& name, const std::string& request, Location location) {
    return std::count_if(flows.exfiltrations.begin(), flows.exfiltrations.end(), [&](const EncodingMatch& m) {
      return m.cookie.name == name && m.request_id == request && m.location == location;
    });
  };
  CHECK(flows.exfiltrations.size() == 3);
  CHECK(exfil("IDStore", "r2", Location::UrlQueryValue) == 1);
  CHECK(exfil("IDStore", "r3", Location::HeaderValue) == 1);
  CHECK(exfil("infoCookie", "r1", Location::Body) == 1);
  REQUIRE(flows.infiltrations.size() == 1);
  const auto& in = flows.infiltrations[0];
  CHECK(in.cookie.name == "IDStore");
  CHECK(in.request_id == "r1");
  CHECK(in.location == Location::Body);
  CHECK(in.encoding == Encoding::Plain);
  CHECK(in.cookie.site == "example.com");
}

TEST_CASE("flow detection edge cases") {
  testsupport::TraceBuilder b("https://www.site.com/");
  const auto s = b.script("s1", "https://cdn.t.com/a.js", "h");
  b.request("r0", s, "https://x.t.com/early?v=LATERVALUE123");
  b.set(s, StoreKind::Cookie, "quiet", "neverleaves0001");
  b.set(s, StoreKind::Cookie, "later", "LATERVALUE123");
  b.set(s, StoreKind::Cookie, "dbl", "doubleenc00001");
  b.request("r1", s, "https://x.t.com/d?v=" + base64_encode(base64_encode("doubleenc00001")), ResourceType::Image,
            {{"Cookie", "later=LATERVALUE123"}});
  b.request("r2", s, "https://x.t.com/h", ResourceType::Image, {{"X-Sig", md5_hex("LATERVALUE123")}});
  b.request("r3", s, "https://x.t.com/h", ResourceType::Image, {}, percent_encode("a b") + "doubleenc00001");
  b.response("r3", {{"Set-Cookie", "later=LATERVALUE123"}});
  const auto flows = find_flows(b.trace());
  for (const auto& m : flows.exfiltrations) {
    CHECK(m.cookie.name != "quiet");
    CHECK(m.request_id != "r0");  // issued before the value existed
    CHECK(m.request_id != "r1");  // double Base64 and Cookie header only
  }
  REQUIRE(flows.exfiltrations.size() == 2);
  CHECK(flows.exfiltrations[0].request_id == "r2");
  CHECK(flows.exfiltrations[0].encoding == Encoding::Md5Hex);
  CHECK(flows.exfiltrations[1].request_id == "r3");
  CHECK(flows.exfiltrations[1].location == Location::Body);
  CHECK(flows.infiltrations.empty());  // Set-Cookie headers are not infiltration evidence
}

TEST_CASE("infiltration requires the setter to have initiated the request") {
  testsupport::TraceBuilder b("https://www.site.com/");
  const auto s1 = b.script("s1", "https://cdn.t.com/a.js", "h1");
  const auto s2 = b.script("s2", "https://cdn.u.com/b.js", "h2");
  b.request("r1", s1, "https://api.t.com/id");
  b.response("r1", {{"X-Id", "served-id-0001"}}, "{\"id\":\"served-id-0002\"}");
  b.set(s1, StoreKind::Cookie, "a", "served-id-0001");
  b.set(s2, StoreKind::Cookie, "b", "served-id-0002");
  b.request("r2", s1, "https://api.t.com/later");
  b.response("r2", {}, "served-id-0001");
  const auto flows = find_flows(b.trace());
  REQUIRE(flows.infiltrations.size() == 1);
  CHECK(flows.infiltrations[0].cookie.name == "a");
  CHECK(flows.infiltrations[0].location == Location::HeaderValue);
  CHECK(flows.infiltrations[0].request_id == "r1");
}

TEST_CASE("location names round-trip") {
  for (auto l : {Location::UrlQueryValue, Location::UrlPathSegment, Location::HeaderValue, Location::Body,
                 Location::CookieValue})
    CHECK(location_from_string(to_string(l)) == l);
}
