#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "fpats/analysis.hpp"
#include "fpats/identifiers.hpp"
#include "fpats/io.hpp"
#include "fpats/rng.hpp"
#include "support.hpp"

using namespace fpats;
namespace fs = std::filesystem;

namespace {

std::vector<CrawlTrace> load_dir(const fs::path& dir) {
  std::vector<CrawlTrace> out;
  for (const auto& f : list_files(dir, ".jsonl")) out.push_back(load_trace(f));
  return out;
}

std::vector<FilterList> diff_lists() {
  const auto dir = testsupport::data_dir() / "diff" / "lists";
  return {load_filter_list(dir / "list_a.txt"), load_filter_list(dir / "list_b.txt")};
}

double expected_change(double allowed_sum, double blocked_sum, double n) {
  const double ma = allowed_sum / n, mb = blocked_sum / n;
  return (mb - ma) / ma * 100;
}

void check_row(const DiffReport& r, std::string_view metric, double allowed_sum, double blocked_sum, double n) {
  INFO(metric);
  const auto& row = r.row(metric);
  CHECK(row.mean_allowed == doctest::Approx(allowed_sum / n));
  CHECK(row.mean_blocked == doctest::Approx(blocked_sum / n));
  if (allowed_sum == 0) {
    CHECK(row.percent_change == (blocked_sum == 0 ? std::optional<double>(0.0) : std::nullopt));
  } else {
    REQUIRE(row.percent_change.has_value());
    CHECK(*row.percent_change == doctest::Approx(expected_change(allowed_sum, blocked_sum, n)));
  }
}

bool any_list_blocks(const std::vector<FilterList>& lists, const std::string& url, const RequestContext& c) {
  return std::any_of(lists.begin(), lists.end(),
                     [&](const FilterList& l) { return match_resource(l.rules, url, c) == Verdict::Blocked; });
}

bool url_has_identifier(const std::string& url) {
  RequestPayload probe;
  probe.url = url;
  return !extract_identifiers(probe).empty();
}

// Per-site counts recomputed by a single pass over the events.
std::vector<double> recount_requests(const CrawlTrace& t, const std::vector<FilterList>& lists) {
  std::vector<double> c(5, 0.0);
  std::map<std::string, ResourceType> root_type;
  auto count = [&](const std::string& url, ResourceType type) {
    c[0] += 1;
    if (!any_list_blocks(lists, url, {t.site_etld1, type})) {
      c[2] += 1;
    } else {
      c[1] += 1;
      c[url_has_identifier(url) ? 3 : 4] += 1;
    }
  };
  for (const auto& e : t.events) {
    if (e.kind == EventKind::Request) {
      root_type[e.request().request_id] = e.request().type;
      count(e.request().url, e.request().type);
    } else if (e.kind == EventKind::Redirect) {
      const auto type = root_type.at(e.redirect().from_request_id);
      root_type[e.redirect().request_id] = type;
      count(e.redirect().to_url, type);
    }
  }
  return c;
}

std::vector<double> recount_cookies(const CrawlTrace& t, const std::vector<FilterList>& lists) {
  std::map<std::string, std::string> script_url;
  std::map<std::string, std::pair<std::string, ResourceType>> request_url;
  struct Seen {
    std::string url;
    ResourceType type = ResourceType::Script;
    bool id = false;
  };
  std::map<std::string, Seen> cookies;
  for (const auto& e : t.events) {
    if (e.kind == EventKind::ScriptLoad) script_url[e.script_load().script_id] = e.script_load().source_url;
    if (e.kind == EventKind::Request) request_url[e.request().request_id] = {e.request().url, e.request().type};
    if (e.kind == EventKind::Redirect)
      request_url[e.redirect().request_id] = {e.redirect().to_url,
                                              request_url.at(e.redirect().from_request_id).second};
    if (e.kind != EventKind::StorageSet || e.storage().store != StoreKind::Cookie) continue;
    if (!cookies.count(e.storage().key)) {
      Seen s;
      if (e.actor.is_script()) s.url = script_url.at(e.actor.id);
      if (e.actor.is_request()) std::tie(s.url, s.type) = request_url.at(e.actor.id);
      cookies[e.storage().key] = s;
    }
    if (is_identifier(*e.storage().value)) cookies[e.storage().key].id = true;
  }
  std::vector<double> c(5, 0.0);
  for (const auto& [name, s] : cookies) {
    c[0] += 1;
    c[!s.url.empty() && any_list_blocks(lists, s.url, {t.site_etld1, s.type}) ? 1 : 2] += 1;
    c[s.id ? 3 : 4] += 1;
  }
  return c;
}

const std::vector<std::string> kRequestMetrics = {"Total", "Tracking", "Non-Tracking", "Tracking with ID",
                                                  "Tracking without ID"};
const std::vector<std::string> kCookieMetrics = {"Total", "Set by Trackers", "Set by Non-Trackers", "with ID",
                                                 "without ID"};

}  // namespace

TEST_CASE("percent change") {
  CHECK(*percent_change(4, 2) == -50.0);
  CHECK(*percent_change(2, 3) == 50.0);
  CHECK(*percent_change(0, 0) == 0.0);
  CHECK_FALSE(percent_change(0, 1).has_value());
}

TEST_CASE("differential fixture, counted by hand") {
  const auto allowed = load_dir(testsupport::data_dir() / "diff" / "allowed");
  const auto blocked = load_dir(testsupport::data_dir() / "diff" / "blocked");
  const auto lists = diff_lists();
  const RuleSet rules(lists);
  const auto pairs = pair_traces(allowed, blocked);
  CHECK(pairs.size() == 3);  // gamma.net has no blocked visit

  const auto req = diff_request_stats(pairs, rules);
  CHECK(req.sites == 2);  // delta.io's blocked visit recorded nothing
  check_row(req, "Total", 11, 4, 2);
  check_row(req, "Tracking", 6, 0, 2);
  check_row(req, "Non-Tracking", 5, 4, 2);
  check_row(req, "Tracking with ID", 3, 0, 2);
  check_row(req, "Tracking without ID", 3, 0, 2);
  CHECK(*req.row("Tracking").percent_change == -100.0);

  const auto ck = diff_cookie_stats(pairs, rules);
  CHECK(ck.sites == 2);
  check_row(ck, "Total", 5, 4, 2);
  check_row(ck, "Set by Trackers", 3, 2, 2);
  check_row(ck, "Set by Non-Trackers", 2, 2, 2);
  check_row(ck, "with ID", 4, 4, 2);
  check_row(ck, "without ID", 1, 0, 2);

  CHECK(req.to_table().find("-100.00%") != std::string::npos);
  CHECK(req.to_json().find("\"Tracking with ID\"") != std::string::npos);
  CHECK_THROWS_AS(req.row("nope"), Error);
}

TEST_CASE("identical visits change nothing") {
  const auto allowed = load_dir(testsupport::data_dir() / "diff" / "allowed");
  const auto lists = diff_lists();
  const RuleSet rules(lists);
  const auto pairs = pair_traces(allowed, allowed);
  for (const auto& report : {diff_request_stats(pairs, rules), diff_cookie_stats(pairs, rules)}) {
    for (const auto& row : report.rows) {
      REQUIRE(row.percent_change.has_value());
      CHECK(*row.percent_change == 0.0);
    }
  }
}

TEST_CASE("no usable pairs is an error") {
  const RuleSet rules;
  CHECK_THROWS_AS(diff_request_stats({}, rules), EmptyCorpus);
  testsupport::TraceBuilder empty("https://www.a.com/");
  const std::vector<CrawlTrace> one{empty.trace()};
  const auto pairs = pair_traces(one, one);
  CHECK_THROWS_AS(diff_cookie_stats(pairs, rules), EmptyCorpus);
}

TEST_CASE("swapping the crawl roles flips the sign consistently") {
  const auto allowed = load_dir(testsupport::data_dir() / "diff" / "allowed");
  const auto blocked = load_dir(testsupport::data_dir() / "diff" / "blocked");
  const RuleSet rules(diff_lists());
  const auto forward = diff_request_stats(pair_traces(allowed, blocked), rules);
  const auto backward = diff_request_stats(pair_traces(blocked, allowed), rules);
  for (std::size_t i = 0; i < forward.rows.size(); ++i) {
    CHECK(forward.rows[i].mean_allowed == backward.rows[i].mean_blocked);
    CHECK(forward.rows[i].mean_blocked == backward.rows[i].mean_allowed);
    if (forward.rows[i].percent_change && backward.rows[i].percent_change && *forward.rows[i].percent_change != 0)
      CHECK(std::signbit(*forward.rows[i].percent_change) != std::signbit(*backward.rows[i].percent_change));
  }
}

TEST_CASE("differential reports equal a brute-force recount on random traces") {
  const std::vector<FilterList> lists = {
      parse_filter_list("||tracker1.com^\n||tracker2.com^$third-party\n@@||tracker2.com/ok\n", "a"),
      parse_filter_list("||example.net^\n/collect$script\n||partner.co.uk^$domain=site5.com\n", "b")};
  const RuleSet rules(lists);
  for (std::uint64_t round = 0; round < 10; ++round) {
    std::vector<CrawlTrace> allowed, blocked;
    for (std::uint64_t s = 0; s < 8; ++s) {
      allowed.push_back(testsupport::random_trace(round * 100 + s + 1, 150));
      auto b = testsupport::random_trace(round * 100 + s + 5001, 150);
      b.site_url = allowed.back().site_url;
      b.site_etld1 = allowed.back().site_etld1;
      blocked.push_back(std::move(b));
    }
    const auto pairs = pair_traces(allowed, blocked);
    std::vector<double> ra(5, 0), rb(5, 0), ca(5, 0), cb(5, 0);
    double n = 0;
    for (std::size_t i = 0; i < allowed.size(); ++i) {
      if (allowed[i].events.empty() || blocked[i].events.empty()) continue;
      n += 1;
      const auto a1 = recount_requests(allowed[i], lists), b1 = recount_requests(blocked[i], lists);
      const auto a2 = recount_cookies(allowed[i], lists), b2 = recount_cookies(blocked[i], lists);
      for (int m = 0; m < 5; ++m) {
        ra[m] += a1[m];
        rb[m] += b1[m];
        ca[m] += a2[m];
        cb[m] += b2[m];
      }
    }
    if (n == 0) continue;
    const auto req = diff_request_stats(pairs, rules);
    const auto ck = diff_cookie_stats(pairs, rules);
    CHECK(req.sites == static_cast<std::size_t>(n));
    for (int m = 0; m < 5; ++m) {
      check_row(req, kRequestMetrics[m], ra[m], rb[m], n);
      check_row(ck, kCookieMetrics[m], ca[m], cb[m], n);
    }
  }
}

TEST_CASE("domain presence") {
  std::vector<CrawlTrace> traces;
  for (int i = 0; i < 10; ++i) {
    testsupport::TraceBuilder b("https://www.site" + std::to_string(i) + ".com/");
    const auto s = b.script("s1", "https://cdn.tracker1.com/t.js", "t");
    const bool identified = i < 5;
    b.request("r1", s, identified ? "https://px.tracker1.com/c?uid=ABCDEFGH1234" : "https://px.tracker1.com/c?x=1");
    b.set(s, StoreKind::Cookie, "_t", identified ? "ABCDEFGH1234" : "1");
    if (i < 2) b.request("r2", s, "https://ads.other.net/p/QWERTYUI9876");
    traces.push_back(b.trace());
  }
  testsupport::TraceBuilder empty("https://www.empty.com/");
  traces.push_back(empty.trace());
  const RuleSet rules(std::vector<FilterList>{parse_filter_list("||tracker1.com^\n||other.net^\n")});

  const auto req = domain_presence(traces, rules, PresenceKind::Requests);
  CHECK(req.total_sites == 10);
  REQUIRE(req.rows.size() == 2);
  CHECK(req.rows[0].domain == "tracker1.com");
  CHECK(req.rows[0].sites == 5);
  CHECK(req.rows[0].percent == 50.0);
  CHECK(req.rows[1].domain == "other.net");
  CHECK(req.rows[1].percent == 20.0);
  CHECK(domain_presence(traces, rules, PresenceKind::Requests, 1).rows.size() == 1);

  const auto ck = domain_presence(traces, rules, PresenceKind::Cookies);
  REQUIRE(ck.rows.size() == 1);
  CHECK(ck.rows[0].domain == "tracker1.com");
  CHECK(ck.rows[0].percent == 50.0);

  CHECK(domain_presence({}, rules, PresenceKind::Requests).rows.empty());
  CHECK(req.to_table().find("50.00%") != std::string::npos);
}

TEST_CASE("summary statistics") {
  const auto one = summarize({7});
  CHECK(one.median == 7);
  CHECK(one.mean == 7);
  CHECK(one.stddev == 0);
  const auto s = summarize({4, 1, 3, 2});
  CHECK(s.median == 2.5);
  CHECK(s.mean == 2.5);
  CHECK(s.stddev == doctest::Approx(std::sqrt(1.25)));
  CHECK(summarize({}).mean == 0);
}

TEST_CASE("flow distribution statistics match a recomputation") {
  Rng rng(4);
  FeatureTable table = empty_feature_table();
  std::vector<CookieLabel> labels;
  std::map<CookieClass, std::vector<double>> exfil, sets;
  for (int i = 0; i < 300; ++i) {
    FeatureRow row{"site" + std::to_string(i % 40), "c" + std::to_string(i), "h", "x.com",
                   std::vector<double>(kFeatureCount, 0.0)};
    for (auto& v : row.values) v = static_cast<double>(rng.below(5));
    const auto cls = std::vector{CookieClass::ATS, CookieClass::NonATS, CookieClass::Unknown}[rng.below(3)];
    if (rng.chance(0.9)) labels.push_back({{row.site, row.name, row.setter_hash}, cls, Provenance::Fused});
    if (labels.size() && labels.back().key.name == row.name && cls != CookieClass::Unknown) {
      exfil[cls].push_back(row.values[feature_index("f6")] + row.values[feature_index("f7")] +
                           row.values[feature_index("f8")]);
      sets[cls].push_back(row.values[feature_index("f2")] + row.values[feature_index("f3")]);
    }
    table.rows.push_back(std::move(row));
  }
  const auto report = flow_distribution_stats(table, labels);
  REQUIRE(report.classes.size() == 2);
  CHECK(report.classes[0].label == CookieClass::ATS);
  for (const auto& c : report.classes) {
    auto& xs = exfil[c.label];
    CHECK(c.count == xs.size());
    double mean = 0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    double var = 0;
    for (double v : xs) var += (v - mean) * (v - mean);
    std::sort(xs.begin(), xs.end());
    const auto n = xs.size();
    const double median = n % 2 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2;
    CHECK(c.exfiltrations.mean == doctest::Approx(mean));
    CHECK(c.exfiltrations.median == median);
    CHECK(c.exfiltrations.stddev == doctest::Approx(std::sqrt(var / static_cast<double>(n))));
    double set_mean = 0;
    for (double v : sets[c.label]) set_mean += v;
    CHECK(c.sets.mean == doctest::Approx(set_mean / static_cast<double>(sets[c.label].size())));
  }
  CHECK(report.to_table().find("exfiltrations") != std::string::npos);
}

TEST_CASE("prevalence of a single ATS cookie") {
  PredictionRecord p{"a.com", "_t", "h", "tracker1.com", true, 0.9, "f6_exfil_url", {{"tracker2.com", 2}}};
  const auto report = prevalence_report({p}, 1);
  CHECK(report.sites_with_ats == 1);
  CHECK(report.percent_sites_with_ats == 100.0);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].percent_of_sites == 100.0);
  CHECK(report.rows[0].destination_count == 1);
  CHECK(report.rows[0].most_important_feature == "f6_exfil_url");
  CHECK(prevalence_report({}, 0).rows.empty());
}

TEST_CASE("prevalence rows equal a group-by over predictions") {
  Rng rng(31);
  const std::vector<std::string> names = {"_ga", "_fbp", "uid", "IDStore"};
  const std::vector<std::string> setters = {"tracker1.com", "tracker2.com", "shop.com"};
  const std::vector<std::string> dests = {"a.net", "b.net", "c.net", "d.net", "e.net"};
  const std::vector<std::string> feats = {"f6_exfil_url", "f7_exfil_header", "f5_localstorage_sets_js"};
  for (int round = 0; round < 20; ++round) {
    std::vector<PredictionRecord> preds;
    const std::size_t total_sites = 30;
    for (int i = 0; i < 120; ++i) {
      PredictionRecord p;
      p.site = "site" + std::to_string(rng.below(total_sites));
      p.name = rng.pick(names);
      p.setter_etld1 = rng.pick(setters);
      p.ats = rng.chance(0.6);
      p.most_important_feature = rng.pick(feats);
      for (std::uint64_t k = 0, m = rng.below(4); k < m; ++k) p.destinations[rng.pick(dests)] += 1 + rng.below(3);
      preds.push_back(std::move(p));
    }
    std::map<std::pair<std::string, std::string>, std::pair<std::set<std::string>, std::set<std::string>>> groups;
    std::set<std::string> ats_sites;
    for (const auto& p : preds) {
      if (!p.ats) continue;
      ats_sites.insert(p.site);
      auto& g = groups[{p.name, p.setter_etld1}];
      g.first.insert(p.site);
      for (const auto& [d, c] : p.destinations) g.second.insert(d);
    }
    const auto report = prevalence_report(preds, total_sites);
    CHECK(report.sites_with_ats == ats_sites.size());
    REQUIRE(report.rows.size() == groups.size());
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
      const auto& r = report.rows[i];
      const auto& g = groups.at({r.cookie_name, r.setter_etld1});
      CHECK(r.sites == g.first.size());
      CHECK(r.percent_of_sites == doctest::Approx(100.0 * g.first.size() / total_sites));
      CHECK(r.destination_count == g.second.size());
      CHECK(r.top3_destinations.size() == std::min<std::size_t>(3, g.second.size()));
      for (const auto& d : r.top3_destinations) CHECK(g.second.count(d) == 1);
      if (i > 0) CHECK(report.rows[i - 1].sites >= r.sites);
    }
    CHECK(prevalence_report(preds, total_sites, 2).rows.size() == std::min<std::size_t>(2, groups.size()));
  }
}
