#include "fpats/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "fpats/identifiers.hpp"
#include "fpats/strings.hpp"
#include "fpats/url.hpp"
#include "json.hpp"

namespace fpats {

using nlohmann::json;

std::optional<double> percent_change(double allowed, double blocked) {
  if (allowed == 0) return blocked == 0 ? std::optional<double>(0.0) : std::nullopt;
  return (blocked - allowed) / allowed * 100.0;
}

const DiffRow& DiffReport::row(std::string_view metric) const {
  for (const auto& r : rows) {
    if (r.metric == metric) return r;
  }
  throw Error("no metric " + std::string(metric));
}

namespace {

std::string fixed2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string signed_percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%+.2f%%", *v);
  return buf;
}

}  // namespace

std::string DiffReport::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"metric", r.metric},
                         {"mean_allowed", r.mean_allowed},
                         {"mean_blocked", r.mean_blocked},
                         {"percent_change", r.percent_change ? json(*r.percent_change) : json(nullptr)}});
  }
  return json{{"title", title}, {"sites", sites}, {"rows", rows_json}}.dump(2) + "\n";
}

std::string DiffReport::to_table() const {
  std::string out = title + " (" + std::to_string(sites) + " sites)\n";
  char line[200];
  std::snprintf(line, sizeof line, "%-24s %14s %14s %10s\n", "metric", "3P-allowed", "3P-blocked", "change");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-24s %14s %14s %10s\n", r.metric.c_str(), fixed2(r.mean_allowed).c_str(),
                  fixed2(r.mean_blocked).c_str(), signed_percent(r.percent_change).c_str());
    out += line;
  }
  return out;
}

std::vector<TracePair> pair_traces(std::span<const CrawlTrace> allowed, std::span<const CrawlTrace> blocked) {
  std::map<std::string, const CrawlTrace*> by_site;
  for (const auto& t : blocked) by_site.emplace(t.site_etld1, &t);
  std::vector<TracePair> pairs;
  for (const auto& t : allowed) {
    auto it = by_site.find(t.site_etld1);
    if (it != by_site.end()) pairs.push_back({&t, it->second});
  }
  return pairs;
}

namespace {

// Resource type of the request that started a redirect chain.
ResourceType request_type(const TraceIndex& index, const RequestInfo& info) {
  const RequestInfo* current = &info;
  while (!current->payload && current->redirected_from) current = index.request(*current->redirected_from);
  return current->payload ? current->payload->type : ResourceType::Other;
}

using Counts = std::vector<double>;

Counts request_counts(const CrawlTrace& trace, const RuleSet& rules) {
  const TraceIndex index(trace);
  Counts c(5, 0.0);  // total, tracking, non-tracking, with id, without id
  for (const auto& info : index.requests()) {
    const RequestContext context{trace.site_etld1, request_type(index, info)};
    c[0] += 1;
    if (!rules.any_list_blocks(info.url, context)) {
      c[2] += 1;
      continue;
    }
    c[1] += 1;
    RequestPayload probe;
    probe.request_id = info.request_id;
    probe.url = info.url;
    (extract_identifiers(probe).empty() ? c[4] : c[3]) += 1;
  }
  return c;
}

struct CookieSetter {
  std::string url;
  std::string etld1;
  ResourceType type = ResourceType::Script;
  bool identifier = false;
};

// First-party cookies by name with the first writer's URL and whether any
// written value is an identifier.
std::map<std::string, CookieSetter> cookie_setters(const CrawlTrace& trace) {
  const TraceIndex index(trace);
  std::map<std::string, CookieSetter> cookies;
  for (const auto& e : trace.events) {
    if (e.kind != EventKind::StorageSet || e.storage().store != StoreKind::Cookie) continue;
    const auto& p = e.storage();
    auto [it, inserted] = cookies.try_emplace(p.key);
    if (inserted) {
      if (e.actor.is_script()) {
        const auto* script = index.script(e.actor.id);
        it->second.url = script->source_url;
        it->second.etld1 = script->source_etld1;
      } else if (e.actor.is_request()) {
        const auto* request = index.request(e.actor.id);
        it->second.url = request->url;
        it->second.etld1 = request->etld1;
        it->second.type = request_type(index, *request);
      }
    }
    if (p.value && is_identifier(*p.value)) it->second.identifier = true;
  }
  return cookies;
}

Counts cookie_counts(const CrawlTrace& trace, const RuleSet& rules) {
  Counts c(5, 0.0);  // total, by trackers, by non-trackers, with id, without id
  for (const auto& [name, setter] : cookie_setters(trace)) {
    c[0] += 1;
    const bool tracker = !setter.url.empty() &&
                         rules.any_list_blocks(setter.url, RequestContext{trace.site_etld1, setter.type});
    c[tracker ? 1 : 2] += 1;
    c[setter.identifier ? 3 : 4] += 1;
  }
  return c;
}

template <typename CountFn>
DiffReport diff_report(std::string title, const std::vector<std::string>& metrics, std::span<const TracePair> pairs,
                       CountFn count) {
  DiffReport report;
  report.title = std::move(title);
  Counts allowed(metrics.size(), 0.0), blocked(metrics.size(), 0.0);
  for (const auto& pair : pairs) {
    if (pair.allowed->events.empty() || pair.blocked->events.empty()) continue;
    ++report.sites;
    const Counts a = count(*pair.allowed);
    const Counts b = count(*pair.blocked);
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      allowed[m] += a[m];
      blocked[m] += b[m];
    }
  }
  if (report.sites == 0) throw EmptyCorpus();
  const double n = static_cast<double>(report.sites);
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    const double ma = allowed[m] / n;
    const double mb = blocked[m] / n;
    report.rows.push_back({metrics[m], ma, mb, percent_change(ma, mb)});
  }
  return report;
}

}  // namespace

DiffReport diff_request_stats(std::span<const TracePair> pairs, const RuleSet& rules) {
  return diff_report("Average number of requests per site",
                     {"Total", "Tracking", "Non-Tracking", "Tracking with ID", "Tracking without ID"}, pairs,
                     [&](const CrawlTrace& t) { return request_counts(t, rules); });
}

DiffReport diff_cookie_stats(std::span<const TracePair> pairs, const RuleSet& rules) {
  return diff_report("Average number of first-party cookies per site",
                     {"Total", "Set by Trackers", "Set by Non-Trackers", "with ID", "without ID"}, pairs,
                     [&](const CrawlTrace& t) { return cookie_counts(t, rules); });
}

std::string PresenceReport::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) rows_json.push_back({{"domain", r.domain}, {"sites", r.sites}, {"percent", r.percent}});
  return json{{"title", title}, {"total_sites", total_sites}, {"rows", rows_json}}.dump(2) + "\n";
}

std::string PresenceReport::to_table() const {
  std::string out = title + " (" + std::to_string(total_sites) + " sites)\n";
  char line[200];
  std::snprintf(line, sizeof line, "%-32s %8s %9s\n", "domain", "sites", "percent");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-32s %8zu %8s%%\n", r.domain.c_str(), r.sites, fixed2(r.percent).c_str());
    out += line;
  }
  return out;
}

PresenceReport domain_presence(std::span<const CrawlTrace> traces, const RuleSet& rules, PresenceKind kind,
                               std::size_t top_k) {
  PresenceReport report;
  report.title = kind == PresenceKind::Requests ? "Sites sending identifier-bearing tracking requests"
                                                : "Sites with identifier cookies set by tracker scripts";
  std::map<std::string, std::size_t> sites_per_domain;
  for (const auto& trace : traces) {
    if (trace.events.empty()) continue;
    ++report.total_sites;
    std::set<std::string> domains;
    if (kind == PresenceKind::Requests) {
      const TraceIndex index(trace);
      for (const auto& info : index.requests()) {
        if (!rules.any_list_blocks(info.url, {trace.site_etld1, request_type(index, info)})) continue;
        RequestPayload probe;
        probe.url = info.url;
        if (!extract_identifiers(probe).empty()) domains.insert(info.etld1);
      }
    } else {
      for (const auto& [name, setter] : cookie_setters(trace)) {
        if (setter.identifier && !setter.url.empty() &&
            rules.any_list_blocks(setter.url, {trace.site_etld1, setter.type})) {
          domains.insert(setter.etld1);
        }
      }
    }
    for (const auto& d : domains) ++sites_per_domain[d];
  }
  for (const auto& [domain, sites] : sites_per_domain) {
    report.rows.push_back(
        {domain, sites, 100.0 * static_cast<double>(sites) / static_cast<double>(report.total_sites)});
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const auto& a, const auto& b) { return a.sites > b.sites; });
  if (top_k > 0 && report.rows.size() > top_k) report.rows.resize(top_k);
  return report;
}

SummaryStats summarize(std::vector<double> values) {
  SummaryStats s;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  s.median = n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2;
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(n);
  double sq = 0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(n));
  return s;
}

FlowReport flow_distribution_stats(const FeatureTable& table, const std::vector<CookieLabel>& labels) {
  const std::size_t f6 = table.column(kFeatureNames[feature_index("f6")]);
  const std::size_t f7 = table.column(kFeatureNames[feature_index("f7")]);
  const std::size_t f8 = table.column(kFeatureNames[feature_index("f8")]);
  const std::size_t f2 = table.column(kFeatureNames[feature_index("f2")]);
  const std::size_t f3 = table.column(kFeatureNames[feature_index("f3")]);
  std::map<LabelKey, CookieClass> by_key;
  for (const auto& l : labels) by_key[l.key] = l.label;
  std::map<CookieClass, std::pair<std::vector<double>, std::vector<double>>> samples;
  for (const auto& row : table.rows) {
    auto it = by_key.find({row.site, row.name, row.setter_hash});
    if (it == by_key.end() || it->second == CookieClass::Unknown) continue;
    auto& [exfil, sets] = samples[it->second];
    exfil.push_back(row.values[f6] + row.values[f7] + row.values[f8]);
    sets.push_back(row.values[f2] + row.values[f3]);
  }
  FlowReport report;
  for (auto label : {CookieClass::ATS, CookieClass::NonATS}) {
    auto it = samples.find(label);
    if (it == samples.end()) continue;
    report.classes.push_back(
        {label, it->second.first.size(), summarize(it->second.first), summarize(it->second.second)});
  }
  return report;
}

namespace {

json stats_json(const SummaryStats& s) { return {{"median", s.median}, {"mean", s.mean}, {"std", s.stddev}}; }

}  // namespace

std::string FlowReport::to_json() const {
  json out = json::array();
  for (const auto& c : classes) {
    out.push_back({{"label", to_string(c.label)},
                   {"count", c.count},
                   {"exfiltrations", stats_json(c.exfiltrations)},
                   {"sets", stats_json(c.sets)}});
  }
  return json{{"classes", out}}.dump(2) + "\n";
}

std::string FlowReport::to_table() const {
  std::string out;
  char line[200];
  std::snprintf(line, sizeof line, "%-8s %7s %-14s %8s %8s %8s\n", "class", "count", "statistic", "median", "mean",
                "std");
  out += line;
  for (const auto& c : classes) {
    for (const auto& [name, s] : {std::pair{"exfiltrations", c.exfiltrations}, std::pair{"sets", c.sets}}) {
      std::snprintf(line, sizeof line, "%-8s %7zu %-14s %8s %8s %8s\n", std::string(to_string(c.label)).c_str(),
                    c.count, name, fixed2(s.median).c_str(), fixed2(s.mean).c_str(), fixed2(s.stddev).c_str());
      out += line;
    }
  }
  return out;
}

PrevalenceReport prevalence_report(const std::vector<PredictionRecord>& predictions, std::size_t total_sites,
                                   std::size_t top_k) {
  struct Group {
    std::set<std::string> sites;
    std::map<std::string, std::size_t> destinations;
    std::map<std::string, std::size_t> feature_votes;
  };
  std::map<std::pair<std::string, std::string>, Group> groups;
  std::set<std::string> ats_sites;
  for (const auto& p : predictions) {
    if (!p.ats) continue;
    ats_sites.insert(p.site);
    auto& g = groups[{p.name, p.setter_etld1}];
    g.sites.insert(p.site);
    for (const auto& [domain, count] : p.destinations) g.destinations[domain] += count;
    ++g.feature_votes[p.most_important_feature];
  }
  PrevalenceReport report;
  report.total_sites = total_sites;
  report.sites_with_ats = ats_sites.size();
  const double denom = total_sites ? static_cast<double>(total_sites) : 1.0;
  report.percent_sites_with_ats = 100.0 * static_cast<double>(ats_sites.size()) / denom;
  for (const auto& [key, g] : groups) {
    PrevalenceRow row;
    row.cookie_name = key.first;
    row.setter_etld1 = key.second;
    row.sites = g.sites.size();
    row.percent_of_sites = 100.0 * static_cast<double>(row.sites) / denom;
    row.destination_count = g.destinations.size();
    std::vector<std::pair<std::string, std::size_t>> ranked(g.destinations.begin(), g.destinations.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    for (std::size_t i = 0; i < ranked.size() && i < 3; ++i) row.top3_destinations.push_back(ranked[i].first);
    std::size_t best = 0;
    for (const auto& [feature, votes] : g.feature_votes) {
      if (votes > best) {
        best = votes;
        row.most_important_feature = feature;
      }
    }
    report.rows.push_back(std::move(row));
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const auto& a, const auto& b) { return a.sites > b.sites; });
  if (top_k > 0 && report.rows.size() > top_k) report.rows.resize(top_k);
  return report;
}

std::string PrevalenceReport::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"cookie_name", r.cookie_name},
                         {"setter_etld1", r.setter_etld1},
                         {"sites", r.sites},
                         {"percent_of_sites", r.percent_of_sites},
                         {"destination_count", r.destination_count},
                         {"top3_destinations", r.top3_destinations},
                         {"most_important_feature", r.most_important_feature}});
  }
  return json{{"total_sites", total_sites},
              {"sites_with_ats", sites_with_ats},
              {"percent_sites_with_ats", percent_sites_with_ats},
              {"rows", rows_json}}
             .dump(2) +
         "\n";
}

std::string PrevalenceReport::to_table() const {
  std::string out = std::to_string(sites_with_ats) + " of " + std::to_string(total_sites) + " sites (" +
                    fixed2(percent_sites_with_ats) + "%) deploy at least one ATS first-party cookie\n";
  char line[400];
  std::snprintf(line, sizeof line, "%-16s %-24s %8s %6s  %-48s %s\n", "cookie", "setter", "sites%", "dests",
                "top destinations", "most important feature");
  out += line;
  for (const auto& r : rows) {
    std::string top;
    for (const auto& d : r.top3_destinations) top += (top.empty() ? "" : ", ") + d;
    std::snprintf(line, sizeof line, "%-16s %-24s %7s%% %6zu  %-48s %s\n", r.cookie_name.c_str(),
                  r.setter_etld1.c_str(), fixed2(r.percent_of_sites).c_str(), r.destination_count, top.c_str(),
                  r.most_important_feature.c_str());
    out += line;
  }
  return out;
}

}  // namespace fpats
