#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fpats/error.hpp"
#include "fpats/features.hpp"
#include "fpats/filter_rules.hpp"
#include "fpats/labeling.hpp"
#include "fpats/predictions.hpp"
#include "fpats/trace.hpp"

namespace fpats {

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("no successfully loaded site pairs") {}
};

// (blocked - allowed) / allowed * 100. Undefined (nullopt) when the allowed
// mean is 0 and the blocked mean is not; 0 when both are 0.
std::optional<double> percent_change(double allowed, double blocked);

struct DiffRow {
  std::string metric;
  double mean_allowed = 0;
  double mean_blocked = 0;
  std::optional<double> percent_change;
};

struct DiffReport {
  std::string title;
  std::size_t sites = 0;
  std::vector<DiffRow> rows;

  const DiffRow& row(std::string_view metric) const;
  std::string to_json() const;
  std::string to_table() const;
};

struct TracePair {
  const CrawlTrace* allowed = nullptr;
  const CrawlTrace* blocked = nullptr;
};

// Pairs traces of the same site; sites present in only one list are skipped.
std::vector<TracePair> pair_traces(std::span<const CrawlTrace> allowed, std::span<const CrawlTrace> blocked);

// Per-site request counts: Total, Tracking, Non-Tracking, Tracking with ID,
// Tracking without ID. Only pairs where both visits recorded events count.
DiffReport diff_request_stats(std::span<const TracePair> pairs, const RuleSet& rules);

// Per-site first-party cookie counts (distinct names written to the cookie
// store): Total, Set by Trackers, Set by Non-Trackers, with ID, without ID.
DiffReport diff_cookie_stats(std::span<const TracePair> pairs, const RuleSet& rules);

struct PresenceRow {
  std::string domain;
  std::size_t sites = 0;
  double percent = 0;
};

struct PresenceReport {
  std::string title;
  std::size_t total_sites = 0;
  std::vector<PresenceRow> rows;  // descending percent, then domain
  std::string to_json() const;
  std::string to_table() const;
};

enum class PresenceKind { Requests, Cookies };

// Requests: share of sites sending at least one identifier-bearing tracking
// request to the domain. Cookies: share of sites where a tracker script from
// the domain sets an identifier-valued first-party cookie. top_k = 0 keeps all.
PresenceReport domain_presence(std::span<const CrawlTrace> traces, const RuleSet& rules, PresenceKind kind,
                               std::size_t top_k = 0);

struct SummaryStats {
  double median = 0;
  double mean = 0;
  double stddev = 0;  // population
};

SummaryStats summarize(std::vector<double> values);

struct FlowClassStats {
  CookieClass label = CookieClass::ATS;
  std::size_t count = 0;
  SummaryStats exfiltrations;  // f6 + f7 + f8
  SummaryStats sets;           // f2 + f3
};

struct FlowReport {
  std::vector<FlowClassStats> classes;  // ATS then NonATS, when present
  std::string to_json() const;
  std::string to_table() const;
};

FlowReport flow_distribution_stats(const FeatureTable& table, const std::vector<CookieLabel>& labels);

struct PrevalenceRow {
  std::string cookie_name;
  std::string setter_etld1;
  std::size_t sites = 0;
  double percent_of_sites = 0;
  std::size_t destination_count = 0;
  std::vector<std::string> top3_destinations;
  std::string most_important_feature;
};

struct PrevalenceReport {
  std::size_t total_sites = 0;
  std::size_t sites_with_ats = 0;
  double percent_sites_with_ats = 0;
  std::vector<PrevalenceRow> rows;
  std::string to_json() const;
  std::string to_table() const;
};

// Rows keyed by (cookie name, setter domain) over ATS predictions; percents
// use total_sites as the denominator.
PrevalenceReport prevalence_report(const std::vector<PredictionRecord>& predictions, std::size_t total_sites,
                                   std::size_t top_k = 0);

}  // namespace fpats
