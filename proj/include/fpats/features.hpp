#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpats/error.hpp"
#include "fpats/graph.hpp"

namespace fpats {

inline constexpr std::size_t kFeatureCount = 22;

// Column order of the feature table. Changing it changes the file format.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "s1_num_distinct_scripts_accessing",
    "s2_storage_in_degree",
    "s3_storage_out_degree",
    "s4_max_other_storage_accessed_by_accessor",
    "s5_mean_other_storage_accessed_by_accessor",
    "s6_setter_is_third_party",
    "s7_setter_ancestry_depth",
    "f1_reads_js",
    "f2_writes_js",
    "f3_writes_http",
    "f4_deletes",
    "f5_localstorage_sets_js",
    "f6_exfil_url",
    "f7_exfil_header",
    "f8_exfil_body",
    "f9_infiltrations",
    "f10_distinct_exfil_destination_etld1",
    "f11_distinct_encodings_observed",
    "f12_setter_domain_is_exfil_endpoint_for_other_cookies",
    "f13_setter_domain_redirects_sent",
    "f14_setter_domain_redirects_received",
    "f15_setter_domain_in_redirect_chain",
};

// Index of a feature by its short prefix ("f6") or full name; throws Error.
std::size_t feature_index(std::string_view name);

using FeatureVector = std::array<double, kFeatureCount>;

class UnknownCookie : public Error {
 public:
  using Error::Error;
};

FeatureVector featurize(const PageGraph& graph, const CookieInstance& cookie);

struct FeatureRow {
  std::string site;
  std::string name;
  std::string setter_hash;
  std::string setter_etld1;
  std::vector<double> values;  // one per column
};

// Rows keyed by (site, name, setter hash). `columns` is the full dictionary
// unless features were ablated.
struct FeatureTable {
  std::vector<std::string> columns;
  std::vector<FeatureRow> rows;

  std::size_t column(std::string_view name) const;  // throws Error
};

FeatureTable empty_feature_table();

// One row per storage_catalog entry, graphs in the given order.
FeatureTable featurize_corpus(std::span<const PageGraph> graphs, unsigned jobs = 1);

std::string serialize_feature_table(const FeatureTable& table);
FeatureTable parse_feature_table(std::string_view csv_text);

}  // namespace fpats
