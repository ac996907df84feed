#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fpats/error.hpp"
#include "fpats/filter_rules.hpp"
#include "fpats/graph.hpp"

namespace fpats {

enum class CookieClass { ATS, NonATS, Unknown };
enum class Provenance { FilterList, PurposeDB, Fused, Propagated };
enum class Purpose { StrictlyNecessary, Functional, Analytics, AdvertisingTracking };

std::string_view to_string(CookieClass label);
std::string_view to_string(Provenance provenance);
std::string_view to_string(Purpose purpose);
CookieClass cookie_class_from_string(std::string_view text);
Provenance provenance_from_string(std::string_view text);
Purpose purpose_from_string(std::string_view text);

struct PurposeRecord {
  std::string cookie_name;
  std::string domain;
  Purpose purpose = Purpose::StrictlyNecessary;
};

class PurposeDbError : public Error {
 public:
  using Error::Error;
};

// Declared cookie purposes keyed by exact (cookie name, registrable domain).
class PurposeDb {
 public:
  // CSV with header `name,domain,purpose`. Duplicate keys are an error.
  static PurposeDb parse(std::string_view csv_text);
  static PurposeDb load(const std::filesystem::path& path);

  void add(PurposeRecord record);
  std::optional<Purpose> lookup(std::string_view name, std::string_view domain) const;
  std::size_t size() const { return records_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, Purpose, std::less<>> records_;
};

struct FilterLabel {
  CookieClass label = CookieClass::Unknown;  // NonATS or Unknown
  bool missing_setter = false;  // value written without a script actor
};

// NonATS when no list matches the setter script URL, Unknown when any does.
FilterLabel label_from_filters(const CookieInstance& cookie, const RuleSet& rules);

// ATS when the declared purpose is Analytics or AdvertisingTracking.
CookieClass label_from_purpose_db(const CookieInstance& cookie, const PurposeDb& db);

struct FusedLabel {
  CookieClass label = CookieClass::Unknown;
  Provenance provenance = Provenance::Fused;
};

// The purpose database wins over the filter lists. Throws
// std::invalid_argument for inputs outside {NonATS, Unknown} x {ATS, Unknown}.
FusedLabel fuse_labels(CookieClass from_filters, CookieClass from_purpose_db);

struct LabelKey {
  std::string site;
  std::string name;
  std::string setter_hash;
  auto operator<=>(const LabelKey&) const = default;
};

struct CookieLabel {
  LabelKey key;
  CookieClass label = CookieClass::Unknown;
  Provenance provenance = Provenance::Fused;
  bool operator==(const CookieLabel&) const = default;
};

CookieLabel label_cookie(const CookieInstance& cookie, const RuleSet& rules, const PurposeDb& db);

// Unknown instances of a (name, setter hash) pair that has at least one ATS
// instance become ATS with provenance Propagated. Instances without a setter
// hash are left alone. Returns the number of labels changed.
std::size_t propagate_ats(std::vector<CookieLabel>& labels);

// CSV `site,name,setter_hash,label,provenance`.
std::string serialize_labels(const std::vector<CookieLabel>& labels);
std::vector<CookieLabel> parse_labels(std::string_view csv_text);

}  // namespace fpats
