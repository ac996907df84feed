#include "fpats/labeling.hpp"

#include <set>
#include <stdexcept>

#include "fpats/csv.hpp"
#include "fpats/io.hpp"
#include "fpats/strings.hpp"

namespace fpats {

std::string_view to_string(CookieClass label) {
  switch (label) {
    case CookieClass::ATS: return "ATS";
    case CookieClass::NonATS: return "NonATS";
    case CookieClass::Unknown: return "Unknown";
  }
  return "?";
}

std::string_view to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::FilterList: return "FilterList";
    case Provenance::PurposeDB: return "PurposeDB";
    case Provenance::Fused: return "Fused";
    case Provenance::Propagated: return "Propagated";
  }
  return "?";
}

std::string_view to_string(Purpose purpose) {
  switch (purpose) {
    case Purpose::StrictlyNecessary: return "StrictlyNecessary";
    case Purpose::Functional: return "Functional";
    case Purpose::Analytics: return "Analytics";
    case Purpose::AdvertisingTracking: return "AdvertisingTracking";
  }
  return "?";
}

CookieClass cookie_class_from_string(std::string_view text) {
  for (auto c : {CookieClass::ATS, CookieClass::NonATS, CookieClass::Unknown}) {
    if (to_string(c) == text) return c;
  }
  throw Error("unknown cookie label: " + std::string(text));
}

Provenance provenance_from_string(std::string_view text) {
  for (auto p : {Provenance::FilterList, Provenance::PurposeDB, Provenance::Fused, Provenance::Propagated}) {
    if (to_string(p) == text) return p;
  }
  throw Error("unknown label provenance: " + std::string(text));
}

Purpose purpose_from_string(std::string_view text) {
  for (auto p : {Purpose::StrictlyNecessary, Purpose::Functional, Purpose::Analytics,
                 Purpose::AdvertisingTracking}) {
    if (iequals(to_string(p), text)) return p;
  }
  throw PurposeDbError("unknown purpose: " + std::string(text));
}

PurposeDb PurposeDb::parse(std::string_view csv_text) {
  PurposeDb db;
  const auto rows = csv::parse(csv_text);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (i == 0 && !row.empty() && row[0] == "name") continue;
    if (row.size() != 3) {
      throw PurposeDbError("purpose db row " + std::to_string(i + 1) + ": expected 3 fields");
    }
    db.add({row[0], to_lower(row[1]), purpose_from_string(row[2])});
  }
  return db;
}

PurposeDb PurposeDb::load(const std::filesystem::path& path) { return parse(read_file(path)); }

void PurposeDb::add(PurposeRecord record) {
  auto key = std::make_pair(record.cookie_name, record.domain);
  if (!records_.emplace(std::move(key), record.purpose).second) {
    throw PurposeDbError("duplicate purpose record for (" + record.cookie_name + ", " +
                         record.domain + ")");
  }
}

std::optional<Purpose> PurposeDb::lookup(std::string_view name, std::string_view domain) const {
  auto it = records_.find(std::make_pair(std::string(name), std::string(domain)));
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

FilterLabel label_from_filters(const CookieInstance& cookie, const RuleSet& rules) {
  if (!cookie.setter) return {CookieClass::Unknown, true};
  const RequestContext context{cookie.site, ResourceType::Script};
  if (rules.any_list_blocks(cookie.setter->source_url, context)) return {CookieClass::Unknown, false};
  return {CookieClass::NonATS, false};
}

CookieClass label_from_purpose_db(const CookieInstance& cookie, const PurposeDb& db) {
  const auto purpose = db.lookup(cookie.name, cookie.site);
  if (purpose == Purpose::Analytics || purpose == Purpose::AdvertisingTracking) return CookieClass::ATS;
  return CookieClass::Unknown;
}

FusedLabel fuse_labels(CookieClass from_filters, CookieClass from_purpose_db) {
  if (from_filters == CookieClass::ATS || from_purpose_db == CookieClass::NonATS) {
    throw std::invalid_argument("fuse_labels: filter label must be NonATS/Unknown and purpose label ATS/Unknown");
  }
  const bool fl_known = from_filters == CookieClass::NonATS;
  const bool pd_known = from_purpose_db == CookieClass::ATS;
  if (pd_known) return {CookieClass::ATS, fl_known ? Provenance::Fused : Provenance::PurposeDB};
  if (fl_known) return {CookieClass::NonATS, Provenance::FilterList};
  return {CookieClass::Unknown, Provenance::Fused};
}

CookieLabel label_cookie(const CookieInstance& cookie, const RuleSet& rules, const PurposeDb& db) {
  const auto fused = fuse_labels(label_from_filters(cookie, rules).label, label_from_purpose_db(cookie, db));
  return {{cookie.site, cookie.name, cookie.setter_key()}, fused.label, fused.provenance};
}

std::size_t propagate_ats(std::vector<CookieLabel>& labels) {
  std::set<std::pair<std::string_view, std::string_view>> ats_pairs;
  for (const auto& l : labels) {
    if (l.label == CookieClass::ATS && !l.key.setter_hash.empty()) {
      ats_pairs.emplace(l.key.name, l.key.setter_hash);
    }
  }
  std::size_t changed = 0;
  for (auto& l : labels) {
    if (l.label != CookieClass::Unknown || l.key.setter_hash.empty()) continue;
    if (ats_pairs.contains({l.key.name, l.key.setter_hash})) {
      l.label = CookieClass::ATS;
      l.provenance = Provenance::Propagated;
      ++changed;
    }
  }
  return changed;
}

std::string serialize_labels(const std::vector<CookieLabel>& labels) {
  std::string out = "site,name,setter_hash,label,provenance\n";
  for (const auto& l : labels) {
    out += csv::join_row({l.key.site, l.key.name, l.key.setter_hash, std::string(to_string(l.label)),
                          std::string(to_string(l.provenance))});
    out += '\n';
  }
  return out;
}

std::vector<CookieLabel> parse_labels(std::string_view csv_text) {
  std::vector<CookieLabel> labels;
  const auto rows = csv::parse(csv_text);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 5) throw Error("labels row " + std::to_string(i + 1) + ": expected 5 fields");
    labels.push_back({{row[0], row[1], row[2]}, cookie_class_from_string(row[3]), provenance_from_string(row[4])});
  }
  return labels;
}

}  // namespace fpats
