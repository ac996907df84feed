#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fpats/error.hpp"
#include "fpats/predictions.hpp"

namespace fpats {

enum class Scope { PerSite, Global };
std::string_view to_string(Scope scope);
Scope scope_from_string(std::string_view text);

class InvalidThreshold : public Error {
 public:
  using Error::Error;
};

struct BlockEntry {
  std::string site;  // "*" for global entries
  std::string name;
  std::string setter_etld1;
  double confidence = 0;              // highest qualifying model score
  std::vector<std::string> evidence;  // exfiltration destination domains
  bool operator==(const BlockEntry&) const = default;
};

struct EmitOptions {
  double threshold = 0.5;
  Scope scope = Scope::PerSite;
  // Global scope keeps a (name, setter) pair when at least this fraction of
  // its occurrences score at or above the threshold.
  double global_fraction = 0.5;
};

// Entries ordered by (name, setter, site).
std::vector<BlockEntry> emit_blocklist(const std::vector<PredictionRecord>& predictions, const EmitOptions& options);

// Tab-separated lines under a "# fpats-blocklist v1" header.
std::string serialize_blocklist(const std::vector<BlockEntry>& entries, const EmitOptions& options);
std::vector<BlockEntry> parse_blocklist(std::string_view text);
std::string blocklist_sidecar_json(const std::vector<BlockEntry>& entries, const EmitOptions& options);
// One `domain|cookie-name` line per entry; global entries use "*".
std::string export_extension_list(const std::vector<BlockEntry>& entries);

}  // namespace fpats
