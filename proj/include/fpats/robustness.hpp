#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fpats/error.hpp"
#include "fpats/features.hpp"
#include "fpats/trace.hpp"

namespace fpats {

inline constexpr std::size_t kRenameMinLength = 2;
inline constexpr std::size_t kRenameMaxLength = 15;

struct RenamedTrace {
  CrawlTrace trace;
  std::map<std::string, std::string> names;  // original -> replacement
};

// Replaces every storage key with a random [a-z0-9] name of 2-15 characters,
// consistently within the site and without collisions. Set-Cookie and Cookie
// header names are rewritten to match. The generator is seeded from the seed
// and the site URL, so the result does not depend on corpus order.
RenamedTrace rename_trace(const CrawlTrace& trace, std::uint64_t seed);
std::vector<CrawlTrace> rename_attack(std::span<const CrawlTrace> traces, std::uint64_t seed, unsigned jobs = 1);

class UnknownColumns : public Error {
 public:
  using Error::Error;
};

// Drops the URL/header/body exfiltration and infiltration columns (f6-f9).
// Applying it to an already reduced table is a no-op.
FeatureTable ablate_flow_features(const FeatureTable& table);
std::vector<std::string> ablated_feature_names();

}  // namespace fpats
