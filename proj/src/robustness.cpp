#include "fpats/robustness.hpp"

#include <algorithm>
#include <set>

#include "fpats/parallel.hpp"
#include "fpats/rng.hpp"
#include "fpats/strings.hpp"

namespace fpats {

namespace {

std::string rename_cookie_pairs(std::string_view header, const std::map<std::string, std::string>& names,
                                char separator) {
  std::string out;
  bool first = true;
  for (auto part : split(header, separator)) {
    if (!first) out += separator;
    first = false;
    const auto start = part.find_first_not_of(' ');
    const auto eq = part.find('=');
    if (start == std::string_view::npos || eq == std::string_view::npos || eq < start) {
      out += part;
      continue;
    }
    const std::string name(trim(part.substr(start, eq - start)));
    auto it = names.find(name);
    out += part.substr(0, start);
    out += it == names.end() ? name : it->second;
    out += part.substr(eq);
  }
  return out;
}

}  // namespace

RenamedTrace rename_trace(const CrawlTrace& trace, std::uint64_t seed) {
  std::set<std::string> originals;
  for (const auto& e : trace.events) {
    if (e.is_storage()) originals.insert(e.storage().key);
  }
  RenamedTrace result;
  Rng rng(seed ^ fnv1a64(trace.site_url));
  std::set<std::string> taken;
  for (const auto& name : originals) {
    std::string replacement;
    do {
      const auto length = static_cast<std::size_t>(
          rng.range(static_cast<std::int64_t>(kRenameMinLength), static_cast<std::int64_t>(kRenameMaxLength)));
      replacement = rng.token(length, kAlnumLower);
    } while (!taken.insert(replacement).second);
    result.names.emplace(name, std::move(replacement));
  }

  result.trace = trace;
  for (auto& e : result.trace.events) {
    if (e.is_storage()) {
      auto& p = std::get<StoragePayload>(e.payload);
      p.key = result.names.at(p.key);
    } else if (e.kind == EventKind::Response) {
      for (auto& [name, value] : std::get<ResponsePayload>(e.payload).headers) {
        // Only the leading name=value pair names the cookie; attributes follow.
        if (!iequals(name, "Set-Cookie")) continue;
        const auto semi = value.find(';');
        value = rename_cookie_pairs(value.substr(0, semi), result.names, ';') +
                (semi == std::string::npos ? "" : value.substr(semi));
      }
    } else if (e.kind == EventKind::Request) {
      for (auto& [name, value] : std::get<RequestPayload>(e.payload).headers) {
        if (iequals(name, "Cookie")) value = rename_cookie_pairs(value, result.names, ';');
      }
    }
  }
  return result;
}

std::vector<CrawlTrace> rename_attack(std::span<const CrawlTrace> traces, std::uint64_t seed, unsigned jobs) {
  std::vector<CrawlTrace> out(traces.size());
  parallel_for(traces.size(), jobs, [&](std::size_t i) { out[i] = rename_trace(traces[i], seed).trace; });
  return out;
}

std::vector<std::string> ablated_feature_names() {
  std::vector<std::string> names;
  for (auto name : kFeatureNames) {
    const auto prefix = name.substr(0, name.find('_'));
    if (prefix == "f6" || prefix == "f7" || prefix == "f8" || prefix == "f9") continue;
    names.emplace_back(name);
  }
  return names;
}

FeatureTable ablate_flow_features(const FeatureTable& table) {
  const auto keep = ablated_feature_names();
  for (const auto& c : table.columns) {
    if (std::find(kFeatureNames.begin(), kFeatureNames.end(), c) == kFeatureNames.end()) {
      throw UnknownColumns("feature table has unknown column " + c);
    }
  }
  std::vector<std::size_t> kept_columns;
  FeatureTable out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (std::find(keep.begin(), keep.end(), table.columns[c]) == keep.end()) continue;
    kept_columns.push_back(c);
    out.columns.push_back(table.columns[c]);
  }
  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    FeatureRow r{row.site, row.name, row.setter_hash, row.setter_etld1, {}};
    for (auto c : kept_columns) r.values.push_back(row.values[c]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

}  // namespace fpats
