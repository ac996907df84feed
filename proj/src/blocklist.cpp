#include "fpats/blocklist.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <tuple>

#include "fpats/strings.hpp"
#include "json.hpp"

namespace fpats {

using nlohmann::json;

std::string_view to_string(Scope scope) { return scope == Scope::PerSite ? "per-site" : "global"; }

Scope scope_from_string(std::string_view text) {
  if (text == "per-site" || text == "persite" || text == "site") return Scope::PerSite;
  if (text == "global") return Scope::Global;
  throw Error("unknown scope: " + std::string(text));
}

std::vector<BlockEntry> emit_blocklist(const std::vector<PredictionRecord>& predictions, const EmitOptions& options) {
  if (!(options.threshold >= 0 && options.threshold <= 1)) {
    throw InvalidThreshold("threshold must lie in [0, 1]");
  }
  if (!(options.global_fraction >= 0 && options.global_fraction <= 1)) {
    throw InvalidThreshold("global fraction must lie in [0, 1]");
  }
  struct Group {
    std::size_t occurrences = 0;
    std::size_t positives = 0;
    double confidence = 0;
    std::set<std::string> evidence;
  };
  const bool global = options.scope == Scope::Global;
  std::map<std::tuple<std::string, std::string, std::string>, Group> groups;  // (name, setter, site)
  for (const auto& p : predictions) {
    auto& g = groups[{p.name, p.setter_etld1, global ? "*" : p.site}];
    ++g.occurrences;
    if (p.score < options.threshold) continue;
    ++g.positives;
    g.confidence = std::max(g.confidence, p.score);
    for (const auto& [domain, count] : p.destinations) g.evidence.insert(domain);
  }
  std::vector<BlockEntry> entries;
  for (const auto& [key, g] : groups) {
    if (g.positives == 0) continue;
    if (global && static_cast<double>(g.positives) < options.global_fraction * static_cast<double>(g.occurrences)) {
      continue;
    }
    const auto& [name, setter, site] = key;
    entries.push_back({site, name, setter, g.confidence, {g.evidence.begin(), g.evidence.end()}});
  }
  return entries;
}

std::string serialize_blocklist(const std::vector<BlockEntry>& entries, const EmitOptions& options) {
  std::string out = "# fpats-blocklist v1\n";
  out += "# scope=" + std::string(to_string(options.scope)) + " threshold=" + format_double(options.threshold);
  if (options.scope == Scope::Global) out += " global_fraction=" + format_double(options.global_fraction);
  out += "\n# site\tcookie\tsetter\tconfidence\tevidence\n";
  for (const auto& e : entries) {
    std::string evidence;
    for (const auto& d : e.evidence) evidence += (evidence.empty() ? "" : ",") + d;
    out += e.site + "\t" + e.name + "\t" + e.setter_etld1 + "\t" + format_double(e.confidence) + "\t" + evidence + "\n";
  }
  return out;
}

std::vector<BlockEntry> parse_blocklist(std::string_view text) {
  std::vector<BlockEntry> entries;
  bool header = false;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (line_no == 1) {
      header = line == "# fpats-blocklist v1";
      if (!header) throw Error("not an fpats block list");
      continue;
    }
    if (line.empty() || line.starts_with('#')) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 5) throw Error("block list line " + std::to_string(line_no) + ": expected 5 fields");
    BlockEntry e{std::string(fields[0]), std::string(fields[1]), std::string(fields[2]), 0, {}};
    auto [ptr, ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), e.confidence);
    if (ec != std::errc() || ptr != fields[3].data() + fields[3].size()) {
      throw Error("block list line " + std::to_string(line_no) + ": bad confidence");
    }
    for (auto d : split(fields[4], ',')) {
      if (!d.empty()) e.evidence.emplace_back(d);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string blocklist_sidecar_json(const std::vector<BlockEntry>& entries, const EmitOptions& options) {
  json list = json::array();
  for (const auto& e : entries) {
    list.push_back({{"site", e.site},
                    {"cookie", e.name},
                    {"setter", e.setter_etld1},
                    {"confidence", e.confidence},
                    {"evidence", e.evidence}});
  }
  json j{{"format", "fpats-blocklist"},
         {"version", 1},
         {"scope", to_string(options.scope)},
         {"threshold", options.threshold},
         {"entries", list}};
  if (options.scope == Scope::Global) j["global_fraction"] = options.global_fraction;
  return j.dump(2) + "\n";
}

std::string export_extension_list(const std::vector<BlockEntry>& entries) {
  std::set<std::string> lines;
  std::string out;
  for (const auto& e : entries) {
    std::string line = e.site + "|" + e.name;
    if (lines.insert(line).second) out += line + "\n";
  }
  return out;
}

}  // namespace fpats
