#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpats/trace.hpp"

namespace fpats {

enum class RuleKind { Block, Exception };
enum class Anchor { None, DomainAnchor, StartAnchor, EndAnchor };

struct RuleOptions {
  bool third_party = false;
  bool first_party = false;
  bool script = false;
  std::vector<std::string> include_domains;  // $domain=a.com
  std::vector<std::string> exclude_domains;  // $domain=~b.com
  bool operator==(const RuleOptions&) const = default;
};

// Network rule in the supported Adblock Plus subset: "@@" exceptions, "||"
// and "|" anchors, trailing "|", '*' wildcards, '^' separators and the
// options third-party, first-party, script and domain=.
struct FilterRule {
  std::string raw;
  RuleKind kind = RuleKind::Block;
  Anchor anchor = Anchor::None;  // leading anchor; EndAnchor only when there is no leading one
  bool end_anchor = false;
  std::string pattern;  // lowercase, anchors and options stripped
  RuleOptions options;

  // Semantic equality; `raw` is provenance and not compared.
  bool operator==(const FilterRule& other) const {
    return kind == other.kind && anchor == other.anchor && end_anchor == other.end_anchor &&
           pattern == other.pattern && options == other.options;
  }
};

std::string serialize_rule(const FilterRule& rule);

enum class LineClass { Rule, Empty, Comment, Cosmetic, Unsupported, Malformed };

struct ParsedLine {
  LineClass kind = LineClass::Empty;
  std::optional<FilterRule> rule;
  std::string detail;  // reason for Unsupported/Malformed
};

ParsedLine parse_rule_line(std::string_view line);

struct FilterListStats {
  std::size_t rules = 0;
  std::size_t comments = 0;
  std::size_t cosmetic = 0;
  std::size_t unsupported = 0;  // dropped with a warning
  std::size_t malformed = 0;
};

struct FilterList {
  std::string name;
  std::vector<FilterRule> rules;
  FilterListStats stats;
};

FilterList parse_filter_list(std::string_view text, std::string name = {});
FilterList load_filter_list(const std::filesystem::path& path);

struct RequestContext {
  std::string page_etld1;
  ResourceType resource_type = ResourceType::Other;
};

enum class Verdict { Allowed, Blocked };

// True when the rule's pattern, anchors and options all accept the request.
// Throws UrlParseError.
bool rule_matches(const FilterRule& rule, std::string_view url, const RequestContext& context);

// Blocked iff some Block rule matches and no Exception rule matches.
Verdict match_resource(std::span<const FilterRule> rules, std::string_view url,
                       const RequestContext& context);

// Rules of several lists, matched as one set. Immutable and safe to share
// across threads.
class RuleSet {
 public:
  RuleSet() = default;
  explicit RuleSet(std::span<const FilterList> lists);

  Verdict match(std::string_view url, const RequestContext& context) const;
  // True if at least one of the individual lists blocks the URL.
  bool any_list_blocks(std::string_view url, const RequestContext& context) const;
  std::size_t list_count() const { return lists_.size(); }

 private:
  struct Compiled {
    const FilterRule* rule;
    std::string required;  // literal that must occur in the lowercased URL
  };
  struct CompiledList {
    std::vector<FilterRule> rules;
    std::vector<Compiled> blocks;
    std::vector<Compiled> exceptions;
  };
  Verdict match_list(const CompiledList& list, std::string_view url,
                     const RequestContext& context) const;

  std::vector<std::shared_ptr<CompiledList>> lists_;
};

}  // namespace fpats
