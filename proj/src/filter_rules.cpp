#include "fpats/filter_rules.hpp"

#include <algorithm>
#include <cctype>

#include "fpats/domain.hpp"
#include "fpats/io.hpp"
#include "fpats/strings.hpp"
#include "fpats/url.hpp"

namespace fpats {

namespace {

bool is_separator(char c) {
  const auto u = static_cast<unsigned char>(c);
  const bool keep = std::isalnum(u) || c == '_' || c == '-' || c == '.' || c == '%';
  return !keep;
}

// Matches one '*'-free segment at text[pos]; returns the end offset.
std::optional<std::size_t> segment_at(std::string_view segment, std::string_view text,
                                      std::size_t pos) {
  for (char c : segment) {
    if (c == '^') {
      if (pos == text.size()) continue;  // separator also matches the end of the address
      if (!is_separator(text[pos])) return std::nullopt;
      ++pos;
    } else {
      if (pos >= text.size() || text[pos] != c) return std::nullopt;
      ++pos;
    }
  }
  return pos;
}

std::optional<std::pair<std::size_t, std::size_t>> segment_find(std::string_view segment,
                                                                std::string_view text,
                                                                std::size_t from) {
  const char first = segment.front();
  for (std::size_t s = from; s <= text.size(); ++s) {
    if (first != '^') {
      s = text.find(first, s);
      if (s == std::string_view::npos) return std::nullopt;
    }
    if (auto end = segment_at(segment, text, s)) return std::pair{s, *end};
  }
  return std::nullopt;
}

bool pattern_matches(std::string_view pattern, std::string_view text, std::size_t start,
                     bool anchored_start, bool end_anchor) {
  const auto segments = split(pattern, '*');
  std::size_t pos = start;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto seg = segments[k];
    const bool is_first = k == 0;
    const bool is_last = k + 1 == segments.size();
    if (seg.empty()) continue;
    if (is_first && anchored_start) {
      auto end = segment_at(seg, text, pos);
      if (!end || (is_last && end_anchor && *end != text.size())) return false;
      pos = *end;
    } else if (is_last && end_anchor) {
      for (std::size_t s = pos; s <= text.size(); ++s) {
        auto end = segment_at(seg, text, s);
        if (end && *end == text.size()) return true;
      }
      return false;
    } else {
      auto found = segment_find(seg, text, pos);
      if (!found) return false;
      pos = found->second;
    }
  }
  // A pattern of only wildcards matches everything; an empty end-anchored
  // remainder is satisfied by construction above.
  return true;
}

bool domain_in(std::string_view page, std::string_view domain) {
  return page == domain || (page.size() > domain.size() && page.ends_with(domain) &&
                            page[page.size() - domain.size() - 1] == '.');
}

bool options_accept(const RuleOptions& options, const Url& url, const RequestContext& context) {
  if (options.script && context.resource_type != ResourceType::Script) return false;
  if (options.third_party || options.first_party) {
    const bool third = registrable_domain(url.host) != context.page_etld1;
    if (options.third_party && !third) return false;
    if (options.first_party && third) return false;
  }
  if (!options.include_domains.empty() &&
      std::none_of(options.include_domains.begin(), options.include_domains.end(),
                   [&](const auto& d) { return domain_in(context.page_etld1, d); }))
    return false;
  return std::none_of(options.exclude_domains.begin(), options.exclude_domains.end(),
                      [&](const auto& d) { return domain_in(context.page_etld1, d); });
}

bool rule_matches_parsed(const FilterRule& rule, const Url& url, std::string_view lower,
                         const RequestContext& context) {
  bool hit = false;
  switch (rule.anchor) {
    case Anchor::StartAnchor:
      hit = pattern_matches(rule.pattern, lower, 0, true, rule.end_anchor);
      break;
    case Anchor::DomainAnchor:
      for (std::size_t p = url.host_begin; p < url.host_end && !hit; ++p) {
        if (p != url.host_begin && lower[p - 1] != '.') continue;
        hit = pattern_matches(rule.pattern, lower, p, true, rule.end_anchor);
      }
      break;
    case Anchor::None:
    case Anchor::EndAnchor:
      hit = pattern_matches(rule.pattern, lower, 0, false, rule.end_anchor);
      break;
  }
  return hit && options_accept(rule.options, url, context);
}

std::string required_literal(std::string_view pattern) {
  std::string best, current;
  for (char c : pattern) {
    if (c == '*' || c == '^') {
      if (current.size() > best.size()) best = current;
      current.clear();
    } else {
      current += c;
    }
  }
  if (current.size() > best.size()) best = current;
  return best;
}

}  // namespace

std::string serialize_rule(const FilterRule& rule) {
  std::string out;
  if (rule.kind == RuleKind::Exception) out += "@@";
  if (rule.anchor == Anchor::DomainAnchor) out += "||";
  if (rule.anchor == Anchor::StartAnchor) out += "|";
  out += rule.pattern;
  if (rule.end_anchor) out += "|";
  std::vector<std::string> opts;
  if (rule.options.third_party) opts.emplace_back("third-party");
  if (rule.options.first_party) opts.emplace_back("~third-party");
  if (rule.options.script) opts.emplace_back("script");
  if (!rule.options.include_domains.empty() || !rule.options.exclude_domains.empty()) {
    std::string domains = "domain=";
    bool first = true;
    for (const auto& d : rule.options.include_domains) {
      domains += (first ? "" : "|") + d;
      first = false;
    }
    for (const auto& d : rule.options.exclude_domains) {
      domains += (first ? "~" : "|~") + d;
      first = false;
    }
    opts.push_back(std::move(domains));
  }
  for (std::size_t i = 0; i < opts.size(); ++i) out += (i ? "," : "$") + opts[i];
  return out;
}

ParsedLine parse_rule_line(std::string_view line) {
  ParsedLine result;
  line = trim(line);
  if (line.empty()) return result;
  if (line.front() == '!' || line.front() == '[') {
    result.kind = LineClass::Comment;
    return result;
  }
  for (auto marker : {"##", "#@#", "#?#", "#$#", "#%#"}) {
    if (line.find(marker) != std::string_view::npos) {
      result.kind = LineClass::Cosmetic;
      return result;
    }
  }

  FilterRule rule;
  rule.raw = std::string(line);
  std::string_view body = line;
  if (body.starts_with("@@")) {
    rule.kind = RuleKind::Exception;
    body.remove_prefix(2);
  }
  std::string_view options_text;
  if (const auto dollar = body.rfind('$'); dollar != std::string_view::npos) {
    options_text = body.substr(dollar + 1);
    body = body.substr(0, dollar);
  }
  if (body.size() > 1 && body.front() == '/' && body.back() == '/') {
    result.kind = LineClass::Unsupported;
    result.detail = "regular-expression rule";
    return result;
  }
  if (body.starts_with("||")) {
    rule.anchor = Anchor::DomainAnchor;
    body.remove_prefix(2);
  } else if (body.starts_with("|")) {
    rule.anchor = Anchor::StartAnchor;
    body.remove_prefix(1);
  }
  if (body.ends_with("|")) {
    rule.end_anchor = true;
    body.remove_suffix(1);
    if (rule.anchor == Anchor::None) rule.anchor = Anchor::EndAnchor;
  }
  rule.pattern = to_lower(body);
  if (rule.pattern.empty() || rule.pattern.find('|') != std::string::npos) {
    result.kind = LineClass::Malformed;
    result.detail = "empty or invalid pattern";
    return result;
  }

  if (!options_text.empty()) {
    for (auto token : split(options_text, ',')) {
      const auto opt = to_lower(trim(token));
      if (opt == "third-party" || opt == "3p" || opt == "~first-party" || opt == "~1p") {
        rule.options.third_party = true;
      } else if (opt == "~third-party" || opt == "first-party" || opt == "1p" || opt == "~3p") {
        rule.options.first_party = true;
      } else if (opt == "script") {
        rule.options.script = true;
      } else if (opt.starts_with("domain=")) {
        for (auto d : split(std::string_view(opt).substr(7), '|')) {
          if (d.empty()) continue;
          if (d.front() == '~')
            rule.options.exclude_domains.emplace_back(d.substr(1));
          else
            rule.options.include_domains.emplace_back(d);
        }
      } else {
        result.kind = LineClass::Unsupported;
        result.detail = "unsupported option '" + opt + "'";
        return result;
      }
    }
    if (rule.options.third_party && rule.options.first_party) {
      result.kind = LineClass::Malformed;
      result.detail = "contradictory party options";
      return result;
    }
  }
  result.kind = LineClass::Rule;
  result.rule = std::move(rule);
  return result;
}

FilterList parse_filter_list(std::string_view text, std::string name) {
  FilterList list;
  list.name = std::move(name);
  for (auto line : split(text, '\n')) {
    auto parsed = parse_rule_line(line);
    switch (parsed.kind) {
      case LineClass::Rule:
        list.rules.push_back(std::move(*parsed.rule));
        ++list.stats.rules;
        break;
      case LineClass::Comment: ++list.stats.comments; break;
      case LineClass::Cosmetic: ++list.stats.cosmetic; break;
      case LineClass::Unsupported: ++list.stats.unsupported; break;
      case LineClass::Malformed: ++list.stats.malformed; break;
      case LineClass::Empty: break;
    }
  }
  return list;
}

FilterList load_filter_list(const std::filesystem::path& path) {
  return parse_filter_list(read_file(path), path.filename().string());
}

bool rule_matches(const FilterRule& rule, std::string_view url, const RequestContext& context) {
  const Url parsed = parse_url(url);
  const std::string lower = to_lower(url);
  return rule_matches_parsed(rule, parsed, lower, context);
}

Verdict match_resource(std::span<const FilterRule> rules, std::string_view url,
                       const RequestContext& context) {
  const Url parsed = parse_url(url);
  const std::string lower = to_lower(url);
  bool blocked = false;
  for (const auto& rule : rules) {
    if (rule.kind != RuleKind::Block) continue;
    if (rule_matches_parsed(rule, parsed, lower, context)) {
      blocked = true;
      break;
    }
  }
  if (!blocked) return Verdict::Allowed;
  for (const auto& rule : rules) {
    if (rule.kind == RuleKind::Exception && rule_matches_parsed(rule, parsed, lower, context))
      return Verdict::Allowed;
  }
  return Verdict::Blocked;
}

RuleSet::RuleSet(std::span<const FilterList> lists) {
  for (const auto& list : lists) {
    auto compiled = std::make_shared<CompiledList>();
    compiled->rules = list.rules;
    for (const auto& rule : compiled->rules) {
      Compiled c{&rule, required_literal(rule.pattern)};
      (rule.kind == RuleKind::Block ? compiled->blocks : compiled->exceptions).push_back(std::move(c));
    }
    lists_.push_back(std::move(compiled));
  }
}

Verdict RuleSet::match_list(const CompiledList& list, std::string_view url,
                            const RequestContext& context) const {
  const Url parsed = parse_url(url);
  const std::string lower = to_lower(url);
  auto any = [&](const std::vector<Compiled>& rules) {
    return std::any_of(rules.begin(), rules.end(), [&](const Compiled& c) {
      if (!c.required.empty() && lower.find(c.required) == std::string::npos) return false;
      return rule_matches_parsed(*c.rule, parsed, lower, context);
    });
  };
  if (!any(list.blocks)) return Verdict::Allowed;
  return any(list.exceptions) ? Verdict::Allowed : Verdict::Blocked;
}

Verdict RuleSet::match(std::string_view url, const RequestContext& context) const {
  bool blocked = false;
  for (const auto& list : lists_) {
    if (match_list(*list, url, context) == Verdict::Blocked) blocked = true;
  }
  if (!blocked) return Verdict::Allowed;
  // An exception in any list overrides blocks from the others.
  const Url parsed = parse_url(url);
  const std::string lower = to_lower(url);
  for (const auto& list : lists_) {
    for (const auto& c : list->exceptions) {
      if (rule_matches_parsed(*c.rule, parsed, lower, context)) return Verdict::Allowed;
    }
  }
  return Verdict::Blocked;
}

bool RuleSet::any_list_blocks(std::string_view url, const RequestContext& context) const {
  return std::any_of(lists_.begin(), lists_.end(), [&](const auto& list) {
    return match_list(*list, url, context) == Verdict::Blocked;
  });
}

}  // namespace fpats
