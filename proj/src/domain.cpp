#include "fpats/domain.hpp"

#include <arpa/inet.h>

#include "fpats/strings.hpp"

namespace fpats {

extern const char* const kBundledPublicSuffixList;

PublicSuffixList PublicSuffixList::parse(std::string_view text) {
  PublicSuffixList list;
  for (auto raw : split(text, '\n')) {
    auto line = trim(raw);
    if (line.starts_with("// version:")) {
      list.version_ = std::string(trim(line.substr(11)));
      continue;
    }
    if (line.empty() || line.starts_with("//")) continue;
    // Rules end at the first whitespace.
    if (const auto ws = line.find_first_of(" \t"); ws != std::string_view::npos)
      line = line.substr(0, ws);
    const auto rule = to_lower(line);
    if (rule.starts_with("!")) {
      list.exception_.insert(rule.substr(1));
    } else if (rule.starts_with("*.")) {
      list.wildcard_.insert(rule.substr(2));
    } else {
      list.exact_.insert(rule);
    }
  }
  return list;
}

const PublicSuffixList& PublicSuffixList::bundled() {
  static const PublicSuffixList list = parse(kBundledPublicSuffixList);
  return list;
}

bool is_ip_literal(std::string_view host) {
  std::string h(host);
  if (h.size() > 2 && h.front() == '[' && h.back() == ']') h = h.substr(1, h.size() - 2);
  unsigned char buf[16];
  return inet_pton(AF_INET, h.c_str(), buf) == 1 || inet_pton(AF_INET6, h.c_str(), buf) == 1;
}

std::string PublicSuffixList::registrable_domain(std::string_view host) const {
  std::string h = to_lower(trim(host));
  while (!h.empty() && h.back() == '.') h.pop_back();
  if (h.empty()) throw EmptyHost();
  if (is_ip_literal(h)) return h;

  std::vector<std::string_view> labels = split(h, '.');
  const std::size_t n = labels.size();
  auto suffix_from = [&](std::size_t i) {
    std::string out;
    for (std::size_t j = i; j < n; ++j) {
      if (!out.empty()) out += '.';
      out += labels[j];
    }
    return out;
  };

  // Longest matching rule wins; exception rules beat everything.
  std::size_t suffix_labels = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string candidate = suffix_from(i);
    const std::size_t len = n - i;
    if (exception_.contains(candidate)) {
      suffix_labels = len - 1;
      break;
    }
    if (exact_.contains(candidate)) suffix_labels = std::max(suffix_labels, len);
    if (i + 1 < n && wildcard_.contains(suffix_from(i + 1)))
      suffix_labels = std::max(suffix_labels, len);
  }
  if (suffix_labels == 0) suffix_labels = 1;  // implicit "*" rule: last-two-labels fallback
  if (suffix_labels >= n) return h;           // host is itself a public suffix
  return suffix_from(n - suffix_labels - 1);
}

std::string registrable_domain(std::string_view host) {
  return PublicSuffixList::bundled().registrable_domain(host);
}

}  // namespace fpats
