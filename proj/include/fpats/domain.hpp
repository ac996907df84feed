#pragma once

#include <string>
#include <string_view>
#include <unordered_set>

#include "fpats/error.hpp"

namespace fpats {

class EmptyHost : public Error {
 public:
  EmptyHost() : Error("empty host") {}
};

// Public-suffix rule set in the upstream list format (plain, "*." wildcard,
// "!" exception rules). The bundled snapshot is compiled into the library.
class PublicSuffixList {
 public:
  static PublicSuffixList parse(std::string_view text);
  static const PublicSuffixList& bundled();

  // eTLD+1 for host. IP literals are returned unchanged; a host with no
  // matching rule falls back to its last two labels; a host that is itself
  // a public suffix is returned unchanged.
  std::string registrable_domain(std::string_view host) const;

  const std::string& version() const { return version_; }
  std::size_t rule_count() const { return exact_.size() + wildcard_.size() + exception_.size(); }

 private:
  std::unordered_set<std::string> exact_;
  std::unordered_set<std::string> wildcard_;   // stored without "*."
  std::unordered_set<std::string> exception_;  // stored without "!"
  std::string version_;
};

bool is_ip_literal(std::string_view host);

// registrable_domain against the bundled snapshot.
std::string registrable_domain(std::string_view host);

}  // namespace fpats
