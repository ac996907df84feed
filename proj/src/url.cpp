#include "fpats/url.hpp"

#include <cctype>

#include "fpats/domain.hpp"
#include "fpats/strings.hpp"

namespace fpats {

Url parse_url(std::string_view text) {
  Url url;
  url.href = std::string(text);
  const auto scheme_end = text.find("://");
  if (scheme_end == std::string_view::npos || scheme_end == 0)
    throw UrlParseError("missing scheme: " + std::string(text));
  for (char c : text.substr(0, scheme_end)) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.')
      throw UrlParseError("invalid scheme: " + std::string(text));
  }
  url.scheme = to_lower(text.substr(0, scheme_end));

  const std::size_t authority_begin = scheme_end + 3;
  std::size_t authority_end = text.find_first_of("/?#", authority_begin);
  if (authority_end == std::string_view::npos) authority_end = text.size();
  std::string_view authority = text.substr(authority_begin, authority_end - authority_begin);

  std::size_t host_offset = authority_begin;
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
    host_offset += at + 1;
    authority.remove_prefix(at + 1);
  }
  std::string_view host = authority;
  if (!host.empty() && host.front() == '[') {
    const auto close = host.find(']');
    if (close == std::string_view::npos) throw UrlParseError("unterminated IPv6 host");
    url.host_begin = host_offset + 1;
    host = host.substr(1, close - 1);
  } else {
    if (const auto colon = host.rfind(':'); colon != std::string_view::npos) {
      for (char c : host.substr(colon + 1)) {
        if (!std::isdigit(static_cast<unsigned char>(c))) throw UrlParseError("invalid port");
      }
      host = host.substr(0, colon);
    }
    url.host_begin = host_offset;
  }
  if (host.empty()) throw UrlParseError("empty host: " + std::string(text));
  url.host_end = url.host_begin + host.size();
  url.host = to_lower(host);

  std::string_view rest = text.substr(authority_end);
  if (const auto hash = rest.find('#'); hash != std::string_view::npos) {
    url.fragment = std::string(rest.substr(hash + 1));
    rest = rest.substr(0, hash);
  }
  if (const auto q = rest.find('?'); q != std::string_view::npos) {
    url.query = std::string(rest.substr(q + 1));
    url.query_begin = authority_end + q;
    rest = rest.substr(0, q);
  }
  url.path = rest.empty() ? "/" : std::string(rest);
  return url;
}

std::string url_etld1(std::string_view text) {
  try {
    return registrable_domain(parse_url(text).host);
  } catch (const Error&) {
    return {};
  }
}

}  // namespace fpats
