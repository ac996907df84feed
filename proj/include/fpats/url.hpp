#pragma once

#include <string>
#include <string_view>

#include "fpats/error.hpp"

namespace fpats {

class UrlParseError : public Error {
 public:
  using Error::Error;
};

// Minimal absolute-URL decomposition: scheme://[userinfo@]host[:port][path][?query][#fragment].
// Offsets index into `href` so callers can locate substrings by URL part.
struct Url {
  std::string href;
  std::string scheme;  // lowercase
  std::string host;    // lowercase, brackets stripped for IPv6
  std::string path;    // "/" when absent
  std::string query;   // without '?'
  std::string fragment;
  std::size_t host_begin = 0;  // offset of host in href
  std::size_t host_end = 0;
  std::size_t query_begin = std::string::npos;  // offset of '?' in href, npos if none
};

Url parse_url(std::string_view text);

// Registrable domain of the URL's host, or "" when the URL does not parse.
std::string url_etld1(std::string_view url);

}  // namespace fpats
