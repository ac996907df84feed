#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fpats/encoding.hpp"
#include "fpats/error.hpp"
#include "fpats/trace.hpp"

namespace fpats {

// Identifiers and tracked values must be at least this long.
inline constexpr std::size_t kMinIdentifierLength = 8;

enum class Location { UrlQueryValue, UrlPathSegment, HeaderValue, Body, CookieValue };

std::string_view to_string(Location location);
Location location_from_string(std::string_view name);

struct IdentifierToken {
  std::string raw;
  Location location = Location::UrlQueryValue;
  std::string source_ref;  // request id
  bool operator==(const IdentifierToken&) const = default;
};

// True when every character is in [a-zA-Z0-9_=-] and the length is >= 8.
bool is_identifier(std::string_view text);

// Maximal runs of identifier characters of length >= 8, in order of appearance.
std::vector<std::string> identifier_runs(std::string_view text);

// Identifier tokens in query-parameter values and path segments, deduplicated
// per location and sorted by (location, raw). Throws UrlParseError.
std::vector<IdentifierToken> extract_identifiers(const RequestPayload& request);

class ValueTooShort : public Error {
 public:
  explicit ValueTooShort(std::size_t length)
      : Error("value of length " + std::to_string(length) + " is shorter than 8 characters") {}
};

struct CandidateEncoding {
  Encoding encoding;
  std::string text;
  bool operator==(const CandidateEncoding&) const = default;
};

// Plain, percent, Base64 (std/url, padded and unpadded) and lowercase hex
// digests of value. Forms whose text repeats an earlier form are dropped, so
// for example a value without reserved characters has no separate percent form.
std::vector<CandidateEncoding> candidate_encodings(std::string_view value);

struct CookieKey {
  std::string site;
  std::string name;
  bool operator==(const CookieKey&) const = default;
};

struct EncodingMatch {
  CookieKey cookie;
  Encoding encoding = Encoding::Plain;
  Location location = Location::Body;
  std::string request_id;
  std::string value;    // cookie value that was matched
  std::string encoded;  // candidate text found in the request/response
  bool operator==(const EncodingMatch&) const = default;
};

struct FlowSet {
  std::vector<EncodingMatch> exfiltrations;
  std::vector<EncodingMatch> infiltrations;
};

// Exfiltration: an encoding of a stored value appears in the URL, a header
// value (other than Cookie) or the body of a request issued after the value
// was first observed. Infiltration: an encoding of a value written by a
// StorageSet appears in a response header (other than Set-Cookie) or body of
// a request initiated by the setter, received no later than the write.
// One match is reported per (storage name, request, encoding, location).
FlowSet find_flows(const CrawlTrace& trace);

}  // namespace fpats
