#include "fpats/identifiers.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "fpats/strings.hpp"
#include "fpats/url.hpp"

namespace fpats {

std::string_view to_string(Location location) {
  switch (location) {
    case Location::UrlQueryValue: return "UrlQueryValue";
    case Location::UrlPathSegment: return "UrlPathSegment";
    case Location::HeaderValue: return "HeaderValue";
    case Location::Body: return "Body";
    case Location::CookieValue: return "CookieValue";
  }
  return "?";
}

Location location_from_string(std::string_view name) {
  for (auto l : {Location::UrlQueryValue, Location::UrlPathSegment, Location::HeaderValue,
                 Location::Body, Location::CookieValue}) {
    if (to_string(l) == name) return l;
  }
  throw Error("unknown location: " + std::string(name));
}

namespace {

bool is_identifier_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_' || c == '=' || c == '-';
}

}  // namespace

bool is_identifier(std::string_view text) {
  return text.size() >= kMinIdentifierLength && std::all_of(text.begin(), text.end(), is_identifier_char);
}

std::vector<std::string> identifier_runs(std::string_view text) {
  std::vector<std::string> runs;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_identifier_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_identifier_char(text[j])) ++j;
    if (j - i >= kMinIdentifierLength) runs.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return runs;
}

std::vector<IdentifierToken> extract_identifiers(const RequestPayload& request) {
  const Url url = parse_url(request.url);
  std::set<std::pair<Location, std::string>> found;
  if (!url.query.empty()) {
    for (auto param : split(url.query, '&')) {
      const auto eq = param.find('=');
      if (eq == std::string_view::npos) continue;
      for (auto& run : identifier_runs(param.substr(eq + 1)))
        found.emplace(Location::UrlQueryValue, std::move(run));
    }
  }
  for (auto segment : split(url.path, '/')) {
    for (auto& run : identifier_runs(segment)) found.emplace(Location::UrlPathSegment, std::move(run));
  }
  std::vector<IdentifierToken> tokens;
  tokens.reserve(found.size());
  for (const auto& [location, raw] : found) tokens.push_back({raw, location, request.request_id});
  return tokens;
}

std::vector<CandidateEncoding> candidate_encodings(std::string_view value) {
  if (value.size() < kMinIdentifierLength) throw ValueTooShort(value.size());
  std::vector<CandidateEncoding> forms{
      {Encoding::Plain, std::string(value)},
      {Encoding::PercentEncoded, percent_encode(value)},
      {Encoding::Base64Std, base64_encode(value, false, true)},
      {Encoding::Base64Std, base64_encode(value, false, false)},
      {Encoding::Base64Url, base64_encode(value, true, true)},
      {Encoding::Base64Url, base64_encode(value, true, false)},
      {Encoding::Md5Hex, md5_hex(value)},
      {Encoding::Sha1Hex, sha1_hex(value)},
      {Encoding::Sha256Hex, sha256_hex(value)},
  };
  std::vector<CandidateEncoding> unique;
  for (auto& form : forms) {
    const bool repeat = std::any_of(unique.begin(), unique.end(),
                                    [&](const auto& u) { return u.text == form.text; });
    if (!repeat) unique.push_back(std::move(form));
  }
  return unique;
}

namespace {

struct TrackedValue {
  std::string value;
  std::size_t first_seen;  // event index
  std::vector<CandidateEncoding> forms;
};

struct StorageValues {
  std::string name;
  std::vector<TrackedValue> values;
};

// Haystack with a lazily built lowercase copy for hex matching.
class Haystack {
 public:
  explicit Haystack(std::string_view text) : text_(text) {}
  bool contains(const CandidateEncoding& form) const {
    if (is_hex_encoding(form.encoding)) {
      if (!lower_) lower_ = to_lower(text_);
      return lower_->find(form.text) != std::string::npos;
    }
    return text_.find(form.text) != std::string_view::npos;
  }

 private:
  std::string_view text_;
  mutable std::optional<std::string> lower_;
};

using MatchKey = std::tuple<std::string, std::string, Encoding, Location>;

class MatchCollector {
 public:
  MatchCollector(const std::string& site, std::vector<EncodingMatch>& out) : site_(site), out_(out) {}

  void scan(const std::string& name, const std::string& request_id, Location location,
            const Haystack& haystack, const TrackedValue& tracked) {
    for (const auto& form : tracked.forms) {
      MatchKey key{name, request_id, form.encoding, location};
      if (seen_.contains(key) || !haystack.contains(form)) continue;
      seen_.insert(std::move(key));
      out_.push_back({{site_, name}, form.encoding, location, request_id, tracked.value, form.text});
    }
  }

 private:
  const std::string& site_;
  std::vector<EncodingMatch>& out_;
  std::set<MatchKey> seen_;
};

bool skip_header(std::string_view name, std::string_view excluded) { return iequals(name, excluded); }

}  // namespace

FlowSet find_flows(const CrawlTrace& trace) {
  FlowSet flows;
  const TraceIndex index(trace);

  // Storage names in first-appearance order with the values observed for each.
  std::vector<StorageValues> storage;
  std::map<std::string, std::size_t, std::less<>> storage_pos;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const auto& e = trace.events[i];
    if (!e.is_storage()) continue;
    const auto& p = e.storage();
    auto [it, inserted] = storage_pos.try_emplace(p.key, storage.size());
    if (inserted) storage.push_back({p.key, {}});
    if (!p.value || p.value->size() < kMinIdentifierLength) continue;
    auto& values = storage[it->second].values;
    const bool known = std::any_of(values.begin(), values.end(),
                                   [&](const auto& v) { return v.value == *p.value; });
    if (!known) values.push_back({*p.value, i, candidate_encodings(*p.value)});
  }

  // Exfiltration over every request, in declaration order.
  MatchCollector exfil(trace.site_etld1, flows.exfiltrations);
  for (const auto& request : index.requests()) {
    std::string_view href = request.url;
    const auto q = href.find('?');
    const Haystack path_part(href.substr(0, q));
    const Haystack query_part(q == std::string_view::npos ? std::string_view{} : href.substr(q));
    std::string header_values;
    if (request.payload) {
      for (const auto& [name, value] : request.payload->headers) {
        if (skip_header(name, "Cookie")) continue;
        header_values += value;
        header_values += '\n';
      }
    }
    const Haystack headers(header_values);
    const std::string_view body_text =
        request.payload && request.payload->body ? std::string_view(*request.payload->body) : std::string_view{};
    const Haystack body(body_text);

    for (const auto& node : storage) {
      for (const auto& tracked : node.values) {
        if (tracked.first_seen >= request.event_index) continue;
        exfil.scan(node.name, request.request_id, Location::UrlPathSegment, path_part, tracked);
        exfil.scan(node.name, request.request_id, Location::UrlQueryValue, query_part, tracked);
        if (!header_values.empty())
          exfil.scan(node.name, request.request_id, Location::HeaderValue, headers, tracked);
        if (!body_text.empty())
          exfil.scan(node.name, request.request_id, Location::Body, body, tracked);
      }
    }
  }

  // Infiltration: values written by a setter that arrived in responses to
  // that setter's own requests.
  MatchCollector infil(trace.site_etld1, flows.infiltrations);
  std::vector<std::pair<std::size_t, const RequestInfo*>> responses;  // (response event, request)
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const auto& e = trace.events[i];
    if (e.kind == EventKind::Response) {
      responses.emplace_back(i, index.request(e.response().request_id));
      continue;
    }
    if (e.kind != EventKind::StorageSet) continue;
    const auto& p = e.storage();
    if (p.value->size() < kMinIdentifierLength) continue;
    const auto& values = storage[storage_pos.find(p.key)->second].values;
    const auto tracked = std::find_if(values.begin(), values.end(),
                                      [&](const auto& v) { return v.value == *p.value; });
    for (const auto& [response_index, request] : responses) {
      const bool initiated_by_setter =
          e.actor.is_request() ? request->request_id == e.actor.id : request->initiator == e.actor;
      if (!initiated_by_setter) continue;
      const auto& response = trace.events[response_index].response();
      std::string header_values;
      for (const auto& [name, value] : response.headers) {
        if (skip_header(name, "Set-Cookie")) continue;
        header_values += value;
        header_values += '\n';
      }
      if (!header_values.empty())
        infil.scan(p.key, request->request_id, Location::HeaderValue, Haystack(header_values), *tracked);
      if (response.body && !response.body->empty())
        infil.scan(p.key, request->request_id, Location::Body, Haystack(*response.body), *tracked);
    }
  }
  return flows;
}

}  // namespace fpats
