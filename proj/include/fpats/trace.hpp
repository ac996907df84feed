#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "fpats/error.hpp"

namespace fpats {

enum class EventKind {
  ScriptLoad,
  ElementCreate,
  Request,
  Response,
  Redirect,
  StorageSet,
  StorageGet,
  StorageDelete
};
enum class CrawlConfig { ThirdPartyAllowed, ThirdPartyBlocked };
enum class StoreKind { Cookie, LocalStorage };
enum class Channel { JavaScript, HttpHeader };
enum class ExecutionContext { FirstParty, ThirdPartyFrame };
enum class ResourceType { Document, Script, Image, XmlHttpRequest, Other };

std::string_view to_string(EventKind kind);
std::string_view to_string(CrawlConfig config);
std::string_view to_string(StoreKind store);
std::string_view to_string(Channel channel);
std::string_view to_string(ExecutionContext context);
std::string_view to_string(ResourceType type);

// Who performed an event: the HTML parser, a script, or (for HTTP-level
// activity such as Set-Cookie and redirects) a request.
struct ActorRef {
  enum class Kind { Parser, Script, Request };
  Kind kind = Kind::Parser;
  std::string id;

  static ActorRef parser() { return {}; }
  static ActorRef script(std::string id) { return {Kind::Script, std::move(id)}; }
  static ActorRef request(std::string id) { return {Kind::Request, std::move(id)}; }

  bool is_parser() const { return kind == Kind::Parser; }
  bool is_script() const { return kind == Kind::Script; }
  bool is_request() const { return kind == Kind::Request; }

  // "parser", "script:<id>" or "request:<id>".
  std::string to_string() const;
  static std::optional<ActorRef> parse(std::string_view text);

  auto operator<=>(const ActorRef&) const = default;
};

using HeaderList = std::vector<std::pair<std::string, std::string>>;

struct ScriptLoadPayload {
  std::string script_id;
  std::string source_url;
  std::string content_hash;
  ExecutionContext context = ExecutionContext::FirstParty;
  bool operator==(const ScriptLoadPayload&) const = default;
};

struct ElementCreatePayload {
  std::string element_id;
  std::string tag;
  bool operator==(const ElementCreatePayload&) const = default;
};

// The initiator of a request is the event's actor.
struct RequestPayload {
  std::string request_id;
  std::string url;
  std::string method = "GET";
  ResourceType type = ResourceType::Other;
  HeaderList headers;
  std::optional<std::string> body;
  bool operator==(const RequestPayload&) const = default;
};

struct ResponsePayload {
  std::string request_id;
  int status = 200;
  HeaderList headers;
  std::optional<std::string> body;
  bool operator==(const ResponsePayload&) const = default;
};

// A redirect hop. It declares the follow-up request `request_id` for
// `to_url`; that request inherits the initiator of `from_request_id`.
struct RedirectPayload {
  std::string from_request_id;
  std::string request_id;
  std::string to_url;
  int status = 302;
  bool operator==(const RedirectPayload&) const = default;
};

// StorageSet/Get/Delete. The setter (or reader) is the event's actor.
// `value` is required for Set and optional for Get (the value observed).
struct StoragePayload {
  StoreKind store = StoreKind::Cookie;
  std::string key;
  std::optional<std::string> value;
  Channel channel = Channel::JavaScript;
  std::optional<std::int64_t> expiry;
  bool operator==(const StoragePayload&) const = default;
};

using EventPayload = std::variant<ScriptLoadPayload, ElementCreatePayload, RequestPayload,
                                  ResponsePayload, RedirectPayload, StoragePayload>;

struct TraceEvent {
  EventKind kind = EventKind::ScriptLoad;
  std::int64_t timestamp = 0;  // milliseconds
  ActorRef actor;
  EventPayload payload;

  const ScriptLoadPayload& script_load() const { return std::get<ScriptLoadPayload>(payload); }
  const ElementCreatePayload& element() const { return std::get<ElementCreatePayload>(payload); }
  const RequestPayload& request() const { return std::get<RequestPayload>(payload); }
  const ResponsePayload& response() const { return std::get<ResponsePayload>(payload); }
  const RedirectPayload& redirect() const { return std::get<RedirectPayload>(payload); }
  const StoragePayload& storage() const { return std::get<StoragePayload>(payload); }
  bool is_storage() const {
    return kind == EventKind::StorageSet || kind == EventKind::StorageGet ||
           kind == EventKind::StorageDelete;
  }

  bool operator==(const TraceEvent&) const = default;
};

struct CrawlTrace {
  std::string site_url;
  std::string site_etld1;
  std::string visit_id;
  CrawlConfig crawl_config = CrawlConfig::ThirdPartyAllowed;
  std::vector<TraceEvent> events;

  bool operator==(const CrawlTrace&) const = default;
};

struct ScriptIdentity {
  std::string script_id;
  std::string source_url;
  std::string source_etld1;
  std::string content_hash;
  ExecutionContext execution_context = ExecutionContext::FirstParty;
  bool operator==(const ScriptIdentity&) const = default;
};

// Errors carry the 1-based line of the offending record (line 1 is the
// site header), or 0 when the trace did not come from a file.
class TraceError : public Error {
 public:
  TraceError(std::string kind, std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public TraceError {
 public:
  SchemaError(std::size_t line, const std::string& message)
      : TraceError("schema error", line, message) {}
};

class OrderError : public TraceError {
 public:
  OrderError(std::size_t line, const std::string& message)
      : TraceError("order error", line, message) {}
};

class DanglingRef : public TraceError {
 public:
  DanglingRef(std::size_t line, const std::string& message)
      : TraceError("dangling reference", line, message) {}
};

// Checks ordering, reference integrity and actor/channel consistency.
void validate_trace(const CrawlTrace& trace);

CrawlTrace parse_trace(std::string_view jsonl);
CrawlTrace load_trace(const std::filesystem::path& path);
std::string serialize_trace(const CrawlTrace& trace);
void save_trace(const std::filesystem::path& path, const CrawlTrace& trace);

// Request declared by a Request event or by a Redirect hop.
struct RequestInfo {
  std::string request_id;
  std::string url;
  std::string etld1;
  ActorRef initiator;          // root initiator for redirect hops
  std::size_t event_index = 0;  // declaring event
  const RequestPayload* payload = nullptr;       // null for redirect hops
  const ResponsePayload* response = nullptr;     // first response, if any
  std::optional<std::string> redirected_from;   // previous hop
};

// Lookup tables over a validated trace. Holds pointers into the trace, which
// must outlive the index.
class TraceIndex {
 public:
  explicit TraceIndex(const CrawlTrace& trace);

  const ScriptIdentity* script(std::string_view id) const;
  const RequestInfo* request(std::string_view id) const;
  const std::vector<RequestInfo>& requests() const { return requests_; }
  const std::vector<ScriptIdentity>& scripts() const { return scripts_; }
  // Actor that created the script (parser or another script).
  const ActorRef* script_creator(std::string_view id) const;

 private:
  std::vector<ScriptIdentity> scripts_;
  std::vector<ActorRef> script_creators_;
  std::vector<RequestInfo> requests_;
  std::map<std::string, std::size_t, std::less<>> script_pos_;
  std::map<std::string, std::size_t, std::less<>> request_pos_;
};

}  // namespace fpats
