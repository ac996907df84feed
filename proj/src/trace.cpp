#include "fpats/trace.hpp"

#include <array>
#include <set>

#include "fpats/domain.hpp"
#include "fpats/io.hpp"
#include "fpats/url.hpp"
#include "json.hpp"

namespace fpats {

using nlohmann::json;

namespace {

template <typename E, std::size_t N>
struct EnumNames {
  std::array<std::pair<E, std::string_view>, N> entries;

  std::string_view name(E value) const {
    for (const auto& [v, n] : entries) {
      if (v == value) return n;
    }
    return "?";
  }
  std::optional<E> value(std::string_view text) const {
    for (const auto& [v, n] : entries) {
      if (n == text) return v;
    }
    return std::nullopt;
  }
};

constexpr EnumNames<EventKind, 8> kKindNames{{{
    {EventKind::ScriptLoad, "ScriptLoad"},
    {EventKind::ElementCreate, "ElementCreate"},
    {EventKind::Request, "Request"},
    {EventKind::Response, "Response"},
    {EventKind::Redirect, "Redirect"},
    {EventKind::StorageSet, "StorageSet"},
    {EventKind::StorageGet, "StorageGet"},
    {EventKind::StorageDelete, "StorageDelete"},
}}};
constexpr EnumNames<CrawlConfig, 2> kConfigNames{{{
    {CrawlConfig::ThirdPartyAllowed, "ThirdPartyAllowed"},
    {CrawlConfig::ThirdPartyBlocked, "ThirdPartyBlocked"},
}}};
constexpr EnumNames<StoreKind, 2> kStoreNames{{{
    {StoreKind::Cookie, "Cookie"},
    {StoreKind::LocalStorage, "LocalStorage"},
}}};
constexpr EnumNames<Channel, 2> kChannelNames{{{
    {Channel::JavaScript, "JavaScript"},
    {Channel::HttpHeader, "HttpHeader"},
}}};
constexpr EnumNames<ExecutionContext, 2> kContextNames{{{
    {ExecutionContext::FirstParty, "FirstParty"},
    {ExecutionContext::ThirdPartyFrame, "ThirdPartyFrame"},
}}};
constexpr EnumNames<ResourceType, 5> kTypeNames{{{
    {ResourceType::Document, "document"},
    {ResourceType::Script, "script"},
    {ResourceType::Image, "image"},
    {ResourceType::XmlHttpRequest, "xhr"},
    {ResourceType::Other, "other"},
}}};

}  // namespace

std::string_view to_string(EventKind kind) { return kKindNames.name(kind); }
std::string_view to_string(CrawlConfig config) { return kConfigNames.name(config); }
std::string_view to_string(StoreKind store) { return kStoreNames.name(store); }
std::string_view to_string(Channel channel) { return kChannelNames.name(channel); }
std::string_view to_string(ExecutionContext context) { return kContextNames.name(context); }
std::string_view to_string(ResourceType type) { return kTypeNames.name(type); }

std::string ActorRef::to_string() const {
  switch (kind) {
    case Kind::Parser: return "parser";
    case Kind::Script: return "script:" + id;
    case Kind::Request: return "request:" + id;
  }
  return "?";
}

std::optional<ActorRef> ActorRef::parse(std::string_view text) {
  if (text == "parser") return parser();
  if (text.starts_with("script:") && text.size() > 7) return script(std::string(text.substr(7)));
  if (text.starts_with("request:") && text.size() > 8)
    return request(std::string(text.substr(8)));
  return std::nullopt;
}

TraceError::TraceError(std::string kind, std::size_t line, const std::string& message)
    : Error(kind + (line ? " at line " + std::to_string(line) : std::string()) + ": " + message),
      line_(line) {}

namespace {


class RecordReader {
 public:
  RecordReader(const json& record, std::size_t line) : record_(record), line_(line) {}

  const json& field(const char* name) const {
    auto it = record_.find(name);
    if (it == record_.end()) throw SchemaError(line_, std::string("missing field '") + name + "'");
    return *it;
  }
  bool has(const char* name) const { return record_.contains(name); }

  std::string str(const char* name) const {
    const auto& v = field(name);
    if (!v.is_string()) throw SchemaError(line_, std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
  }
  std::optional<std::string> opt_str(const char* name) const {
    if (!has(name)) return std::nullopt;
    return str(name);
  }
  std::int64_t integer(const char* name) const {
    const auto& v = field(name);
    if (!v.is_number_integer())
      throw SchemaError(line_, std::string("field '") + name + "' must be an integer");
    return v.get<std::int64_t>();
  }
  HeaderList headers(const char* name) const {
    HeaderList out;
    if (!has(name)) return out;
    const auto& v = field(name);
    if (!v.is_array()) throw SchemaError(line_, "headers must be an array of [name, value] pairs");
    for (const auto& pair : v) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
        throw SchemaError(line_, "headers must be an array of [name, value] pairs");
      out.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
    }
    return out;
  }
  template <typename E, std::size_t N>
  E enumerated(const char* name, const EnumNames<E, N>& names) const {
    const auto text = str(name);
    auto value = names.value(text);
    if (!value) throw SchemaError(line_, "unknown " + std::string(name) + " '" + text + "'");
    return *value;
  }

 private:
  const json& record_;
  std::size_t line_;
};

TraceEvent parse_event(const json& record, std::size_t line) {
  if (!record.is_object()) throw SchemaError(line, "event record must be an object");
  RecordReader r(record, line);
  TraceEvent event;
  event.kind = r.enumerated("kind", kKindNames);
  event.timestamp = r.integer("ts");
  auto actor = ActorRef::parse(r.str("actor"));
  if (!actor) throw SchemaError(line, "malformed actor '" + r.str("actor") + "'");
  event.actor = *actor;

  switch (event.kind) {
    case EventKind::ScriptLoad: {
      ScriptLoadPayload p;
      p.script_id = r.str("script_id");
      p.source_url = r.str("url");
      p.content_hash = r.has("content_hash") ? r.str("content_hash") : std::string();
      p.context = r.has("context") ? r.enumerated("context", kContextNames)
                                   : ExecutionContext::FirstParty;
      event.payload = std::move(p);
      break;
    }
    case EventKind::ElementCreate:
      event.payload = ElementCreatePayload{r.str("element_id"), r.str("tag")};
      break;
    case EventKind::Request: {
      RequestPayload p;
      p.request_id = r.str("request_id");
      p.url = r.str("url");
      p.method = r.has("method") ? r.str("method") : "GET";
      p.type = r.has("type") ? r.enumerated("type", kTypeNames) : ResourceType::Other;
      p.headers = r.headers("headers");
      p.body = r.opt_str("body");
      event.payload = std::move(p);
      break;
    }
    case EventKind::Response: {
      ResponsePayload p;
      p.request_id = r.str("request_id");
      p.status = static_cast<int>(r.integer("status"));
      p.headers = r.headers("headers");
      p.body = r.opt_str("body");
      event.payload = std::move(p);
      break;
    }
    case EventKind::Redirect: {
      RedirectPayload p;
      p.from_request_id = r.str("from_request_id");
      p.request_id = r.str("request_id");
      p.to_url = r.str("to_url");
      p.status = static_cast<int>(r.integer("status"));
      event.payload = std::move(p);
      break;
    }
    case EventKind::StorageSet:
    case EventKind::StorageGet:
    case EventKind::StorageDelete: {
      StoragePayload p;
      p.store = r.enumerated("store", kStoreNames);
      p.key = r.str("key");
      p.value = r.opt_str("value");
      p.channel = r.enumerated("channel", kChannelNames);
      if (r.has("expiry")) p.expiry = r.integer("expiry");
      if (event.kind == EventKind::StorageSet && !p.value)
        throw SchemaError(line, "StorageSet requires 'value'");
      event.payload = std::move(p);
      break;
    }
  }
  return event;
}

json headers_json(const HeaderList& headers) {
  json out = json::array();
  for (const auto& [name, value] : headers) out.push_back(json::array({name, value}));
  return out;
}

json event_json(const TraceEvent& event) {
  json j;
  j["ts"] = event.timestamp;
  j["kind"] = to_string(event.kind);
  j["actor"] = event.actor.to_string();
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ScriptLoadPayload>) {
          j["script_id"] = p.script_id;
          j["url"] = p.source_url;
          j["content_hash"] = p.content_hash;
          j["context"] = to_string(p.context);
        } else if constexpr (std::is_same_v<P, ElementCreatePayload>) {
          j["element_id"] = p.element_id;
          j["tag"] = p.tag;
        } else if constexpr (std::is_same_v<P, RequestPayload>) {
          j["request_id"] = p.request_id;
          j["url"] = p.url;
          j["method"] = p.method;
          j["type"] = to_string(p.type);
          j["headers"] = headers_json(p.headers);
          if (p.body) j["body"] = *p.body;
        } else if constexpr (std::is_same_v<P, ResponsePayload>) {
          j["request_id"] = p.request_id;
          j["status"] = p.status;
          j["headers"] = headers_json(p.headers);
          if (p.body) j["body"] = *p.body;
        } else if constexpr (std::is_same_v<P, RedirectPayload>) {
          j["from_request_id"] = p.from_request_id;
          j["request_id"] = p.request_id;
          j["to_url"] = p.to_url;
          j["status"] = p.status;
        } else {
          j["store"] = to_string(p.store);
          j["key"] = p.key;
          if (p.value) j["value"] = *p.value;
          j["channel"] = to_string(p.channel);
          if (p.expiry) j["expiry"] = *p.expiry;
        }
      },
      event.payload);
  return j;
}

std::string computed_etld1(const std::string& site_url, std::size_t line) {
  try {
    return registrable_domain(parse_url(site_url).host);
  } catch (const Error& e) {
    throw SchemaError(line, "invalid site_url '" + site_url + "': " + e.what());
  }
}

}  // namespace

namespace {

void validate_with_lines(const CrawlTrace& trace, const std::vector<std::size_t>* lines) {
  auto line_of = [lines](std::size_t event_index) {
    return lines ? (*lines)[event_index] : event_index + 2;
  };
  if (trace.site_etld1 != computed_etld1(trace.site_url, 1))
    throw SchemaError(1, "site_etld1 '" + trace.site_etld1 + "' does not match site_url");

  std::set<std::string, std::less<>> scripts, requests, elements;
  std::int64_t last_ts = INT64_MIN;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const auto& e = trace.events[i];
    const std::size_t line = line_of(i);
    if (e.timestamp < last_ts)
      throw OrderError(line, "timestamp " + std::to_string(e.timestamp) + " precedes " +
                                 std::to_string(last_ts));
    last_ts = e.timestamp;

    const bool payload_ok = std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          switch (e.kind) {
            case EventKind::ScriptLoad: return std::is_same_v<P, ScriptLoadPayload>;
            case EventKind::ElementCreate: return std::is_same_v<P, ElementCreatePayload>;
            case EventKind::Request: return std::is_same_v<P, RequestPayload>;
            case EventKind::Response: return std::is_same_v<P, ResponsePayload>;
            case EventKind::Redirect: return std::is_same_v<P, RedirectPayload>;
            default: return std::is_same_v<P, StoragePayload>;
          }
        },
        e.payload);
    if (!payload_ok) throw SchemaError(line, "payload does not match event kind");

    switch (e.actor.kind) {
      case ActorRef::Kind::Parser: break;
      case ActorRef::Kind::Script:
        if (!scripts.contains(e.actor.id))
          throw DanglingRef(line, "unknown script_id '" + e.actor.id + "'");
        break;
      case ActorRef::Kind::Request:
        if (!requests.contains(e.actor.id))
          throw DanglingRef(line, "unknown request_id '" + e.actor.id + "'");
        break;
    }

    switch (e.kind) {
      case EventKind::ScriptLoad: {
        const auto& p = e.script_load();
        if (e.actor.is_request()) throw SchemaError(line, "scripts are created by the parser or a script");
        if (!scripts.insert(p.script_id).second)
          throw SchemaError(line, "duplicate script_id '" + p.script_id + "'");
        break;
      }
      case EventKind::ElementCreate: {
        const auto& p = e.element();
        if (e.actor.is_request()) throw SchemaError(line, "elements are created by the parser or a script");
        if (!elements.insert(p.element_id).second)
          throw SchemaError(line, "duplicate element_id '" + p.element_id + "'");
        break;
      }
      case EventKind::Request: {
        const auto& p = e.request();
        try {
          parse_url(p.url);
        } catch (const UrlParseError& err) {
          throw SchemaError(line, err.what());
        }
        if (!requests.insert(p.request_id).second)
          throw SchemaError(line, "duplicate request_id '" + p.request_id + "'");
        break;
      }
      case EventKind::Response: {
        const auto& p = e.response();
        if (!requests.contains(p.request_id))
          throw DanglingRef(line, "response for unknown request_id '" + p.request_id + "'");
        if (e.actor != ActorRef::request(p.request_id))
          throw SchemaError(line, "response actor must be its request");
        break;
      }
      case EventKind::Redirect: {
        const auto& p = e.redirect();
        if (!requests.contains(p.from_request_id))
          throw DanglingRef(line, "redirect from unknown request_id '" + p.from_request_id + "'");
        if (e.actor != ActorRef::request(p.from_request_id))
          throw SchemaError(line, "redirect actor must be its source request");
        try {
          parse_url(p.to_url);
        } catch (const UrlParseError& err) {
          throw SchemaError(line, err.what());
        }
        if (!requests.insert(p.request_id).second)
          throw SchemaError(line, "duplicate request_id '" + p.request_id + "'");
        break;
      }
      default: {
        const auto& p = e.storage();
        if (e.actor.is_parser()) throw SchemaError(line, "storage operations need a script or request actor");
        if (p.channel == Channel::JavaScript && !e.actor.is_script())
          throw SchemaError(line, "JavaScript storage access must be performed by a script");
        if (p.channel == Channel::HttpHeader && !e.actor.is_request())
          throw SchemaError(line, "HttpHeader storage access must be attributed to a request");
        if (p.channel == Channel::HttpHeader && p.store != StoreKind::Cookie)
          throw SchemaError(line, "localStorage cannot be written over HTTP");
        if (e.kind == EventKind::StorageSet && !p.value)
          throw SchemaError(line, "StorageSet requires a value");
        break;
      }
    }
  }
}

}  // namespace

void validate_trace(const CrawlTrace& trace) { validate_with_lines(trace, nullptr); }

CrawlTrace parse_trace(std::string_view jsonl) {
  CrawlTrace trace;
  std::vector<std::size_t> lines;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= jsonl.size()) {
    auto end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    auto line = jsonl.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == jsonl.size()) break;
      continue;
    }
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(line_no, std::string("invalid JSON: ") + e.what());
    }
    try {
      if (!have_header) {
        if (!record.is_object()) throw SchemaError(line_no, "site header must be an object");
        RecordReader r(record, line_no);
        trace.site_url = r.str("site_url");
        trace.visit_id = r.str("visit_id");
        trace.crawl_config = r.enumerated("crawl_config", kConfigNames);
        trace.site_etld1 = computed_etld1(trace.site_url, line_no);
        if (r.has("site_etld1") && r.str("site_etld1") != trace.site_etld1)
          throw SchemaError(line_no, "site_etld1 does not match site_url");
        have_header = true;
      } else {
        trace.events.push_back(parse_event(record, line_no));
        lines.push_back(line_no);
      }
    } catch (const json::exception& e) {
      throw SchemaError(line_no, e.what());
    }
    if (end == jsonl.size()) break;
  }
  if (!have_header) throw SchemaError(1, "missing site header record");
  validate_with_lines(trace, &lines);
  return trace;
}

CrawlTrace load_trace(const std::filesystem::path& path) {
  return parse_trace(read_file(path));
}

std::string serialize_trace(const CrawlTrace& trace) {
  json header;
  header["site_url"] = trace.site_url;
  header["site_etld1"] = trace.site_etld1;
  header["visit_id"] = trace.visit_id;
  header["crawl_config"] = to_string(trace.crawl_config);
  std::string out = header.dump() + "\n";
  for (const auto& e : trace.events) out += event_json(e).dump() + "\n";
  return out;
}

void save_trace(const std::filesystem::path& path, const CrawlTrace& trace) {
  write_file(path, serialize_trace(trace));
}

TraceIndex::TraceIndex(const CrawlTrace& trace) {
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const auto& e = trace.events[i];
    switch (e.kind) {
      case EventKind::ScriptLoad: {
        const auto& p = e.script_load();
        ScriptIdentity id{p.script_id, p.source_url, url_etld1(p.source_url), p.content_hash,
                          p.context};
        script_pos_.emplace(p.script_id, scripts_.size());
        scripts_.push_back(std::move(id));
        script_creators_.push_back(e.actor);
        break;
      }
      case EventKind::Request: {
        const auto& p = e.request();
        RequestInfo info;
        info.request_id = p.request_id;
        info.url = p.url;
        info.etld1 = url_etld1(p.url);
        info.initiator = e.actor;
        if (e.actor.is_request()) {
          if (auto it = request_pos_.find(e.actor.id); it != request_pos_.end())
            info.initiator = requests_[it->second].initiator;
        }
        info.event_index = i;
        info.payload = &p;
        request_pos_.emplace(p.request_id, requests_.size());
        requests_.push_back(std::move(info));
        break;
      }
      case EventKind::Redirect: {
        const auto& p = e.redirect();
        RequestInfo info;
        info.request_id = p.request_id;
        info.url = p.to_url;
        info.etld1 = url_etld1(p.to_url);
        if (auto it = request_pos_.find(p.from_request_id); it != request_pos_.end())
          info.initiator = requests_[it->second].initiator;
        info.event_index = i;
        info.redirected_from = p.from_request_id;
        request_pos_.emplace(p.request_id, requests_.size());
        requests_.push_back(std::move(info));
        break;
      }
      case EventKind::Response: {
        const auto& p = e.response();
        if (auto it = request_pos_.find(p.request_id); it != request_pos_.end()) {
          auto& info = requests_[it->second];
          if (!info.response) info.response = &p;
        }
        break;
      }
      default: break;
    }
  }
}

const ScriptIdentity* TraceIndex::script(std::string_view id) const {
  auto it = script_pos_.find(id);
  return it == script_pos_.end() ? nullptr : &scripts_[it->second];
}

const ActorRef* TraceIndex::script_creator(std::string_view id) const {
  auto it = script_pos_.find(id);
  return it == script_pos_.end() ? nullptr : &script_creators_[it->second];
}

const RequestInfo* TraceIndex::request(std::string_view id) const {
  auto it = request_pos_.find(id);
  return it == request_pos_.end() ? nullptr : &requests_[it->second];
}

}  // namespace fpats
