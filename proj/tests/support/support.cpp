#include "support.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fpats/encoding.hpp"
#include "fpats/identifiers.hpp"
#include "fpats/rng.hpp"
#include "fpats/url.hpp"

namespace testsupport {

using namespace fpats;

fs::path data_dir() { return FPATS_TEST_DATA; }

TempDir::TempDir(std::string_view tag) {
  static std::uint64_t counter = 0;
  Rng rng(fnv1a64(tag) ^ static_cast<std::uint64_t>(std::hash<std::string>{}(fs::temp_directory_path().string())) ^
          ++counter ^ static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(this)));
  path_ = fs::temp_directory_path() / ("fpats-" + std::string(tag) + "-" + rng.token(10, kAlnumLower));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::map<std::string, std::string> snapshot_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    files[fs::relative(entry.path(), dir).generic_string()] = bytes.str();
  }
  return files;
}

// --- TraceBuilder ---------------------------------------------------------

TraceBuilder::TraceBuilder(std::string site_url, CrawlConfig config) {
  trace_.site_url = std::move(site_url);
  trace_.site_etld1 = url_etld1(trace_.site_url);
  trace_.visit_id = "test";
  trace_.crawl_config = config;
}

void TraceBuilder::push(EventKind kind, ActorRef actor, EventPayload payload) {
  ts_ += 10;
  trace_.events.push_back({kind, ts_, std::move(actor), std::move(payload)});
}

ActorRef TraceBuilder::script(const std::string& id, const std::string& url, const std::string& hash,
                              ActorRef creator) {
  push(EventKind::ScriptLoad, std::move(creator), ScriptLoadPayload{id, url, hash, ExecutionContext::FirstParty});
  return ActorRef::script(id);
}

void TraceBuilder::element(const std::string& id, const std::string& tag, ActorRef creator) {
  push(EventKind::ElementCreate, std::move(creator), ElementCreatePayload{id, tag});
}

void TraceBuilder::request(const std::string& id, const ActorRef& actor, const std::string& url, ResourceType type,
                           HeaderList headers, std::optional<std::string> body, const std::string& method) {
  push(EventKind::Request, actor, RequestPayload{id, url, method, type, std::move(headers), std::move(body)});
}

void TraceBuilder::response(const std::string& id, HeaderList headers, std::optional<std::string> body) {
  push(EventKind::Response, ActorRef::request(id), ResponsePayload{id, 200, std::move(headers), std::move(body)});
}

void TraceBuilder::redirect(const std::string& from, const std::string& id, const std::string& url) {
  push(EventKind::Redirect, ActorRef::request(from), RedirectPayload{from, id, url, 302});
}

void TraceBuilder::set(const ActorRef& actor, StoreKind store, const std::string& key, const std::string& value) {
  const Channel channel = actor.is_request() ? Channel::HttpHeader : Channel::JavaScript;
  push(EventKind::StorageSet, actor, StoragePayload{store, key, value, channel, std::nullopt});
}

void TraceBuilder::get(const ActorRef& actor, StoreKind store, const std::string& key,
                       std::optional<std::string> value) {
  push(EventKind::StorageGet, actor, StoragePayload{store, key, std::move(value), Channel::JavaScript, std::nullopt});
}

void TraceBuilder::remove(const ActorRef& actor, StoreKind store, const std::string& key) {
  push(EventKind::StorageDelete, actor, StoragePayload{store, key, std::nullopt, Channel::JavaScript, std::nullopt});
}

// --- random traces --------------------------------------------------------

CrawlTrace random_trace(std::uint64_t seed, std::size_t max_events) {
  Rng rng(seed);
  const std::string site = "site" + std::to_string(seed % 997);
  CrawlTrace trace;
  trace.site_url = "https://www." + site + ".com/";
  trace.site_etld1 = site + ".com";
  trace.visit_id = "random-" + std::to_string(seed);
  trace.crawl_config = rng.chance(0.5) ? CrawlConfig::ThirdPartyAllowed : CrawlConfig::ThirdPartyBlocked;

  const std::vector<std::string> hosts = {"www." + site + ".com", "static." + site + ".com", "cdn.tracker1.com",
                                          "px.tracker2.com",       "api.tracker3.com",        "ads.example.net",
                                          "sync.partner.co.uk"};
  const std::vector<std::string> keys = {"uid", "_ga", "sess", "pref", "cart", "IDStore", "lsk", "x"};
  std::vector<std::string> values = {"en", "1", "a b/c?d=1&e"};
  for (int i = 0; i < 9; ++i) values.push_back(rng.token(rng.range(8, 24), kAlnum));
  values.push_back("val." + rng.token(10, kAlnum) + "+/=");

  std::vector<std::string> scripts, requests;
  std::size_t elements = 0;
  std::int64_t ts = 1'700'000'000'000;
  auto any_script = [&] { return ActorRef::script(scripts[rng.below(scripts.size())]); };
  auto any_request = [&] { return requests[rng.below(requests.size())]; };
  auto creator = [&] { return scripts.empty() || rng.chance(0.4) ? ActorRef::parser() : any_script(); };
  auto encoded = [&](const std::string& value) {
    const Encoding encodings[] = {Encoding::Plain, Encoding::PercentEncoded, Encoding::Base64Url, Encoding::Md5Hex,
                                  Encoding::Sha256Hex};
    Encoding e = encodings[rng.below(std::size(encodings))];
    if (e == Encoding::Plain && !is_identifier(value)) e = Encoding::PercentEncoded;
    return apply_encoding(e, value);
  };
  auto url = [&] {
    std::string u = "https://" + hosts[rng.below(hosts.size())] + "/" + rng.token(rng.range(1, 6), kAlnumLower);
    if (rng.chance(0.3)) u += "/" + encoded(values[rng.below(values.size())]);
    if (rng.chance(0.5)) u += "?v=" + encoded(values[rng.below(values.size())]) + "&n=" + std::to_string(rng.below(9));
    return u;
  };
  auto headers = [&](bool response) {
    HeaderList h;
    if (rng.chance(0.4)) h.emplace_back("X-Id", encoded(values[rng.below(values.size())]));
    if (rng.chance(0.3)) {
      h.emplace_back(response ? "Set-Cookie" : "Cookie", keys[rng.below(keys.size())] + "=" + values[rng.below(values.size())]);
    }
    return h;
  };
  auto body = [&]() -> std::optional<std::string> {
    if (!rng.chance(0.4)) return std::nullopt;
    return "{\"d\":\"" + encoded(values[rng.below(values.size())]) + "\"}";
  };

  const std::size_t n = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(max_events)));
  const std::vector<double> weights = {1.0, 0.6, 3.0, 1.5, 0.8, 3.0, 2.0, 0.5};
  while (trace.events.size() < n) {
    ts += static_cast<std::int64_t>(rng.below(3));
    const std::size_t choice = rng.weighted(weights);
    TraceEvent e;
    e.timestamp = ts;
    switch (choice) {
      case 0: {
        if (scripts.size() >= 12) continue;
        const std::string id = "s" + std::to_string(scripts.size() + 1);
        e.kind = EventKind::ScriptLoad;
        e.actor = creator();
        const std::string src = "https://" + hosts[rng.below(hosts.size())] + "/js/" + rng.token(5, kAlnumLower) + ".js";
        e.payload = ScriptLoadPayload{id, src, rng.chance(0.85) ? rng.token(16, kHexLower) : "",
                                      rng.chance(0.8) ? ExecutionContext::FirstParty : ExecutionContext::ThirdPartyFrame};
        scripts.push_back(id);
        break;
      }
      case 1:
        e.kind = EventKind::ElementCreate;
        e.actor = creator();
        e.payload = ElementCreatePayload{"e" + std::to_string(++elements), rng.chance(0.5) ? "img" : "iframe"};
        break;
      case 2: {
        const std::string id = "r" + std::to_string(requests.size() + 1);
        e.kind = EventKind::Request;
        const auto who = rng.below(10);
        e.actor = who < 2 || scripts.empty() ? (who == 0 && !requests.empty() ? ActorRef::request(any_request())
                                                                              : ActorRef::parser())
                                             : any_script();
        const ResourceType types[] = {ResourceType::Document, ResourceType::Script, ResourceType::Image,
                                      ResourceType::XmlHttpRequest, ResourceType::Other};
        e.payload = RequestPayload{id, url(), rng.chance(0.7) ? "GET" : "POST", types[rng.below(5)], headers(false),
                                   body()};
        requests.push_back(id);
        break;
      }
      case 3: {
        if (requests.empty()) continue;
        const std::string id = any_request();
        e.kind = EventKind::Response;
        e.actor = ActorRef::request(id);
        e.payload = ResponsePayload{id, 200, headers(true), body()};
        break;
      }
      case 4: {
        if (requests.empty()) continue;
        const std::string from = any_request();
        const std::string id = "r" + std::to_string(requests.size() + 1);
        e.kind = EventKind::Redirect;
        e.actor = ActorRef::request(from);
        e.payload = RedirectPayload{from, id, url(), 302};
        requests.push_back(id);
        break;
      }
      case 5: {
        const bool http = !requests.empty() && (scripts.empty() || rng.chance(0.25));
        if (!http && scripts.empty()) continue;
        e.kind = EventKind::StorageSet;
        e.actor = http ? ActorRef::request(any_request()) : any_script();
        const StoreKind store = http || rng.chance(0.7) ? StoreKind::Cookie : StoreKind::LocalStorage;
        e.payload = StoragePayload{store, keys[rng.below(keys.size())], values[rng.below(values.size())],
                                   http ? Channel::HttpHeader : Channel::JavaScript, std::nullopt};
        break;
      }
      case 6: {
        if (scripts.empty()) continue;
        e.kind = EventKind::StorageGet;
        e.actor = any_script();
        std::optional<std::string> value;
        if (rng.chance(0.8)) value = values[rng.below(values.size())];
        e.payload = StoragePayload{rng.chance(0.7) ? StoreKind::Cookie : StoreKind::LocalStorage,
                                   keys[rng.below(keys.size())], value, Channel::JavaScript, std::nullopt};
        break;
      }
      default: {
        if (scripts.empty()) continue;
        e.kind = EventKind::StorageDelete;
        e.actor = any_script();
        e.payload = StoragePayload{StoreKind::Cookie, keys[rng.below(keys.size())], std::nullopt, Channel::JavaScript,
                                   std::nullopt};
        break;
      }
    }
    trace.events.push_back(std::move(e));
  }
  return trace;
}

// --- graph signatures -----------------------------------------------------

namespace {

std::string opt(const std::optional<std::string>& v) { return v ? "=" + *v : "<none>"; }

std::string access_text(std::size_t event, std::int64_t ts, EventKind op, StoreKind store, Channel channel,
                        const ActorRef& actor, const std::optional<std::string>& value) {
  return std::to_string(event) + "," + std::to_string(ts) + "," + std::string(to_string(op)) + "," +
         std::string(to_string(store)) + "," + std::string(to_string(channel)) + "," + actor.to_string() + "," +
         opt(value);
}

std::string node_head(NodeKind kind, const std::string& id, std::int64_t ts, std::size_t event) {
  return std::string(to_string(kind)) + "|" + id + "|" + std::to_string(ts) + "|" + std::to_string(event);
}

std::string edge_text(const std::string& src, const std::string& dst, EdgeKind kind, std::size_t event,
                      std::optional<Channel> channel, std::optional<Encoding> encoding,
                      std::optional<Location> location) {
  return src + "|" + dst + "|" + std::string(to_string(kind)) + "|" + std::to_string(event) + "|" +
         (channel ? std::string(to_string(*channel)) : "-") + "|" +
         (encoding ? std::string(to_string(*encoding)) : "-") + "|" +
         (location ? std::string(to_string(*location)) : "-");
}

}  // namespace

GraphSignature signature_of(const PageGraph& graph) {
  GraphSignature sig;
  for (const auto& node : graph.nodes) {
    std::string s = node_head(node.kind, node.id, node.first_seen, node.first_event);
    switch (node.kind) {
      case NodeKind::Script: {
        const auto& a = node.script();
        s += "|" + a.identity.source_url + "|" + a.identity.source_etld1 + "|" + a.identity.content_hash + "|" +
             std::string(to_string(a.identity.execution_context)) + "|" + a.creator.to_string();
        break;
      }
      case NodeKind::Request: {
        const auto& a = node.request();
        s += "|" + a.url + "|" + a.method + "|" + a.etld1 + "|" + a.initiator.to_string() + "|" +
             opt(a.redirected_from);
        break;
      }
      case NodeKind::Storage: {
        const auto& a = node.storage();
        s += "|" + a.name + "|" + (a.in_cookie ? "C" : "-") + (a.in_local_storage ? "L" : "-");
        for (const auto& x : a.accesses) {
          s += ";" + access_text(x.event_index, x.timestamp, x.op, x.store, x.channel, x.actor, x.value);
        }
        break;
      }
      case NodeKind::Element: {
        const auto& a = node.element();
        s += "|" + a.tag + "|" + a.creator.to_string();
        break;
      }
    }
    sig.nodes.insert(s);
  }
  for (const auto& e : graph.edges) {
    sig.edges.insert(
        edge_text(graph.nodes[e.src].id, graph.nodes[e.dst].id, e.kind, e.event_index, e.channel, e.encoding, e.location));
  }
  return sig;
}

namespace {

// Index of the event that declares request `id`, by linear scan.
std::size_t declaring_event(const CrawlTrace& trace, const std::string& id) {
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const auto& e = trace.events[i];
    if (e.kind == EventKind::Request && e.request().request_id == id) return i;
    if (e.kind == EventKind::Redirect && e.redirect().request_id == id) return i;
  }
  throw std::logic_error("undeclared request " + id);
}

std::string request_url(const CrawlTrace& trace, const std::string& id) {
  const auto& e = trace.events[declaring_event(trace, id)];
  return e.kind == EventKind::Request ? e.request().url : e.redirect().to_url;
}

ActorRef root_initiator(const CrawlTrace& trace, const std::string& id) {
  const auto& e = trace.events[declaring_event(trace, id)];
  if (e.kind == EventKind::Redirect) return root_initiator(trace, e.redirect().from_request_id);
  if (e.actor.is_request()) return root_initiator(trace, e.actor.id);
  return e.actor;
}

// (node id, kind) introduced by event i, if any.
std::optional<std::pair<std::string, NodeKind>> introduced(const TraceEvent& e) {
  switch (e.kind) {
    case EventKind::ScriptLoad: return std::pair{"script:" + e.script_load().script_id, NodeKind::Script};
    case EventKind::ElementCreate: return std::pair{"element:" + e.element().element_id, NodeKind::Element};
    case EventKind::Request: return std::pair{"request:" + e.request().request_id, NodeKind::Request};
    case EventKind::Redirect: return std::pair{"request:" + e.redirect().request_id, NodeKind::Request};
    case EventKind::Response: return std::nullopt;
    default: return std::pair{"storage:" + e.storage().key, NodeKind::Storage};
  }
}

std::string actor_node(const ActorRef& a) {
  if (a.is_script()) return "script:" + a.id;
  if (a.is_request()) return "request:" + a.id;
  return "";
}

}  // namespace

GraphSignature reference_graph_signature(const CrawlTrace& trace) {
  GraphSignature sig;
  const auto& ev = trace.events;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const auto& e = ev[i];
    const auto intro = introduced(e);
    if (!intro) continue;
    bool seen = false;
    for (std::size_t j = 0; j < i && !seen; ++j) {
      const auto earlier = introduced(ev[j]);
      seen = earlier && earlier->first == intro->first;
    }
    if (seen) continue;
    std::string s = node_head(intro->second, intro->first, e.timestamp, i);
    switch (e.kind) {
      case EventKind::ScriptLoad: {
        const auto& p = e.script_load();
        s += "|" + p.source_url + "|" + url_etld1(p.source_url) + "|" + p.content_hash + "|" +
             std::string(to_string(p.context)) + "|" + e.actor.to_string();
        break;
      }
      case EventKind::ElementCreate: s += "|" + e.element().tag + "|" + e.actor.to_string(); break;
      case EventKind::Request: {
        const auto& p = e.request();
        s += "|" + p.url + "|" + p.method + "|" + url_etld1(p.url) + "|" +
             root_initiator(trace, p.request_id).to_string() + "|" + opt(std::nullopt);
        break;
      }
      case EventKind::Redirect: {
        const auto& p = e.redirect();
        s += "|" + p.to_url + "|GET|" + url_etld1(p.to_url) + "|" + root_initiator(trace, p.request_id).to_string() +
             "|" + opt(p.from_request_id);
        break;
      }
      default: {
        const std::string& key = e.storage().key;
        bool cookie = false, ls = false;
        std::string history;
        for (std::size_t j = 0; j < ev.size(); ++j) {
          if (!ev[j].is_storage() || ev[j].storage().key != key) continue;
          const auto& p = ev[j].storage();
          (p.store == StoreKind::Cookie ? cookie : ls) = true;
          history += ";" + access_text(j, ev[j].timestamp, ev[j].kind, p.store, p.channel, ev[j].actor, p.value);
        }
        s += "|" + key + "|" + (cookie ? "C" : "-") + (ls ? "L" : "-") + history;
        break;
      }
    }
    sig.nodes.insert(s);
  }

  for (std::size_t i = 0; i < ev.size(); ++i) {
    const auto& e = ev[i];
    const std::string actor = actor_node(e.actor);
    switch (e.kind) {
      case EventKind::ScriptLoad:
        if (!actor.empty())
          sig.edges.insert(edge_text(actor, "script:" + e.script_load().script_id, EdgeKind::Creates, i, {}, {}, {}));
        break;
      case EventKind::ElementCreate:
        if (!actor.empty())
          sig.edges.insert(edge_text(actor, "element:" + e.element().element_id, EdgeKind::Creates, i, {}, {}, {}));
        break;
      case EventKind::Request:
        if (!actor.empty())
          sig.edges.insert(edge_text(actor, "request:" + e.request().request_id, EdgeKind::Initiates, i, {}, {}, {}));
        break;
      case EventKind::Redirect:
        sig.edges.insert(edge_text("request:" + e.redirect().from_request_id, "request:" + e.redirect().request_id,
                                   EdgeKind::RedirectsTo, i, {}, {}, {}));
        break;
      case EventKind::Response: break;
      case EventKind::StorageSet:
        sig.edges.insert(edge_text(actor, "storage:" + e.storage().key, EdgeKind::WritesStorage, i,
                                   e.storage().channel, {}, {}));
        break;
      case EventKind::StorageDelete:
        sig.edges.insert(edge_text(actor, "storage:" + e.storage().key, EdgeKind::DeletesStorage, i, {}, {}, {}));
        break;
      case EventKind::StorageGet:
        sig.edges.insert(edge_text("storage:" + e.storage().key, actor, EdgeKind::ReadsStorage, i, {}, {}, {}));
        break;
    }
  }
  const FlowSet flows = find_flows(trace);
  for (const auto& m : flows.exfiltrations) {
    sig.edges.insert(edge_text("storage:" + m.cookie.name, "request:" + m.request_id, EdgeKind::Exfiltrates,
                               declaring_event(trace, m.request_id), {}, m.encoding, m.location));
  }
  for (const auto& m : flows.infiltrations) {
    sig.edges.insert(edge_text("request:" + m.request_id, "storage:" + m.cookie.name, EdgeKind::Infiltrates,
                               declaring_event(trace, m.request_id), {}, m.encoding, m.location));
  }
  return sig;
}

// --- features -------------------------------------------------------------

namespace {

std::string actor_domain(const CrawlTrace& trace, const ActorRef& actor) {
  if (actor.is_script()) {
    for (const auto& e : trace.events) {
      if (e.kind == EventKind::ScriptLoad && e.script_load().script_id == actor.id)
        return url_etld1(e.script_load().source_url);
    }
  }
  if (actor.is_request()) return url_etld1(request_url(trace, actor.id));
  return "";
}

ActorRef script_creator(const CrawlTrace& trace, const std::string& id) {
  for (const auto& e : trace.events) {
    if (e.kind == EventKind::ScriptLoad && e.script_load().script_id == id) return e.actor;
  }
  throw std::logic_error("undeclared script " + id);
}

int depth_of(const CrawlTrace& trace, const ActorRef& actor) {
  if (actor.is_parser()) return 0;
  if (actor.is_script()) return 1 + depth_of(trace, script_creator(trace, actor.id));
  return 1 + depth_of(trace, root_initiator(trace, actor.id));
}

}  // namespace

FeatureVector reference_features(const CrawlTrace& trace, const std::string& name) {
  FeatureVector v{};
  auto put = [&](std::string_view key, double value) { v[feature_index(key)] = value; };
  const auto& ev = trace.events;

  std::map<std::string, std::set<std::string>> keys_by_actor;
  std::set<std::string> accessors;
  std::optional<ActorRef> setter;
  double sets_js = 0, sets_http = 0, gets_js = 0, deletes = 0, ls_sets = 0, gets = 0;
  for (const auto& e : ev) {
    if (!e.is_storage()) continue;
    const auto& p = e.storage();
    keys_by_actor[e.actor.to_string()].insert(p.key);
    if (p.key != name) continue;
    accessors.insert(e.actor.to_string());
    const bool js = p.channel == Channel::JavaScript;
    if (e.kind == EventKind::StorageSet) {
      if (!setter) setter = e.actor;
      (js ? sets_js : sets_http) += 1;
      if (js && p.store == StoreKind::LocalStorage) ++ls_sets;
    } else if (e.kind == EventKind::StorageGet) {
      ++gets;
      if (js) ++gets_js;
    } else {
      ++deletes;
    }
  }
  double max_other = 0, sum_other = 0;
  for (const auto& a : accessors) {
    const double others = static_cast<double>(keys_by_actor[a].size()) - 1;
    max_other = std::max(max_other, others);
    sum_other += others;
  }
  put("s1", static_cast<double>(accessors.size()));
  put("s4", max_other);
  put("s5", accessors.empty() ? 0 : sum_other / static_cast<double>(accessors.size()));

  const FlowSet flows = find_flows(trace);
  double url = 0, header = 0, body = 0, infil = 0, exfil = 0;
  std::set<std::string> destinations;
  std::set<Encoding> encodings;
  for (const auto& m : flows.exfiltrations) {
    if (m.cookie.name != name) continue;
    ++exfil;
    if (m.location == Location::UrlQueryValue || m.location == Location::UrlPathSegment) ++url;
    else if (m.location == Location::HeaderValue) ++header;
    else ++body;
    destinations.insert(url_etld1(request_url(trace, m.request_id)));
    encodings.insert(m.encoding);
  }
  for (const auto& m : flows.infiltrations) {
    if (m.cookie.name != name) continue;
    ++infil;
    encodings.insert(m.encoding);
  }
  put("s2", sets_js + sets_http + deletes + infil);
  put("s3", gets + exfil);

  const std::string setter_domain = setter ? actor_domain(trace, *setter) : "";
  put("s6", !setter_domain.empty() && setter_domain != trace.site_etld1 ? 1 : 0);
  put("s7", setter ? depth_of(trace, *setter) : 0);
  put("f1", gets_js);
  put("f2", sets_js);
  put("f3", sets_http);
  put("f4", deletes);
  put("f5", ls_sets);
  put("f6", url);
  put("f7", header);
  put("f8", body);
  put("f9", infil);
  put("f10", static_cast<double>(destinations.size()));
  put("f11", static_cast<double>(encodings.size()));

  double others = 0, sent = 0, received = 0;
  if (!setter_domain.empty()) {
    for (const auto& m : flows.exfiltrations) {
      if (m.cookie.name != name && url_etld1(request_url(trace, m.request_id)) == setter_domain) ++others;
    }
    for (const auto& e : ev) {
      if (e.kind != EventKind::Redirect) continue;
      sent += url_etld1(request_url(trace, e.redirect().from_request_id)) == setter_domain;
      received += url_etld1(e.redirect().to_url) == setter_domain;
    }
  }
  put("f12", others);
  put("f13", sent);
  put("f14", received);
  put("f15", sent + received > 0 ? 1 : 0);
  return v;
}

// --- labels ---------------------------------------------------------------

std::vector<CookieLabel> reference_propagation(const std::vector<CookieLabel>& labels) {
  std::set<std::pair<std::string, std::string>> ats_groups;
  for (const auto& l : labels) {
    if (l.label == CookieClass::ATS && !l.key.setter_hash.empty()) ats_groups.emplace(l.key.name, l.key.setter_hash);
  }
  std::vector<CookieLabel> out = labels;
  for (auto& l : out) {
    if (l.label == CookieClass::Unknown && ats_groups.contains({l.key.name, l.key.setter_hash})) {
      l.label = CookieClass::ATS;
      l.provenance = Provenance::Propagated;
    }
  }
  return out;
}

std::vector<CookieLabel> random_label_corpus(std::uint64_t seed, std::size_t rows) {
  Rng rng(seed);
  const std::vector<std::string> names = {"_ga", "_gid", "_fbp", "uid", "sess", "cart"};
  const std::vector<std::string> hashes = {"", "h1", "h2", "h3", "h4"};
  std::vector<CookieLabel> out;
  for (std::size_t i = 0; i < rows; ++i) {
    CookieLabel l;
    l.key = {"site" + std::to_string(rng.below(20)) + ".com", names[rng.below(names.size())],
             hashes[rng.below(hashes.size())]};
    const auto r = rng.below(10);
    if (r < 2) {
      l.label = CookieClass::ATS;
      l.provenance = rng.chance(0.5) ? Provenance::PurposeDB : Provenance::Fused;
    } else if (r < 5) {
      l.label = CookieClass::NonATS;
      l.provenance = Provenance::FilterList;
    } else {
      l.label = CookieClass::Unknown;
      l.provenance = Provenance::Fused;
    }
    out.push_back(std::move(l));
  }
  return out;
}

// --- reference encoders ---------------------------------------------------

std::string reference_digest(std::string_view algorithm, std::string_view bytes) {
  const EVP_MD* md = EVP_get_digestbyname(std::string(algorithm).c_str());
  if (!md) throw std::invalid_argument("unknown digest " + std::string(algorithm));
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), out, &len, md, nullptr);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", out[i]);
    hex += buf;
  }
  return hex;
}

std::string reference_base64(std::string_view bytes, bool url_alphabet, bool pad) {
  const char* table = url_alphabet ? "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_"
                                   : "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  std::uint32_t buffer = 0;
  int bits = 0;
  for (unsigned char c : bytes) {
    buffer = (buffer << 8) | c;
    bits += 8;
    while (bits >= 6) {
      bits -= 6;
      out += table[(buffer >> bits) & 0x3f];
    }
  }
  if (bits > 0) out += table[(buffer << (6 - bits)) & 0x3f];
  if (pad) {
    while (out.size() % 4) out += '=';
  }
  return out;
}

std::string reference_percent(std::string_view bytes) {
  std::string out;
  char buf[4];
  for (unsigned char c : bytes) {
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
      out += static_cast<char>(c);
    } else {
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

}  // namespace testsupport
