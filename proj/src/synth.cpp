#include "fpats/synth.hpp"

#include <algorithm>

#include "fpats/csv.hpp"
#include "fpats/encoding.hpp"
#include "fpats/io.hpp"
#include "fpats/parallel.hpp"
#include "fpats/rng.hpp"
#include "fpats/url.hpp"

namespace fpats {

namespace {

constexpr std::array<Scenario, kScenarioCount> kScenarios = {
    Scenario::CookieSync,    Scenario::Analytics,      Scenario::Pixel,     Scenario::IdentityGraph,
    Scenario::Fingerprint, Scenario::RedirectSetter, Scenario::Functional};

}  // namespace

std::string_view to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::CookieSync: return "CookieSync";
    case Scenario::Analytics: return "Analytics";
    case Scenario::Pixel: return "Pixel";
    case Scenario::IdentityGraph: return "IdentityGraph";
    case Scenario::Fingerprint: return "Fingerprint";
    case Scenario::RedirectSetter: return "RedirectSetter";
    case Scenario::Functional: return "Functional";
  }
  return "?";
}

Scenario scenario_from_string(std::string_view text) {
  for (auto s : kScenarios) {
    if (to_string(s) == text) return s;
  }
  throw Error("unknown scenario: " + std::string(text));
}

ScenarioMix ScenarioMix::only(Scenario scenario) {
  ScenarioMix mix;
  mix.weights.fill(0);
  mix.weights[static_cast<std::size_t>(scenario)] = 1;
  mix.minimal = true;
  return mix;
}

namespace {

constexpr std::array<std::string_view, 24> kAdjectives = {
    "blue",  "quiet", "rapid", "golden", "urban",  "silver", "happy", "bright",
    "green", "north", "smart", "little", "modern", "daily",  "prime", "wild",
    "fresh", "royal", "sunny", "clever", "simple", "grand",  "lucky", "cosmic"};
constexpr std::array<std::string_view, 24> kNouns = {
    "garden", "market", "kitchen", "travel", "books",  "gadget", "studio", "news",
    "crafts", "sports", "pixel",   "harbor", "forest", "outlet", "recipe", "motors",
    "tutor",  "health", "planet",  "design", "finance", "games",  "fashion", "homes"};
constexpr std::array<std::string_view, 16> kTlds = {"com", "com", "com",    "com", "net", "org",
                                                    "io",  "co.uk", "de",   "fr",  "com.au", "jp",
                                                    "com.br", "nl", "ca",   "co.nz"};

std::string script_hash(std::string_view vendor, int version) {
  return sha256_hex("synth-script/" + std::string(vendor) + "/v" + std::to_string(version));
}

std::string json_str(std::string_view key, std::string_view value) {
  return "\"" + std::string(key) + "\":\"" + std::string(value) + "\"";
}

class SiteGen {
 public:
  SiteGen(const SynthOptions& options, std::size_t index, CrawlConfig config, std::vector<TruthRow>* truth)
      : opt_(options),
        config_(config),
        truth_(truth),
        rng_(options.seed ^ fnv1a64("site-content/" + std::to_string(index))),
        clock_(options.seed ^ fnv1a64("site-clock/" + std::to_string(index) + "/" +
                                      std::string(to_string(config)))) {
    Rng naming(options.seed ^ fnv1a64("site-name/" + std::to_string(index)));
    domain_ = std::string(kAdjectives[naming.below(kAdjectives.size())]) +
              std::string(kNouns[naming.below(kNouns.size())]) + std::to_string(index) + "." +
              std::string(kTlds[naming.below(kTlds.size())]);
    origin_ = "https://www." + domain_;
    ts_ = 1'700'000'000'000 + static_cast<std::int64_t>(clock_.below(10'000'000));
    trace_.site_url = origin_ + "/";
    trace_.site_etld1 = domain_;
    trace_.visit_id = std::string(config == CrawlConfig::ThirdPartyAllowed ? "allowed-" : "blocked-") +
                      std::to_string(index);
    trace_.crawl_config = config;
  }

  CrawlTrace run() {
    document();
    static_resources();
    if (include(Scenario::Functional, 1.0)) first_party_app();
    if (include(Scenario::Analytics, 0.65)) google_analytics();
    if (include(Scenario::Analytics, 0.25)) hotjar();
    if (include(Scenario::Analytics, 0.12)) quantcast();
    if (include(Scenario::Analytics, 0.20)) bing();
    if (include(Scenario::Pixel, 0.40)) facebook();
    if (include(Scenario::Pixel, 0.15)) tiktok();
    if (include(Scenario::CookieSync, 0.12)) {
      sync_vendor({"tracker1", "https://static.tracker1.com/t.js", "https://sync.tracker1.com/sync",
                   "infoCookie", "IDStore"});
    }
    if (include(Scenario::CookieSync, 0.25)) {
      sync_vendor({"criteo", "https://static.criteo.net/js/ld/publishertag.js",
                   "https://gum.criteo.com/sid/json?origin=onetag", "cto_pub", "cto_bundle"});
    }
    if (include(Scenario::CookieSync, 0.10)) {
      sync_vendor({"lotame", "https://tags.crwdcntrl.net/lt/c/16589/lt.min.js",
                   "https://id.crwdcntrl.net/id?tp=ltm", "_cc_dc", "_cc_id"});
    }
    if (include(Scenario::IdentityGraph, 0.12)) id5();
    if (include(Scenario::IdentityGraph, 0.10)) liveramp();
    if (include(Scenario::Fingerprint, 0.10)) fingerprint();
    if (include(Scenario::RedirectSetter, 0.25)) adsense();
    if (include(Scenario::RedirectSetter, 0.08)) yandex();
    if (include(Scenario::Functional, 0.35)) cookiebot();
    if (include(Scenario::Functional, 0.20)) zendesk();
    if (include(Scenario::Functional, 0.20)) stripe();
    return std::move(trace_);
  }

 private:
  struct SyncVendor {
    std::string name, script_url, sync_url, info_cookie, id_cookie;
  };

  // Vendor inclusion. The draw happens even for zero weights so that the
  // random stream, and with it every other vendor, is unaffected by the mix.
  bool include(Scenario scenario, double base) {
    const double w = opt_.mix.weights[static_cast<std::size_t>(scenario)];
    const bool draw = rng_.chance(std::min(1.0, base * w));
    if (!opt_.mix.minimal) return draw;
    auto& used = used_[static_cast<std::size_t>(scenario)];
    if (w <= 0 || used) return false;
    used = true;
    return true;
  }
  // Optional behaviour inside an included vendor. Minimal mixes keep only
  // the options marked as part of the minimal form.
  bool option(Scenario scenario, double base, bool in_minimal = false) {
    const double w = opt_.mix.weights[static_cast<std::size_t>(scenario)];
    const bool draw = rng_.chance(std::min(1.0, base * w));
    if (!opt_.mix.minimal) return draw;
    return in_minimal && w > 0;
  }
  bool extras() const { return !opt_.mix.minimal; }
  bool allowed() const { return config_ == CrawlConfig::ThirdPartyAllowed; }

  void tick() { ts_ += clock_.range(1, 40); }

  void push(EventKind kind, const ActorRef& actor, EventPayload payload) {
    tick();
    trace_.events.push_back({kind, ts_, actor, std::move(payload)});
  }

  std::string request(const ActorRef& actor, std::string url, std::string method = "GET",
                      ResourceType type = ResourceType::Image, HeaderList headers = {},
                      std::optional<std::string> body = std::nullopt) {
    std::string id = "r" + std::to_string(++requests_);
    push(EventKind::Request, actor,
         RequestPayload{id, std::move(url), std::move(method), type, std::move(headers), std::move(body)});
    return id;
  }

  void respond(const std::string& id, int status = 200, HeaderList headers = {},
               std::optional<std::string> body = std::nullopt) {
    push(EventKind::Response, ActorRef::request(id), ResponsePayload{id, status, std::move(headers), std::move(body)});
  }

  std::string redirect(const std::string& from, std::string to_url) {
    std::string id = "r" + std::to_string(++requests_);
    push(EventKind::Redirect, ActorRef::request(from), RedirectPayload{from, id, std::move(to_url), 302});
    return id;
  }

  ActorRef load_script(const ActorRef& creator, const std::string& url, const std::string& hash) {
    const std::string rid = request(creator, url, "GET", ResourceType::Script);
    respond(rid, 200, {{"Content-Type", "application/javascript"}});
    std::string id = "s" + std::to_string(++scripts_);
    push(EventKind::ScriptLoad, creator, ScriptLoadPayload{id, url, hash, ExecutionContext::FirstParty});
    return ActorRef::script(id);
  }

  void element(const ActorRef& creator, std::string tag) {
    push(EventKind::ElementCreate, creator,
         ElementCreatePayload{"e" + std::to_string(++elements_), std::move(tag)});
  }

  void set(const ActorRef& actor, StoreKind store, const std::string& key, const std::string& value) {
    const Channel channel = actor.is_request() ? Channel::HttpHeader : Channel::JavaScript;
    push(EventKind::StorageSet, actor, StoragePayload{store, key, value, channel, std::nullopt});
  }
  void get(const ActorRef& actor, StoreKind store, const std::string& key, const std::string& value) {
    push(EventKind::StorageGet, actor, StoragePayload{store, key, value, Channel::JavaScript, std::nullopt});
  }
  void remove(const ActorRef& actor, StoreKind store, const std::string& key) {
    push(EventKind::StorageDelete, actor,
         StoragePayload{store, key, std::nullopt, Channel::JavaScript, std::nullopt});
  }

  void plant(const std::string& name, const std::string& setter_hash, CookieClass label, Scenario scenario,
             Purpose purpose) {
    if (truth_) truth_->push_back({config_, domain_, name, setter_hash, label, scenario, purpose});
  }

  // Value as it leaves the browser. Under the encoding-substitution attack
  // trackers send a double Base64 form that single-pass matching misses.
  std::string out(const std::string& value) const {
    return opt_.encoding_substitution ? base64_encode(base64_encode(value)) : value;
  }

  // Partner endpoint, moved to a fresh per-site domain under endpoint rotation.
  std::string partner(const std::string& url) {
    const std::string token = rng_.token(8, kAlnumLower);
    if (!opt_.endpoint_rotation) return url;
    const Url parsed = parse_url(url);
    return parsed.scheme + "://e" + token + ".net" + url.substr(parsed.host_end);
  }

  std::string digits(std::size_t n) {
    std::string s = rng_.token(n, kDigits);
    if (s[0] == '0') s[0] = '1';
    return s;
  }
  std::string seconds() { return std::to_string(1'690'000'000 + rng_.below(20'000'000)); }
  std::string millis() { return seconds() + digits(3); }
  std::string uuid() {
    return rng_.token(8, kHexLower) + "-" + rng_.token(4, kHexLower) + "-4" + rng_.token(3, kHexLower) + "-a" +
           rng_.token(3, kHexLower) + "-" + rng_.token(12, kHexLower);
  }
  int version() { return rng_.chance(0.7) ? 1 : 2; }

  // --- first party -----------------------------------------------------

  void document() {
    const std::string rid = request(ActorRef::parser(), origin_ + "/", "GET", ResourceType::Document,
                                    {{"Accept", "text/html"}});
    const ActorRef doc = ActorRef::request(rid);
    std::vector<std::pair<std::string, std::string>> cookies;
    if (option(Scenario::Functional, 0.9)) cookies.emplace_back("sessionid", rng_.token(32, kAlnumLower));
    if (option(Scenario::Functional, 0.4)) {
      cookies.emplace_back("AWSALB", rng_.token(88, kAlnum));
    }
    if (option(Scenario::Functional, 0.5)) csrf_ = rng_.token(32, kAlnum);
    if (!csrf_.empty()) cookies.emplace_back("csrftoken", csrf_);
    HeaderList headers{{"Content-Type", "text/html; charset=utf-8"}};
    for (const auto& [name, value] : cookies) headers.emplace_back("Set-Cookie", name + "=" + value + "; Path=/");
    respond(rid, 200, headers);
    for (const auto& [name, value] : cookies) {
      set(doc, StoreKind::Cookie, name, value);
      plant(name, "", CookieClass::NonATS, Scenario::Functional, Purpose::StrictlyNecessary);
    }
    // Short preference cookie that never qualifies as an identifier.
    set(doc, StoreKind::Cookie, "lang", "en");
  }

  void static_resources() {
    const auto count = rng_.range(2, 6);
    for (std::int64_t i = 0; i < count; ++i) {
      const std::string asset = rng_.token(10, kAlnumLower);
      const std::string rid = request(ActorRef::parser(), origin_ + "/assets/" + asset + (i % 2 ? ".css" : ".png"),
                                      "GET", i % 2 ? ResourceType::Other : ResourceType::Image);
      respond(rid);
    }
    if (rng_.chance(0.6)) {
      const std::string rid = request(ActorRef::parser(),
                                      "https://fonts.gstatic.com/s/roboto/v30/" + rng_.token(16, kAlnum) + ".woff2",
                                      "GET", ResourceType::Other);
      respond(rid);
    }
  }

  void first_party_app() {
    const std::string hash = sha256_hex("synth-app/" + domain_);
    const ActorRef app = load_script(ActorRef::parser(), origin_ + "/static/js/app." + hash.substr(0, 8) + ".js", hash);
    if (!csrf_.empty()) {
      get(app, StoreKind::Cookie, "csrftoken", csrf_);
      const std::string rid = request(app, origin_ + "/api/cart", "POST", ResourceType::XmlHttpRequest,
                                      {{"X-CSRFToken", csrf_}, {"Content-Type", "application/json"}},
                                      "{\"item\":" + digits(5) + "}");
      respond(rid, 200, {}, "{\"ok\":true}");
    }
    if (option(Scenario::Functional, 0.6, true)) {
      const std::string token = rng_.token(32, kHexLower);
      set(app, StoreKind::Cookie, "cart_token", token);
      set(app, StoreKind::LocalStorage, "cart_token", token);
      get(app, StoreKind::Cookie, "cart_token", token);
      const std::string rid = request(app, origin_ + "/cart/update.js", "POST", ResourceType::XmlHttpRequest,
                                      {{"Content-Type", "application/json"}}, "{" + json_str("token", token) + "}");
      respond(rid, 200, {}, "{\"items\":" + digits(1) + "}");
      plant("cart_token", hash, CookieClass::NonATS, Scenario::Functional, Purpose::Functional);
    }
    if (option(Scenario::Functional, 0.5)) {
      const std::string bucket = "exp-" + digits(4) + "-variant-" + std::string(1, "abc"[rng_.below(3)]);
      set(app, StoreKind::Cookie, "ab_bucket", bucket);
      const auto reads = rng_.range(1, 2);
      for (std::int64_t i = 0; i < reads; ++i) get(app, StoreKind::Cookie, "ab_bucket", bucket);
      if (rng_.chance(0.3)) respond(request(app, origin_ + "/api/experiments?bucket=" + bucket, "GET",
                                            ResourceType::XmlHttpRequest));
      plant("ab_bucket", hash, CookieClass::NonATS, Scenario::Functional, Purpose::Functional);
    }
    if (option(Scenario::Functional, 0.5)) {
      std::string viewed = digits(5);
      const auto n = rng_.range(2, 5);
      for (std::int64_t i = 0; i < n; ++i) viewed += "," + digits(5);
      set(app, StoreKind::LocalStorage, "recently_viewed", viewed);
      get(app, StoreKind::LocalStorage, "recently_viewed", viewed);
      plant("recently_viewed", hash, CookieClass::NonATS, Scenario::Functional, Purpose::Functional);
    }
    if (option(Scenario::Functional, 0.4)) {
      const std::string prefs = percent_encode(std::string("{\"theme\":\"") + (rng_.chance(0.5) ? "dark" : "light") +
                                               "\",\"currency\":\"EUR\"}");
      set(app, StoreKind::Cookie, "ui_prefs", prefs);
      get(app, StoreKind::Cookie, "ui_prefs", prefs);
      plant("ui_prefs", hash, CookieClass::NonATS, Scenario::Functional, Purpose::Functional);
    }
    if (option(Scenario::Functional, 0.3)) {
      const std::string step = "step-shipping-" + digits(6);
      set(app, StoreKind::Cookie, "checkout_flow", step);
      get(app, StoreKind::Cookie, "checkout_flow", step);
      remove(app, StoreKind::Cookie, "checkout_flow");
      plant("checkout_flow", hash, CookieClass::NonATS, Scenario::Functional, Purpose::StrictlyNecessary);
    }
  }

  void cookiebot() {
    const std::string hash = script_hash("cookiebot", version());
    const std::string cbid = uuid();
    const ActorRef s = load_script(ActorRef::parser(), "https://consent.cookiebot.com/uc.js?cbid=" + cbid, hash);
    element(s, "div");
    const std::string consent = "{stamp:%27" + base64_encode(rng_.token(18, kAlnum)) +
                                "%27%2Cnecessary:true%2Cpreferences:true%2Cstatistics:" +
                                (rng_.chance(0.5) ? "true" : "false") + "%2Cmarketing:false%2Cver:1%2Cutc:" + millis() +
                                "%2Cregion:%27eu%27}";
    set(s, StoreKind::Cookie, "CookieConsent", consent);
    get(s, StoreKind::Cookie, "CookieConsent", consent);
    if (rng_.chance(0.5)) {
      const std::string rid = request(s, "https://consentcdn.cookiebot.com/logconsent.ashx?cbid=" + cbid, "POST",
                                      ResourceType::XmlHttpRequest, {}, "consent=" + consent);
      respond(rid);
    }
    plant("CookieConsent", hash, CookieClass::NonATS, Scenario::Functional, Purpose::StrictlyNecessary);
  }

  void zendesk() {
    const std::string hash = script_hash("zendesk", version());
    const ActorRef s = load_script(ActorRef::parser(), "https://static.zdassets.com/ekr/snippet.js?key=" + uuid(), hash);
    element(s, "iframe");
    const std::string mid = rng_.token(26, kAlnum);
    set(s, StoreKind::Cookie, "__zlcmid", mid);
    set(s, StoreKind::LocalStorage, "__zlcmid", mid);
    const std::string rid = request(s, "https://widget-mediator.zopim.com/s/W/ws/" + rng_.token(12, kAlnum) + "/c/1",
                                    "GET", ResourceType::XmlHttpRequest, {{"X-Zopim-Mid", mid}});
    respond(rid);
    plant("__zlcmid", hash, CookieClass::NonATS, Scenario::Functional, Purpose::Functional);
  }

  void stripe() {
    const std::string hash = script_hash("stripe", version());
    const ActorRef s = load_script(ActorRef::parser(), "https://js.stripe.com/v3/", hash);
    element(s, "iframe");
    const std::string mid = uuid() + rng_.token(6, kHexLower);
    set(s, StoreKind::Cookie, "__stripe_mid", mid);
    get(s, StoreKind::Cookie, "__stripe_mid", mid);
    const std::string rid = request(s, "https://m.stripe.com/6", "POST", ResourceType::XmlHttpRequest,
                                    {{"Content-Type", "text/plain"}}, base64_encode("{\"muid\":\"" + mid + "\"}"));
    respond(rid, 200, {}, "{\"guid\":\"" + uuid() + "\"}");
    plant("__stripe_mid", hash, CookieClass::NonATS, Scenario::Functional, Purpose::StrictlyNecessary);
  }

  // --- analytics -------------------------------------------------------

  void google_analytics() {
    ActorRef creator = ActorRef::parser();
    if (extras() && rng_.chance(0.5)) {
      creator = load_script(ActorRef::parser(),
                            "https://www.googletagmanager.com/gtm.js?id=GTM-" + rng_.token(6, "ABCDEFGHJKLMNPQRSTUVWXYZ23456789"),
                            script_hash("gtm", version()));
      element(creator, "script");
    }
    const std::string hash = script_hash("google-analytics", version());
    const ActorRef ga = load_script(creator, "https://www.google-analytics.com/analytics.js", hash);
    const std::string tid = "UA-" + digits(8) + "-1";
    const std::string client = "GA1.2." + digits(9) + "." + seconds();
    const std::string gid = "GA1.2." + digits(9) + "." + seconds();
    set(ga, StoreKind::Cookie, "_ga", client);
    set(ga, StoreKind::Cookie, "_gid", gid);
    set(ga, StoreKind::Cookie, "_gat", "1");
    const bool send_gid = rng_.chance(0.85);
    const auto hits = extras() ? rng_.range(1, 3) : 1;
    for (std::int64_t i = 0; i < hits; ++i) {
      get(ga, StoreKind::Cookie, "_ga", client);
      std::string url = "https://www.google-analytics.com/collect?v=1&_v=j96&tid=" + tid + "&_ga=" + out(client) +
                        "&t=" + (i == 0 ? "pageview" : "event");
      if (send_gid) url += "&_gid=" + out(gid);
      respond(request(ga, url));
    }
    if (extras() && rng_.chance(0.3)) {
      respond(request(ga, "https://stats.g.doubleclick.net/j/collect?t=dc&aip=1&_r=3&v=1&tid=" + tid + "&cid=" +
                              out(client) + "&jid=" + digits(9)));
    }
    plant("_ga", hash, CookieClass::ATS, Scenario::Analytics, Purpose::Analytics);
    plant("_gid", hash, CookieClass::ATS, Scenario::Analytics, Purpose::Analytics);
  }

  void hotjar() {
    const std::string site_id = digits(7);
    const std::string hash = script_hash("hotjar", version());
    const ActorRef s = load_script(ActorRef::parser(), "https://static.hotjar.com/c/hotjar-" + site_id + ".js?sv=6", hash);
    const std::string id = uuid();
    set(s, StoreKind::Cookie, "_hjid", id);
    set(s, StoreKind::LocalStorage, "_hjid", id);
    get(s, StoreKind::Cookie, "_hjid", id);
    if (rng_.chance(0.8)) {
      const std::string rid = request(s, "https://in.hotjar.com/api/v2/client/sites/" + site_id + "/visit-data?sv=7",
                                      "POST", ResourceType::XmlHttpRequest, {{"Content-Type", "application/json"}},
                                      "{" + json_str("user_id", out(id)) + ",\"is_vpv\":false}");
      respond(rid, 200, {}, "{\"success\":true}");
    }
    plant("_hjid", hash, CookieClass::ATS, Scenario::Analytics, Purpose::Analytics);
  }

  void quantcast() {
    const std::string hash = script_hash("quantcast", version());
    const ActorRef s = load_script(ActorRef::parser(), "https://secure.quantserve.com/quant.js", hash);
    const std::string qca = "P0-" + digits(10) + "-" + millis();
    set(s, StoreKind::Cookie, "__qca", qca);
    set(s, StoreKind::LocalStorage, "__qca", qca);
    set(s, StoreKind::Cookie, "_dlt", "1");
    get(s, StoreKind::Cookie, "__qca", qca);
    respond(request(s, "https://pixel.quantserve.com/pixel;r=" + digits(9) + ";a=p-" + rng_.token(13, kAlnum) +
                           ";fpan=0;fpa=" + out(qca) + ";ns=0;ce=1"));
    plant("__qca", hash, CookieClass::ATS, Scenario::Analytics, Purpose::AdvertisingTracking);
  }

  void bing() {
    const std::string hash = script_hash("bing-uet", version());
    const ActorRef s = load_script(ActorRef::parser(), "https://bat.bing.com/bat.js", hash);
    const std::string sid = rng_.token(32, kHexLower);
    const std::string vid = rng_.token(32, kHexLower);
    set(s, StoreKind::Cookie, "_uetsid", sid);
    set(s, StoreKind::LocalStorage, "_uetsid", sid);
    set(s, StoreKind::Cookie, "_uetvid", vid);
    set(s, StoreKind::LocalStorage, "_uetvid", vid);
    respond(request(s, "https://bat.bing.com/action/0?ti=" + digits(8) + "&Ver=2&mid=" + uuid() + "&sid=" + out(sid) +
                           "&vid=" + out(vid) + "&evt=pageLoad"));
    plant("_uetsid", hash, CookieClass::ATS, Scenario::Analytics, Purpose::AdvertisingTracking);
    plant("_uetvid", hash, CookieClass::ATS, Scenario::Analytics, Purpose::AdvertisingTracking);
  }

  // --- pixels ----------------------------------------------------------

  void facebook() {
    const std::string hash = script_hash("facebook-pixel", version());
    const ActorRef s = load_script(ActorRef::parser(), "https://connect.facebook.net/en_US/fbevents.js", hash);
    const std::string pixel = digits(15);
    std::optional<ActorRef> config;
    if (extras()) {
      config = load_script(s, "https://connect.facebook.net/signals/config/" + pixel + "?v=2.9.107",
                           script_hash("facebook-config", 1));
    }
    const std::string fbp = "fb.1." + millis() + "." + digits(10);
    set(s, StoreKind::Cookie, "_fbp", fbp);
    if (config) get(*config, StoreKind::Cookie, "_fbp", fbp);
    const auto hits = extras() ? rng_.range(1, 2) : 1;
    for (std::int64_t i = 0; i < hits; ++i) {
      get(s, StoreKind::Cookie, "_fbp", fbp);
      respond(request(s, "https://www.facebook.com/tr/?id=" + pixel + "&ev=" + (i == 0 ? "PageView" : "ViewContent") +
                             "&dl=" + percent_encode(origin_ + "/") + "&fbp=" + out(fbp)));
    }
    plant("_fbp", hash, CookieClass::ATS, Scenario::Pixel, Purpose::AdvertisingTracking);
  }

  void tiktok() {
    const std::string hash = script_hash("tiktok-pixel", version());
    const ActorRef s = load_script(ActorRef::parser(),
                                   "https://analytics.tiktok.com/i18n/pixel/events.js?sdkid=" + rng_.token(20, kAlnum), hash);
    const std::string ttp = rng_.token(27, kAlnum);
    set(s, StoreKind::Cookie, "_ttp", ttp);
    set(s, StoreKind::LocalStorage, "_ttp", ttp);
    const std::string rid = request(s, "https://analytics.tiktok.com/api/v2/pixel", "POST", ResourceType::XmlHttpRequest,
                                    {{"Content-Type", "application/json"}},
                                    "{\"event\":\"Pageview\",\"context\":{\"user\":{" + json_str("anonymous_id", out(ttp)) + "}}}");
    respond(rid, 200, {}, "{\"code\":0}");
    plant("_ttp", hash, CookieClass::ATS, Scenario::Pixel, Purpose::AdvertisingTracking);
  }

  // --- cookie syncing ----------------------------------------------------

  void sync_vendor(const SyncVendor& v) {
    const std::string hash = script_hash(v.name, version());
    const ActorRef s = load_script(ActorRef::parser(), v.script_url, hash);
    const std::string info = "pub-" + digits(4) + ".sig-" + rng_.token(12, kHexLower);
    const std::string uid = v.name == "tracker1" ? "trackeruid" + digits(6) : rng_.token(24, kAlnum);
    set(s, StoreKind::Cookie, v.info_cookie, info);
    get(s, StoreKind::Cookie, v.info_cookie, info);
    const std::string sync = request(s, v.sync_url, "POST", ResourceType::XmlHttpRequest,
                                     {{"Content-Type", "application/x-www-form-urlencoded"}}, "info=" + out(info));
    respond(sync, 200, {{"Content-Type", "application/json"}}, "{" + json_str("uid", uid) + "}");
    set(s, StoreKind::Cookie, v.id_cookie, uid);
    set(s, StoreKind::LocalStorage, v.id_cookie, uid);
    get(s, StoreKind::Cookie, v.id_cookie, uid);
    if (!allowed()) {
      // Without third-party cookies the vendor keeps a first-party backup id.
      set(s, StoreKind::Cookie, v.id_cookie + "_fp", uid);
      plant(v.id_cookie + "_fp", hash, CookieClass::ATS, Scenario::CookieSync, Purpose::AdvertisingTracking);
    }

    // Partners receive the id in a URL, a header or a body.
    struct Partner {
      std::string url;
      int how;  // 0 query, 1 header, 2 body (Base64)
    };
    std::vector<Partner> partners;
    if (v.name == "tracker1") {
      partners = {{"https://px.tracker2.com/collect?uid=", 0}, {"https://api.tracker3.com/event", 1}};
    } else {
      const std::vector<Partner> pool = {{"https://x.bidswitch.net/sync?ssp=" + v.name + "&user_id=", 0},
                                         {"https://ib.adnxs.com/getuid?partner=" + v.name, 1},
                                         {"https://pixel.rubiconproject.com/exchange/sync.php?p=" + v.name, 2},
                                         {"https://ads.pubmatic.com/AdServer/js/user_sync.html?p=" + digits(5) + "&uid=", 0}};
      const auto n = extras() ? rng_.range(1, 3) : 2;
      const auto start = rng_.below(pool.size());
      for (std::int64_t i = 0; i < n; ++i) partners.push_back(pool[(start + static_cast<std::size_t>(i)) % pool.size()]);
    }
    for (const auto& p : partners) {
      const std::string url = partner(p.url);
      // Cross-site syncs rely on third-party cookies and are not sent when blocked.
      if (!allowed() && p.how == 0) continue;
      std::string rid;
      if (p.how == 0) {
        rid = request(s, url + out(uid));
      } else if (p.how == 1) {
        rid = request(s, url, "GET", ResourceType::XmlHttpRequest, {{"X-User-Id", out(uid)}});
      } else {
        rid = request(s, url, "POST", ResourceType::XmlHttpRequest, {}, "uid=" + base64_encode(out(uid)));
      }
      respond(rid);
    }
    plant(v.info_cookie, hash, CookieClass::ATS, Scenario::CookieSync, Purpose::AdvertisingTracking);
    plant(v.id_cookie, hash, CookieClass::ATS, Scenario::CookieSync, Purpose::AdvertisingTracking);
  }

  // --- identity graphs ---------------------------------------------------

  void id5() {
    const std::string hash = script_hash("id5", version());
    const ActorRef s = load_script(ActorRef::parser(), "https://cdn.id5-sync.com/api/1.0/id5-api.js", hash);
    const std::string hashed_email = sha256_hex("user" + digits(6) + "@mail.example");
    const std::string rid = request(s, "https://id5-sync.com/g/v2/" + digits(3) + ".json", "POST",
                                    ResourceType::XmlHttpRequest, {{"Content-Type", "application/json"}},
                                    "{" + json_str("pd", base64_encode("1=" + hashed_email)) + "}");
    const std::string uid = "ID5*" + base64_encode(rng_.token(30, kAlnum), true, false);
    respond(rid, 200, {}, "{" + json_str("universal_uid", uid) + ",\"cascade_needed\":false}");
    set(s, StoreKind::Cookie, "id5id", uid);
    set(s, StoreKind::LocalStorage, "id5id", uid);
    get(s, StoreKind::LocalStorage, "id5id", uid);
    const std::string match = partner("https://match.adsrvr.org/track/cmf/generic?ttd_pid=id5&ttd_tpi=1&ttd_puid=");
    if (allowed()) respond(request(s, match + base64_encode(out(uid), true, false)));
    respond(request(s, partner("https://ib.adnxs.com/ut/v3/prebid"), "POST", ResourceType::XmlHttpRequest, {},
                    "{\"eids\":[{\"source\":\"id5-sync.com\"," + json_str("id", out(uid)) + "}]}"));
    plant("id5id", hash, CookieClass::ATS, Scenario::IdentityGraph, Purpose::AdvertisingTracking);
  }

  void liveramp() {
    const std::string hash = script_hash("liveramp", version());
    const ActorRef s = load_script(ActorRef::parser(), "https://ats.rlcdn.com/ats.js", hash);
    const std::string hashed_email = sha256_hex("reader" + digits(6) + "@mail.example");
    const std::string rid = request(s, "https://api.rlcdn.com/api/identity/envelope?pid=" + digits(4), "GET",
                                    ResourceType::XmlHttpRequest, {{"X-Hashed-Email", hashed_email}});
    const std::string envelope = base64_encode(rng_.token(60, kAlnum) + "?" + rng_.token(20, kAlnum));
    respond(rid, 200, {}, "{" + json_str("envelope", envelope) + "}");
    set(s, StoreKind::Cookie, "_lr_env", envelope);
    set(s, StoreKind::LocalStorage, "_lr_env", envelope);
    respond(request(s, partner("https://htlb.casalemedia.com/cygnus?s=") + digits(6) + "&lr=" + percent_encode(out(envelope))));
    plant("_lr_env", hash, CookieClass::ATS, Scenario::IdentityGraph, Purpose::AdvertisingTracking);
  }

  void fingerprint() {
    const std::string key = rng_.token(20, kAlnum);
    const std::string hash = script_hash("fingerprintjs", version());
    const ActorRef s = load_script(ActorRef::parser(), "https://fpnpmcdn.net/v3/" + key + "/loader_v3.8.js", hash);
    const std::string visitor = rng_.token(20, kAlnum);
    set(s, StoreKind::Cookie, "_vid_t", visitor);
    set(s, StoreKind::LocalStorage, "_vid_t", visitor);
    const std::string rid = request(s, "https://api.fpjs.io/?ci=js/3.8.1", "POST", ResourceType::XmlHttpRequest,
                                    {{"X-Visitor-Hash", md5_hex(out(visitor))}}, "{\"c\":\"" + key + "\"}");
    respond(rid, 200, {}, "{\"v\":\"3.8.1\"}");
    if (rng_.chance(0.5)) {
      respond(request(s, partner("https://sync.fpmatch.net/v1/match?vh=") + sha1_hex(out(visitor))));
    }
    plant("_vid_t", hash, CookieClass::ATS, Scenario::Fingerprint, Purpose::AdvertisingTracking);
  }

  // --- redirect-heavy setters --------------------------------------------

  void adsense() {
    const std::string hash = script_hash("adsense", version());
    const std::string client = "ca-pub-" + digits(16);
    const ActorRef s = load_script(ActorRef::parser(),
                                   "https://pagead2.googlesyndication.com/pagead/js/adsbygoogle.js?client=" + client, hash);
    element(s, "ins");
    element(s, "iframe");
    const std::string gads = "ID=" + rng_.token(16, kHexLower) + ":T=" + seconds() + ":RT=" + seconds() +
                             ":S=ALNI_" + rng_.token(28, kAlnum);
    set(s, StoreKind::Cookie, "__gads", gads);
    get(s, StoreKind::Cookie, "__gads", gads);
    respond(request(s, "https://googleads.g.doubleclick.net/pagead/ads?client=" + client + "&cookie=" +
                           percent_encode(out(gads)) + "&dt=" + millis()));
    const std::string start = request(s, "https://pagead2.googlesyndication.com/getconfig/sodar?sv=200&tid=gda");
    const std::string hop = redirect(start, "https://googleads.g.doubleclick.net/pagead/id?slot=" + digits(4));
    const std::string last = redirect(hop, "https://pagead2.googlesyndication.com/pagead/sodar?id=sodar2&v=225");
    respond(last, 204);
    plant("__gads", hash, CookieClass::ATS, Scenario::RedirectSetter, Purpose::AdvertisingTracking);
  }

  void yandex() {
    const std::string hash = script_hash("yandex-metrika", version());
    const ActorRef s = load_script(ActorRef::parser(), "https://mc.yandex.ru/metrika/tag.js", hash);
    const std::string counter = digits(8);
    const std::string uid = seconds() + digits(9);
    set(s, StoreKind::Cookie, "_ym_uid", uid);
    set(s, StoreKind::LocalStorage, "_ym_uid", uid);
    get(s, StoreKind::Cookie, "_ym_uid", uid);
    const std::string first = request(s, "https://mc.yandex.ru/watch/" + counter + "?page-url=" +
                                             percent_encode(origin_ + "/") + "&_ym_uid=" + out(uid));
    const std::string second = redirect(first, "https://mc.yandex.com/watch/" + counter + "?_ym_uid=" + out(uid) + "&redirnss=1");
    const std::string third = redirect(second, "https://mc.yandex.ru/sync_cookie_image_check?redirnss=1");
    respond(third, 200, {{"Content-Type", "image/gif"}});
    plant("_ym_uid", hash, CookieClass::ATS, Scenario::RedirectSetter, Purpose::Analytics);
  }

  const SynthOptions& opt_;
  CrawlConfig config_;
  std::vector<TruthRow>* truth_;
  Rng rng_;
  Rng clock_;
  std::string domain_;
  std::string origin_;
  std::string csrf_;
  std::int64_t ts_ = 0;
  std::size_t requests_ = 0;
  std::size_t scripts_ = 0;
  std::size_t elements_ = 0;
  std::array<bool, kScenarioCount> used_{};
  CrawlTrace trace_;
};

constexpr std::string_view kEasyList = R"([Adblock Plus 2.0]
! Title: EasyList (synthetic corpus snapshot)
! Expires: 4 days
!
! *** general advert blocking ***
/pagead/js/adsbygoogle.js$script
/banner/*/ad_
|https://ad.
! *** third-party advert servers ***
||doubleclick.net^
||googlesyndication.com^
||googleadservices.com^
||criteo.net^$third-party
||criteo.com^$third-party
||adnxs.com^
||bidswitch.net^
||pubmatic.com^
||adsrvr.org^
||rubiconproject.com^
||casalemedia.com^
||tracker1.com^
||tracker2.com^$third-party
||tracker3.com^
||crwdcntrl.net^
||id5-sync.com^
||rlcdn.com^
||ads.example.net^$popup
@@||pagead2.googlesyndication.com/pagead/js/adsbygoogle.js$domain=adsense-partner.org
! *** element hiding ***
##.ad-banner
###sidebar-ads
example.com##.sponsored
)";

constexpr std::string_view kEasyPrivacy = R"([Adblock Plus 2.0]
! Title: EasyPrivacy (synthetic corpus snapshot)
! Expires: 4 days
!
/gtm.js$script
/collect?v=1&
||google-analytics.com^
||googletagmanager.com^$third-party
||stats.g.doubleclick.net^
||connect.facebook.net^$third-party
||facebook.com/tr/
||analytics.tiktok.com^
||bat.bing.com^
||quantserve.com^
||hotjar.com^
||mc.yandex.ru^
||mc.yandex.com^
||fpnpmcdn.net^
||fpjs.io^
||fpmatch.net^
||zopim.com^$csp=script-src 'self'
@@||static.zdassets.com^$script
/^https?:\/\/[a-z]+\.tracking-cdn\./
)";

}  // namespace

namespace {

void check_weights(const ScenarioMix& mix) {
  if (std::any_of(mix.weights.begin(), mix.weights.end(), [](double w) { return !(w >= 0); }))
    throw InvalidWeights("scenario weights must be non-negative");
  if (std::all_of(mix.weights.begin(), mix.weights.end(), [](double w) { return w == 0; }))
    throw InvalidWeights("at least one scenario weight must be positive");
}

}  // namespace

CrawlTrace generate_site(const SynthOptions& options, std::size_t index, CrawlConfig config,
                         std::vector<TruthRow>* truth) {
  check_weights(options.mix);
  return SiteGen(options, index, config, truth).run();
}

SynthCorpus generate_corpus(const SynthOptions& options, unsigned jobs) {
  check_weights(options.mix);
  SynthCorpus corpus;
  const std::size_t n = options.sites;
  std::vector<std::vector<TruthRow>> allowed_truth(n), blocked_truth(n);
  corpus.allowed.resize(n);
  if (options.blocked_twin) corpus.blocked.resize(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    corpus.allowed[i] = generate_site(options, i, CrawlConfig::ThirdPartyAllowed, &allowed_truth[i]);
    if (options.blocked_twin) {
      corpus.blocked[i] = generate_site(options, i, CrawlConfig::ThirdPartyBlocked, &blocked_truth[i]);
    }
  });
  for (auto& rows : allowed_truth) corpus.truth.insert(corpus.truth.end(), rows.begin(), rows.end());
  for (auto& rows : blocked_truth) corpus.truth.insert(corpus.truth.end(), rows.begin(), rows.end());

  // The purpose database covers a fraction of the planted cookies, as a
  // crowd-sourced catalogue would.
  corpus.purpose_db = "name,domain,purpose\n";
  for (const auto& row : corpus.truth) {
    if (row.config != CrawlConfig::ThirdPartyAllowed) continue;
    Rng coverage(options.seed ^ fnv1a64("purpose/" + row.site + "/" + row.name));
    const double p = row.label == CookieClass::ATS ? 0.35 : 0.3;
    if (!coverage.chance(p)) continue;
    corpus.purpose_db += csv::join_row({row.name, row.site, std::string(to_string(row.purpose))}) + "\n";
  }
  corpus.easylist = std::string(kEasyList);
  corpus.easyprivacy = std::string(kEasyPrivacy);
  return corpus;
}

std::string serialize_truth(const std::vector<TruthRow>& truth) {
  std::string out = "config,site,name,setter_hash,label,scenario,purpose\n";
  for (const auto& t : truth) {
    out += csv::join_row({std::string(to_string(t.config)), t.site, t.name, t.setter_hash,
                          std::string(to_string(t.label)), std::string(to_string(t.scenario)),
                          std::string(to_string(t.purpose))}) +
           "\n";
  }
  return out;
}

std::vector<TruthRow> parse_truth(std::string_view csv_text) {
  std::vector<TruthRow> truth;
  const auto rows = csv::parse(csv_text);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 7) throw Error("truth row " + std::to_string(i + 1) + ": expected 7 fields");
    TruthRow t;
    t.config = r[0] == to_string(CrawlConfig::ThirdPartyBlocked) ? CrawlConfig::ThirdPartyBlocked
                                                                 : CrawlConfig::ThirdPartyAllowed;
    t.site = r[1];
    t.name = r[2];
    t.setter_hash = r[3];
    t.label = cookie_class_from_string(r[4]);
    t.scenario = scenario_from_string(r[5]);
    t.purpose = purpose_from_string(r[6]);
    truth.push_back(std::move(t));
  }
  return truth;
}

std::string trace_file_name(const CrawlTrace& trace) {
  return (trace.site_etld1.empty() ? trace.visit_id : trace.site_etld1) + ".jsonl";
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  for (const auto& t : corpus.allowed) save_trace(dir / "traces" / "allowed" / trace_file_name(t), t);
  for (const auto& t : corpus.blocked) save_trace(dir / "traces" / "blocked" / trace_file_name(t), t);
  write_file(dir / "lists" / "easylist.txt", corpus.easylist);
  write_file(dir / "lists" / "easyprivacy.txt", corpus.easyprivacy);
  write_file(dir / "purpose_db.csv", corpus.purpose_db);
  write_file(dir / "truth.csv", serialize_truth(corpus.truth));
}

}  // namespace fpats
