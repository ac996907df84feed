#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fpats/features.hpp"
#include "fpats/graph.hpp"
#include "fpats/labeling.hpp"
#include "fpats/trace.hpp"

namespace testsupport {

namespace fs = std::filesystem;

fs::path data_dir();

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Relative path -> file bytes for every regular file under dir.
std::map<std::string, std::string> snapshot_tree(const fs::path& dir);

// Appends events with increasing timestamps.
class TraceBuilder {
 public:
  explicit TraceBuilder(std::string site_url,
                        fpats::CrawlConfig config = fpats::CrawlConfig::ThirdPartyAllowed);

  fpats::ActorRef script(const std::string& id, const std::string& url, const std::string& hash,
                         fpats::ActorRef creator = fpats::ActorRef::parser());
  void element(const std::string& id, const std::string& tag, fpats::ActorRef creator);
  void request(const std::string& id, const fpats::ActorRef& actor, const std::string& url,
               fpats::ResourceType type = fpats::ResourceType::Image, fpats::HeaderList headers = {},
               std::optional<std::string> body = std::nullopt, const std::string& method = "GET");
  void response(const std::string& id, fpats::HeaderList headers = {},
                std::optional<std::string> body = std::nullopt);
  void redirect(const std::string& from, const std::string& id, const std::string& url);
  void set(const fpats::ActorRef& actor, fpats::StoreKind store, const std::string& key, const std::string& value);
  void get(const fpats::ActorRef& actor, fpats::StoreKind store, const std::string& key,
           std::optional<std::string> value);
  void remove(const fpats::ActorRef& actor, fpats::StoreKind store, const std::string& key);

  const fpats::CrawlTrace& trace() const { return trace_; }

 private:
  void push(fpats::EventKind kind, fpats::ActorRef actor, fpats::EventPayload payload);
  fpats::CrawlTrace trace_;
  std::int64_t ts_ = 1000;
};

// Valid random trace with up to max_events events. Values are reused across
// storage writes, request URLs/headers/bodies and responses so that flows,
// redirects and timestamp ties all occur.
fpats::CrawlTrace random_trace(std::uint64_t seed, std::size_t max_events);

// Canonical text signatures of graph content, independent of node numbering.
struct GraphSignature {
  std::multiset<std::string> nodes;
  std::multiset<std::string> edges;
  bool operator==(const GraphSignature&) const = default;
};
GraphSignature signature_of(const fpats::PageGraph& graph);

// Builds the signature directly from the trace by repeated linear scans.
GraphSignature reference_graph_signature(const fpats::CrawlTrace& trace);

// Feature vector of storage key `name` recomputed from the raw trace and its
// flows, without going through the graph.
fpats::FeatureVector reference_features(const fpats::CrawlTrace& trace, const std::string& name);

// Propagation recomputed by grouping on (name, setter hash).
std::vector<fpats::CookieLabel> reference_propagation(const std::vector<fpats::CookieLabel>& labels);
std::vector<fpats::CookieLabel> random_label_corpus(std::uint64_t seed, std::size_t rows);

// Digest hex via the OpenSSL EVP interface, and a textbook Base64 encoder.
std::string reference_digest(std::string_view algorithm, std::string_view bytes);
std::string reference_base64(std::string_view bytes, bool url_alphabet, bool pad);
std::string reference_percent(std::string_view bytes);

}  // namespace testsupport
