#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fpats/labeling.hpp"
#include "fpats/trace.hpp"

namespace fpats {

// Behaviour families planted by the generator.
enum class Scenario {
  CookieSync,      // read info cookie, sync with vendor, store returned id, share it with partners
  Analytics,       // analytics cookies reported to the vendor's collector
  Pixel,           // advertising pixels
  IdentityGraph,   // hashed-email envelopes turned into a stored id
  Fingerprint,     // fingerprint-derived visitor id, sent hashed
  RedirectSetter,  // ad/analytics scripts whose endpoints bounce through redirects
  Functional       // first-party and service cookies (Non-ATS)
};
inline constexpr std::size_t kScenarioCount = 7;

std::string_view to_string(Scenario scenario);
Scenario scenario_from_string(std::string_view text);

struct ScenarioMix {
  // Multiplier on each vendor's base inclusion probability.
  std::array<double, kScenarioCount> weights{1, 1, 1, 1, 1, 1, 1};
  // When set, every site gets exactly the first vendor of each scenario with
  // a positive weight and no optional extras.
  bool minimal = false;

  static ScenarioMix standard() { return {}; }
  static ScenarioMix only(Scenario scenario);
};

class InvalidWeights : public Error {
 public:
  using Error::Error;
};

struct SynthOptions {
  std::uint64_t seed = 1;
  std::size_t sites = 200;
  ScenarioMix mix = ScenarioMix::standard();
  bool blocked_twin = true;
  // Tracker-side countermeasures: exfiltrate values double-base64 encoded,
  // and rotate partner endpoints to per-site random domains.
  bool encoding_substitution = false;
  bool endpoint_rotation = false;
};

struct TruthRow {
  CrawlConfig config = CrawlConfig::ThirdPartyAllowed;
  std::string site;
  std::string name;
  std::string setter_hash;
  CookieClass label = CookieClass::Unknown;
  Scenario scenario = Scenario::Functional;
  Purpose purpose = Purpose::Functional;  // what a purpose database would declare
};

struct SynthCorpus {
  std::vector<CrawlTrace> allowed;
  std::vector<CrawlTrace> blocked;  // empty unless blocked_twin
  std::string easylist;
  std::string easyprivacy;
  std::string purpose_db;  // CSV name,domain,purpose
  std::vector<TruthRow> truth;
};

// Both throw InvalidWeights for negative or all-zero scenario weights.
CrawlTrace generate_site(const SynthOptions& options, std::size_t index, CrawlConfig config,
                         std::vector<TruthRow>* truth = nullptr);
SynthCorpus generate_corpus(const SynthOptions& options, unsigned jobs = 1);

std::string serialize_truth(const std::vector<TruthRow>& truth);
std::vector<TruthRow> parse_truth(std::string_view csv_text);

// Layout: traces/allowed/*.jsonl, traces/blocked/*.jsonl, lists/easylist.txt,
// lists/easyprivacy.txt, purpose_db.csv, truth.csv.
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

// File name used for a trace inside a corpus directory.
std::string trace_file_name(const CrawlTrace& trace);

}  // namespace fpats
