#pragma once

// Shared helpers for unit and acceptance tests: scratch directories, a small
// on-disk fixture world and oracles that do not reuse library code.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "elkg/harmonize.hpp"
#include "elkg/rdf.hpp"
#include "elkg/series.hpp"
#include "elkg/sparql.hpp"
#include "elkg/staging.hpp"

namespace elkg::test {

/// Repository root (for config/ and tests/support/data).
std::filesystem::path source_dir();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

TimeSeries make_series(Millis start, Millis step, const std::vector<double>& watts);

/// The synonym map shipped in config/.
const harmonize::SynonymMap& shipped_synonyms();

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Fixture world
//
// Three small datasets, one per raw layout, with a pipeline.json wired to
// local knowledge-base fixtures:
//   FIXA  one-file-per-appliance, unix seconds, W, 8 s, London, submetered
//   FIXB  one-file-per-house, local time strings, kW, 60 s, Berlin, not submetered
//   FIXC  multi-house file, RFC 3339, W, 6 s, Boston, only c1 submetered

struct FixtureWorld {
  std::filesystem::path root;
  std::filesystem::path config;  // pipeline.json
  std::filesystem::path workdir;
  std::filesystem::path raw_root;
  std::filesystem::path datasets_dir;
};

/// Writes the world under `root` (which must exist). `dataset_size` sizes the
/// synthetic training set.
FixtureWorld write_fixture_world(const std::filesystem::path& root, std::size_t dataset_size = 200);

/// Local stand-ins for the Wikidata and DBpedia endpoints: settlements around
/// London, Berlin and Boston (including near misses) and the three countries.
std::string wikidata_fixture_nt();
std::string dbpedia_fixture_nt();

/// Stats of an N-Triples document computed by a line scanner written for
/// the tests (no library parsing).
struct ScanStats {
  std::size_t triples = 0;
  std::size_t predicates = 0;
  std::size_t nodes = 0;
  std::map<std::string, std::size_t> class_instances;  // class IRI -> distinct subjects
  std::size_t appliance_devices = 0;
  std::map<std::string, std::map<std::string, std::size_t>> same_as;  // class -> base -> subjects
};
ScanStats scan_ntriples(const std::string& text);

// ---------------------------------------------------------------------------
// Oracles

/// Haversine written independently of the library (mean radius 6371.0088 km).
double oracle_haversine_km(double lat1, double lon1, double lat2, double lon2);

/// Nested-loop evaluation of a parsed query over a plain triple list, with
/// filter semantics re-implemented here. Rows sorted and DISTINCT/LIMIT
/// applied like the engine.
sparql::Results naive_evaluate(const sparql::Query& q, const std::vector<rdf::Triple>& triples);

/// Profiles of a series in a fixed-offset zone, by interval arithmetic on
/// whole local hours. Each sample holds until the next one, for at most
/// `period_ms`.
struct OracleProfiles {
  std::vector<std::optional<double>> daily, weekly, monthly;  // kWh
  std::optional<double> avg_daily;                            // kWh per qualifying day
};
OracleProfiles oracle_profiles(const TimeSeries& s, Millis offset_ms, Millis period_ms,
                               double coverage_floor);

/// Random knowledge graph of up to `max_triples` triples over a small
/// vocabulary (IRIs, numeric, string and language-tagged literals) so that
/// joins and filters hit.
std::vector<rdf::Triple> random_kg(std::mt19937_64& rng, std::size_t max_triples);
/// Random query text in the supported subset over the vocabulary of
/// random_kg: 1-3 joined patterns, optional FILTERs, DISTINCT and LIMIT.
std::string random_query(std::mt19937_64& rng);

/// Staging bundle of two households in one city with three devices.
staging::StagingBundle mapping_fixture_bundle();

}  // namespace elkg::test
