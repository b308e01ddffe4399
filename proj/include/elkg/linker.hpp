#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "elkg/rdf.hpp"
#include "elkg/sparql.hpp"
#include "elkg/sparql_client.hpp"
#include "elkg/triple_store.hpp"

namespace elkg::linker {

/// Something that answers SELECT queries: a remote endpoint or, in offline
/// fixture mode, a local store.
class QueryEndpoint {
 public:
  virtual ~QueryEndpoint() = default;
  virtual sparql::Results select(const std::string& query) = 0;
};

class RemoteEndpoint : public QueryEndpoint {
 public:
  explicit RemoteEndpoint(sparql::SparqlClient& client) : client_(client) {}
  sparql::Results select(const std::string& query) override { return client_.select(query); }

 private:
  sparql::SparqlClient& client_;
};

class LocalEndpoint : public QueryEndpoint {
 public:
  explicit LocalEndpoint(kgstore::TripleStore store) : store_(std::move(store)) {}
  sparql::Results select(const std::string& query) override {
    return sparql::bgp_query(query, store_);
  }

 private:
  kgstore::TripleStore store_;
};

/// Query templates for one knowledge base. Placeholders: `{name}` (escaped
/// for a string literal), `{lat_min}`, `{lat_max}`, `{lon_min}`, `{lon_max}`.
/// The country query binds ?item; the settlement query binds ?item, ?label,
/// ?lat and ?lon.
struct KnowledgeBase {
  std::string name;  // "wikidata", "dbpedia"
  std::string country_query;
  std::string settlement_query;
};

struct LinkerConfig {
  double radius_km = 50.0;
  double threshold = 90.0;  // similarity on a 0-100 scale
  std::vector<KnowledgeBase> knowledge_bases;

  static LinkerConfig from_json(const nlohmann::json& j);
  static LinkerConfig load(const std::filesystem::path& path);
};

struct Settlement {
  std::string label;
  std::string iri;
  double lat = 0.0;
  double lon = 0.0;
  bool operator==(const Settlement&) const = default;
};

enum class Method { exact_country, exact_city, fuzzy_city, nearest_fallback, no_match };
std::string_view to_string(Method m);

struct LinkResult {
  std::string local_iri;
  std::string kb;
  std::optional<std::string> external_iri;  // absent for no_match
  Method method = Method::no_match;
  std::optional<double> score;  // similarity 0-100, or distance km for nearest_fallback
  std::string label;            // matched external label
  bool ambiguous = false;       // several equally good external entities
  bool operator==(const LinkResult&) const = default;
};

/// Lowercase, non-alphanumerics to spaces, collapse whitespace.
std::string process_label(std::string_view s);

/// Token-set ratio on processed labels with an indel-normalized similarity
/// (100 * (1 - indel_distance / total_length)); 0 when either side is empty.
double token_set_ratio(std::string_view a, std::string_view b);

/// Insertions plus deletions turning a into b (over Unicode code points).
std::size_t indel_distance(std::string_view a, std::string_view b);

/// Fill a template; `{name}` receives SPARQL string escaping, coordinates
/// shortest round-trip decimals.
std::string fill_template(const std::string& tpl, const std::map<std::string, std::string>& values);
std::string escape_sparql_string(std::string_view s);

LinkResult link_country(const std::string& local_iri, const std::string& name,
                        QueryEndpoint& endpoint, const KnowledgeBase& kb);

/// Bounding-box query, then exact haversine filter; distance ascending, IRI
/// then label tiebreak.
std::vector<Settlement> settlements_within(double lat, double lon, double radius_km,
                                           QueryEndpoint& endpoint, const KnowledgeBase& kb);

struct CityMatch {
  std::optional<Settlement> settlement;
  Method method = Method::no_match;
  std::optional<double> score;
  bool ambiguous = false;
};

/// Index selection shared by match_city: the best score when it reaches the
/// threshold (distance, then position, breaks ties), else the nearest.
/// `scores` may be empty (no name): nearest wins.
struct Choice {
  std::size_t index;
  bool by_similarity;
};
std::optional<Choice> select_candidate(const std::vector<double>& scores,
                                       const std::vector<double>& distances_km, double threshold);

CityMatch match_city(const std::optional<std::string>& city_name, double lat, double lon,
                     const std::vector<Settlement>& candidates, double threshold = 90.0);

/// One owl:sameAs per link with an external IRI.
std::vector<rdf::Triple> emit_sameas(const std::vector<LinkResult>& links);

nlohmann::json link_report(const std::vector<LinkResult>& links);

}  // namespace elkg::linker
