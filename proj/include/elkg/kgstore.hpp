#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "elkg/rdf.hpp"
#include "elkg/sparql_client.hpp"
#include "elkg/triple_store.hpp"

namespace elkg::kgstore {

// ---------------------------------------------------------------------------
// Vocabulary shared by the mapping file, linker and prediction ingestion.

namespace vocab {
std::string house();       // schema:House
std::string place();       // schema:Place
std::string city();        // schema:City
std::string country();     // schema:Country
std::string continent();   // schema:Continent
std::string device();      // saref:Device
std::string name();        // schema:name
std::string installed_in();   // voc:installedIn (device -> house)
std::string is_submetered();  // voc:isSubmetered
std::string is_predicted();   // voc:isPredicted
std::string is_aggregate();   // voc:isAggregate
}  // namespace vocab

/// IRIs of pipeline resources under a configurable base.
struct ResourceIris {
  std::string base = std::string(rdf::ns::res);

  std::string household(const std::string& dataset, const std::string& household) const;
  std::string device(const std::string& dataset, const std::string& household,
                     const std::string& device) const;
  std::string city(const std::string& country, const std::string& city) const;
  std::string country(const std::string& country) const;
};

// ---------------------------------------------------------------------------
// Statistics

/// External knowledge bases recognised in owl:sameAs objects, by IRI prefix.
std::map<std::string, std::string> default_external_bases();

struct StatsReport {
  std::size_t total_triples = 0;
  std::size_t unique_predicates = 0;
  std::size_t nodes = 0;           // distinct subjects and objects
  std::size_t unique_classes = 0;  // distinct rdf:type objects
  std::map<std::string, std::size_t> class_instances;  // class IRI -> instances
  std::size_t appliance_devices = 0;  // devices not flagged voc:isAggregate true
  /// class IRI -> external base name -> subjects of that class linked to it.
  std::map<std::string, std::map<std::string, std::size_t>> same_as;

  bool operator==(const StatsReport&) const = default;
};

/// class_instances always lists the five pipeline classes (zero when absent)
/// plus any other class present.
StatsReport kg_stats(const TripleStore& store,
                     const std::map<std::string, std::string>& external_bases =
                         default_external_bases());

nlohmann::json to_json(const StatsReport& r);

// ---------------------------------------------------------------------------
// Prediction ingestion

struct Predictions {
  std::string dataset;
  std::string household;
  std::string model_version;
  double threshold = 0.3;
  std::map<std::string, double> probabilities;
  std::vector<std::string> present;
};

/// Validates the predictions JSON schema: required keys and types,
/// probabilities and threshold in [0,1], present names unique and, when
/// probabilities are given, exactly the classes above the threshold. When
/// `classes` is given every name must belong to it. Throws FormatError.
Predictions predictions_from_json(const nlohmann::json& j,
                                  const std::vector<std::string>* classes = nullptr);
nlohmann::json to_json(const Predictions& p);

/// Triples a prediction contributes: per present appliance a saref:Device
/// with name, installedIn and isPredicted true; plus isSubmetered false on
/// the household.
std::vector<rdf::Triple> prediction_triples(const Predictions& p, const ResourceIris& iris = {});

struct IngestReport {
  std::string household_iri;
  std::size_t devices = 0;
  std::size_t inserted = 0;  // triples new to the store
};

/// Refuses (IntegrityError) households that are not schema:House instances
/// in the store, households carrying voc:isSubmetered true, and households
/// listed in `submetered_guard` (ground truth from the dataset descriptors).
/// Idempotent.
IngestReport ingest_predictions(const Predictions& p, TripleStore& store,
                                const std::set<std::string>& submetered_guard = {},
                                const ResourceIris& iris = {});

// ---------------------------------------------------------------------------
// Remote store

sparql::Results remote_query(sparql::SparqlClient& client, const std::string& query);

/// INSERT DATA updates of at most `batch` triples each. Safe to repeat.
void remote_insert(sparql::SparqlClient& client, const std::vector<rdf::Triple>& triples,
                   std::size_t batch = 1000);

/// The INSERT DATA text for one batch.
std::string insert_data_update(const std::vector<rdf::Triple>& triples);

}  // namespace elkg::kgstore
