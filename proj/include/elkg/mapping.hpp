#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "elkg/rdf.hpp"
#include "elkg/staging.hpp"

namespace elkg::rdfmap {

/// `res:{dataset}_{household}` style template, prefix already expanded.
/// Column values are percent-encoded when substituted.
struct Template {
  struct Part {
    bool is_column;
    std::string text;        // literal text or column name
    std::size_t column = 0;  // resolved index when is_column
  };
  std::vector<Part> parts;
  std::string source;  // as written, for messages

  /// nullopt when any referenced cell is null.
  std::optional<std::string> expand(const staging::Row& row) const;
};

struct ObjectMap {
  std::string predicate;  // absolute IRI
  // Exactly one of column / iri_template is used.
  std::optional<std::size_t> column;
  std::string column_name;
  std::string datatype;  // absolute; empty with a language tag
  std::string language;
  std::optional<Template> iri_template;
};

struct TriplesMap {
  std::string name;
  std::string table;
  Template subject;
  std::vector<std::string> classes;  // absolute IRIs
  std::vector<ObjectMap> objects;
};

struct MappingPlan {
  rdf::PrefixMap prefixes;
  std::vector<TriplesMap> maps;
};

/// Compile a mapping document against the staging schema. Throws
/// ConfigError naming the map, table and column for unknown tables,
/// columns, undeclared prefixes or malformed entries.
MappingPlan compile_mapping(const nlohmann::json& doc,
                            const staging::StagingBundle& schema = staging::StagingBundle::empty());
MappingPlan load_mapping(const std::filesystem::path& path,
                         const staging::StagingBundle& schema = staging::StagingBundle::empty());

struct RowIssue {
  std::string map;
  std::size_t row;  // 1-based
  std::string message;
};

struct MappingResult {
  rdf::TripleSet triples;
  std::vector<RowIssue> issues;  // rows skipped for producing invalid IRIs
};

/// One triple per (row, object map) with non-null cells, plus one rdf:type
/// per (row, class). Rows whose subject template hits a null are skipped
/// silently; rows producing an invalid IRI are skipped and reported.
MappingResult apply_mapping(const MappingPlan& plan, const staging::StagingBundle& bundle);

}  // namespace elkg::rdfmap
