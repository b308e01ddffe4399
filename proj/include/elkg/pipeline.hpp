#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "elkg/error.hpp"
#include "elkg/linker.hpp"
#include "elkg/mldata.hpp"
#include "elkg/profiles.hpp"
#include "elkg/sparql_client.hpp"

namespace elkg::pipeline {

enum class Stage {
  harmonize,
  profiles,
  enrich,
  stage,
  map,
  link,
  load,
  stats,
  query,
  ml_prep,
  ml_ingest,
};

std::string_view to_string(Stage s);
/// Throws ConfigError for unknown names.
Stage stage_from_string(std::string_view name);
std::vector<Stage> all_stages();

/// An upstream artifact is missing.
class StageOrderError : public Error {
 public:
  StageOrderError(std::filesystem::path artifact, Stage producer)
      : Error("missing artifact " + artifact.string() + "; run `elkg " +
              std::string(to_string(producer)) + "` first"),
        artifact_(std::move(artifact)),
        producer_(producer) {}
  const std::filesystem::path& artifact() const noexcept { return artifact_; }
  Stage producer() const noexcept { return producer_; }

 private:
  std::filesystem::path artifact_;
  Stage producer_;
};

/// Where a knowledge base is queried: a SPARQL endpoint URL or, offline, an
/// N-Triples fixture loaded into a local store.
struct EndpointSpec {
  std::string url;
  std::filesystem::path fixture;
};

/// One JSON file with per-stage sections. Relative paths resolve against the
/// directory of the file. See config/pipeline.example.json.
struct PipelineConfig {
  std::filesystem::path workdir = "work";
  std::filesystem::path raw_root = "raw";
  std::filesystem::path datasets_dir = "datasets";
  std::filesystem::path synonyms = "synonyms.json";
  std::filesystem::path geo = "geo.json";
  std::filesystem::path indicators_dir = "indicators";
  std::filesystem::path mapping = "mapping.json";
  unsigned threads = 0;

  profiles::ProfileConfig profile;
  profiles::EventConfig events;
  linker::LinkerConfig linker;
  std::map<std::string, EndpointSpec> kb_endpoints;  // knowledge base name -> endpoint
  std::optional<std::string> store_endpoint;         // remote triple store
  std::size_t store_batch = 1000;
  sparql::ClientOptions http;
  mldata::SynthConfig synth;

  /// Throws ConfigError on unknown keys or bad values.
  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);
};

/// Artifact locations under the working directory.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path archive() const { return root / "archive"; }
  std::filesystem::path profiles_dir() const { return root / "profiles"; }
  std::filesystem::path profiles_index() const { return profiles_dir() / "index.json"; }
  std::filesystem::path locations() const { return root / "enrich" / "locations.json"; }
  std::filesystem::path staging_dir() const { return root / "staging"; }
  std::filesystem::path staging_manifest() const { return staging_dir() / "schema.json"; }
  std::filesystem::path kg() const { return root / "kg" / "kg.nt"; }
  std::filesystem::path links() const { return root / "link" / "links.json"; }
  std::filesystem::path sameas() const { return root / "link" / "sameas.nt"; }
  std::filesystem::path store() const { return root / "kg" / "store.nt"; }
  std::filesystem::path ml_dir() const { return root / "ml"; }
  std::filesystem::path predict_dir() const { return ml_dir() / "predict"; }
  std::filesystem::path predictions_dir() const { return ml_dir() / "predictions"; }
  std::filesystem::path reports() const { return root / "reports"; }
};

struct RunOptions {
  bool dry_run = false;
  /// `query`: the SPARQL text; `remote` sends it to the store endpoint.
  std::string query_text;
  bool remote = false;
  /// `ml-ingest`: prediction files or directories of them (default
  /// <workdir>/ml/predictions).
  std::vector<std::filesystem::path> predictions;
};

/// Line-oriented `key=value` stage log.
class Log {
 public:
  explicit Log(std::ostream& os) : os_(os) {}
  void line(Stage stage, std::string_view status,
            const std::vector<std::pair<std::string, std::string>>& fields = {});

 private:
  std::ostream& os_;
};

/// Run one stage. Results meant for the user (stats, query) go to `out`;
/// progress and summaries go to `log`. Throws on failure.
void run(Stage stage, const PipelineConfig& cfg, const RunOptions& opts, std::ostream& out,
         Log& log);

}  // namespace elkg::pipeline
