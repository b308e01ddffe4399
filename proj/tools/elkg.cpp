// elkg: run one stage of the energy knowledge graph pipeline.
//
//   elkg <subcommand> --config pipeline.json [--workdir DIR] [--threads N] [--dry-run]
//
// Exit status: 0 success, 1 runtime failure, 2 configuration or usage error,
// 3 stage-order violation (an upstream artifact is missing).

#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>

#include "elkg/error.hpp"
#include "elkg/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using elkg::pipeline::Stage;

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitStageOrder = 3;

struct Subcommand {
  Stage stage;
  const char* help;
};

constexpr Subcommand kSubcommands[] = {
    {Stage::harmonize, "Parse raw datasets into the harmonized household archive"},
    {Stage::profiles, "Compute load profiles and consumption statistics"},
    {Stage::enrich, "Resolve household locations and attach indicators"},
    {Stage::stage, "Build the relational staging tables"},
    {Stage::map, "Map staging tables to RDF (kg/kg.nt)"},
    {Stage::link, "Link cities and countries to Wikidata and DBpedia"},
    {Stage::load, "Assemble the store (kg/store.nt) and push to the remote store if configured"},
    {Stage::stats, "Print graph statistics as JSON"},
    {Stage::query, "Run a SPARQL query (file or stdin) and print SPARQL JSON results"},
    {Stage::ml_prep, "Build training/test window files and prediction windows"},
    {Stage::ml_ingest, "Ingest appliance predictions into the store"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy knowledge graph pipeline"};
  app.require_subcommand(1, 1);

  fs::path config_path = "pipeline.json";
  std::string workdir;
  int threads = -1;
  bool dry_run = false;
  app.add_option("-c,--config", config_path, "Pipeline configuration file")
      ->envname("ELKG_CONFIG");
  app.add_option("--workdir", workdir, "Override the working directory from the config");
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_flag("--dry-run", dry_run, "Validate configuration and inputs without writing");

  elkg::pipeline::RunOptions opts;
  std::string query_file;
  std::vector<std::string> predictions;
  for (const auto& sc : kSubcommands) {
    auto* sub = app.add_subcommand(std::string(elkg::pipeline::to_string(sc.stage)), sc.help);
    sub->fallthrough();
    if (sc.stage == Stage::query) {
      sub->add_option("-f,--file", query_file, "SPARQL query file (default: stdin)");
      sub->add_flag("--remote", opts.remote, "Send the query to store.endpoint");
    }
    if (sc.stage == Stage::ml_ingest) {
      sub->add_option("-p,--predictions", predictions,
                      "Prediction JSON files or directories (default: <workdir>/ml/predictions)");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const Stage stage = elkg::pipeline::stage_from_string(app.get_subcommands().front()->get_name());
  elkg::pipeline::Log log(std::cerr);
  try {
    auto cfg = elkg::pipeline::PipelineConfig::load(config_path);
    if (!workdir.empty()) cfg.workdir = workdir;
    if (threads >= 0) cfg.threads = static_cast<unsigned>(threads);
    opts.dry_run = dry_run;
    for (const auto& p : predictions) opts.predictions.emplace_back(p);
    if (stage == Stage::query) {
      if (query_file.empty()) {
        opts.query_text.assign(std::istreambuf_iterator<char>(std::cin), {});
      } else {
        std::ifstream in(query_file, std::ios::binary);
        if (!in) throw elkg::ConfigError("cannot read query file " + query_file);
        std::ostringstream ss;
        ss << in.rdbuf();
        opts.query_text = ss.str();
      }
    }
    elkg::pipeline::run(stage, cfg, opts, std::cout, log);
    return 0;
  } catch (const elkg::pipeline::StageOrderError& e) {
    log.line(stage, "error",
             {{"kind", "stage-order"},
              {"artifact", e.artifact().string()},
              {"producer", std::string(elkg::pipeline::to_string(e.producer()))},
              {"message", e.what()}});
    return kExitStageOrder;
  } catch (const elkg::ConfigError& e) {
    log.line(stage, "error", {{"kind", "config"}, {"message", e.what()}});
    return kExitConfig;
  } catch (const std::exception& e) {
    log.line(stage, "error", {{"kind", "runtime"}, {"message", e.what()}});
    return kExitRuntime;
  }
}
