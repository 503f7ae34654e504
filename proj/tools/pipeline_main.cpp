// pipeline: end-to-end judgment outcome prediction runs driven by a JSON config.
//
//   pipeline run <config.json> [--out DIR] [--seed N] [--workers N]
//   pipeline <stage> --config <config.json> [--out DIR] [--seed N] [--workers N] [--dry-run]
//
// Exit status: 0 success, 1 invalid config or arguments, 2 stage failure.
// PIPELINE_OUT_DIR overrides the config's out_dir; --out overrides both.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "echr/pipeline.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool dry_run = false;
};

void add_common(CLI::App& cmd, Options& options) {
  cmd.add_option("--out", options.out, "Output directory (overrides config and PIPELINE_OUT_DIR)");
  cmd.add_option("--seed", options.seed, "Global seed (overrides config)");
  cmd.add_option("--workers", options.workers, "Worker threads for the grid search")->check(CLI::PositiveNumber);
}

echr::PipelineConfig resolve_config(const Options& options) {
  auto config = echr::load_config(options.config);
  if (const char* env = std::getenv(echr::kOutDirEnv); env != nullptr && *env != '\0') config.out_dir = env;
  if (!options.out.empty()) config.out_dir = options.out;
  if (options.seed) {
    // Re-parse so every derived seed follows the new global seed.
    auto doc = nlohmann::json::parse(std::ifstream(options.config));
    doc["seed"] = *options.seed;
    const auto out_dir = config.out_dir;
    config = echr::parse_config(doc, std::filesystem::path(options.config).parent_path());
    config.out_dir = out_dir;
  }
  if (options.workers) config.workers = *options.workers;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Judgment outcome prediction pipeline"};
  app.require_subcommand(1);
  Options options;

  auto* run = app.add_subcommand("run", "Run every stage in order");
  run->add_option("config", options.config, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  add_common(*run, options);

  std::vector<std::pair<echr::Stage, CLI::App*>> stages;
  for (auto stage : echr::kStageOrder) {
    const std::string name(echr::to_string(stage));
    auto* cmd = app.add_subcommand(name, "Run the " + name + " stage only");
    cmd->add_option("--config", options.config, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    add_common(*cmd, options);
    if (stage == echr::Stage::search) {
      cmd->add_flag("--dry-run", options.dry_run, "Print the configuration space without fitting");
    }
    stages.emplace_back(stage, cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  echr::PipelineConfig config;
  try {
    config = resolve_config(options);
  } catch (const std::exception& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 1;
  }

  try {
    if (run->parsed()) {
      echr::run_pipeline(config, std::cerr);
      std::cerr << "report written to " << (config.out_dir / "report").string() << '\n';
      return 0;
    }
    for (const auto& [stage, cmd] : stages) {
      if (!cmd->parsed()) continue;
      if (stage == echr::Stage::search && options.dry_run) {
        const auto lines = echr::search_space_lines(config);
        for (const auto& line : lines) std::cout << line << '\n';
        std::cerr << lines.size() << " configurations per article\n";
        return 0;
      }
      echr::run_stage(stage, config, std::cerr);
      return 0;
    }
  } catch (const echr::StageError& e) {
    std::cerr << "stage failed: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
