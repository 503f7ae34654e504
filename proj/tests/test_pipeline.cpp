#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <sys/wait.h>

#include <json.hpp>

#include "echr/errors.hpp"
#include "echr/pipeline.hpp"

using namespace echr;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / ("echr_pipeline_" + std::to_string(::getpid()));

struct Outcome {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

Outcome run_cli(const std::string& args, const std::string& env = "") {
  fs::create_directories(kRoot);
  const auto out = kRoot / "stdout.txt";
  const auto err = kRoot / "stderr.txt";
  const std::string command = env + (env.empty() ? "" : " ") + "\"" + PIPELINE_BIN + "\" " + args + " >\"" +
                              out.string() + "\" 2>\"" + err.string() + "\"";
  const int raw = std::system(command.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
}

fs::path write_config(const std::string& name, const nlohmann::json& doc) {
  fs::create_directories(kRoot);
  const auto path = kRoot / name;
  std::ofstream(path) << doc.dump(2);
  return path;
}

// Small enough to run in seconds.
nlohmann::json tiny_config(const std::string& out_dir) {
  return {{"synthetic", {{"docs_per_article_per_label", 20}, {"signal_rate", 0.1}, {"tokens_per_section", 40}}},
          {"articles", {"6"}},
          {"split", {{"holdout_fraction", 0.1}}},
          {"search",
           {{"feature_types", {"ngram", "doc2vec"}},
            {"dimensions", {100, 2000}},
            {"sections", {"facts"}},
            {"stopwords", {"kept"}},
            {"algorithms", {"sgd_linear", "decision_tree"}}}},
          {"embedding", {{"doc2vec", {{"epochs", 5}, {"min_count", 2}}}}},
          {"out_dir", out_dir},
          {"seed", 7}};
}

}  // namespace

TEST_CASE("both corpus and synthetic: validation error, nothing written") {
  auto doc = tiny_config((kRoot / "never").string());
  doc["corpus"] = "corpus.jsonl";
  const auto path = write_config("both.json", doc);
  const auto result = run_cli("run \"" + path.string() + "\"");
  CHECK(result.status == 1);
  CHECK(result.err.find("invalid config") != std::string::npos);
  CHECK_FALSE(fs::exists(kRoot / "never"));
  CHECK_THROWS_AS(parse_config(doc, kRoot), ValidationError);
}

TEST_CASE("config validation") {
  auto doc = tiny_config("x");
  doc["unknown_key"] = 1;
  CHECK_THROWS_AS(parse_config(doc, kRoot), ValidationError);
  doc = tiny_config("x");
  doc.erase("synthetic");
  CHECK_THROWS_AS(parse_config(doc, kRoot), ValidationError);
  doc = tiny_config("x");
  doc["search"]["feature_types"] = {"bert"};
  CHECK_THROWS_AS(parse_config(doc, kRoot), ValidationError);
  doc = tiny_config("x");
  doc.erase("synthetic");
  doc["corpus"] = "data/corpus.jsonl";
  CHECK(*parse_config(doc, "/base").corpus == fs::path("/base/data/corpus.jsonl"));
  CHECK(parse_config(tiny_config("x"), kRoot).canonical() == parse_config(tiny_config("x"), kRoot).canonical());
  // The output directory is not part of the experiment identity; the seed is.
  CHECK(parse_config(tiny_config("x"), kRoot).hash() == parse_config(tiny_config("y"), kRoot).hash());
  doc = tiny_config("x");
  doc["seed"] = 8;
  CHECK(parse_config(doc, kRoot).hash() != parse_config(tiny_config("x"), kRoot).hash());
}

TEST_CASE("unknown subcommand or missing config is an argument error") {
  CHECK(run_cli("frobnicate").status == 1);
  CHECK(run_cli("split").status == 1);
}

TEST_CASE("a stage without its upstream artifacts names the stage to run first") {
  const auto out = kRoot / "upstream";
  const auto path = write_config("upstream.json", tiny_config(out.string()));
  const auto result = run_cli("split --config \"" + path.string() + "\"");
  CHECK(result.status == 2);
  CHECK(result.err.find("run parse first") != std::string::npos);
  CHECK(fs::exists(out / "FAILED"));
}

TEST_CASE("dry run lists the full configuration space") {
  nlohmann::json doc = {{"synthetic", nlohmann::json::object()}, {"articles", {"6"}}, {"out_dir", (kRoot / "dry").string()}};
  const auto path = write_config("dry.json", doc);
  const auto result = run_cli("search --dry-run --config \"" + path.string() + "\"");
  CHECK(result.status == 0);
  CHECK(result.err.find("1260 configurations per article") != std::string::npos);
  long lines = 0, skipped = 0;
  std::istringstream in(result.out);
  for (std::string line; std::getline(in, line);) {
    ++lines;
    skipped += line.find("[skipped") != std::string::npos;
  }
  CHECK(lines == 1260);
  // glove and law2vec have no pretrained files here.
  CHECK(skipped == 2 * 2 * 5 * 2 * 14);
  CHECK_FALSE(fs::exists(kRoot / "dry" / "search"));
}

TEST_CASE("stage-by-stage execution equals a full run; env and flag overrides") {
  const auto config_path = write_config("tiny.json", tiny_config((kRoot / "from_config").string()));
  const auto full = kRoot / "full";
  const auto staged = kRoot / "staged";
  const auto cfg = "\"" + config_path.string() + "\"";

  const auto run = run_cli("run " + cfg + " --out \"" + full.string() + "\"");
  REQUIRE_MESSAGE(run.status == 0, run.err);
  CHECK(fs::exists(full / "report" / "report.json"));
  CHECK(fs::exists(full / "report" / "report.csv"));
  CHECK(fs::exists(full / "report" / "report.txt"));
  CHECK(fs::exists(full / "corpus" / "corpus.jsonl"));
  CHECK(fs::exists(full / "split" / "6.json"));
  CHECK_FALSE(fs::exists(full / "FAILED"));
  CHECK_FALSE(fs::exists(kRoot / "from_config"));

  for (const char* stage : {"synth", "parse", "split", "embed", "features", "search", "eval", "report"}) {
    const auto result = run_cli(std::string(stage) + " --config " + cfg, "PIPELINE_OUT_DIR=\"" + staged.string() + "\"");
    REQUIRE_MESSAGE(result.status == 0, result.err);
  }
  CHECK(slurp(full / "report" / "report.json") == slurp(staged / "report" / "report.json"));
  CHECK(slurp(full / "split" / "6.json") == slurp(staged / "split" / "6.json"));
  CHECK_FALSE(fs::exists(kRoot / "from_config"));

  // --out beats the environment variable.
  const auto flagged = kRoot / "flagged";
  const auto synth = run_cli("synth --config " + cfg + " --out \"" + flagged.string() + "\"",
                             "PIPELINE_OUT_DIR=\"" + (kRoot / "ignored").string() + "\"");
  CHECK(synth.status == 0);
  CHECK(fs::exists(flagged / "corpus" / "corpus.jsonl"));
  CHECK_FALSE(fs::exists(kRoot / "ignored"));

  // A different seed changes the corpus.
  const auto reseeded = kRoot / "reseeded";
  CHECK(run_cli("synth --config " + cfg + " --seed 8 --out \"" + reseeded.string() + "\"").status == 0);
  CHECK(slurp(reseeded / "corpus" / "corpus.jsonl") != slurp(flagged / "corpus" / "corpus.jsonl"));

  const auto report = nlohmann::json::parse(slurp(full / "report" / "report.json"));
  CHECK(report.at("seed") == 7);
  CHECK(report.at("articles").size() == 1);

  fs::remove_all(kRoot);
}
