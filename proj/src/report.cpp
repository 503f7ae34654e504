#include <cstdio>
#include <fstream>

#include "echr/errors.hpp"
#include "echr/selection.hpp"

namespace echr {

namespace {

nlohmann::ordered_json optional_json(const std::optional<double>& value) {
  return value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& value) {
  if (value.is_null()) return std::nullopt;
  return value.get<double>();
}

nlohmann::ordered_json metrics_json(const Metrics& m) {
  nlohmann::ordered_json doc;
  doc["accuracy"] = m.accuracy;
  doc["precision"] = optional_json(m.precision);
  doc["recall"] = optional_json(m.recall);
  doc["tp"] = m.tp;
  doc["fp"] = m.fp;
  doc["tn"] = m.tn;
  doc["fn"] = m.fn;
  return doc;
}

Metrics metrics_from(const nlohmann::json& doc) {
  Metrics m;
  m.accuracy = doc.at("accuracy").get<double>();
  m.precision = optional_from(doc.at("precision"));
  m.recall = optional_from(doc.at("recall"));
  m.tp = doc.at("tp").get<long>();
  m.fp = doc.at("fp").get<long>();
  m.tn = doc.at("tn").get<long>();
  m.fn = doc.at("fn").get<long>();
  return m;
}

std::string fixed(const std::optional<double>& value, int digits = 4) {
  if (!value) return "";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", digits, *value);
  return buffer;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

nlohmann::ordered_json report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json doc;
  doc["seed"] = report.seed;
  doc["config_hash"] = report.config_hash;
  auto articles = nlohmann::ordered_json::array();
  for (const auto& a : report.articles) {
    nlohmann::ordered_json entry;
    entry["article"] = a.article;
    entry["best_config"] = config_to_json(a.best);
    entry["cv_accuracy"] = a.cv_accuracy;
    entry["train_size"] = a.train_size;
    entry["test_size"] = a.test_size;
    entry["r_target"] = a.r_target;
    entry["heuristic_reference"] = {{"v", a.heuristic_v}, {"nv", a.heuristic_nv}};
    entry["model"] = metrics_json(a.model);
    entry["heuristic"] = metrics_json(a.heuristic);
    articles.push_back(std::move(entry));
  }
  doc["articles"] = std::move(articles);
  doc["weighted_average"] = {{"model_accuracy", report.weighted.model_accuracy},
                             {"heuristic_accuracy", report.weighted.heuristic_accuracy},
                             {"model_precision", optional_json(report.weighted.model_precision)},
                             {"model_recall", optional_json(report.weighted.model_recall)}};
  return doc;
}

MetricsReport report_from_json(const nlohmann::json& doc) {
  try {
    MetricsReport report;
    report.seed = doc.at("seed").get<std::uint64_t>();
    report.config_hash = doc.at("config_hash").get<std::string>();
    for (const auto& entry : doc.at("articles")) {
      ArticleResult a;
      a.article = entry.at("article").get<std::string>();
      a.best = config_from_json(entry.at("best_config"));
      a.cv_accuracy = entry.at("cv_accuracy").get<double>();
      a.train_size = entry.at("train_size").get<long>();
      a.test_size = entry.at("test_size").get<long>();
      a.r_target = entry.at("r_target").get<double>();
      a.heuristic_v = entry.at("heuristic_reference").at("v").get<long>();
      a.heuristic_nv = entry.at("heuristic_reference").at("nv").get<long>();
      a.model = metrics_from(entry.at("model"));
      a.heuristic = metrics_from(entry.at("heuristic"));
      report.articles.push_back(std::move(a));
    }
    const auto& w = doc.at("weighted_average");
    report.weighted.model_accuracy = w.at("model_accuracy").get<double>();
    report.weighted.heuristic_accuracy = w.at("heuristic_accuracy").get<double>();
    report.weighted.model_precision = optional_from(w.at("model_precision"));
    report.weighted.model_recall = optional_from(w.at("model_recall"));
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

void render_report(const MetricsReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  open_output(out_dir / "report.json") << report_to_json(report).dump(2) << '\n';

  auto csv = open_output(out_dir / "report.csv");
  csv << "article,model_accuracy,heuristic_accuracy,precision,recall,test_size\n";
  long total = 0;
  for (const auto& a : report.articles) {
    csv << csv_field(a.article) << ',' << fixed(a.model.accuracy, 6) << ',' << fixed(a.heuristic.accuracy, 6) << ','
        << fixed(a.model.precision, 6) << ',' << fixed(a.model.recall, 6) << ',' << a.test_size << '\n';
    total += a.test_size;
  }
  csv << "weighted_average," << fixed(report.weighted.model_accuracy, 6) << ','
      << fixed(report.weighted.heuristic_accuracy, 6) << ',' << fixed(report.weighted.model_precision, 6) << ','
      << fixed(report.weighted.model_recall, 6) << ',' << total << '\n';

  auto txt = open_output(out_dir / "report.txt");
  char line[256];
  std::snprintf(line, sizeof(line), "%-18s %9s %9s %9s %9s %9s\n", "article", "model", "heuristic", "precision",
                "recall", "test_size");
  txt << line;
  for (const auto& a : report.articles) {
    std::snprintf(line, sizeof(line), "%-18s %9s %9s %9s %9s %9ld\n", a.article.c_str(),
                  fixed(a.model.accuracy).c_str(), fixed(a.heuristic.accuracy).c_str(),
                  fixed(a.model.precision).c_str(), fixed(a.model.recall).c_str(), a.test_size);
    txt << line;
  }
  std::snprintf(line, sizeof(line), "%-18s %9s %9s %9s %9s %9ld\n", "weighted_average",
                fixed(report.weighted.model_accuracy).c_str(), fixed(report.weighted.heuristic_accuracy).c_str(),
                fixed(report.weighted.model_precision).c_str(), fixed(report.weighted.model_recall).c_str(), total);
  txt << line << '\n' << "Selected configurations (mean cross-validation accuracy):\n";
  for (const auto& a : report.articles) {
    std::snprintf(line, sizeof(line), "  %s: %.4f  ", a.article.c_str(), a.cv_accuracy);
    txt << line << a.best.label() << '\n';
  }
}

}  // namespace echr
