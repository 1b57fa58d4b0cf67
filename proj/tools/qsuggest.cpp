// qsuggest: command-line front end for the suggestion pipeline.

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qsuggest/config.hpp"
#include "qsuggest/error.hpp"
#include "qsuggest/pipeline.hpp"

namespace {

using namespace qsuggest;

// "q:<query text>" or "c:<doc id>"
LogEvent parse_history_item(const std::string& item) {
  if (item.size() < 2 || item[1] != ':' || (item[0] != 'q' && item[0] != 'c')) {
    throw ConfigError(fmt::format("history item '{}' must look like q:<query> or c:<doc id>", item));
  }
  LogEvent e;
  e.type = item[0] == 'q' ? EventType::kQuery : EventType::kClick;
  e.content = item.substr(2);
  return e;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalised query suggestions for intranet search"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path, "key=value config file with [section] headers");
  bool print_config = false;
  app.add_flag("--print-config", print_config, "echo the effective configuration to stderr");

  auto* synth = app.add_subcommand("synth", "generate the synthetic corpus, log and ground truth");
  auto* ingest = app.add_subcommand("ingest", "validate the log and corpus into the model directory");
  auto* stats = app.add_subcommand("stats", "log statistics after preprocessing");
  auto* train_lda = app.add_subcommand("train-lda", "train the topic model on clicked documents");
  auto* hierarchy = app.add_subcommand("build-hierarchy", "build the concept hierarchy");
  auto* train_ranker = app.add_subcommand("train-ranker", "train the Click and Ours ensembles");
  auto* evaluate = app.add_subcommand("evaluate", "rolling weekly replay evaluation");
  std::string report_dir;
  evaluate->add_option("--report", report_dir, "report directory (overrides [paths] report_dir)");

  auto* suggest_cmd = app.add_subcommand("suggest", "re-rank suggestions for a session so far");
  std::string query;
  std::vector<std::string> history;
  std::string method = "Ours";
  suggest_cmd->add_option("-q,--query", query, "current query")->required();
  suggest_cmd->add_option("--history", history, "earlier events in order: q:<query> or c:<doc id>");
  suggest_cmd->add_option("-m,--method", method, "Base, Click or Ours")
      ->check(CLI::IsMember({"Base", "Click", "Ours"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    std::optional<std::filesystem::path> path;
    if (!config_path.empty()) path = config_path;
    auto config = load_config(path);
    if (!report_dir.empty()) config.report_dir = report_dir;
    if (print_config) std::cerr << config.effective_text();

    if (synth->parsed()) {
      run_synth(config, std::cerr);
    } else if (ingest->parsed()) {
      run_ingest(config, std::cerr);
    } else if (stats->parsed()) {
      run_stats(config, std::cout);
    } else if (train_lda->parsed()) {
      run_train_lda(config, std::cerr);
    } else if (hierarchy->parsed()) {
      run_build_hierarchy(config, std::cerr);
    } else if (train_ranker->parsed()) {
      run_train_ranker(config, std::cerr);
    } else if (evaluate->parsed()) {
      run_evaluate(config, std::cerr);
    } else if (suggest_cmd->parsed()) {
      SuggestRequest request;
      for (const auto& h : history) request.history.push_back(parse_history_item(h));
      request.query = query;
      request.method = method;
      write_suggestions(std::cout, run_suggest(config, request));
    }
  } catch (const Error& e) {
    std::cerr << "qsuggest: error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "qsuggest: error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kFailure);
  }
  return 0;
}
