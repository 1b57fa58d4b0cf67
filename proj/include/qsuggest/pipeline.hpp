#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsuggest/config.hpp"
#include "qsuggest/eval_harness.hpp"
#include "qsuggest/log_model.hpp"
#include "qsuggest/ranker.hpp"

namespace qsuggest {

/// Artifact file names inside the model directory.
namespace artifact {
inline constexpr std::string_view kEvents = "events.tsv";
inline constexpr std::string_view kCorpus = "corpus.tsv";
inline constexpr std::string_view kLdaModel = "lda.model";
inline constexpr std::string_view kDocTopics = "doc_topics.tsv";
inline constexpr std::string_view kHierarchy = "hierarchy.txt";
inline constexpr std::string_view kEnsemblePrefix = "ensemble_";
}  // namespace artifact

std::filesystem::path artifact_path(const ExperimentConfig& config, std::string_view name);
std::filesystem::path ensemble_path(const ExperimentConfig& config, std::string_view method);

/// Writes the corpus, log and ground-truth files named in [paths].
void run_synth(const ExperimentConfig& config, std::ostream& log);
/// Validates the raw log and corpus and stores normalized copies.
void run_ingest(const ExperimentConfig& config, std::ostream& log);
/// Log statistics after preprocessing.
void run_stats(const ExperimentConfig& config, std::ostream& out);
/// LDA on documents clicked up to the end of the start week, then P(Z|d)
/// for the whole corpus.
void run_train_lda(const ExperimentConfig& config, std::ostream& log);
/// Concept hierarchy from the corpus and the logs up to the start week.
void run_build_hierarchy(const ExperimentConfig& config, std::ostream& log);
/// One ensemble per ranked method, trained on the last logged week.
void run_train_ranker(const ExperimentConfig& config, std::ostream& log);

struct EvaluationOutput {
  RollingResult result;
  PreparationStats preparation;
  std::filesystem::path report;
  std::filesystem::path impressions;
};

/// Rolling weekly evaluation of Base, Click and Ours; writes report.txt,
/// impressions.tsv and effective.conf into the report directory.
EvaluationOutput run_evaluate(const ExperimentConfig& config, std::ostream& log);

/// A registered method with its ensemble (none for Base).
struct MethodPipeline {
  MethodSpec spec;
  std::optional<RankingEnsemble> ensemble;
};

/// Loads the ensembles written by train-ranker. Throws MissingArtifactError.
std::vector<MethodPipeline> build_method_pipelines(const ExperimentConfig& config);

struct SuggestRequest {
  std::vector<LogEvent> history;  // earlier queries and clicks, in order
  std::string query;
  std::string method = "Ours";
};

struct RankedSuggestion {
  std::string text;
  double score = 0.0;  // ensemble score, or the base score for Base
  int base_rank = 0;
  FeatureVector features{};
};

std::vector<RankedSuggestion> run_suggest(const ExperimentConfig& config,
                                          const SuggestRequest& request);
void write_suggestions(std::ostream& out, std::span<const RankedSuggestion> ranked);

}  // namespace qsuggest
