#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qsuggest/base_suggester.hpp"
#include "qsuggest/corpus_index.hpp"
#include "qsuggest/features.hpp"
#include "qsuggest/log_model.hpp"
#include "qsuggest/metrics.hpp"
#include "qsuggest/profiles.hpp"
#include "qsuggest/ranker.hpp"
#include "qsuggest/topic_distribution.hpp"

namespace qsuggest {

// ---- weeks ---------------------------------------------------------------

/// Monday 00:00 UTC of the ISO week containing `ts`.
Timestamp iso_week_start(Timestamp ts);
/// 1-based week number counted from the ISO week containing `origin`.
int week_ordinal(Timestamp ts, Timestamp origin);
/// First event timestamp over all sessions. Throws DataError when empty.
Timestamp log_origin(std::span<const SearchSession> sessions);

// ---- replay --------------------------------------------------------------

/// Memoised P(Z|q) lookups against a fixed corpus.
class QueryTopicCache {
 public:
  QueryTopicCache(const InvertedIndex& corpus, std::span<const TopicDistribution> doc_topics);

  const std::optional<TopicDistribution>& get(const std::string& query);
  std::optional<TopicDistribution> doc(std::string_view doc_id) const;

 private:
  const InvertedIndex& corpus_;
  std::span<const TopicDistribution> doc_topics_;
  std::unordered_map<std::string, std::optional<TopicDistribution>> cache_;
};

struct ReplayConfig {
  DecayParams decay;
  std::size_t list_size = 10;
  bool refinement_union = true;
  std::uint64_t rng_seed = 42;
};

/// Session state in front of a query: the query itself plus earlier queries
/// and clicks, most recent first.
SuggestionContext build_context(const QueryImpression& impression, QueryTopicCache& topics,
                                const DecayParams& decay);

/// Feature vectors for a list in base order (QueryRank = index + 1).
std::vector<FeatureVector> featurize(const SuggestionContext& context,
                                     std::span<const std::string> suggestions,
                                     QueryTopicCache& topics);

struct PreparedImpression {
  LabeledImpression labeled;
  int week = 0;
  int query_length = 0;  // tokens in the query
  std::vector<FeatureVector> features;  // one per suggestion, base order

  const QueryImpression& impression() const { return labeled.impression; }
};

struct PreparationStats {
  std::size_t queries = 0;
  std::size_t without_refinement = 0;
  std::size_t without_positive = 0;
  std::size_t refinement_inserted = 0;  // base list lacked the refinement; union added it
  std::size_t kept = 0;
};

/// Base list, AutoEval labels and features for every query that has a
/// click-validated refinement. Impressions whose list has no positive are
/// dropped.
std::vector<PreparedImpression> prepare_impressions(std::span<const SearchSession> sessions,
                                                    const ConceptHierarchy& hierarchy,
                                                    QueryTopicCache& topics,
                                                    const ReplayConfig& config, Timestamp origin,
                                                    PreparationStats* stats = nullptr);

// ---- methods -------------------------------------------------------------

/// A method either keeps the base order (no mask) or re-ranks with an
/// ensemble trained on the masked features.
struct MethodSpec {
  std::string name;
  std::optional<FeatureMask> mask;

  bool uses_ranker() const { return mask.has_value(); }
  FeatureSchema schema() const;
};

/// Base, Click (every feature but QueryPersonalisedScore) and Ours (all ten).
std::vector<MethodSpec> standard_methods();

RankingGroup to_group(const PreparedImpression& impression, const FeatureMask& mask);

/// Order in which the method presents the impression's suggestions.
std::vector<std::size_t> method_order(const MethodSpec& method, const RankingEnsemble* ensemble,
                                      const PreparedImpression& impression);

// ---- runs ----------------------------------------------------------------

struct ImpressionRecord {
  std::string impression_id;
  int position = 1;
  int query_length = 0;
  MetricValues metrics{};
};

struct EvaluationRun {
  std::string method;
  int week = 0;  // test week; 0 for a pooled run
  std::uint64_t config_fingerprint = 0;
  std::vector<ImpressionRecord> records;
};

ImpressionRecord evaluate_impression(const PreparedImpression& impression,
                                     std::span<const std::size_t> order);

/// Unweighted means. Throws std::invalid_argument on an empty run.
MetricValues aggregate(const EvaluationRun& run);

enum class BreakdownDimension { kQueryPosition, kQueryLength };
std::string_view dimension_name(BreakdownDimension d);

/// Buckets 1, 2, 3 and 4 (meaning ">= 4").
int bucket_of(int value);
std::string bucket_label(int bucket);

struct BucketSummary {
  int bucket = 0;
  std::size_t count = 0;
  std::optional<MetricValues> summary;  // nullopt for an empty bucket
};

/// Always four entries, in bucket order.
std::vector<BucketSummary> breakdown(const EvaluationRun& run, BreakdownDimension dimension);
/// The subset of the run falling into one bucket.
EvaluationRun bucket_run(const EvaluationRun& run, BreakdownDimension dimension, int bucket);

/// Per-metric paired t-test between runs over the same impressions.
std::array<TTestResult, kNumMetrics> compare_runs(const EvaluationRun& candidate,
                                                  const EvaluationRun& baseline);

// ---- rolling protocol ------------------------------------------------------

/// Latest log timestamp each frozen artifact was trained from.
struct ArtifactProvenance {
  std::string name;
  std::optional<Timestamp> trained_through;
};

struct FoldSummary {
  int train_week = 0;
  int test_week = 0;
  std::size_t train_impressions = 0;
  std::size_t trainable_groups = 0;
  std::size_t test_impressions = 0;
  bool skipped = false;
  std::string note;
};

struct RollingResult {
  std::vector<FoldSummary> folds;
  /// One run per method and evaluated fold, fold-major in method order.
  std::vector<EvaluationRun> runs;
  /// Ensembles per fold, keyed by method name (ranked methods only).
  std::vector<std::map<std::string, RankingEnsemble>> ensembles;
};

/// Trains every ranked method on week i and evaluates all methods on week
/// i + 1, for i in [start_week, end_week - 1]. Throws DataError when the
/// impressions cover fewer than two weeks and std::logic_error when a frozen
/// artifact saw data from a test week.
RollingResult rolling_weekly_eval(std::span<const PreparedImpression> impressions,
                                  std::span<const MethodSpec> methods, const TrainConfig& train,
                                  int start_week, int end_week, Timestamp origin,
                                  std::span<const ArtifactProvenance> provenance,
                                  std::uint64_t config_fingerprint = 0);

/// Concatenation of one method's runs across folds (week = 0).
EvaluationRun pooled_run(const RollingResult& result, std::string_view method);

// ---- reports ---------------------------------------------------------------

/// Text report: effective config, folds, then one record per method x week x
/// bucket with the six means, %rel and p-values against the baseline method.
/// Preparation counts are listed when given.
void write_report(std::ostream& out, std::string_view effective_config,
                  const RollingResult& result, std::span<const MethodSpec> methods,
                  std::string_view baseline = "Base",
                  const PreparationStats* preparation = nullptr);

/// Flat per-impression table: method, week, impression, position, length,
/// then the six metrics.
void write_impression_table(std::ostream& out, const RollingResult& result);

}  // namespace qsuggest
