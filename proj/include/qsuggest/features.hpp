#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qsuggest/topic_distribution.hpp"

namespace qsuggest {

/// Column order of the feature vector. Never reorder within a model version.
enum class Feature : std::size_t {
  kClickPersonalisedScore = 0,
  kQueryPersonalisedScore,
  kQueryRank,
  kQuerySim,
  kQueryNo,
  kSuggestedQueryCosine,
  kSuggestedQueryJaccard,
  kSuggestedQueryEdit,
  kSuggestedQueryLevenshtein,
  kSuggestedQueryPreUsed,
};

inline constexpr std::size_t kNumFeatures = 10;

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "ClickPersonalisedScore",    "QueryPersonalisedScore", "QueryRank",
    "QuerySim",                  "QueryNo",                "SuggestedQueryCosine",
    "SuggestedQueryJaccard",     "SuggestedQueryEdit",     "SuggestedQueryLevenshtein",
    "SuggestedQueryPreUsed"};

/// Personalised score used when a profile or the suggestion's topic
/// distribution is unavailable; outside the valid range [-ln 2, 0].
inline constexpr double kMissingProfileScore = -1.0;

using FeatureVector = std::array<double, kNumFeatures>;

constexpr double& at(FeatureVector& v, Feature f) { return v[static_cast<std::size_t>(f)]; }
constexpr double at(const FeatureVector& v, Feature f) { return v[static_cast<std::size_t>(f)]; }

struct SuggestionContext {
  std::string current_query;
  std::optional<std::string> previous_query;
  int query_count = 1;               // queries submitted so far, current included
  std::set<std::string> used_queries;  // normalized, earlier in the session
  std::optional<TopicDistribution> click_profile;
  std::optional<TopicDistribution> query_profile;
};

/// Cosine of term-frequency vectors; 0 when either side has no tokens.
double cosine_sim(std::string_view a, std::string_view b);
/// |A ∩ B| / |A ∪ B| over token sets; 0 when both are empty.
double jaccard(std::string_view a, std::string_view b);
/// Levenshtein over whole words.
std::size_t word_edit_distance(std::string_view a, std::string_view b);
/// Levenshtein over Unicode code points.
std::size_t char_levenshtein(std::string_view a, std::string_view b);

FeatureVector extract_features(const SuggestionContext& context, std::string_view suggestion,
                               const std::optional<TopicDistribution>& suggestion_dist,
                               int base_rank);

/// Selects and orders a subset of the columns.
class FeatureMask {
 public:
  static FeatureMask all();
  static FeatureMask without(std::initializer_list<Feature> excluded);

  std::size_t width() const { return columns_.size(); }
  std::span<const Feature> columns() const { return columns_; }
  std::vector<std::string> names() const;
  /// Replaces the contents of `out`.
  void project(const FeatureVector& full, std::vector<double>& out) const;

 private:
  std::vector<Feature> columns_;
};

/// Debug dump: a header row, then `impression_id,label,features...` rows.
struct FeatureRow {
  std::string impression_id;
  int label = 0;
  FeatureVector values{};
};
void write_feature_matrix(std::ostream& out, const FeatureMask& mask,
                          std::span<const FeatureRow> rows);

}  // namespace qsuggest
