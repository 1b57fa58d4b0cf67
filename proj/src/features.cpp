#include "qsuggest/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "qsuggest/profiles.hpp"
#include "qsuggest/text.hpp"
#include "qsuggest/textio.hpp"

namespace qsuggest {

namespace {

template <typename Seq>
std::size_t levenshtein(const Seq& a, const Seq& b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::set<std::string> token_set(std::string_view text) {
  const auto tokens = tokenize(text);
  return {tokens.begin(), tokens.end()};
}

}  // namespace

double cosine_sim(std::string_view a, std::string_view b) {
  std::map<std::string, double> ta;
  std::map<std::string, double> tb;
  for (auto& t : tokenize(a)) ta[t] += 1.0;
  for (auto& t : tokenize(b)) tb[t] += 1.0;
  if (ta.empty() || tb.empty()) return 0.0;
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (const auto& [t, c] : ta) {
    na += c * c;
    if (auto it = tb.find(t); it != tb.end()) dot += c * it->second;
  }
  for (const auto& [t, c] : tb) nb += c * c;
  return std::min(1.0, dot / (std::sqrt(na) * std::sqrt(nb)));
}

double jaccard(std::string_view a, std::string_view b) {
  const auto sa = token_set(a);
  const auto sb = token_set(b);
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  return static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
}

std::size_t word_edit_distance(std::string_view a, std::string_view b) {
  return levenshtein(tokenize(a), tokenize(b));
}

std::size_t char_levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(decode_utf8(a), decode_utf8(b));
}

FeatureVector extract_features(const SuggestionContext& context, std::string_view suggestion,
                               const std::optional<TopicDistribution>& suggestion_dist,
                               int base_rank) {
  if (base_rank < 1) throw std::invalid_argument("base rank starts at 1");
  FeatureVector v{};
  const auto personalised = [&](const std::optional<TopicDistribution>& profile) {
    if (!profile || !suggestion_dist) return kMissingProfileScore;
    return profile_similarity(*suggestion_dist, *profile);
  };
  at(v, Feature::kClickPersonalisedScore) = personalised(context.click_profile);
  at(v, Feature::kQueryPersonalisedScore) = personalised(context.query_profile);
  at(v, Feature::kQueryRank) = base_rank;
  at(v, Feature::kQuerySim) =
      context.previous_query ? cosine_sim(context.current_query, *context.previous_query) : 0.0;
  at(v, Feature::kQueryNo) = context.query_count;
  at(v, Feature::kSuggestedQueryCosine) = cosine_sim(context.current_query, suggestion);
  at(v, Feature::kSuggestedQueryJaccard) = jaccard(context.current_query, suggestion);
  at(v, Feature::kSuggestedQueryEdit) =
      static_cast<double>(word_edit_distance(context.current_query, suggestion));
  at(v, Feature::kSuggestedQueryLevenshtein) =
      static_cast<double>(char_levenshtein(normalize_query(context.current_query), normalize_query(suggestion)));
  at(v, Feature::kSuggestedQueryPreUsed) =
      context.used_queries.contains(normalize_query(suggestion)) ? 1.0 : 0.0;
  return v;
}

FeatureMask FeatureMask::all() {
  FeatureMask mask;
  for (std::size_t i = 0; i < kNumFeatures; ++i) mask.columns_.push_back(static_cast<Feature>(i));
  return mask;
}

FeatureMask FeatureMask::without(std::initializer_list<Feature> excluded) {
  FeatureMask mask;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const auto f = static_cast<Feature>(i);
    if (std::find(excluded.begin(), excluded.end(), f) == excluded.end()) {
      mask.columns_.push_back(f);
    }
  }
  return mask;
}

std::vector<std::string> FeatureMask::names() const {
  std::vector<std::string> out;
  for (auto f : columns_) out.emplace_back(kFeatureNames[static_cast<std::size_t>(f)]);
  return out;
}

void FeatureMask::project(const FeatureVector& full, std::vector<double>& out) const {
  out.clear();
  for (auto f : columns_) out.push_back(full[static_cast<std::size_t>(f)]);
}

void write_feature_matrix(std::ostream& out, const FeatureMask& mask,
                          std::span<const FeatureRow> rows) {
  out << "impression_id,label";
  for (const auto& name : mask.names()) out << ',' << name;
  out << '\n';
  std::vector<double> projected;
  for (const auto& row : rows) {
    out << row.impression_id << ',' << row.label;
    projected.clear();
    mask.project(row.values, projected);
    for (double v : projected) out << ',' << format_real(v);
    out << '\n';
  }
}

}  // namespace qsuggest
