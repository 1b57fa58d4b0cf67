#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qsuggest/corpus_index.hpp"
#include "qsuggest/topic_distribution.hpp"

namespace qsuggest {

/// Recency decay shared by both profiles. Distinct from the LDA prior.
struct DecayParams {
  double decay_alpha = 0.95;

  void validate() const;
};

/// lambda_t proportional to decay_alpha^(t-1), t = 1 the most recent event,
/// rescaled to sum to one. 0^0 is taken as 1.
std::vector<double> decay_weights(std::size_t n, double decay_alpha);

struct ClickProfile {
  TopicDistribution dist;
  std::size_t n_clicks = 0;
};

struct QueryProfile {
  TopicDistribution dist;
  std::size_t n_queries = 0;
};

/// Decayed mixture of the clicked documents' topic distributions, most recent
/// first. nullopt when there are no clicks (profile unavailable).
std::optional<ClickProfile> build_click_profile(std::span<const TopicDistribution> most_recent_first,
                                                const DecayParams& decay);

/// P(Z|q): the average topic distribution of the documents that contain every
/// query word; nullopt when no document does.
std::optional<TopicDistribution> query_topic_dist(std::string_view query, const InvertedIndex& index,
                                                  std::span<const TopicDistribution> doc_topics);

/// Decayed mixture of query distributions, most recent first. Undefined
/// entries are dropped before decay positions are assigned.
std::optional<QueryProfile> build_query_profile(
    std::span<const std::optional<TopicDistribution>> most_recent_first, const DecayParams& decay);

/// Natural-log KL(p || q). Throws std::domain_error when p(z) > 0 and q(z) = 0.
double kl_divergence(std::span<const double> p, std::span<const double> q);
double kl_divergence(const TopicDistribution& p, const TopicDistribution& q);

double js_divergence(const TopicDistribution& p, const TopicDistribution& q);

/// Negative Jensen-Shannon divergence, in [-ln 2, 0].
double profile_similarity(const TopicDistribution& suggestion, const TopicDistribution& profile);

}  // namespace qsuggest
