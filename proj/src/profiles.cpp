#include "qsuggest/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qsuggest/error.hpp"

namespace qsuggest {

namespace {

TopicDistribution mixture(std::span<const TopicDistribution* const> dists,
                          std::span<const double> weights) {
  const auto k = dists.front()->size();
  std::vector<double> mixed(k, 0.0);
  for (std::size_t i = 0; i < dists.size(); ++i) {
    if (dists[i]->size() != k) throw std::invalid_argument("topic distributions differ in width");
    for (std::size_t z = 0; z < k; ++z) mixed[z] += weights[i] * (*dists[i])[z];
  }
  return TopicDistribution::from_weights(std::move(mixed));
}

}  // namespace

void DecayParams::validate() const {
  if (!(decay_alpha >= 0.0 && decay_alpha <= 1.0)) {
    throw ConfigError("decay_alpha must lie in [0, 1]");
  }
}

std::vector<double> decay_weights(std::size_t n, double decay_alpha) {
  if (n == 0) throw std::invalid_argument("decay_weights needs at least one event");
  if (!(decay_alpha >= 0.0 && decay_alpha <= 1.0)) {
    throw std::invalid_argument("decay_alpha must lie in [0, 1]");
  }
  std::vector<double> w(n);
  double raw = 1.0;
  double total = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    w[t] = raw;
    total += raw;
    raw *= decay_alpha;
  }
  for (auto& v : w) v /= total;
  return w;
}

std::optional<ClickProfile> build_click_profile(std::span<const TopicDistribution> most_recent_first,
                                                const DecayParams& decay) {
  if (most_recent_first.empty()) return std::nullopt;
  std::vector<const TopicDistribution*> dists;
  for (const auto& d : most_recent_first) dists.push_back(&d);
  const auto weights = decay_weights(dists.size(), decay.decay_alpha);
  return ClickProfile{mixture(dists, weights), dists.size()};
}

std::optional<TopicDistribution> query_topic_dist(std::string_view query, const InvertedIndex& index,
                                                  std::span<const TopicDistribution> doc_topics) {
  const auto docs = index.docs_containing_all_terms(query);
  if (docs.empty()) return std::nullopt;
  const auto k = doc_topics[docs.front()].size();
  std::vector<double> sum(k, 0.0);
  for (auto d : docs) {
    for (std::size_t z = 0; z < k; ++z) sum[z] += doc_topics[d][z];
  }
  const double inv = 1.0 / static_cast<double>(docs.size());
  for (auto& v : sum) v *= inv;
  return TopicDistribution::from_weights(std::move(sum));
}

std::optional<QueryProfile> build_query_profile(
    std::span<const std::optional<TopicDistribution>> most_recent_first, const DecayParams& decay) {
  std::vector<const TopicDistribution*> dists;
  for (const auto& d : most_recent_first) {
    if (d) dists.push_back(&*d);
  }
  if (dists.empty()) return std::nullopt;
  const auto weights = decay_weights(dists.size(), decay.decay_alpha);
  return QueryProfile{mixture(dists, weights), dists.size()};
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("KL operands differ in width");
  double kl = 0.0;
  for (std::size_t z = 0; z < p.size(); ++z) {
    if (p[z] == 0.0) continue;
    if (q[z] == 0.0) throw std::domain_error("KL divergence is infinite: q(z) = 0 where p(z) > 0");
    kl += p[z] * std::log(p[z] / q[z]);
  }
  return kl;
}

double kl_divergence(const TopicDistribution& p, const TopicDistribution& q) {
  return kl_divergence(p.values(), q.values());
}

double js_divergence(const TopicDistribution& p, const TopicDistribution& q) {
  if (p.size() != q.size()) throw std::invalid_argument("JS operands differ in width");
  std::vector<double> m(p.size());
  for (std::size_t z = 0; z < p.size(); ++z) m[z] = 0.5 * (p[z] + q[z]);
  const double js = 0.5 * kl_divergence(p.values(), m) + 0.5 * kl_divergence(q.values(), m);
  // Rounding can leave the result a hair outside [0, ln 2].
  return std::clamp(js, 0.0, std::numbers::ln2);
}

double profile_similarity(const TopicDistribution& suggestion, const TopicDistribution& profile) {
  return -js_divergence(suggestion, profile);
}

}  // namespace qsuggest
