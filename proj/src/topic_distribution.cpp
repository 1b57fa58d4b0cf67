#include "qsuggest/topic_distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qsuggest {

TopicDistribution::TopicDistribution(std::vector<double> probs) : p_(std::move(probs)) {
  if (p_.empty()) throw std::invalid_argument("topic distribution must be non-empty");
  double sum = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("topic distribution has a negative or non-finite entry");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kTolerance) {
    throw std::invalid_argument("topic distribution does not sum to 1");
  }
}

TopicDistribution TopicDistribution::uniform(std::size_t k) {
  return TopicDistribution(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

TopicDistribution TopicDistribution::from_weights(std::vector<double> weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(sum > 0.0)) throw std::invalid_argument("weights must have a positive sum");
  for (auto& w : weights) w /= sum;
  return TopicDistribution(std::move(weights));
}

std::size_t TopicDistribution::argmax() const {
  return static_cast<std::size_t>(std::max_element(p_.begin(), p_.end()) - p_.begin());
}

}  // namespace qsuggest
