#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qsuggest {

/// Normalized probability vector over K latent topics. Shared by documents,
/// queries and user profiles.
class TopicDistribution {
 public:
  static constexpr double kTolerance = 1e-9;

  TopicDistribution() = default;

  /// Throws std::invalid_argument unless entries are non-negative and sum to
  /// 1 within kTolerance.
  explicit TopicDistribution(std::vector<double> probs);

  static TopicDistribution uniform(std::size_t k);
  /// Rescales non-negative weights with a positive sum.
  static TopicDistribution from_weights(std::vector<double> weights);

  std::size_t size() const { return p_.size(); }
  bool empty() const { return p_.empty(); }
  double operator[](std::size_t z) const { return p_[z]; }
  std::span<const double> values() const { return p_; }
  std::size_t argmax() const;

  bool operator==(const TopicDistribution&) const = default;

 private:
  std::vector<double> p_;
};

}  // namespace qsuggest
