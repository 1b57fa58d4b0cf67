#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace qsuggest {

struct TrainConfig {
  int num_trees = 100;
  int num_leaves = 10;
  int min_instances_per_leaf = 200;
  double learning_rate = 0.15;
  int ndcg_truncation = 10;
  double sigmoid = 1.0;
  std::uint64_t rng_seed = 42;

  void validate() const;
};

/// Ordered feature names; the ensemble refuses vectors from another schema.
struct FeatureSchema {
  std::vector<std::string> names;

  std::size_t width() const { return names.size(); }
  std::uint64_t fingerprint() const;
  bool operator==(const FeatureSchema&) const = default;
};

/// One impression: row-major features and binary labels.
struct RankingGroup {
  std::size_t num_features = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features).subspan(i * num_features, num_features);
  }
  void add_row(std::span<const double> values, int label);
  bool trainable() const;
};

class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
  };

  RegressionTree() : nodes_(1) {}
  explicit RegressionTree(std::vector<Node> nodes);

  /// Goes left iff x[feature] < threshold.
  double predict(std::span<const double> x) const;
  std::size_t leaf_count() const;
  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  std::vector<Node> nodes_;  // nodes_[0] is the root
};

class RankingEnsemble {
 public:
  RankingEnsemble() = default;
  RankingEnsemble(FeatureSchema schema, double learning_rate)
      : schema_(std::move(schema)), learning_rate_(learning_rate) {}

  const FeatureSchema& schema() const { return schema_; }
  double learning_rate() const { return learning_rate_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  void add_tree(RegressionTree tree) { trees_.push_back(std::move(tree)); }

  /// Sum of learning_rate * tree(x). Throws std::invalid_argument on a width
  /// mismatch.
  double predict(std::span<const double> x) const;
  /// Throws std::invalid_argument when `schema` differs from the training one.
  void check_schema(const FeatureSchema& schema) const;

  /// Trees in preorder as `split <feature> <threshold>` / `leaf <value>`.
  void save(std::ostream& out) const;
  static RankingEnsemble load(std::istream& in);

 private:
  FeatureSchema schema_;
  double learning_rate_ = 0.1;
  std::vector<RegressionTree> trees_;
};

/// nDCG@k with gain = label and discount 1/log2(rank + 1), ranking by score
/// (descending, ties by original order). 0 when the group has no positive.
double ndcg_at(std::span<const double> scores, std::span<const int> labels, int k);

/// Per-document lambdas (ascent direction) and second-order weights from all
/// (positive, negative) pairs, each weighted by |delta nDCG@truncation|.
/// Output spans are overwritten.
void compute_lambdas(std::span<const double> scores, std::span<const int> labels, int truncation,
                     double sigmoid, std::span<double> lambdas, std::span<double> weights);

struct TrainingTrace {
  /// Mean training nDCG@truncation over trainable groups; entry 0 is before
  /// the first tree.
  std::vector<double> mean_ndcg;
};

/// LambdaMART. Throws std::invalid_argument on empty input or non-finite features and
/// std::runtime_error on a non-finite gradient.
RankingEnsemble train_lambdamart(std::span<const RankingGroup> groups, const FeatureSchema& schema,
                                 const TrainConfig& config, TrainingTrace* trace = nullptr);

/// Stable sort by descending score: ties keep input order.
std::vector<std::size_t> rerank_order(std::span<const double> scores);

/// Scores every row of `group` and returns the new order of row indices.
std::vector<std::size_t> rerank(const RankingEnsemble& ensemble, const FeatureSchema& schema,
                                const RankingGroup& group);

}  // namespace qsuggest
