#include "qsuggest/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "qsuggest/error.hpp"
#include "qsuggest/text.hpp"
#include "qsuggest/textio.hpp"

namespace qsuggest {

namespace {

constexpr std::string_view kEnsembleMagic = "qsuggest-ensemble 1";
constexpr double kMinGain = 1e-12;
constexpr double kZeroHessian = 1e-12;

double discount(std::size_t rank, int truncation) {
  return rank < static_cast<std::size_t>(truncation) ? 1.0 / std::log2(static_cast<double>(rank) + 2.0)
                                                     : 0.0;
}

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

/// Greedy leaf-wise regression tree on dense features.
class TreeLearner {
 public:
  TreeLearner(std::span<const double> features, std::size_t num_rows, std::size_t num_features,
              const TrainConfig& config)
      : x_(features), rows_(num_rows), width_(num_features), config_(config) {
    sorted_.resize(width_);
    for (std::size_t f = 0; f < width_; ++f) {
      auto& idx = sorted_[f];
      idx.resize(rows_);
      std::iota(idx.begin(), idx.end(), 0u);
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::uint32_t a, std::uint32_t b) { return value(a, f) < value(b, f); });
    }
    leaf_of_.resize(rows_);
  }

  /// Fits targets; `leaf_values` receives the per-row output of the new tree.
  RegressionTree fit(std::span<const double> gradients, std::span<const double> hessians,
                     std::vector<double>& row_output) {
    std::fill(leaf_of_.begin(), leaf_of_.end(), 0);
    std::vector<RegressionTree::Node> nodes(1);
    std::vector<int> leaves{0};
    std::vector<SplitCandidate> pending(1);
    pending[0] = best_split(0, gradients);

    while (static_cast<int>(leaves.size()) < config_.num_leaves) {
      int pick = -1;
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        const auto& c = pending[leaves[i]];
        if (c.feature < 0 || c.gain <= kMinGain) continue;
        if (pick < 0 || c.gain > pending[leaves[pick]].gain) pick = static_cast<int>(i);
      }
      if (pick < 0) break;
      const int node = leaves[pick];
      const auto split = pending[node];
      const int left = static_cast<int>(nodes.size());
      const int right = left + 1;
      nodes.resize(nodes.size() + 2);
      pending.resize(nodes.size());
      nodes[node].feature = split.feature;
      nodes[node].threshold = split.threshold;
      nodes[node].left = left;
      nodes[node].right = right;
      for (std::size_t r = 0; r < rows_; ++r) {
        if (leaf_of_[r] != node) continue;
        leaf_of_[r] = value(r, split.feature) < split.threshold ? left : right;
      }
      leaves[pick] = left;
      leaves.push_back(right);
      pending[left] = best_split(left, gradients);
      pending[right] = best_split(right, gradients);
    }

    std::vector<double> sum_g(nodes.size(), 0.0);
    std::vector<double> sum_h(nodes.size(), 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
      sum_g[leaf_of_[r]] += gradients[r];
      sum_h[leaf_of_[r]] += hessians[r];
    }
    for (int leaf : leaves) {
      nodes[leaf].value = sum_h[leaf] > kZeroHessian ? sum_g[leaf] / sum_h[leaf] : 0.0;
    }
    row_output.resize(rows_);
    for (std::size_t r = 0; r < rows_; ++r) row_output[r] = nodes[leaf_of_[r]].value;
    return RegressionTree(std::move(nodes));
  }

 private:
  double value(std::size_t row, std::size_t f) const { return x_[row * width_ + f]; }

  SplitCandidate best_split(int node, std::span<const double> g) const {
    std::size_t n = 0;
    double total = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (leaf_of_[r] == node) {
        ++n;
        total += g[r];
      }
    }
    SplitCandidate best;
    const auto min_leaf = static_cast<std::size_t>(config_.min_instances_per_leaf);
    if (n < 2 * min_leaf || n < 2) return best;
    const double parent = total * total / static_cast<double>(n);
    for (std::size_t f = 0; f < width_; ++f) {
      std::size_t left_n = 0;
      double left_sum = 0.0;
      double prev_value = 0.0;
      for (auto r : sorted_[f]) {
        if (leaf_of_[r] != node) continue;
        const double v = value(r, f);
        if (left_n >= min_leaf && n - left_n >= min_leaf && v > prev_value) {
          const double right_sum = total - left_sum;
          const double gain = left_sum * left_sum / static_cast<double>(left_n) +
                              right_sum * right_sum / static_cast<double>(n - left_n) - parent;
          if (gain > best.gain) {
            double threshold = prev_value + (v - prev_value) / 2.0;
            if (!(threshold > prev_value)) threshold = v;
            best = {gain, static_cast<int>(f), threshold};
          }
        }
        ++left_n;
        left_sum += g[r];
        prev_value = v;
      }
    }
    return best;
  }

  std::span<const double> x_;
  std::size_t rows_;
  std::size_t width_;
  const TrainConfig& config_;
  std::vector<std::vector<std::uint32_t>> sorted_;
  std::vector<int> leaf_of_;
};

void write_tree(std::ostream& out, const std::vector<RegressionTree::Node>& nodes, int id) {
  const auto& n = nodes[id];
  if (n.feature < 0) {
    out << "leaf " << format_real(n.value) << '\n';
    return;
  }
  out << "split " << n.feature << ' ' << format_real(n.threshold) << '\n';
  write_tree(out, nodes, n.left);
  write_tree(out, nodes, n.right);
}

int read_tree(ArtifactReader& r, std::vector<RegressionTree::Node>& nodes, std::size_t& budget) {
  if (budget == 0) r.fail("tree has more records than declared");
  --budget;
  const auto line = r.line();
  const auto parts = split(line, ' ');
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (parts.size() == 2 && parts[0] == "leaf") {
    nodes[id].value = parse_real(parts[1]);
    return id;
  }
  if (parts.size() != 3 || parts[0] != "split") r.fail(fmt::format("bad tree record '{}'", line));
  nodes[id].feature = static_cast<int>(parse_integer(parts[1]));
  nodes[id].threshold = parse_real(parts[2]);
  const int left = read_tree(r, nodes, budget);
  const int right = read_tree(r, nodes, budget);
  nodes[id].left = left;
  nodes[id].right = right;
  return id;
}

}  // namespace

void TrainConfig::validate() const {
  if (num_trees < 1 || num_leaves < 2 || min_instances_per_leaf < 1 || ndcg_truncation < 1) {
    throw ConfigError("ranker: tree counts, leaves (>= 2), leaf size and truncation must be positive");
  }
  if (!(learning_rate > 0.0) || !(sigmoid > 0.0)) {
    throw ConfigError("ranker: learning_rate and sigmoid must be positive");
  }
}

std::uint64_t FeatureSchema::fingerprint() const { return stable_hash(join(names, ",")); }

void RankingGroup::add_row(std::span<const double> values, int label) {
  if (values.size() != num_features) throw std::invalid_argument("row width mismatch");
  features.insert(features.end(), values.begin(), values.end());
  labels.push_back(label);
}

bool RankingGroup::trainable() const {
  const bool has_pos = std::any_of(labels.begin(), labels.end(), [](int l) { return l > 0; });
  const bool has_neg = std::any_of(labels.begin(), labels.end(), [](int l) { return l <= 0; });
  return has_pos && has_neg;
}

RegressionTree::RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw std::invalid_argument("tree needs a root");
  for (const auto& n : nodes_) {
    if (n.feature >= 0) {
      const auto size = static_cast<int>(nodes_.size());
      if (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size) {
        throw std::invalid_argument("split node with a missing child");
      }
    }
  }
}

double RegressionTree::predict(std::span<const double> x) const {
  int id = 0;
  while (nodes_[id].feature >= 0) {
    const auto& n = nodes_[id];
    id = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
  return nodes_[id].value;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

double RankingEnsemble::predict(std::span<const double> x) const {
  if (x.size() != schema_.width()) {
    throw std::invalid_argument(
        fmt::format("feature vector has {} columns, model expects {}", x.size(), schema_.width()));
  }
  double score = 0.0;
  for (const auto& t : trees_) score += learning_rate_ * t.predict(x);
  return score;
}

void RankingEnsemble::check_schema(const FeatureSchema& schema) const {
  if (schema.fingerprint() != schema_.fingerprint() || !(schema == schema_)) {
    throw std::invalid_argument(fmt::format("feature schema {:016x} does not match model schema {:016x}",
                                            schema.fingerprint(), schema_.fingerprint()));
  }
}

void RankingEnsemble::save(std::ostream& out) const {
  out << kEnsembleMagic << '\n';
  out << "learning_rate " << format_real(learning_rate_) << '\n';
  out << "features " << schema_.width() << '\n';
  for (const auto& n : schema_.names) out << n << '\n';
  out << "fingerprint " << fmt::format("{:016x}", schema_.fingerprint()) << '\n';
  out << "trees " << trees_.size() << '\n';
  for (const auto& t : trees_) {
    out << "tree " << t.nodes().size() << '\n';
    write_tree(out, t.nodes(), 0);
  }
}

RankingEnsemble RankingEnsemble::load(std::istream& in) {
  ArtifactReader r(in, "ensemble");
  r.expect(kEnsembleMagic);
  const double lr = parse_real(r.field("learning_rate"));
  const auto width = static_cast<std::size_t>(parse_integer(r.field("features")));
  FeatureSchema schema;
  for (std::size_t i = 0; i < width; ++i) schema.names.push_back(r.line());
  const auto fp = r.field("fingerprint");
  if (fp != fmt::format("{:016x}", schema.fingerprint())) {
    r.fail("fingerprint does not match the feature names");
  }
  RankingEnsemble ensemble(std::move(schema), lr);
  const auto num_trees = static_cast<std::size_t>(parse_integer(r.field("trees")));
  for (std::size_t t = 0; t < num_trees; ++t) {
    auto budget = static_cast<std::size_t>(parse_integer(r.field("tree")));
    const auto declared = budget;
    std::vector<RegressionTree::Node> nodes;
    read_tree(r, nodes, budget);
    if (nodes.size() != declared) r.fail("tree has fewer records than declared");
    for (const auto& n : nodes) {
      if (n.feature >= static_cast<int>(width)) r.fail("split on an unknown feature");
    }
    ensemble.add_tree(RegressionTree(std::move(nodes)));
  }
  return ensemble;
}

std::vector<std::size_t> rerank_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

double ndcg_at(std::span<const double> scores, std::span<const int> labels, int k) {
  const auto positives = static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](int l) { return l > 0; }));
  if (positives == 0) return 0.0;
  double ideal = 0.0;
  for (std::size_t r = 0; r < positives; ++r) ideal += discount(r, k);
  const auto order = rerank_order(scores);
  double dcg = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]] > 0) dcg += discount(r, k);
  }
  return dcg / ideal;
}

void compute_lambdas(std::span<const double> scores, std::span<const int> labels, int truncation,
                     double sigmoid, std::span<double> lambdas, std::span<double> weights) {
  std::fill(lambdas.begin(), lambdas.end(), 0.0);
  std::fill(weights.begin(), weights.end(), 0.0);
  const std::size_t n = labels.size();
  std::size_t positives = 0;
  for (int l : labels) positives += l > 0 ? 1 : 0;
  if (positives == 0 || positives == n) return;

  const auto order = rerank_order(scores);
  std::vector<std::size_t> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r;
  double ideal = 0.0;
  for (std::size_t r = 0; r < positives; ++r) ideal += discount(r, truncation);

  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] <= 0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (labels[j] > 0) continue;
      const double delta =
          std::abs(discount(rank[i], truncation) - discount(rank[j], truncation)) / ideal;
      if (delta == 0.0) continue;
      const double rho = 1.0 / (1.0 + std::exp(sigmoid * (scores[i] - scores[j])));
      const double lambda = sigmoid * rho * delta;
      const double weight = sigmoid * sigmoid * rho * (1.0 - rho) * delta;
      lambdas[i] += lambda;
      lambdas[j] -= lambda;
      weights[i] += weight;
      weights[j] += weight;
    }
  }
}

RankingEnsemble train_lambdamart(std::span<const RankingGroup> groups, const FeatureSchema& schema,
                                 const TrainConfig& config, TrainingTrace* trace) {
  config.validate();
  std::size_t total_rows = 0;
  for (const auto& g : groups) {
    if (g.num_features != schema.width()) {
      throw std::invalid_argument("ranking group width does not match the feature schema");
    }
    total_rows += g.size();
    for (double v : g.features) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
    }
  }
  if (groups.empty() || total_rows == 0) throw std::invalid_argument("no ranking groups to train on");

  std::vector<double> features;
  features.reserve(total_rows * schema.width());
  std::vector<std::size_t> offsets;
  for (const auto& g : groups) {
    offsets.push_back(features.size() / std::max<std::size_t>(schema.width(), 1));
    features.insert(features.end(), g.features.begin(), g.features.end());
  }

  TreeLearner learner(features, total_rows, schema.width(), config);
  std::vector<double> scores(total_rows, 0.0);
  std::vector<double> lambdas(total_rows, 0.0);
  std::vector<double> weights(total_rows, 0.0);
  std::vector<double> tree_output;

  auto mean_ndcg = [&] {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      if (!groups[gi].trainable()) continue;
      sum += ndcg_at(std::span<const double>(scores).subspan(offsets[gi], groups[gi].size()),
                     groups[gi].labels, config.ndcg_truncation);
      ++count;
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
  };
  if (trace != nullptr) trace->mean_ndcg = {mean_ndcg()};

  RankingEnsemble ensemble(schema, config.learning_rate);
  for (int t = 0; t < config.num_trees; ++t) {
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      const auto off = offsets[gi];
      const auto len = groups[gi].size();
      compute_lambdas(std::span<const double>(scores).subspan(off, len), groups[gi].labels,
                      config.ndcg_truncation, config.sigmoid,
                      std::span<double>(lambdas).subspan(off, len),
                      std::span<double>(weights).subspan(off, len));
    }
    for (std::size_t r = 0; r < total_rows; ++r) {
      if (!std::isfinite(lambdas[r]) || !std::isfinite(weights[r])) {
        throw std::runtime_error(fmt::format("non-finite lambda at tree {}, row {}", t, r));
      }
    }
    auto tree = learner.fit(lambdas, weights, tree_output);
    for (std::size_t r = 0; r < total_rows; ++r) scores[r] += config.learning_rate * tree_output[r];
    ensemble.add_tree(std::move(tree));
    if (trace != nullptr) trace->mean_ndcg.push_back(mean_ndcg());
  }
  return ensemble;
}

std::vector<std::size_t> rerank(const RankingEnsemble& ensemble, const FeatureSchema& schema,
                                const RankingGroup& group) {
  ensemble.check_schema(schema);
  std::vector<double> scores(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) scores[i] = ensemble.predict(group.row(i));
  return rerank_order(scores);
}

}  // namespace qsuggest
