#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "qsuggest/corpus_index.hpp"
#include "qsuggest/log_model.hpp"
#include "qsuggest/rng.hpp"
#include "qsuggest/topic_distribution.hpp"

namespace qsuggest {

struct LdaHyperparams {
  int num_topics = 50;
  /// Symmetric document-topic prior. Unset means 50 / num_topics.
  std::optional<double> dirichlet_alpha;
  double dirichlet_beta = 0.01;
  int gibbs_iterations = 500;
  int burn_in = 100;
  int sample_lag = 10;
  int inference_iterations = 100;
  int inference_burn_in = 50;
  int min_df = 2;
  std::uint64_t rng_seed = 42;

  double alpha() const { return dirichlet_alpha.value_or(50.0 / num_topics); }
  /// Throws ConfigError.
  void validate() const;
};

/// English stopwords removed before topic modelling (containment queries
/// never see this list).
const std::unordered_set<std::string>& topic_stopwords();

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> terms);

  std::size_t size() const { return terms_.size(); }
  const std::string& term(std::size_t id) const { return terms_.at(id); }
  const std::vector<std::string>& terms() const { return terms_; }
  std::optional<int> find(std::string_view term) const;

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, int> ids_;
};

/// Collapsed Gibbs sampler over documents given as word-id sequences.
class GibbsSampler {
 public:
  GibbsSampler(std::vector<std::vector<int>> docs, int vocab_size, int num_topics,
               double alpha, double beta, std::uint64_t seed);

  /// Resamples every token's topic once, in document order.
  void sweep();

  int num_topics() const { return num_topics_; }
  std::size_t num_docs() const { return docs_.size(); }
  std::span<const int> assignments(std::size_t doc) const { return z_[doc]; }

  /// Row-major K x V point estimate from the current counts.
  std::vector<double> phi_estimate() const;
  std::vector<double> theta_estimate(std::size_t doc) const;

 private:
  std::vector<std::vector<int>> docs_;
  std::vector<std::vector<int>> z_;
  int vocab_size_;
  int num_topics_;
  double alpha_;
  double beta_;
  std::vector<int> doc_topic_;   // D x K
  std::vector<int> topic_word_;  // K x V
  std::vector<int> topic_total_;
  std::vector<double> weights_;
  Rng rng_;
};

class TopicModel {
 public:
  TopicModel() = default;
  /// phi is row-major K x V; one theta per training document.
  TopicModel(LdaHyperparams hyper, Vocabulary vocab, std::vector<double> phi,
             std::vector<std::string> doc_ids, std::vector<TopicDistribution> thetas);

  int num_topics() const { return hyper_.num_topics; }
  std::size_t vocab_size() const { return vocab_.size(); }
  const LdaHyperparams& hyperparams() const { return hyper_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  double phi(int topic, int word) const { return phi_[topic * vocab_.size() + word]; }
  std::span<const double> phi_row(int topic) const {
    return std::span<const double>(phi_).subspan(topic * vocab_.size(), vocab_.size());
  }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  const std::vector<TopicDistribution>& thetas() const { return thetas_; }
  std::optional<std::size_t> training_doc(std::string_view doc_id) const;

  /// Latest log event the model was trained from, for leakage checks.
  const std::optional<Timestamp>& trained_through() const { return trained_through_; }
  void set_trained_through(std::optional<Timestamp> ts) { trained_through_ = ts; }

  /// Versioned text format; doubles printed with 17 significant digits.
  void save(std::ostream& out) const;
  static TopicModel load(std::istream& in);

 private:
  LdaHyperparams hyper_;
  Vocabulary vocab_;
  std::vector<double> phi_;
  std::vector<std::string> doc_ids_;
  std::vector<TopicDistribution> thetas_;
  std::unordered_map<std::string, std::size_t> doc_lookup_;
  std::optional<Timestamp> trained_through_;
};

struct LdaDocument {
  std::string doc_id;
  std::vector<std::string> tokens;
};

/// Removes stopwords and terms with document frequency below min_df, then
/// maps the survivors to ids (sorted lexicographically).
struct PreparedTopicCorpus {
  Vocabulary vocab;
  std::vector<std::vector<int>> docs;
};
PreparedTopicCorpus prepare_topic_corpus(std::span<const LdaDocument> docs, int min_df);

/// Trains by collapsed Gibbs sampling; phi and theta are averages of the
/// samples taken every sample_lag sweeps after burn_in.
TopicModel train_lda(std::span<const LdaDocument> docs, const LdaHyperparams& hyper);

/// Fold-in Gibbs with phi frozen. Out-of-vocabulary tokens are ignored; a
/// document with no known tokens gets the uniform distribution.
TopicDistribution infer_doc_topics(const TopicModel& model, std::span<const std::string> tokens,
                                   std::uint64_t seed);
/// Seeds from (model seed, doc_id).
TopicDistribution infer_doc_topics(const TopicModel& model, const LdaDocument& doc);

/// Document-completion perplexity: theta is folded in on the odd-indexed
/// in-vocabulary tokens of each document and the even-indexed tokens are
/// scored. Throws DataError when every held-out token is out of vocabulary.
double perplexity(const TopicModel& model, std::span<const LdaDocument> heldout);

struct TopicCountSelection {
  int best = 0;
  std::vector<std::pair<int, double>> perplexities;  // (K, held-out perplexity)
};

/// Lowest perplexity; values within 1e-12 of each other go to the smaller K.
int best_topic_count(std::span<const std::pair<int, double>> perplexities);

/// Holds out validation_fraction of the documents, trains one model per
/// candidate on the rest and keeps the lowest perplexity (ties to smaller K).
TopicCountSelection select_topic_count(std::span<const LdaDocument> docs,
                                       std::span<const int> candidates,
                                       const LdaHyperparams& base,
                                       double validation_fraction = 0.10);

/// P(Z|d) for every document in the index: the training theta where the
/// document was part of training, fold-in inference otherwise.
std::vector<TopicDistribution> infer_corpus_topics(const TopicModel& model,
                                                   const InvertedIndex& index);

void write_doc_topics(std::ostream& out, const InvertedIndex& index,
                      std::span<const TopicDistribution> topics);
/// Returns topics aligned with the index; throws DataError when a document
/// is missing or widths disagree.
std::vector<TopicDistribution> read_doc_topics(std::istream& in, const InvertedIndex& index);

}  // namespace qsuggest
