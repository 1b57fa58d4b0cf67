#include "qsuggest/topic_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include "qsuggest/error.hpp"
#include "qsuggest/text.hpp"
#include "qsuggest/textio.hpp"

namespace qsuggest {

namespace {

constexpr std::string_view kModelMagic = "qsuggest-lda-model 1";

std::uint64_t doc_seed(std::uint64_t seed, std::string_view doc_id) {
  return splitmix64(seed ^ stable_hash(doc_id));
}

int sample_index(std::span<const double> weights, double total, Rng& rng) {
  double u = rng.uniform() * total;
  for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
    u -= weights[k];
    if (u < 0.0) return static_cast<int>(k);
  }
  return static_cast<int>(weights.size()) - 1;
}

std::vector<int> known_word_ids(const Vocabulary& vocab, std::span<const std::string> tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (auto id = vocab.find(t)) ids.push_back(*id);
  }
  return ids;
}

TopicDistribution fold_in(const TopicModel& model, std::span<const int> words, std::uint64_t seed) {
  const int k_topics = model.num_topics();
  if (words.empty()) return TopicDistribution::uniform(static_cast<std::size_t>(k_topics));
  const auto& hyper = model.hyperparams();
  const double alpha = hyper.alpha();
  const double n = static_cast<double>(words.size());

  Rng rng(seed);
  std::vector<int> z(words.size());
  std::vector<int> counts(k_topics, 0);
  for (auto& topic : z) {
    topic = static_cast<int>(rng.below(static_cast<std::uint64_t>(k_topics)));
    ++counts[topic];
  }

  std::vector<double> weights(k_topics);
  std::vector<double> accum(k_topics, 0.0);
  int samples = 0;
  for (int it = 1; it <= hyper.inference_iterations; ++it) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      --counts[z[i]];
      double total = 0.0;
      for (int k = 0; k < k_topics; ++k) {
        weights[k] = model.phi(k, words[i]) * (counts[k] + alpha);
        total += weights[k];
      }
      z[i] = sample_index(weights, total, rng);
      ++counts[z[i]];
    }
    if (it > hyper.inference_burn_in) {
      for (int k = 0; k < k_topics; ++k) accum[k] += (counts[k] + alpha) / (n + k_topics * alpha);
      ++samples;
    }
  }
  if (samples == 0) {
    for (int k = 0; k < k_topics; ++k) accum[k] = (counts[k] + alpha) / (n + k_topics * alpha);
  }
  return TopicDistribution::from_weights(std::move(accum));
}

}  // namespace

void LdaHyperparams::validate() const {
  if (num_topics < 2) throw ConfigError("lda: topic count must be at least 2");
  if (dirichlet_alpha && !(*dirichlet_alpha > 0.0)) {
    throw ConfigError("lda: dirichlet_alpha must be positive");
  }
  if (!(dirichlet_beta > 0.0)) throw ConfigError("lda: dirichlet_beta must be positive");
  if (gibbs_iterations < 1 || sample_lag < 1 || burn_in < 0) {
    throw ConfigError("lda: iterations and sample lag must be positive");
  }
  if (burn_in >= gibbs_iterations) throw ConfigError("lda: burn_in must be below gibbs_iterations");
  if (inference_iterations < 1 || inference_burn_in < 0) {
    throw ConfigError("lda: inference iterations must be positive");
  }
  if (min_df < 1) throw ConfigError("lda: min_df must be at least 1");
}

const std::unordered_set<std::string>& topic_stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",     "about", "above", "after", "again", "against", "all",   "am",    "an",
      "and",   "any",   "are",   "as",    "at",    "be",      "because", "been", "before",
      "being", "below", "between", "both", "but",  "by",      "can",   "could", "did",
      "do",    "does",  "doing", "down",  "during", "each",   "few",   "for",   "from",
      "further", "had", "has",   "have",  "having", "he",     "her",   "here",  "hers",
      "him",   "his",   "how",   "i",     "if",    "in",      "into",  "is",    "it",
      "its",   "itself", "just", "me",    "more",  "most",    "my",    "no",    "nor",
      "not",   "now",   "of",    "off",   "on",    "once",    "only",  "or",    "other",
      "our",   "ours",  "out",   "over",  "own",   "same",    "she",   "should", "so",
      "some",  "such",  "than",  "that",  "the",   "their",   "theirs", "them", "then",
      "there", "these", "they",  "this",  "those", "through", "to",    "too",   "under",
      "until", "up",    "very",  "was",   "we",    "were",    "what",  "when",  "where",
      "which", "while", "who",   "whom",  "why",   "will",    "with",  "would", "you",
      "your",  "yours"};
  return words;
}

Vocabulary::Vocabulary(std::vector<std::string> terms) : terms_(std::move(terms)) {
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!ids_.emplace(terms_[i], static_cast<int>(i)).second) {
      throw DataError(fmt::format("duplicate vocabulary term '{}'", terms_[i]));
    }
  }
}

std::optional<int> Vocabulary::find(std::string_view term) const {
  const auto it = ids_.find(std::string(term));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

GibbsSampler::GibbsSampler(std::vector<std::vector<int>> docs, int vocab_size, int num_topics,
                           double alpha, double beta, std::uint64_t seed)
    : docs_(std::move(docs)),
      vocab_size_(vocab_size),
      num_topics_(num_topics),
      alpha_(alpha),
      beta_(beta),
      doc_topic_(docs_.size() * num_topics, 0),
      topic_word_(static_cast<std::size_t>(num_topics) * vocab_size, 0),
      topic_total_(num_topics, 0),
      weights_(num_topics),
      rng_(seed) {
  z_.resize(docs_.size());
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    z_[d].resize(docs_[d].size());
    for (std::size_t i = 0; i < docs_[d].size(); ++i) {
      const int w = docs_[d][i];
      if (w < 0 || w >= vocab_size_) throw std::invalid_argument("word id out of range");
      const int k = static_cast<int>(rng_.below(static_cast<std::uint64_t>(num_topics_)));
      z_[d][i] = k;
      ++doc_topic_[d * num_topics_ + k];
      ++topic_word_[k * vocab_size_ + w];
      ++topic_total_[k];
    }
  }
}

void GibbsSampler::sweep() {
  const double vbeta = vocab_size_ * beta_;
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    int* nd = &doc_topic_[d * num_topics_];
    for (std::size_t i = 0; i < docs_[d].size(); ++i) {
      const int w = docs_[d][i];
      int k = z_[d][i];
      --nd[k];
      --topic_word_[k * vocab_size_ + w];
      --topic_total_[k];
      double total = 0.0;
      for (int t = 0; t < num_topics_; ++t) {
        weights_[t] = (nd[t] + alpha_) * (topic_word_[t * vocab_size_ + w] + beta_) /
                      (topic_total_[t] + vbeta);
        total += weights_[t];
      }
      k = sample_index(weights_, total, rng_);
      z_[d][i] = k;
      ++nd[k];
      ++topic_word_[k * vocab_size_ + w];
      ++topic_total_[k];
    }
  }
}

std::vector<double> GibbsSampler::phi_estimate() const {
  std::vector<double> phi(topic_word_.size());
  const double vbeta = vocab_size_ * beta_;
  for (int k = 0; k < num_topics_; ++k) {
    for (int w = 0; w < vocab_size_; ++w) {
      phi[k * vocab_size_ + w] = (topic_word_[k * vocab_size_ + w] + beta_) / (topic_total_[k] + vbeta);
    }
  }
  return phi;
}

std::vector<double> GibbsSampler::theta_estimate(std::size_t doc) const {
  std::vector<double> theta(num_topics_);
  const double n = static_cast<double>(docs_[doc].size());
  for (int k = 0; k < num_topics_; ++k) {
    theta[k] = (doc_topic_[doc * num_topics_ + k] + alpha_) / (n + num_topics_ * alpha_);
  }
  return theta;
}

TopicModel::TopicModel(LdaHyperparams hyper, Vocabulary vocab, std::vector<double> phi,
                       std::vector<std::string> doc_ids, std::vector<TopicDistribution> thetas)
    : hyper_(std::move(hyper)),
      vocab_(std::move(vocab)),
      phi_(std::move(phi)),
      doc_ids_(std::move(doc_ids)),
      thetas_(std::move(thetas)) {
  const auto k = static_cast<std::size_t>(hyper_.num_topics);
  if (phi_.size() != k * vocab_.size()) throw std::invalid_argument("phi has the wrong shape");
  if (doc_ids_.size() != thetas_.size()) throw std::invalid_argument("one theta per document");
  for (std::size_t t = 0; t < k; ++t) {
    double sum = 0.0;
    for (double v : phi_row(static_cast<int>(t))) sum += v;
    if (std::abs(sum - 1.0) > TopicDistribution::kTolerance) {
      throw std::invalid_argument("phi row does not sum to 1");
    }
  }
  for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
    if (thetas_[i].size() != k) throw std::invalid_argument("theta has the wrong width");
    doc_lookup_.emplace(doc_ids_[i], i);
  }
}

std::optional<std::size_t> TopicModel::training_doc(std::string_view doc_id) const {
  const auto it = doc_lookup_.find(std::string(doc_id));
  if (it == doc_lookup_.end()) return std::nullopt;
  return it->second;
}

void TopicModel::save(std::ostream& out) const {
  out << kModelMagic << '\n';
  out << "topics " << hyper_.num_topics << '\n';
  out << "vocab " << vocab_.size() << '\n';
  out << "dirichlet_alpha " << format_real(hyper_.alpha()) << '\n';
  out << "dirichlet_beta " << format_real(hyper_.dirichlet_beta) << '\n';
  out << "gibbs_iterations " << hyper_.gibbs_iterations << '\n';
  out << "burn_in " << hyper_.burn_in << '\n';
  out << "sample_lag " << hyper_.sample_lag << '\n';
  out << "inference_iterations " << hyper_.inference_iterations << '\n';
  out << "inference_burn_in " << hyper_.inference_burn_in << '\n';
  out << "min_df " << hyper_.min_df << '\n';
  out << "seed " << hyper_.rng_seed << '\n';
  out << "trained_through " << (trained_through_ ? format_timestamp(*trained_through_) : "-")
      << '\n';
  out << "docs " << doc_ids_.size() << '\n';
  out << "[vocabulary]\n";
  for (const auto& t : vocab_.terms()) out << t << '\n';
  out << "[phi]\n";
  for (int k = 0; k < hyper_.num_topics; ++k) {
    const auto row = phi_row(k);
    for (std::size_t w = 0; w < row.size(); ++w) out << (w ? " " : "") << format_real(row[w]);
    out << '\n';
  }
  out << "[theta]\n";
  for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
    out << doc_ids_[d];
    for (double v : thetas_[d].values()) out << '\t' << format_real(v);
    out << '\n';
  }
}

TopicModel TopicModel::load(std::istream& in) {
  ArtifactReader r(in, "topic model");
  r.expect(kModelMagic);
  LdaHyperparams hyper;
  hyper.num_topics = static_cast<int>(parse_integer(r.field("topics")));
  const auto vocab_size = static_cast<std::size_t>(parse_integer(r.field("vocab")));
  hyper.dirichlet_alpha = parse_real(r.field("dirichlet_alpha"));
  hyper.dirichlet_beta = parse_real(r.field("dirichlet_beta"));
  hyper.gibbs_iterations = static_cast<int>(parse_integer(r.field("gibbs_iterations")));
  hyper.burn_in = static_cast<int>(parse_integer(r.field("burn_in")));
  hyper.sample_lag = static_cast<int>(parse_integer(r.field("sample_lag")));
  hyper.inference_iterations = static_cast<int>(parse_integer(r.field("inference_iterations")));
  hyper.inference_burn_in = static_cast<int>(parse_integer(r.field("inference_burn_in")));
  hyper.min_df = static_cast<int>(parse_integer(r.field("min_df")));
  hyper.rng_seed = parse_unsigned(r.field("seed"));
  const auto through = r.field("trained_through");
  std::optional<Timestamp> trained_through;
  if (through != "-") {
    trained_through = parse_timestamp(through);
    if (!trained_through) r.fail("bad trained_through timestamp");
  }
  const auto num_docs = static_cast<std::size_t>(parse_integer(r.field("docs")));
  if (hyper.num_topics < 1) r.fail("bad topic count");

  r.expect("[vocabulary]");
  std::vector<std::string> terms;
  terms.reserve(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) terms.push_back(r.line());

  r.expect("[phi]");
  std::vector<double> phi;
  phi.reserve(vocab_size * hyper.num_topics);
  for (int k = 0; k < hyper.num_topics; ++k) {
    const auto row = r.line();
    const auto parts = split(row, ' ');
    if (parts.size() != vocab_size) r.fail("phi row has the wrong width");
    for (auto p : parts) phi.push_back(parse_real(p));
  }

  r.expect("[theta]");
  std::vector<std::string> doc_ids;
  std::vector<TopicDistribution> thetas;
  for (std::size_t d = 0; d < num_docs; ++d) {
    const auto row = r.line();
    const auto parts = split(row, '\t');
    if (parts.size() != static_cast<std::size_t>(hyper.num_topics) + 1) {
      r.fail("theta row has the wrong width");
    }
    doc_ids.emplace_back(parts[0]);
    std::vector<double> values;
    for (std::size_t i = 1; i < parts.size(); ++i) values.push_back(parse_real(parts[i]));
    thetas.emplace_back(std::move(values));
  }
  try {
    TopicModel model(hyper, Vocabulary(std::move(terms)), std::move(phi), std::move(doc_ids),
                     std::move(thetas));
    model.set_trained_through(trained_through);
    return model;
  } catch (const std::invalid_argument& e) {
    throw DataError(fmt::format("topic model: {}", e.what()));
  }
}

PreparedTopicCorpus prepare_topic_corpus(std::span<const LdaDocument> docs, int min_df) {
  const auto& stop = topic_stopwords();
  std::map<std::string, int> df;
  for (const auto& doc : docs) {
    std::vector<std::string> seen;
    for (const auto& t : doc.tokens) {
      if (!stop.contains(t)) seen.push_back(t);
    }
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (auto& t : seen) ++df[t];
  }
  std::vector<std::string> terms;
  for (const auto& [term, count] : df) {
    if (count >= min_df) terms.push_back(term);
  }
  PreparedTopicCorpus prepared;
  prepared.vocab = Vocabulary(std::move(terms));
  prepared.docs.reserve(docs.size());
  for (const auto& doc : docs) prepared.docs.push_back(known_word_ids(prepared.vocab, doc.tokens));
  return prepared;
}

TopicModel train_lda(std::span<const LdaDocument> docs, const LdaHyperparams& hyper) {
  hyper.validate();
  auto prepared = prepare_topic_corpus(docs, hyper.min_df);
  const auto vocab_size = prepared.vocab.size();
  if (vocab_size == 0) throw DataError("lda: empty effective vocabulary");
  const auto non_empty = std::count_if(prepared.docs.begin(), prepared.docs.end(),
                                       [](const auto& d) { return !d.empty(); });
  if (non_empty < 2) throw DataError("lda: need at least two documents with known tokens");
  if (static_cast<std::size_t>(hyper.num_topics) > vocab_size) {
    throw ConfigError(fmt::format("lda: {} topics exceed the effective vocabulary size {}",
                                  hyper.num_topics, vocab_size));
  }

  const int k_topics = hyper.num_topics;
  const std::size_t num_docs = prepared.docs.size();
  GibbsSampler sampler(prepared.docs, static_cast<int>(vocab_size), k_topics, hyper.alpha(),
                       hyper.dirichlet_beta, hyper.rng_seed);

  std::vector<double> phi_sum(static_cast<std::size_t>(k_topics) * vocab_size, 0.0);
  std::vector<double> theta_sum(num_docs * k_topics, 0.0);
  int samples = 0;
  auto accumulate = [&] {
    const auto phi = sampler.phi_estimate();
    for (std::size_t i = 0; i < phi.size(); ++i) phi_sum[i] += phi[i];
    for (std::size_t d = 0; d < num_docs; ++d) {
      const auto theta = sampler.theta_estimate(d);
      for (int k = 0; k < k_topics; ++k) theta_sum[d * k_topics + k] += theta[k];
    }
    ++samples;
  };
  for (int it = 1; it <= hyper.gibbs_iterations; ++it) {
    sampler.sweep();
    if (it > hyper.burn_in && (it - hyper.burn_in) % hyper.sample_lag == 0) accumulate();
  }
  if (samples == 0) accumulate();

  std::vector<double> phi(phi_sum.size());
  for (int k = 0; k < k_topics; ++k) {
    double total = 0.0;
    for (std::size_t w = 0; w < vocab_size; ++w) total += phi_sum[k * vocab_size + w];
    for (std::size_t w = 0; w < vocab_size; ++w) {
      phi[k * vocab_size + w] = phi_sum[k * vocab_size + w] / total;
    }
  }
  std::vector<std::string> ids;
  std::vector<TopicDistribution> thetas;
  for (std::size_t d = 0; d < num_docs; ++d) {
    ids.push_back(docs[d].doc_id);
    thetas.push_back(TopicDistribution::from_weights(
        std::vector<double>(theta_sum.begin() + d * k_topics, theta_sum.begin() + (d + 1) * k_topics)));
  }
  LdaHyperparams resolved = hyper;
  resolved.dirichlet_alpha = hyper.alpha();
  return TopicModel(std::move(resolved), std::move(prepared.vocab), std::move(phi), std::move(ids),
                    std::move(thetas));
}

TopicDistribution infer_doc_topics(const TopicModel& model, std::span<const std::string> tokens,
                                   std::uint64_t seed) {
  const auto words = known_word_ids(model.vocabulary(), tokens);
  return fold_in(model, words, seed);
}

TopicDistribution infer_doc_topics(const TopicModel& model, const LdaDocument& doc) {
  return infer_doc_topics(model, doc.tokens, doc_seed(model.hyperparams().rng_seed, doc.doc_id));
}

double perplexity(const TopicModel& model, std::span<const LdaDocument> heldout) {
  if (heldout.empty()) throw std::invalid_argument("perplexity needs held-out documents");
  double log_likelihood = 0.0;
  std::size_t scored = 0;
  for (const auto& doc : heldout) {
    const auto words = known_word_ids(model.vocabulary(), doc.tokens);
    std::vector<int> fold;
    std::vector<int> eval;
    for (std::size_t i = 0; i < words.size(); ++i) (i % 2 == 1 ? fold : eval).push_back(words[i]);
    if (eval.empty()) continue;
    const auto theta = fold_in(model, fold, doc_seed(model.hyperparams().rng_seed, doc.doc_id));
    for (int w : eval) {
      double p = 0.0;
      for (int k = 0; k < model.num_topics(); ++k) p += theta[k] * model.phi(k, w);
      log_likelihood += std::log(p);
      ++scored;
    }
  }
  if (scored == 0) throw DataError("perplexity: every held-out token is out of vocabulary");
  return std::exp(-log_likelihood / static_cast<double>(scored));
}

int best_topic_count(std::span<const std::pair<int, double>> perplexities) {
  if (perplexities.empty()) throw std::invalid_argument("no perplexities to compare");
  auto best = perplexities.front();
  for (const auto& [k, p] : perplexities.subspan(1)) {
    if (p < best.second - 1e-12 || (std::abs(p - best.second) <= 1e-12 && k < best.first)) {
      best = {k, p};
    }
  }
  return best.first;
}

TopicCountSelection select_topic_count(std::span<const LdaDocument> docs,
                                       std::span<const int> candidates,
                                       const LdaHyperparams& base, double validation_fraction) {
  if (candidates.empty()) throw std::invalid_argument("no candidate topic counts");
  if (docs.size() < 3) throw DataError("topic count selection needs at least three documents");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in (0, 1)");
  }

  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(base.rng_seed ^ 0x5e1ec7ULL);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }
  auto held = static_cast<std::size_t>(std::llround(validation_fraction * docs.size()));
  held = std::clamp<std::size_t>(held, 1, docs.size() - 2);
  std::sort(order.begin(), order.begin() + held);
  std::sort(order.begin() + held, order.end());

  std::vector<LdaDocument> validation;
  std::vector<LdaDocument> training;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < held ? validation : training).push_back(docs[order[i]]);
  }

  std::vector<int> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  TopicCountSelection selection;
  for (int k : sorted) {
    LdaHyperparams hyper = base;
    hyper.num_topics = k;
    const auto model = train_lda(training, hyper);
    selection.perplexities.emplace_back(k, perplexity(model, validation));
  }
  selection.best = best_topic_count(selection.perplexities);
  return selection;
}

std::vector<TopicDistribution> infer_corpus_topics(const TopicModel& model,
                                                   const InvertedIndex& index) {
  std::vector<TopicDistribution> topics;
  topics.reserve(index.size());
  for (const auto& doc : index.documents()) {
    if (auto i = model.training_doc(doc.doc_id)) {
      topics.push_back(model.thetas()[*i]);
    } else {
      topics.push_back(infer_doc_topics(model, LdaDocument{doc.doc_id, doc.tokens}));
    }
  }
  return topics;
}

void write_doc_topics(std::ostream& out, const InvertedIndex& index,
                      std::span<const TopicDistribution> topics) {
  out << "qsuggest-doc-topics 1\n";
  out << "docs " << topics.size() << '\n';
  for (std::size_t i = 0; i < topics.size(); ++i) {
    out << index.document(static_cast<DocIndex>(i)).doc_id;
    for (double v : topics[i].values()) out << '\t' << format_real(v);
    out << '\n';
  }
}

std::vector<TopicDistribution> read_doc_topics(std::istream& in, const InvertedIndex& index) {
  ArtifactReader r(in, "doc topics");
  r.expect("qsuggest-doc-topics 1");
  const auto n = static_cast<std::size_t>(parse_integer(r.field("docs")));
  std::vector<std::optional<TopicDistribution>> slots(index.size());
  std::size_t width = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = r.line();
    const auto parts = split(row, '\t');
    if (parts.size() < 3) r.fail("doc topic row too short");
    if (width == 0) width = parts.size() - 1;
    if (parts.size() - 1 != width) r.fail("inconsistent topic width");
    const auto doc = index.find(parts[0]);
    if (!doc) r.fail(fmt::format("unknown document '{}'", parts[0]));
    std::vector<double> values;
    for (std::size_t j = 1; j < parts.size(); ++j) values.push_back(parse_real(parts[j]));
    try {
      slots[*doc] = TopicDistribution(std::move(values));
    } catch (const std::invalid_argument& e) {
      r.fail(e.what());
    }
  }
  std::vector<TopicDistribution> topics;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]) {
      throw DataError(fmt::format("doc topics: no entry for '{}'", index.document(i).doc_id));
    }
    topics.push_back(std::move(*slots[i]));
  }
  return topics;
}

}  // namespace qsuggest
