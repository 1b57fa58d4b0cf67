#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qsuggest/corpus_index.hpp"
#include "qsuggest/log_model.hpp"

namespace qsuggest {

/// Seeded intranet-like benchmark: topics own disjoint word blocks, share a
/// small pool of generic head terms, and users refine a head term with a
/// topic-specific facet before clicking.
struct SynthConfig {
  int topics = 20;
  int head_terms = 15;
  int heads_per_topic = 3;
  int anchors_per_topic = 2;
  int facets_per_head = 4;
  int general_per_topic = 30;

  int documents = 2000;
  int doc_length = 40;  // slots; a facet phrase slot emits two words
  double dominant_weight = 0.8;
  double anchor_slot_rate = 0.1;
  double phrase_slot_rate = 0.2;

  int users = 1000;
  int interests_per_user = 2;
  int sessions = 5000;
  int weeks = 4;
  std::string start_date = "2012-01-02";  // a Monday

  double abandon_rate = 0.1;
  std::vector<double> needs_distribution = {0.5, 0.3, 0.2};  // P(1 need), P(2), ...
  double anchor_rate = 0.5;
  double wrong_facet_rate = 0.3;
  double head_click_rate = 0.1;
  double intent_switch_rate = 0.2;
  double click_noise = 0.15;
  int max_clicks = 2;
  double facet_zipf = 1.0;

  std::uint64_t seed = 42;

  /// Throws ConfigError.
  void validate() const;
};

struct QueryTruth {
  std::string session_id;
  std::int64_t seq_id = 0;
  int intent = 0;
  std::string planned_next;  // empty for the last query of a session
};

struct ClickTruth {
  std::string session_id;
  std::int64_t seq_id = 0;
  int intent = 0;
  std::string doc_id;
};

struct SessionTruth {
  std::string session_id;
  int user = 0;
  std::vector<int> intents;  // one per information need
};

struct GroundTruth {
  std::vector<int> doc_topics;  // dominant planted topic, aligned with the corpus
  std::vector<SessionTruth> sessions;
  std::vector<QueryTruth> queries;
  std::vector<ClickTruth> clicks;
};

struct SynthOutput {
  std::vector<Document> corpus;
  std::vector<LogEvent> events;
  GroundTruth truth;
};

SynthOutput synth_generate(const SynthConfig& config);

/// Mean queries per generated session implied by the configuration.
double expected_queries_per_session(const SynthConfig& config);

void write_ground_truth(std::ostream& out, const SynthOutput& output);

/// Documents drawn from `topics` disjoint vocabulary blocks, one planted topic
/// per document (round robin). Used for topic model sanity checks.
struct PlantedCorpus {
  std::vector<Document> docs;
  std::vector<int> topics;
};
PlantedCorpus planted_topic_corpus(int topics, int documents, int vocabulary, int doc_length,
                                   std::uint64_t seed);

}  // namespace qsuggest
