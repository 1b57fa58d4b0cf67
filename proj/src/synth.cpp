#include "qsuggest/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "qsuggest/error.hpp"
#include "qsuggest/rng.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest {

namespace {

constexpr std::string_view kHeadPool[] = {
    "lecture", "notes",    "timetable", "exam",     "map",         "library",     "fees",
    "parking", "email",    "course",    "staff",    "room",        "results",     "deadline",
    "handbook", "forms",   "policy",    "calendar", "portal",      "guide",       "contacts",
    "booking", "careers",  "wifi",      "printing", "accommodation", "scholarship", "visa",
    "transport", "sport"};
constexpr int kHeadPoolSize = static_cast<int>(std::size(kHeadPool));

/// Inverse-CDF sampling over fixed weights.
class Discrete {
 public:
  explicit Discrete(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) cdf_.push_back(total += w);
  }
  static Discrete zipf(int n, double exponent) {
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) w[r] = 1.0 / std::pow(r + 1.0, exponent);
    return Discrete(w);
  }
  int sample(Rng& rng) const {
    const double u = rng.uniform() * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf_.begin(), cdf_.size() - 1));
  }

 private:
  std::vector<double> cdf_;
};

class WordMaker {
 public:
  explicit WordMaker(Rng& rng) : rng_(rng) {
    for (auto h : kHeadPool) used_.insert(std::string(h));
  }
  std::string make() {
    static constexpr std::string_view kOnset = "bdfgklmnprstvz";
    static constexpr std::string_view kVowel = "aeiou";
    for (;;) {
      std::string w;
      const int syllables = 2 + static_cast<int>(rng_.below(2));
      for (int s = 0; s < syllables; ++s) {
        w.push_back(kOnset[rng_.below(kOnset.size())]);
        w.push_back(kVowel[rng_.below(kVowel.size())]);
      }
      if (used_.insert(w).second) return w;
    }
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

struct TopicBlock {
  std::vector<int> heads;                          // indices into kHeadPool
  std::vector<std::string> anchors;
  std::vector<std::vector<std::string>> facets;    // per head, by popularity
  std::vector<std::string> general;                // by popularity
};

void check(bool ok, std::string_view what) {
  if (!ok) throw ConfigError(fmt::format("synth: {}", what));
}

Timestamp parse_start(const std::string& date) {
  const auto ts = parse_timestamp(date + "T00:00:00Z");
  if (!ts) throw ConfigError(fmt::format("synth: start_date '{}' is not YYYY-MM-DD", date));
  return *ts;
}

}  // namespace

void SynthConfig::validate() const {
  check(topics >= 1, "topics must be positive");
  check(head_terms >= 1 && head_terms <= kHeadPoolSize,
        fmt::format("head_terms must be in [1, {}]", kHeadPoolSize));
  check(heads_per_topic >= 1 && heads_per_topic <= head_terms,
        "heads_per_topic exceeds the head vocabulary");
  check(anchors_per_topic >= 1 && facets_per_head >= 1 && general_per_topic >= 1,
        "per-topic vocabulary sizes must be positive");
  check(documents >= topics, "need at least one document per topic");
  check(doc_length >= 1, "doc_length must be positive");
  for (double p : {dominant_weight, anchor_slot_rate, phrase_slot_rate, abandon_rate, anchor_rate,
                   wrong_facet_rate, head_click_rate, intent_switch_rate, click_noise}) {
    check(p >= 0.0 && p <= 1.0, "rates must lie in [0, 1]");
  }
  check(anchor_slot_rate + phrase_slot_rate <= 1.0, "slot rates exceed 1");
  check(users >= 1 && sessions >= 1 && weeks >= 1, "users, sessions and weeks must be positive");
  check(interests_per_user >= 1 && interests_per_user <= topics,
        "interests_per_user must be in [1, topics]");
  check(!needs_distribution.empty(), "needs_distribution is empty");
  double total = 0.0;
  for (double p : needs_distribution) {
    check(p >= 0.0, "needs_distribution has a negative entry");
    total += p;
  }
  check(total > 0.0, "needs_distribution sums to zero");
  check(max_clicks >= 1, "max_clicks must be positive");
  check(facet_zipf >= 0.0, "facet_zipf must be non-negative");
  const auto start = parse_start(start_date);
  check(std::chrono::weekday{std::chrono::floor<std::chrono::days>(start)}.iso_encoding() == 1,
        "start_date must be a Monday");
}

double expected_queries_per_session(const SynthConfig& config) {
  double total = 0.0;
  double mean_needs = 0.0;
  for (std::size_t i = 0; i < config.needs_distribution.size(); ++i) {
    total += config.needs_distribution[i];
    mean_needs += static_cast<double>(i + 1) * config.needs_distribution[i];
  }
  mean_needs /= total;
  const double wrong = config.facets_per_head > 1 ? config.wrong_facet_rate : 0.0;
  return config.abandon_rate + (1.0 - config.abandon_rate) * mean_needs * (2.0 + wrong);
}

SynthOutput synth_generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  WordMaker words(rng);

  // Vocabulary blocks. Heads go to the least used pool entries first.
  std::vector<int> head_use(static_cast<std::size_t>(config.head_terms), 0);
  std::vector<TopicBlock> blocks(static_cast<std::size_t>(config.topics));
  for (auto& b : blocks) {
    std::vector<int> order(head_use.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int c) { return head_use[a] < head_use[c]; });
    b.heads.assign(order.begin(), order.begin() + config.heads_per_topic);
    for (int h : b.heads) ++head_use[h];
    for (int i = 0; i < config.anchors_per_topic; ++i) b.anchors.push_back(words.make());
    b.facets.resize(b.heads.size());
    for (auto& f : b.facets) {
      for (int i = 0; i < config.facets_per_head; ++i) f.push_back(words.make());
    }
    for (int i = 0; i < config.general_per_topic; ++i) b.general.push_back(words.make());
  }
  const auto facet_dist = Discrete::zipf(config.facets_per_head, config.facet_zipf);
  const auto general_dist = Discrete::zipf(config.general_per_topic, 1.0);

  SynthOutput out;
  // Documents.
  std::vector<std::vector<std::size_t>> topic_docs(blocks.size());
  std::map<std::pair<int, std::string>, std::vector<std::size_t>> docs_with;  // (topic, word)
  for (int d = 0; d < config.documents; ++d) {
    const int dominant = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.topics)));
    int secondary = dominant;
    if (config.topics > 1) {
      secondary = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.topics - 1)));
      if (secondary >= dominant) ++secondary;
    }
    std::vector<std::string> tokens;
    for (int s = 0; s < config.doc_length; ++s) {
      const auto& b = blocks[rng.bernoulli(config.dominant_weight) ? dominant : secondary];
      const double u = rng.uniform();
      if (u < config.anchor_slot_rate) {
        tokens.push_back(b.anchors[rng.below(b.anchors.size())]);
      } else if (u < config.anchor_slot_rate + config.phrase_slot_rate) {
        const auto h = rng.below(b.heads.size());
        tokens.emplace_back(kHeadPool[b.heads[h]]);
        tokens.push_back(b.facets[h][facet_dist.sample(rng)]);
      } else {
        tokens.push_back(b.general[general_dist.sample(rng)]);
      }
    }
    auto doc = make_document(fmt::format("d{:05d}", d + 1), join(tokens, " "));
    std::set<std::string> distinct(doc.tokens.begin(), doc.tokens.end());
    for (const auto& w : distinct) docs_with[{dominant, w}].push_back(out.corpus.size());
    topic_docs[dominant].push_back(out.corpus.size());
    out.truth.doc_topics.push_back(dominant);
    out.corpus.push_back(std::move(doc));
  }

  // Users.
  std::vector<std::vector<int>> interests(static_cast<std::size_t>(config.users));
  for (auto& in : interests) {
    std::vector<int> all(blocks.size());
    std::iota(all.begin(), all.end(), 0);
    for (int i = 0; i < config.interests_per_user; ++i) {
      const auto j = i + rng.below(all.size() - static_cast<std::size_t>(i));
      std::swap(all[i], all[j]);
      in.push_back(all[i]);
    }
  }

  const Discrete needs(config.needs_distribution);
  const auto start = parse_start(config.start_date);
  for (int s = 0; s < config.sessions; ++s) {
    const auto sid = fmt::format("s{:05d}", s + 1);
    const int user = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.users)));
    const auto& likes = interests[user];
    const auto day = rng.below(static_cast<std::uint64_t>(config.weeks) * 7);
    auto t = start + std::chrono::days(day) + std::chrono::hours(8) +
             std::chrono::seconds(rng.below(12 * 3600));
    std::int64_t seq = 0;
    std::vector<std::size_t> query_truths;
    std::vector<std::size_t> query_events;
    SessionTruth st{sid, user, {}};

    auto emit_query = [&](const std::string& text, int intent) {
      query_events.push_back(out.events.size());
      out.events.push_back({sid, EventType::kQuery, ++seq, text, t});
      query_truths.push_back(out.truth.queries.size());
      out.truth.queries.push_back({sid, seq, intent, {}});
      t += std::chrono::seconds(5 + rng.below(56));
    };
    auto emit_click = [&](int intent, const std::string& word) {
      std::size_t doc = 0;
      if (rng.bernoulli(config.click_noise)) {
        doc = rng.below(out.corpus.size());
      } else {
        const auto it = docs_with.find({intent, word});
        const auto& pool = it != docs_with.end() ? it->second : topic_docs[intent];
        doc = pool.empty() ? rng.below(out.corpus.size()) : pool[rng.below(pool.size())];
      }
      out.events.push_back({sid, EventType::kClick, ++seq, out.corpus[doc].doc_id, t});
      out.truth.clicks.push_back({sid, seq, intent, out.corpus[doc].doc_id});
      t += std::chrono::seconds(5 + rng.below(56));
    };

    int intent = likes[rng.below(likes.size())];
    const auto head_query = [&](const TopicBlock& b, std::size_t h) {
      std::string q(kHeadPool[b.heads[h]]);
      if (rng.bernoulli(config.anchor_rate)) q = b.anchors[rng.below(b.anchors.size())] + " " + q;
      return q;
    };

    if (rng.bernoulli(config.abandon_rate)) {
      const auto& b = blocks[intent];
      emit_query(head_query(b, rng.below(b.heads.size())), intent);
      st.intents.push_back(intent);
    } else {
      const int num_needs = needs.sample(rng) + 1;
      for (int n = 0; n < num_needs; ++n) {
        if (n > 0 && likes.size() > 1 && rng.bernoulli(config.intent_switch_rate)) {
          int other = intent;
          while (other == intent) other = likes[rng.below(likes.size())];
          intent = other;
        }
        st.intents.push_back(intent);
        const auto& b = blocks[intent];
        const auto h = rng.below(b.heads.size());
        const std::string head(kHeadPool[b.heads[h]]);
        const int facet = facet_dist.sample(rng);
        emit_query(head_query(b, h), intent);
        if (rng.bernoulli(config.head_click_rate)) emit_click(intent, head);
        if (config.facets_per_head > 1 && rng.bernoulli(config.wrong_facet_rate)) {
          int wrong = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.facets_per_head - 1)));
          if (wrong >= facet) ++wrong;
          emit_query(head + " " + b.facets[h][wrong], intent);
        }
        emit_query(head + " " + b.facets[h][facet], intent);
        const int clicks = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(config.max_clicks)));
        for (int c = 0; c < clicks; ++c) emit_click(intent, b.facets[h][facet]);
      }
    }
    for (std::size_t i = 0; i + 1 < query_truths.size(); ++i) {
      out.truth.queries[query_truths[i]].planned_next = out.events[query_events[i + 1]].content;
    }
    out.truth.sessions.push_back(std::move(st));
  }
  return out;
}

void write_ground_truth(std::ostream& out, const SynthOutput& output) {
  out << "# qsuggest-ground-truth 1\n";
  for (std::size_t d = 0; d < output.corpus.size(); ++d) {
    out << "doc\t" << output.corpus[d].doc_id << '\t' << output.truth.doc_topics[d] << '\n';
  }
  for (const auto& s : output.truth.sessions) {
    std::vector<std::string> ids;
    for (int i : s.intents) ids.push_back(std::to_string(i));
    out << "session\t" << s.session_id << '\t' << s.user << '\t' << join(ids, ",") << '\n';
  }
  for (const auto& q : output.truth.queries) {
    out << "query\t" << q.session_id << '\t' << q.seq_id << '\t' << q.intent << '\t'
        << q.planned_next << '\n';
  }
  for (const auto& c : output.truth.clicks) {
    out << "click\t" << c.session_id << '\t' << c.seq_id << '\t' << c.intent << '\t' << c.doc_id
        << '\n';
  }
}

PlantedCorpus planted_topic_corpus(int topics, int documents, int vocabulary, int doc_length,
                                   std::uint64_t seed) {
  if (topics < 1 || documents < 1 || doc_length < 1 || vocabulary < topics) {
    throw ConfigError("planted corpus: vocabulary must cover every topic");
  }
  Rng rng(seed);
  PlantedCorpus out;
  const int block = vocabulary / topics;
  for (int d = 0; d < documents; ++d) {
    const int topic = d % topics;
    std::vector<std::string> tokens;
    for (int i = 0; i < doc_length; ++i) {
      const int w = topic * block + static_cast<int>(rng.below(static_cast<std::uint64_t>(block)));
      tokens.push_back(fmt::format("w{:04d}", w));
    }
    out.docs.push_back(make_document(fmt::format("p{:04d}", d + 1), join(tokens, " ")));
    out.topics.push_back(topic);
  }
  return out;
}

}  // namespace qsuggest
