#include "qsuggest/base_suggester.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "qsuggest/error.hpp"
#include "qsuggest/rng.hpp"
#include "qsuggest/text.hpp"
#include "qsuggest/textio.hpp"

namespace qsuggest {

namespace {

constexpr std::string_view kHierarchyMagic = "qsuggest-hierarchy 1";

std::string concept_text(std::string_view query) { return join(tokenize(query), " "); }

}  // namespace

void HierarchyConfig::validate() const {
  if (min_freq < 1) throw ConfigError("suggester: min_freq must be at least 1");
  if (!(subsume_threshold > 0.0 && subsume_threshold <= 1.0)) {
    throw ConfigError("suggester: subsume_threshold must lie in (0, 1]");
  }
  if (max_phrase_words < 1) throw ConfigError("suggester: max_phrase_words must be positive");
}

ConceptHierarchy::ConceptHierarchy(HierarchyConfig config, std::vector<ConceptNode> nodes,
                                   std::vector<SubsumptionEdge> edges,
                                   std::vector<FallbackEntry> fallback)
    : config_(config),
      nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      fallback_(std::move(fallback)),
      children_(nodes_.size()),
      parents_(nodes_.size()) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!lookup_.emplace(nodes_[i].text, static_cast<std::uint32_t>(i)).second) {
      throw DataError(fmt::format("duplicate concept '{}'", nodes_[i].text));
    }
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& edge = edges_[e];
    if (edge.parent >= nodes_.size() || edge.child >= nodes_.size() || edge.parent == edge.child) {
      throw DataError("subsumption edge refers to an invalid node");
    }
    if (!(edge.weight > 0.0 && edge.weight <= 1.0)) {
      throw DataError("subsumption edge weight outside (0, 1]");
    }
    children_[edge.parent].push_back(static_cast<std::uint32_t>(e));
    parents_[edge.child].push_back(static_cast<std::uint32_t>(e));
  }
  for (auto& list : children_) {
    std::sort(list.begin(), list.end(),
              [&](auto a, auto b) { return edges_[a].child < edges_[b].child; });
  }
  for (auto& list : parents_) {
    std::sort(list.begin(), list.end(),
              [&](auto a, auto b) { return edges_[a].parent < edges_[b].parent; });
  }
}

std::optional<std::uint32_t> ConceptHierarchy::find(std::string_view text) const {
  const auto it = lookup_.find(std::string(text));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

void ConceptHierarchy::save(std::ostream& out) const {
  out << kHierarchyMagic << '\n';
  out << "min_freq " << config_.min_freq << '\n';
  out << "subsume_threshold " << format_real(config_.subsume_threshold) << '\n';
  out << "max_phrase_words " << config_.max_phrase_words << '\n';
  out << "fallback_size " << config_.fallback_size << '\n';
  out << "trained_through " << (trained_through_ ? format_timestamp(*trained_through_) : "-")
      << '\n';
  out << "nodes " << nodes_.size() << '\n';
  for (const auto& n : nodes_) out << n.corpus_freq << '\t' << n.log_freq << '\t' << n.text << '\n';
  out << "edges " << edges_.size() << '\n';
  for (const auto& e : edges_) {
    out << e.parent << '\t' << e.child << '\t' << format_real(e.weight) << '\n';
  }
  out << "fallback " << fallback_.size() << '\n';
  for (const auto& f : fallback_) out << f.count << '\t' << f.text << '\n';
}

ConceptHierarchy ConceptHierarchy::load(std::istream& in) {
  ArtifactReader r(in, "hierarchy");
  r.expect(kHierarchyMagic);
  HierarchyConfig config;
  config.min_freq = static_cast<int>(parse_integer(r.field("min_freq")));
  config.subsume_threshold = parse_real(r.field("subsume_threshold"));
  config.max_phrase_words = static_cast<int>(parse_integer(r.field("max_phrase_words")));
  config.fallback_size = static_cast<std::size_t>(parse_integer(r.field("fallback_size")));
  const auto through = r.field("trained_through");
  std::optional<Timestamp> trained_through;
  if (through != "-") {
    trained_through = parse_timestamp(through);
    if (!trained_through) r.fail("bad trained_through timestamp");
  }

  const auto num_nodes = static_cast<std::size_t>(parse_integer(r.field("nodes")));
  std::vector<ConceptNode> nodes;
  nodes.reserve(num_nodes);
  for (std::size_t i = 0; i < num_nodes; ++i) {
    const auto row = r.line();
    const auto parts = split(row, '\t');
    if (parts.size() != 3) r.fail("node row needs 3 fields");
    nodes.push_back({std::string(parts[2]), parse_integer(parts[0]), parse_integer(parts[1])});
  }
  const auto num_edges = static_cast<std::size_t>(parse_integer(r.field("edges")));
  std::vector<SubsumptionEdge> edges;
  edges.reserve(num_edges);
  for (std::size_t i = 0; i < num_edges; ++i) {
    const auto row = r.line();
    const auto parts = split(row, '\t');
    if (parts.size() != 3) r.fail("edge row needs 3 fields");
    edges.push_back({static_cast<std::uint32_t>(parse_unsigned(parts[0])),
                     static_cast<std::uint32_t>(parse_unsigned(parts[1])), parse_real(parts[2])});
  }
  const auto num_fallback = static_cast<std::size_t>(parse_integer(r.field("fallback")));
  std::vector<FallbackEntry> fallback;
  for (std::size_t i = 0; i < num_fallback; ++i) {
    const auto row = r.line();
    const auto tab = row.find('\t');
    if (tab == std::string::npos) r.fail("fallback row needs 2 fields");
    fallback.push_back({row.substr(tab + 1), parse_integer(std::string_view(row).substr(0, tab))});
  }
  ConceptHierarchy h(config, std::move(nodes), std::move(edges), std::move(fallback));
  h.set_trained_through(trained_through);
  return h;
}

std::vector<std::string> word_ngrams(std::span<const std::string> tokens, int max_words) {
  std::vector<std::string> grams;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string gram;
    for (std::size_t n = 0; n < static_cast<std::size_t>(max_words) && i + n < tokens.size(); ++n) {
      if (n > 0) gram.push_back(' ');
      gram.append(tokens[i + n]);
      grams.push_back(gram);
    }
  }
  return grams;
}

ConceptHierarchy build_hierarchy(const InvertedIndex& corpus,
                                 std::span<const SearchSession> sessions,
                                 const HierarchyConfig& config) {
  config.validate();
  if (corpus.size() == 0) throw DataError("hierarchy: empty corpus");
  if (sessions.empty()) throw DataError("hierarchy: no training sessions");

  std::map<std::string, std::int64_t> log_freq;
  std::map<std::string, std::int64_t> refinements;
  std::optional<Timestamp> latest;
  for (const auto& session : sessions) {
    const LogEvent* previous_query = nullptr;
    for (const auto& e : session.events) {
      latest = latest ? std::max(*latest, e.timestamp) : e.timestamp;
      if (e.type != EventType::kQuery) continue;
      auto grams = word_ngrams(tokenize(e.content), config.max_phrase_words);
      std::sort(grams.begin(), grams.end());
      grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
      for (auto& g : grams) ++log_freq[g];
      if (previous_query != nullptr) {
        const auto text = normalize_query(e.content);
        if (!text.empty()) ++refinements[text];
      }
      previous_query = &e;
    }
  }
  if (log_freq.empty()) throw DataError("hierarchy: training logs contain no queries");

  // Document frequency of every candidate concept.
  std::map<std::string, std::int64_t> doc_freq;
  std::vector<std::vector<std::string>> doc_phrases(corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const auto& tokens = corpus.document(static_cast<DocIndex>(d)).tokens;
    auto grams = word_ngrams(tokens, config.max_phrase_words);
    std::vector<std::string> present;
    for (auto& g : grams) {
      if (g.find(' ') == std::string::npos || log_freq.contains(g)) present.push_back(std::move(g));
    }
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());
    for (const auto& g : present) ++doc_freq[g];
    doc_phrases[d] = std::move(present);
  }

  std::set<std::string> texts;
  for (const auto& [g, f] : log_freq) {
    const auto it = doc_freq.find(g);
    const std::int64_t df = it == doc_freq.end() ? 0 : it->second;
    if (f + df >= config.min_freq) texts.insert(g);
  }
  for (const auto& [g, df] : doc_freq) {
    if (g.find(' ') == std::string::npos && df >= config.min_freq) texts.insert(g);
  }

  std::vector<ConceptNode> nodes;
  std::unordered_map<std::string, std::uint32_t> ids;
  for (const auto& t : texts) {
    const auto lf = log_freq.find(t);
    const auto df = doc_freq.find(t);
    ids.emplace(t, static_cast<std::uint32_t>(nodes.size()));
    nodes.push_back({t, df == doc_freq.end() ? 0 : df->second, lf == log_freq.end() ? 0 : lf->second});
  }

  std::unordered_map<std::uint64_t, std::uint32_t> cooccur;
  std::vector<std::uint32_t> present_ids;
  for (const auto& phrases : doc_phrases) {
    present_ids.clear();
    for (const auto& p : phrases) {
      if (auto it = ids.find(p); it != ids.end()) present_ids.push_back(it->second);
    }
    std::sort(present_ids.begin(), present_ids.end());
    for (std::size_t i = 0; i < present_ids.size(); ++i) {
      for (std::size_t j = i + 1; j < present_ids.size(); ++j) {
        ++cooccur[(static_cast<std::uint64_t>(present_ids[i]) << 32) | present_ids[j]];
      }
    }
  }

  // An edge x -> y needs P(x|y) >= t > P(y|x), which forces df(x) > df(y);
  // edges therefore always point to rarer concepts and cannot form a cycle.
  std::vector<SubsumptionEdge> edges;
  const double t = config.subsume_threshold;
  for (const auto& [key, count] : cooccur) {
    const auto a = static_cast<std::uint32_t>(key >> 32);
    const auto b = static_cast<std::uint32_t>(key & 0xffffffffULL);
    const double co = count;
    const double p_a_given_b = co / static_cast<double>(nodes[b].corpus_freq);
    const double p_b_given_a = co / static_cast<double>(nodes[a].corpus_freq);
    if (p_a_given_b >= t && p_b_given_a < t) {
      edges.push_back({a, b, p_a_given_b});
    } else if (p_b_given_a >= t && p_a_given_b < t) {
      edges.push_back({b, a, p_b_given_a});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const SubsumptionEdge& x, const SubsumptionEdge& y) {
    return x.parent != y.parent ? x.parent < y.parent : x.child < y.child;
  });

  std::vector<FallbackEntry> fallback;
  for (const auto& [text, count] : refinements) fallback.push_back({text, count});
  std::sort(fallback.begin(), fallback.end(), [](const FallbackEntry& x, const FallbackEntry& y) {
    return x.count != y.count ? x.count > y.count : x.text < y.text;
  });
  if (fallback.size() > config.fallback_size) fallback.resize(config.fallback_size);

  ConceptHierarchy hierarchy(config, std::move(nodes), std::move(edges), std::move(fallback));
  hierarchy.set_trained_through(latest);
  return hierarchy;
}

double log_frequency_prior(const ConceptNode& node) {
  return 1.0 + std::log1p(static_cast<double>(node.log_freq));
}

SuggestionList suggest(const ConceptHierarchy& hierarchy, std::string_view query, std::size_t n) {
  if (n == 0) throw std::invalid_argument("suggestion list size must be positive");
  SuggestionList list;
  list.query = std::string(query);
  const auto normalized = normalize_query(query);
  const auto tokens = tokenize(normalized);
  const auto own_text = join(tokens, " ");

  std::vector<std::uint32_t> concepts;
  for (const auto& g : word_ngrams(tokens, hierarchy.config().max_phrase_words)) {
    if (auto id = hierarchy.find(g)) concepts.push_back(*id);
  }
  std::sort(concepts.begin(), concepts.end());
  concepts.erase(std::unique(concepts.begin(), concepts.end()), concepts.end());

  std::vector<std::pair<std::string, double>> ranked;
  if (concepts.empty()) {
    for (const auto& f : hierarchy.fallback()) {
      if (f.text == normalized || concept_text(f.text) == own_text) continue;
      ranked.emplace_back(f.text, 1.0 + std::log1p(static_cast<double>(f.count)));
    }
  } else {
    const auto nodes = hierarchy.nodes();
    const auto edges = hierarchy.edges();
    std::map<std::uint32_t, double> best;
    auto offer = [&](std::uint32_t node, double weight) {
      const double score = weight * log_frequency_prior(nodes[node]);
      auto [it, inserted] = best.emplace(node, score);
      if (!inserted && score > it->second) it->second = score;
    };
    for (auto c : concepts) {
      for (auto e : hierarchy.child_edges(c)) offer(edges[e].child, edges[e].weight);
      for (auto pe : hierarchy.parent_edges(c)) {
        const auto parent = edges[pe].parent;
        offer(parent, edges[pe].weight);
        for (auto se : hierarchy.child_edges(parent)) {
          if (edges[se].child != c) offer(edges[se].child, edges[pe].weight * edges[se].weight);
        }
      }
    }
    for (const auto& [node, score] : best) {
      if (nodes[node].text == own_text) continue;
      ranked.emplace_back(nodes[node].text, score);
    }
  }

  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  for (auto& [text, score] : ranked) {
    if (list.suggestions.size() == n) break;
    list.suggestions.push_back(std::move(text));
    list.scores.push_back(score);
  }
  return list;
}

std::vector<std::string> union_with_refinement(std::vector<std::string> list,
                                               const std::string& refinement, std::size_t n,
                                               std::uint64_t position_seed) {
  if (n == 0) throw std::invalid_argument("suggestion list size must be positive");
  const auto target = normalize_query(refinement);
  if (list.size() > n) list.resize(n);
  for (const auto& s : list) {
    if (normalize_query(s) == target) return list;
  }
  const std::size_t slots = std::min(list.size(), n - 1) + 1;
  Rng rng(position_seed);
  const auto pos = static_cast<std::ptrdiff_t>(rng.below(slots));
  list.insert(list.begin() + pos, target);
  if (list.size() > n) list.resize(n);
  return list;
}

}  // namespace qsuggest
