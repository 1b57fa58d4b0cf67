#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qsuggest/corpus_index.hpp"
#include "qsuggest/log_model.hpp"

namespace qsuggest {

struct HierarchyConfig {
  int min_freq = 5;
  double subsume_threshold = 0.8;
  int max_phrase_words = 3;
  std::size_t fallback_size = 50;

  void validate() const;
};

struct ConceptNode {
  std::string text;  // normalized words joined by single spaces
  std::int64_t corpus_freq = 0;  // documents containing the phrase
  std::int64_t log_freq = 0;     // logged queries containing the phrase
};

struct SubsumptionEdge {
  std::uint32_t parent = 0;
  std::uint32_t child = 0;
  double weight = 0.0;  // P(parent present | child present)
};

struct FallbackEntry {
  std::string text;
  std::int64_t count = 0;
};

/// Directed concept hierarchy: x subsumes y when documents containing y
/// almost always contain x but not the reverse.
class ConceptHierarchy {
 public:
  ConceptHierarchy() = default;
  ConceptHierarchy(HierarchyConfig config, std::vector<ConceptNode> nodes,
                   std::vector<SubsumptionEdge> edges, std::vector<FallbackEntry> fallback);

  const HierarchyConfig& config() const { return config_; }
  std::span<const ConceptNode> nodes() const { return nodes_; }
  std::span<const SubsumptionEdge> edges() const { return edges_; }
  std::span<const FallbackEntry> fallback() const { return fallback_; }
  std::optional<std::uint32_t> find(std::string_view text) const;

  /// Edge indices, sorted by the other endpoint.
  std::span<const std::uint32_t> child_edges(std::uint32_t node) const { return children_[node]; }
  std::span<const std::uint32_t> parent_edges(std::uint32_t node) const { return parents_[node]; }

  const std::optional<Timestamp>& trained_through() const { return trained_through_; }
  void set_trained_through(std::optional<Timestamp> ts) { trained_through_ = ts; }

  void save(std::ostream& out) const;
  static ConceptHierarchy load(std::istream& in);

 private:
  HierarchyConfig config_;
  std::vector<ConceptNode> nodes_;
  std::vector<SubsumptionEdge> edges_;
  std::vector<FallbackEntry> fallback_;
  std::unordered_map<std::string, std::uint32_t> lookup_;
  std::vector<std::vector<std::uint32_t>> children_;
  std::vector<std::vector<std::uint32_t>> parents_;
  std::optional<Timestamp> trained_through_;
};

/// Word n-grams (n <= max_words) of a token sequence, joined by spaces.
std::vector<std::string> word_ngrams(std::span<const std::string> tokens, int max_words);

/// Concepts are query n-grams from the logs plus frequent corpus words; edges
/// come from document co-occurrence. Throws DataError on empty inputs.
ConceptHierarchy build_hierarchy(const InvertedIndex& corpus,
                                 std::span<const SearchSession> sessions,
                                 const HierarchyConfig& config);

struct SuggestionList {
  std::string query;
  std::vector<std::string> suggestions;
  std::vector<double> scores;  // non-increasing
};

/// Prior that favours concepts users actually type: 1 + ln(1 + log_freq).
double log_frequency_prior(const ConceptNode& node);

/// Top-n relatives (children, parents, siblings) of the query's concept
/// nodes, scored by edge weight times the log-frequency prior. Unknown
/// queries get the most frequent logged refinements.
SuggestionList suggest(const ConceptHierarchy& hierarchy, std::string_view query, std::size_t n);

/// Ensures `refinement` appears in a list of at most n entries. When absent
/// it is inserted at a position drawn from `position_seed` (uniform over the
/// possible slots) and the list is truncated to n, so list position says
/// nothing about relevance.
std::vector<std::string> union_with_refinement(std::vector<std::string> list,
                                               const std::string& refinement, std::size_t n,
                                               std::uint64_t position_seed);

}  // namespace qsuggest
