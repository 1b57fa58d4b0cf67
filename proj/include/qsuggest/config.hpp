#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsuggest/base_suggester.hpp"
#include "qsuggest/profiles.hpp"
#include "qsuggest/ranker.hpp"
#include "qsuggest/synth.hpp"
#include "qsuggest/topic_model.hpp"

namespace qsuggest {

struct ExperimentConfig {
  // [paths]
  std::string logs = "data/events.tsv";
  std::string corpus = "data/corpus.tsv";
  std::string ground_truth = "data/ground_truth.tsv";
  std::string model_dir = "model";
  std::string report_dir = "report";
  // [run]
  std::uint64_t seed = 42;
  // [lda]; the seed comes from [run]
  LdaHyperparams lda = with_topics(20);
  std::vector<int> topic_candidates;  // non-empty: pick K by held-out perplexity
  // [hierarchy]
  HierarchyConfig hierarchy;
  // [profiles]
  DecayParams decay;
  // [suggest]
  std::size_t list_size = 10;
  bool refinement_union = true;
  // [ranker]
  TrainConfig ranker = with_min_leaf(10);
  // [eval]
  int start_week = 1;
  int end_week = 0;  // 0 = last week in the log
  // [synth]
  SynthConfig synth;

  /// Throws ConfigError on an invalid combination.
  void validate() const;
  /// Every key in canonical order as `[section]` / `key = value` lines.
  std::string effective_text() const;
  std::uint64_t fingerprint() const;

 private:
  static LdaHyperparams with_topics(int k) {
    LdaHyperparams h;
    h.num_topics = k;
    return h;
  }
  static TrainConfig with_min_leaf(int n) {
    TrainConfig t;
    t.min_instances_per_leaf = n;
    return t;
  }
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Process environment.
std::optional<std::string> process_env(const std::string& name);

/// Applies `key = value` lines under `[section]` headers on top of the
/// defaults, then SUGGEST_<SECTION>_<KEY> overrides. '#' and ';' start
/// comments. Throws ConfigError on unknown keys or bad values.
ExperimentConfig parse_config(std::string_view text, const EnvLookup& env = process_env);

/// Reads `path` (or only defaults and environment when nullopt).
ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                             const EnvLookup& env = process_env);

}  // namespace qsuggest
