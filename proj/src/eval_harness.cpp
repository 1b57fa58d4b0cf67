#include "qsuggest/eval_harness.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "qsuggest/error.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest {

namespace {

using std::chrono::days;

std::string format_metric(double v) { return fmt::format("{:.6f}", v); }

std::string format_rel(std::optional<double> rel) {
  return rel ? fmt::format("{:+.2f}%", *rel) : std::string("undef");
}

std::string format_p(const TTestResult& r) {
  if (r.degenerate) return "0(degenerate)";
  return fmt::format("{:.6g}", r.p);
}

std::string week_label(int week) { return week == 0 ? std::string("all") : std::to_string(week); }

}  // namespace

Timestamp iso_week_start(Timestamp ts) {
  const auto day = std::chrono::floor<days>(ts);
  const std::chrono::weekday wd{day};
  return day - days(wd.iso_encoding() - 1);
}

int week_ordinal(Timestamp ts, Timestamp origin) {
  const auto delta = std::chrono::duration_cast<days>(iso_week_start(ts) - iso_week_start(origin));
  return static_cast<int>(delta.count() / 7) + 1;
}

Timestamp log_origin(std::span<const SearchSession> sessions) {
  std::optional<Timestamp> first;
  for (const auto& s : sessions) {
    for (const auto& e : s.events) first = first ? std::min(*first, e.timestamp) : e.timestamp;
  }
  if (!first) throw DataError("log contains no events");
  return *first;
}

QueryTopicCache::QueryTopicCache(const InvertedIndex& corpus,
                                 std::span<const TopicDistribution> doc_topics)
    : corpus_(corpus), doc_topics_(doc_topics) {
  if (doc_topics.size() != corpus.size()) {
    throw std::invalid_argument("document topics are not aligned with the corpus");
  }
}

const std::optional<TopicDistribution>& QueryTopicCache::get(const std::string& query) {
  auto it = cache_.find(query);
  if (it == cache_.end()) {
    it = cache_.emplace(query, query_topic_dist(query, corpus_, doc_topics_)).first;
  }
  return it->second;
}

std::optional<TopicDistribution> QueryTopicCache::doc(std::string_view doc_id) const {
  const auto d = corpus_.find(doc_id);
  if (!d) return std::nullopt;
  return doc_topics_[*d];
}

SuggestionContext build_context(const QueryImpression& impression, QueryTopicCache& topics,
                                const DecayParams& decay) {
  SuggestionContext ctx;
  ctx.current_query = normalize_query(impression.query_text);
  if (!impression.prior_queries.empty()) {
    ctx.previous_query = normalize_query(impression.prior_queries.front());
  }
  ctx.query_count = impression.position;
  std::vector<std::optional<TopicDistribution>> query_dists;
  query_dists.push_back(topics.get(ctx.current_query));
  for (const auto& q : impression.prior_queries) {
    auto n = normalize_query(q);
    query_dists.push_back(topics.get(n));
    ctx.used_queries.insert(std::move(n));
  }
  std::vector<TopicDistribution> click_dists;
  for (const auto& c : impression.prior_clicks) {
    if (auto d = topics.doc(c)) click_dists.push_back(std::move(*d));
  }
  if (auto p = build_click_profile(click_dists, decay)) ctx.click_profile = std::move(p->dist);
  if (auto p = build_query_profile(query_dists, decay)) ctx.query_profile = std::move(p->dist);
  return ctx;
}

std::vector<FeatureVector> featurize(const SuggestionContext& context,
                                     std::span<const std::string> suggestions,
                                     QueryTopicCache& topics) {
  std::vector<FeatureVector> rows;
  rows.reserve(suggestions.size());
  for (std::size_t i = 0; i < suggestions.size(); ++i) {
    const auto& dist = topics.get(normalize_query(suggestions[i]));
    rows.push_back(extract_features(context, suggestions[i], dist, static_cast<int>(i + 1)));
  }
  return rows;
}

std::vector<PreparedImpression> prepare_impressions(std::span<const SearchSession> sessions,
                                                    const ConceptHierarchy& hierarchy,
                                                    QueryTopicCache& topics,
                                                    const ReplayConfig& config, Timestamp origin,
                                                    PreparationStats* stats) {
  PreparationStats local;
  std::vector<PreparedImpression> out;
  for (const auto& session : sessions) {
    for (auto& imp : query_impressions(session)) {
      ++local.queries;
      const auto refinement = click_validated_refinement(session, imp);
      if (!refinement) {
        ++local.without_refinement;
        continue;
      }
      auto list = suggest(hierarchy, imp.query_text, config.list_size).suggestions;
      if (config.refinement_union) {
        const bool present = std::any_of(list.begin(), list.end(), [&](const std::string& s) {
          return normalize_query(s) == *refinement;
        });
        if (!present) ++local.refinement_inserted;
        list = union_with_refinement(std::move(list), *refinement, config.list_size,
                                     config.rng_seed ^ stable_hash(imp.id()));
      }
      if (list.empty()) {
        ++local.without_positive;
        continue;
      }
      auto labeled = label_suggestions(session, imp, std::move(list));
      if (!labeled) {
        ++local.without_positive;
        continue;
      }
      PreparedImpression p;
      p.week = week_ordinal(imp.timestamp, origin);
      p.query_length = static_cast<int>(tokenize(imp.query_text).size());
      const auto ctx = build_context(labeled->impression, topics, config.decay);
      p.features = featurize(ctx, labeled->suggestions, topics);
      p.labeled = std::move(*labeled);
      out.push_back(std::move(p));
      ++local.kept;
    }
  }
  if (stats != nullptr) *stats = local;
  return out;
}

FeatureSchema MethodSpec::schema() const {
  if (!mask) return {};
  return FeatureSchema{mask->names()};
}

std::vector<MethodSpec> standard_methods() {
  return {
      {"Base", std::nullopt},
      {"Click", FeatureMask::without({Feature::kQueryPersonalisedScore})},
      {"Ours", FeatureMask::all()},
  };
}

RankingGroup to_group(const PreparedImpression& impression, const FeatureMask& mask) {
  RankingGroup g;
  g.num_features = mask.width();
  std::vector<double> row;
  for (std::size_t i = 0; i < impression.features.size(); ++i) {
    mask.project(impression.features[i], row);
    g.add_row(row, impression.labeled.labels[i]);
  }
  return g;
}

std::vector<std::size_t> method_order(const MethodSpec& method, const RankingEnsemble* ensemble,
                                      const PreparedImpression& impression) {
  if (!method.uses_ranker()) {
    std::vector<std::size_t> order(impression.labeled.suggestions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    return order;
  }
  if (ensemble == nullptr) {
    throw MissingArtifactError(fmt::format("method {} has no trained ensemble", method.name));
  }
  return rerank(*ensemble, method.schema(), to_group(impression, *method.mask));
}

ImpressionRecord evaluate_impression(const PreparedImpression& impression,
                                     std::span<const std::size_t> order) {
  std::vector<int> ranked;
  ranked.reserve(order.size());
  for (auto i : order) ranked.push_back(impression.labeled.labels.at(i));
  ImpressionRecord r;
  r.impression_id = impression.impression().id();
  r.position = impression.impression().position;
  r.query_length = impression.query_length;
  r.metrics = compute_metrics(ranked);
  return r;
}

MetricValues aggregate(const EvaluationRun& run) {
  if (run.records.empty()) throw std::invalid_argument("cannot aggregate an empty run");
  MetricValues sum{};
  for (const auto& r : run.records) {
    for (std::size_t m = 0; m < kNumMetrics; ++m) sum[m] += r.metrics[m];
  }
  for (auto& v : sum) v /= static_cast<double>(run.records.size());
  return sum;
}

std::string_view dimension_name(BreakdownDimension d) {
  return d == BreakdownDimension::kQueryPosition ? "position" : "length";
}

int bucket_of(int value) { return std::clamp(value, 1, 4); }

std::string bucket_label(int bucket) { return bucket >= 4 ? ">=4" : std::to_string(bucket); }

EvaluationRun bucket_run(const EvaluationRun& run, BreakdownDimension dimension, int bucket) {
  EvaluationRun sub{run.method, run.week, run.config_fingerprint, {}};
  for (const auto& r : run.records) {
    const int v = dimension == BreakdownDimension::kQueryPosition ? r.position : r.query_length;
    if (bucket_of(v) == bucket) sub.records.push_back(r);
  }
  return sub;
}

std::vector<BucketSummary> breakdown(const EvaluationRun& run, BreakdownDimension dimension) {
  std::vector<BucketSummary> out;
  for (int b = 1; b <= 4; ++b) {
    const auto sub = bucket_run(run, dimension, b);
    BucketSummary s{b, sub.records.size(), std::nullopt};
    if (!sub.records.empty()) s.summary = aggregate(sub);
    out.push_back(std::move(s));
  }
  return out;
}

std::array<TTestResult, kNumMetrics> compare_runs(const EvaluationRun& candidate,
                                                  const EvaluationRun& baseline) {
  if (candidate.records.size() != baseline.records.size()) {
    throw std::invalid_argument("runs cover different impressions");
  }
  std::array<TTestResult, kNumMetrics> out{};
  std::vector<double> a(candidate.records.size());
  std::vector<double> b(candidate.records.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (candidate.records[i].impression_id != baseline.records[i].impression_id) {
      throw std::invalid_argument("runs are not paired by impression id");
    }
  }
  for (std::size_t m = 0; m < kNumMetrics; ++m) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = candidate.records[i].metrics[m];
      b[i] = baseline.records[i].metrics[m];
    }
    if (a.size() >= 2) out[m] = paired_t_test(a, b);
  }
  return out;
}

RollingResult rolling_weekly_eval(std::span<const PreparedImpression> impressions,
                                  std::span<const MethodSpec> methods, const TrainConfig& train,
                                  int start_week, int end_week, Timestamp origin,
                                  std::span<const ArtifactProvenance> provenance,
                                  std::uint64_t config_fingerprint) {
  if (impressions.empty()) throw DataError("no labelled impressions to evaluate");
  int first = impressions.front().week;
  int last = first;
  for (const auto& p : impressions) {
    first = std::min(first, p.week);
    last = std::max(last, p.week);
  }
  if (last - first < 1) throw DataError("the rolling protocol needs logs spanning two weeks or more");
  if (start_week < 1) start_week = first;
  if (end_week <= 0 || end_week > last) end_week = last;
  if (start_week >= end_week) {
    throw ConfigError(fmt::format("no fold: start week {} must precede end week {}", start_week, end_week));
  }

  const auto week_begin = [&](int week) { return iso_week_start(origin) + days(7 * (week - 1)); };
  const auto first_test = week_begin(start_week + 1);
  for (const auto& a : provenance) {
    if (a.trained_through && *a.trained_through >= first_test) {
      throw std::logic_error(fmt::format("{} was trained on data from test week {}", a.name,
                                         week_ordinal(*a.trained_through, origin)));
    }
  }

  RollingResult result;
  for (int week = start_week; week < end_week; ++week) {
    FoldSummary fold;
    fold.train_week = week;
    fold.test_week = week + 1;
    std::vector<const PreparedImpression*> train_set;
    std::vector<const PreparedImpression*> test_set;
    for (const auto& p : impressions) {
      if (p.week == week) train_set.push_back(&p);
      if (p.week == week + 1) test_set.push_back(&p);
    }
    fold.train_impressions = train_set.size();
    fold.test_impressions = test_set.size();
    for (const auto* p : train_set) {
      if (p->impression().timestamp >= week_begin(week + 1)) {
        throw std::logic_error("training impression falls in the test week");
      }
      bool has_pos = false;
      bool has_neg = false;
      for (int l : p->labeled.labels) (l > 0 ? has_pos : has_neg) = true;
      if (has_pos && has_neg) ++fold.trainable_groups;
    }
    if (fold.trainable_groups == 0 || test_set.empty()) {
      fold.skipped = true;
      fold.note = fold.trainable_groups == 0 ? "no trainable impressions in the training week"
                                             : "no impressions in the test week";
      result.folds.push_back(std::move(fold));
      continue;
    }
    std::map<std::string, RankingEnsemble> ensembles;
    for (const auto& m : methods) {
      if (!m.uses_ranker()) continue;
      std::vector<RankingGroup> groups;
      groups.reserve(train_set.size());
      for (const auto* p : train_set) groups.push_back(to_group(*p, *m.mask));
      ensembles.emplace(m.name, train_lambdamart(groups, m.schema(), train));
    }
    for (const auto& m : methods) {
      EvaluationRun run{m.name, week + 1, config_fingerprint, {}};
      const RankingEnsemble* ens = m.uses_ranker() ? &ensembles.at(m.name) : nullptr;
      run.records.reserve(test_set.size());
      for (const auto* p : test_set) run.records.push_back(evaluate_impression(*p, method_order(m, ens, *p)));
      result.runs.push_back(std::move(run));
    }
    result.ensembles.push_back(std::move(ensembles));
    result.folds.push_back(std::move(fold));
  }
  return result;
}

EvaluationRun pooled_run(const RollingResult& result, std::string_view method) {
  EvaluationRun pooled{std::string(method), 0, 0, {}};
  for (const auto& r : result.runs) {
    if (r.method != method) continue;
    pooled.config_fingerprint = r.config_fingerprint;
    pooled.records.insert(pooled.records.end(), r.records.begin(), r.records.end());
  }
  return pooled;
}

void write_report(std::ostream& out, std::string_view effective_config,
                  const RollingResult& result, std::span<const MethodSpec> methods,
                  std::string_view baseline, const PreparationStats* preparation) {
  out << "qsuggest evaluation report\n";
  if (!result.runs.empty()) {
    out << fmt::format("config_fingerprint {:016x}\n", result.runs.front().config_fingerprint);
  }
  out << "\n[config]\n" << effective_config;
  if (!effective_config.empty() && effective_config.back() != '\n') out << '\n';
  if (preparation != nullptr) {
    out << fmt::format(
        "\n[preparation]\nqueries {}\nwithout_refinement {}\nwithout_positive {}\n"
        "refinement_inserted {}\nkept {}\n",
        preparation->queries, preparation->without_refinement, preparation->without_positive,
        preparation->refinement_inserted, preparation->kept);
  }

  out << "\n[folds]\ntrain_week\ttest_week\ttrain_impressions\ttrainable\ttest_impressions\tstatus\n";
  for (const auto& f : result.folds) {
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", f.train_week, f.test_week, f.train_impressions,
                       f.trainable_groups, f.test_impressions, f.skipped ? "skipped: " + f.note : "ok");
  }

  std::vector<int> weeks;
  for (const auto& r : result.runs) {
    if (weeks.empty() || weeks.back() != r.week) weeks.push_back(r.week);
  }
  weeks.push_back(0);
  auto run_for = [&](std::string_view method, int week) {
    if (week == 0) return pooled_run(result, method);
    for (const auto& r : result.runs) {
      if (r.method == method && r.week == week) return r;
    }
    return EvaluationRun{std::string(method), week, 0, {}};
  };

  out << "\n[results]\nmethod\tweek\tdimension\tbucket\tn";
  for (auto name : kMetricNames) out << '\t' << name;
  for (auto name : kMetricNames) out << "\t%rel_" << name;
  for (auto name : kMetricNames) out << "\tp_" << name;
  out << '\n';

  struct Scope {
    std::string dimension;
    std::string bucket;
    std::optional<BreakdownDimension> dim;
    int bucket_id = 0;
  };
  std::vector<Scope> scopes{{"overall", "all", std::nullopt, 0}};
  for (auto d : {BreakdownDimension::kQueryPosition, BreakdownDimension::kQueryLength}) {
    for (int b = 1; b <= 4; ++b) scopes.push_back({std::string(dimension_name(d)), bucket_label(b), d, b});
  }

  for (int week : weeks) {
    std::map<std::string, EvaluationRun> full;
    for (const auto& m : methods) full.emplace(m.name, run_for(m.name, week));
    for (const auto& scope : scopes) {
      auto slice = [&](const EvaluationRun& r) {
        return scope.dim ? bucket_run(r, *scope.dim, scope.bucket_id) : r;
      };
      const auto base_it = full.find(std::string(baseline));
      std::optional<EvaluationRun> base_run;
      if (base_it != full.end()) base_run = slice(base_it->second);
      for (const auto& m : methods) {
        const auto run = slice(full.at(m.name));
        out << fmt::format("{}\t{}\t{}\t{}\t{}", m.name, week_label(week), scope.dimension,
                           scope.bucket, run.records.size());
        if (run.records.empty()) {
          for (std::size_t i = 0; i < 3 * kNumMetrics; ++i) out << "\tempty";
          out << '\n';
          continue;
        }
        const auto summary = aggregate(run);
        for (double v : summary) out << '\t' << format_metric(v);
        const bool compare = base_run && m.name != baseline && base_run->records.size() >= 2;
        if (compare) {
          const auto base_summary = aggregate(*base_run);
          for (std::size_t i = 0; i < kNumMetrics; ++i) {
            out << '\t' << format_rel(relative_improvement(summary[i], base_summary[i]));
          }
          const auto tests = compare_runs(run, *base_run);
          for (const auto& t : tests) out << '\t' << format_p(t);
        } else {
          for (std::size_t i = 0; i < 2 * kNumMetrics; ++i) out << "\t-";
        }
        out << '\n';
      }
    }
  }

  out << "\n[comparisons]\ncandidate\tbaseline\tweek\tn";
  for (auto name : kMetricNames) out << "\t%rel_" << name;
  for (auto name : kMetricNames) out << "\tt_" << name << "\tp_" << name;
  out << '\n';
  for (int week : weeks) {
    for (std::size_t i = 0; i < methods.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        const auto cand = run_for(methods[i].name, week);
        const auto base = run_for(methods[j].name, week);
        if (cand.records.size() < 2) continue;
        const auto cs = aggregate(cand);
        const auto bs = aggregate(base);
        const auto tests = compare_runs(cand, base);
        out << fmt::format("{}\t{}\t{}\t{}", methods[i].name, methods[j].name, week_label(week),
                           cand.records.size());
        for (std::size_t m = 0; m < kNumMetrics; ++m) out << '\t' << format_rel(relative_improvement(cs[m], bs[m]));
        for (const auto& t : tests) out << fmt::format("\t{:.6g}\t{}", t.t, format_p(t));
        out << '\n';
      }
    }
  }
}

void write_impression_table(std::ostream& out, const RollingResult& result) {
  out << "method\tweek\timpression\tposition\tlength";
  for (auto name : kMetricNames) out << '\t' << (name == "MAP" ? std::string_view("AP") : name == "MRR@10" ? std::string_view("RR@10") : name);
  out << '\n';
  for (const auto& run : result.runs) {
    for (const auto& r : run.records) {
      out << fmt::format("{}\t{}\t{}\t{}\t{}", run.method, run.week, r.impression_id, r.position,
                         r.query_length);
      for (double v : r.metrics) out << '\t' << format_metric(v);
      out << '\n';
    }
  }
}

}  // namespace qsuggest
