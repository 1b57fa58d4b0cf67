#include "qsuggest/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "qsuggest/base_suggester.hpp"
#include "qsuggest/corpus_index.hpp"
#include "qsuggest/error.hpp"
#include "qsuggest/text.hpp"
#include "qsuggest/topic_model.hpp"

namespace qsuggest {

namespace fs = std::filesystem;

namespace {

std::ifstream open_input(const fs::path& path, std::string_view stage) {
  if (!fs::exists(path)) {
    throw MissingArtifactError(
        fmt::format("missing artifact {} (produced by `{}`)", path.string(), stage));
  }
  std::ifstream in(path);
  if (!in) throw MissingArtifactError(fmt::format("cannot open {}", path.string()));
  return in;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ExitCode::kFailure, fmt::format("cannot write {}", path.string()));
  return out;
}

void close_output(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw Error(ExitCode::kFailure, fmt::format("failed writing {}", path.string()));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct LoadedLogs {
  std::vector<SearchSession> sessions;
  Timestamp origin{};
};

LoadedLogs load_logs(const ExperimentConfig& config) {
  auto in = open_input(artifact_path(config, artifact::kEvents), "ingest");
  auto read = read_log(in);
  if (read.rejected > 0) {
    throw DataError(fmt::format("stored event log has {} malformed lines", read.rejected));
  }
  LoadedLogs logs;
  logs.sessions = preprocess_sessions(assemble_sessions(std::move(read.events)));
  logs.origin = log_origin(logs.sessions);
  return logs;
}

InvertedIndex load_corpus(const ExperimentConfig& config) {
  auto in = open_input(artifact_path(config, artifact::kCorpus), "ingest");
  return InvertedIndex::build(read_corpus(in));
}

std::vector<TopicDistribution> load_doc_topics(const ExperimentConfig& config,
                                               const InvertedIndex& index) {
  auto in = open_input(artifact_path(config, artifact::kDocTopics), "train-lda");
  return read_doc_topics(in, index);
}

TopicModel load_lda(const ExperimentConfig& config) {
  auto in = open_input(artifact_path(config, artifact::kLdaModel), "train-lda");
  return TopicModel::load(in);
}

ConceptHierarchy load_hierarchy(const ExperimentConfig& config) {
  auto in = open_input(artifact_path(config, artifact::kHierarchy), "build-hierarchy");
  return ConceptHierarchy::load(in);
}

/// End of the history used for the frozen models: the start of the week
/// after `start_week`.
Timestamp window_end(const ExperimentConfig& config, Timestamp origin) {
  return iso_week_start(origin) + std::chrono::days(7 * config.start_week);
}

std::vector<SearchSession> history_before(std::span<const SearchSession> sessions, Timestamp end) {
  std::vector<SearchSession> out;
  for (const auto& s : sessions) {
    SearchSession kept{s.session_id, {}, s.non_monotone_timestamps};
    for (const auto& e : s.events) {
      if (e.timestamp < end) kept.events.push_back(e);
    }
    if (!kept.events.empty()) out.push_back(std::move(kept));
  }
  return out;
}

ReplayConfig replay_config(const ExperimentConfig& config) {
  ReplayConfig r;
  r.decay = config.decay;
  r.list_size = config.list_size;
  r.refinement_union = config.refinement_union;
  r.rng_seed = config.seed;
  return r;
}

TrainConfig ranker_config(const ExperimentConfig& config) {
  auto t = config.ranker;
  t.rng_seed = config.seed;
  return t;
}

}  // namespace

fs::path artifact_path(const ExperimentConfig& config, std::string_view name) {
  return fs::path(config.model_dir) / std::string(name);
}

fs::path ensemble_path(const ExperimentConfig& config, std::string_view method) {
  return artifact_path(config, fmt::format("{}{}.txt", artifact::kEnsemblePrefix, lower(method)));
}

void run_synth(const ExperimentConfig& config, std::ostream& log) {
  const auto out = synth_generate(config.synth);
  {
    auto f = open_output(config.corpus);
    write_corpus(f, out.corpus);
    close_output(f, config.corpus);
  }
  {
    auto f = open_output(config.logs);
    write_log(f, out.events);
    close_output(f, config.logs);
  }
  {
    auto f = open_output(config.ground_truth);
    write_ground_truth(f, out);
    close_output(f, config.ground_truth);
  }
  fmt::print(log, "synth: {} documents, {} sessions, {} events (expected {:.3f} queries/session)\n",
             out.corpus.size(), out.truth.sessions.size(), out.events.size(),
             expected_queries_per_session(config.synth));
}

void run_ingest(const ExperimentConfig& config, std::ostream& log) {
  std::ifstream log_in(config.logs);
  if (!log_in) throw ConfigError(fmt::format("cannot read log file {}", config.logs));
  auto read = read_log(log_in);
  for (const auto& r : read.rejections) fmt::print(log, "ingest: rejected {}\n", r);
  if (read.events.empty()) throw DataError(fmt::format("{} contains no valid events", config.logs));
  const auto sessions = assemble_sessions(std::move(read.events));

  std::ifstream corpus_in(config.corpus);
  if (!corpus_in) throw ConfigError(fmt::format("cannot read corpus file {}", config.corpus));
  auto docs = read_corpus(corpus_in);
  if (docs.empty()) throw DataError(fmt::format("{} contains no documents", config.corpus));
  const auto index = InvertedIndex::build(docs);

  std::size_t events = 0;
  std::size_t unknown_clicks = 0;
  std::size_t non_monotone = 0;
  std::vector<LogEvent> ordered;
  for (const auto& s : sessions) {
    non_monotone += s.non_monotone_timestamps ? 1 : 0;
    for (const auto& e : s.events) {
      if (e.type == EventType::kClick && !index.find(e.content)) ++unknown_clicks;
      ordered.push_back(e);
      ++events;
    }
  }
  const auto events_path = artifact_path(config, artifact::kEvents);
  auto ev = open_output(events_path);
  write_log(ev, ordered);
  close_output(ev, events_path);
  const auto corpus_path = artifact_path(config, artifact::kCorpus);
  auto co = open_output(corpus_path);
  write_corpus(co, docs);
  close_output(co, corpus_path);
  fmt::print(log, "ingest: {} events in {} sessions ({} lines rejected), {} documents\n", events,
             sessions.size(), read.rejected, docs.size());
  if (unknown_clicks > 0) fmt::print(log, "ingest: warning: {} clicks on unknown documents\n", unknown_clicks);
  if (non_monotone > 0) {
    fmt::print(log, "ingest: warning: {} sessions with timestamps out of sequence order\n", non_monotone);
  }
}

void run_stats(const ExperimentConfig& config, std::ostream& out) {
  const auto logs = load_logs(config);
  write_log_stats(out, compute_log_stats(logs.sessions));
}

void run_train_lda(const ExperimentConfig& config, std::ostream& log) {
  const auto logs = load_logs(config);
  const auto index = load_corpus(config);
  const auto end = window_end(config, logs.origin);
  std::set<std::string> clicked;
  std::optional<Timestamp> latest;
  for (const auto& s : logs.sessions) {
    for (const auto& e : s.events) {
      if (e.type != EventType::kClick || e.timestamp >= end || !index.find(e.content)) continue;
      clicked.insert(e.content);
      latest = latest ? std::max(*latest, e.timestamp) : e.timestamp;
    }
  }
  std::vector<LdaDocument> docs;
  for (const auto& d : index.documents()) {
    if (clicked.contains(d.doc_id)) docs.push_back({d.doc_id, d.tokens});
  }
  fmt::print(log, "train-lda: {} clicked documents up to week {}\n", docs.size(), config.start_week);

  auto hyper = config.lda;
  hyper.rng_seed = config.seed;
  if (config.topic_candidates.size() >= 2) {
    const auto selection = select_topic_count(docs, config.topic_candidates, hyper);
    for (const auto& [k, p] : selection.perplexities) {
      fmt::print(log, "train-lda: K={} held-out perplexity {:.4f}\n", k, p);
    }
    hyper.num_topics = selection.best;
  } else if (config.topic_candidates.size() == 1) {
    hyper.num_topics = config.topic_candidates.front();
  }
  auto model = train_lda(docs, hyper);
  model.set_trained_through(latest);
  const auto topics = infer_corpus_topics(model, index);

  const auto model_path = artifact_path(config, artifact::kLdaModel);
  auto mo = open_output(model_path);
  model.save(mo);
  close_output(mo, model_path);
  const auto topics_path = artifact_path(config, artifact::kDocTopics);
  auto to = open_output(topics_path);
  write_doc_topics(to, index, topics);
  close_output(to, topics_path);
  fmt::print(log, "train-lda: K={}, vocabulary {}, topics inferred for {} documents\n",
             model.num_topics(), model.vocab_size(), topics.size());
}

void run_build_hierarchy(const ExperimentConfig& config, std::ostream& log) {
  const auto logs = load_logs(config);
  const auto index = load_corpus(config);
  const auto history = history_before(logs.sessions, window_end(config, logs.origin));
  const auto hierarchy = build_hierarchy(index, history, config.hierarchy);
  const auto path = artifact_path(config, artifact::kHierarchy);
  auto out = open_output(path);
  hierarchy.save(out);
  close_output(out, path);
  fmt::print(log, "build-hierarchy: {} concepts, {} edges from {} sessions\n",
             hierarchy.nodes().size(), hierarchy.edges().size(), history.size());
}

void run_train_ranker(const ExperimentConfig& config, std::ostream& log) {
  const auto logs = load_logs(config);
  const auto index = load_corpus(config);
  const auto doc_topics = load_doc_topics(config, index);
  const auto hierarchy = load_hierarchy(config);
  QueryTopicCache topics(index, doc_topics);
  const auto impressions =
      prepare_impressions(logs.sessions, hierarchy, topics, replay_config(config), logs.origin);
  if (impressions.empty()) throw DataError("no labelled impressions to train on");
  int last = 0;
  for (const auto& p : impressions) last = std::max(last, p.week);
  for (const auto& m : standard_methods()) {
    if (!m.uses_ranker()) continue;
    std::vector<RankingGroup> groups;
    for (const auto& p : impressions) {
      if (p.week == last) groups.push_back(to_group(p, *m.mask));
    }
    const auto ensemble = train_lambdamart(groups, m.schema(), ranker_config(config));
    const auto path = ensemble_path(config, m.name);
    auto out = open_output(path);
    ensemble.save(out);
    close_output(out, path);
    fmt::print(log, "train-ranker: {} trained on {} impressions of week {} ({} features)\n", m.name,
               groups.size(), last, m.schema().width());
  }
}

EvaluationOutput run_evaluate(const ExperimentConfig& config, std::ostream& log) {
  const auto logs = load_logs(config);
  const auto index = load_corpus(config);
  const auto doc_topics = load_doc_topics(config, index);
  const auto model = load_lda(config);
  const auto hierarchy = load_hierarchy(config);
  if (model.num_topics() != static_cast<int>(doc_topics.front().size())) {
    throw DataError("document topics do not match the topic model");
  }
  QueryTopicCache topics(index, doc_topics);
  EvaluationOutput output;
  const auto impressions = prepare_impressions(logs.sessions, hierarchy, topics,
                                               replay_config(config), logs.origin,
                                               &output.preparation);
  const std::vector<ArtifactProvenance> provenance{
      {"topic model", model.trained_through()},
      {"concept hierarchy", hierarchy.trained_through()},
  };
  const auto methods = standard_methods();
  output.result = rolling_weekly_eval(impressions, methods, ranker_config(config), config.start_week,
                                      config.end_week, logs.origin, provenance, config.fingerprint());
  for (const auto& f : output.result.folds) {
    if (f.skipped) fmt::print(log, "evaluate: warning: fold {}->{} skipped: {}\n", f.train_week, f.test_week, f.note);
  }

  const auto effective = config.effective_text();
  const fs::path dir(config.report_dir);
  output.report = dir / "report.txt";
  output.impressions = dir / "impressions.tsv";
  {
    auto out = open_output(output.report);
    write_report(out, effective, output.result, methods, "Base", &output.preparation);
    close_output(out, output.report);
  }
  {
    auto out = open_output(output.impressions);
    write_impression_table(out, output.result);
    close_output(out, output.impressions);
  }
  {
    const auto path = dir / "effective.conf";
    auto out = open_output(path);
    out << effective;
    close_output(out, path);
  }
  const auto& prep = output.preparation;
  fmt::print(log, "evaluate: {} queries, {} with a click-validated refinement, {} labelled impressions\n",
             prep.queries, prep.queries - prep.without_refinement, prep.kept);
  for (const auto& m : methods) {
    const auto pooled = pooled_run(output.result, m.name);
    if (pooled.records.empty()) continue;
    fmt::print(log, "evaluate: {:<6} MAP {:.4f} over {} impressions\n", m.name,
               aggregate(pooled)[0], pooled.records.size());
  }
  fmt::print(log, "evaluate: report written to {}\n", output.report.string());
  return output;
}

std::vector<MethodPipeline> build_method_pipelines(const ExperimentConfig& config) {
  std::vector<MethodPipeline> out;
  for (auto& m : standard_methods()) {
    MethodPipeline p{m, std::nullopt};
    if (m.uses_ranker()) {
      auto in = open_input(ensemble_path(config, m.name), "train-ranker");
      p.ensemble = RankingEnsemble::load(in);
      try {
        p.ensemble->check_schema(m.schema());
      } catch (const std::invalid_argument& e) {
        throw DataError(fmt::format("{}: {}", ensemble_path(config, m.name).string(), e.what()));
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<RankedSuggestion> run_suggest(const ExperimentConfig& config,
                                          const SuggestRequest& request) {
  if (normalize_query(request.query).empty()) throw DataError("the current query is empty");
  const auto methods = build_method_pipelines(config);
  const auto it = std::find_if(methods.begin(), methods.end(),
                               [&](const MethodPipeline& m) { return m.spec.name == request.method; });
  if (it == methods.end()) throw ConfigError(fmt::format("unknown method '{}'", request.method));
  const auto index = load_corpus(config);
  const auto doc_topics = load_doc_topics(config, index);
  const auto hierarchy = load_hierarchy(config);
  QueryTopicCache topics(index, doc_topics);

  SearchSession session{"live", {}, false};
  std::int64_t seq = 0;
  for (auto e : request.history) {
    e.session_id = session.session_id;
    e.seq_id = ++seq;
    session.events.push_back(std::move(e));
  }
  session.events.push_back({session.session_id, EventType::kQuery, ++seq, request.query, {}});
  const auto impression = query_impressions(session).back();
  const auto context = build_context(impression, topics, config.decay);
  const auto base = suggest(hierarchy, request.query, config.list_size);
  const auto features = featurize(context, base.suggestions, topics);

  std::vector<double> scores = base.scores;
  if (it->spec.uses_ranker()) {
    std::vector<double> row;
    for (std::size_t i = 0; i < features.size(); ++i) {
      it->spec.mask->project(features[i], row);
      scores[i] = it->ensemble->predict(row);
    }
  }
  std::vector<RankedSuggestion> out;
  for (auto i : rerank_order(scores)) {
    out.push_back({base.suggestions[i], scores[i], static_cast<int>(i + 1), features[i]});
  }
  return out;
}

void write_suggestions(std::ostream& out, std::span<const RankedSuggestion> ranked) {
  out << "rank\tscore\tsuggestion";
  for (auto name : kFeatureNames) out << '\t' << name;
  out << '\n';
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    out << fmt::format("{}\t{:.6f}\t{}", r + 1, ranked[r].score, ranked[r].text);
    for (double v : ranked[r].features) out << fmt::format("\t{:.6g}", v);
    out << '\n';
  }
}

}  // namespace qsuggest
