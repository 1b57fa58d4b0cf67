#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "qsuggest/base_suggester.hpp"
#include "qsuggest/error.hpp"
#include "qsuggest/synth.hpp"
#include "qsuggest/text.hpp"
#include "test_support.hpp"

using namespace qsuggest;
using namespace qsuggest::testing;

namespace {

const SubsumptionEdge* find_edge(const ConceptHierarchy& h, std::string_view parent,
                                 std::string_view child) {
  const auto p = h.find(parent);
  const auto c = h.find(child);
  if (!p || !c) return nullptr;
  for (const auto& e : h.edges()) {
    if (e.parent == *p && e.child == *c) return &e;
  }
  return nullptr;
}

std::vector<SearchSession> query_sessions(const std::vector<std::vector<std::string>>& queries) {
  std::vector<LogEvent> events;
  for (std::size_t s = 0; s < queries.size(); ++s) {
    const auto sid = "s" + std::to_string(s);
    std::int64_t seq = 1;
    for (const auto& q : queries[s]) events.push_back(query(sid, seq++, q));
  }
  return assemble_sessions(std::move(events));
}

struct SmallWorld {
  InvertedIndex index;
  std::vector<SearchSession> sessions;
};

SmallWorld small_world(std::uint64_t seed) {
  SynthConfig c;
  c.topics = 4;
  c.documents = 200;
  c.users = 60;
  c.sessions = 300;
  c.seed = seed;
  auto out = synth_generate(c);
  return {InvertedIndex::build(std::move(out.corpus)),
          preprocess_sessions(assemble_sessions(std::move(out.events)))};
}

}  // namespace

TEST(BuildHierarchy, ComputerSubsumesComputerScience) {
  std::vector<Document> docs;
  for (int i = 0; i < 10; ++i) {
    const bool cs = i < 3;
    docs.push_back(make_document("d" + std::to_string(i),
                                 cs ? "computer science department" : "computer lab room"));
  }
  const auto index = InvertedIndex::build(docs);
  const auto sessions = query_sessions({{"computer science", "computer lab"}, {"computer science"}});
  const auto h = build_hierarchy(index, sessions, HierarchyConfig{});
  const auto* e = find_edge(h, "computer", "computer science");
  ASSERT_NE(e, nullptr);
  EXPECT_DOUBLE_EQ(e->weight, 1.0);
  EXPECT_EQ(find_edge(h, "computer science", "computer"), nullptr);
  const auto& node = h.nodes()[*h.find("computer science")];
  EXPECT_EQ(node.corpus_freq, 3);
  EXPECT_EQ(node.log_freq, 2);
}

TEST(BuildHierarchy, MutualCooccurrenceGivesNoEdge) {
  std::vector<Document> docs;
  for (int i = 0; i < 6; ++i) docs.push_back(make_document("d" + std::to_string(i), "alpha beta"));
  for (int i = 6; i < 12; ++i) docs.push_back(make_document("d" + std::to_string(i), "gamma"));
  const auto h = build_hierarchy(InvertedIndex::build(docs), query_sessions({{"alpha"}}),
                                 HierarchyConfig{});
  ASSERT_TRUE(h.find("alpha"));
  ASSERT_TRUE(h.find("beta"));
  EXPECT_EQ(find_edge(h, "alpha", "beta"), nullptr);
  EXPECT_EQ(find_edge(h, "beta", "alpha"), nullptr);
}

TEST(BuildHierarchy, RareTermIsAbsent) {
  std::vector<Document> docs;
  for (int i = 0; i < 8; ++i) {
    docs.push_back(make_document("d" + std::to_string(i), i < 2 ? "common rare" : "common"));
  }
  const auto h = build_hierarchy(InvertedIndex::build(docs), query_sessions({{"rare"}, {"common"}}),
                                 HierarchyConfig{});
  EXPECT_TRUE(h.find("common"));
  EXPECT_FALSE(h.find("rare"));  // 2 documents + 1 query < 5
}

TEST(BuildHierarchy, EmptyInputsAreErrors) {
  const auto index = InvertedIndex::build({make_document("d", "x")});
  EXPECT_THROW(build_hierarchy(InvertedIndex::build({}), query_sessions({{"x"}}), HierarchyConfig{}),
               DataError);
  EXPECT_THROW(build_hierarchy(index, {}, HierarchyConfig{}), DataError);
}

TEST(Suggest, LectureChildren) {
  HierarchyConfig config;
  std::vector<ConceptNode> nodes{{"lecture", 10, 4}, {"lecture notes", 5, 4}, {"lecture timetable", 5, 4}};
  std::vector<SubsumptionEdge> edges{{0, 1, 0.9}, {0, 2, 0.7}};
  const ConceptHierarchy h(config, nodes, edges, {});
  const auto list = suggest(h, "lecture", 2);
  EXPECT_EQ(list.suggestions, (std::vector<std::string>{"lecture notes", "lecture timetable"}));
  const double prior = 1.0 + std::log1p(4.0);
  EXPECT_NEAR(list.scores[0], 0.9 * prior, 1e-12);
  EXPECT_NEAR(list.scores[1], 0.7 * prior, 1e-12);

  EXPECT_EQ(suggest(h, "lecture", 10).suggestions.size(), 2u);
  // The parent and the sibling are both relatives of "lecture notes".
  const auto sib = suggest(h, "Lecture Notes", 10);
  EXPECT_EQ(sib.suggestions, (std::vector<std::string>{"lecture", "lecture timetable"}));
}

TEST(Suggest, TiesBrokenLexicographically) {
  std::vector<ConceptNode> nodes{{"room", 10, 0}, {"room b", 5, 0}, {"room a", 5, 0}};
  const ConceptHierarchy h(HierarchyConfig{}, nodes, {{0, 1, 0.9}, {0, 2, 0.9}}, {});
  EXPECT_EQ(suggest(h, "room", 5).suggestions, (std::vector<std::string>{"room a", "room b"}));
}

TEST(Suggest, UnknownQueryUsesFallback) {
  std::vector<ConceptNode> nodes{{"lecture", 10, 4}};
  std::vector<FallbackEntry> fallback{{"parking permit", 9}, {"exam dates", 7}, {"zzz", 1}};
  const ConceptHierarchy h(HierarchyConfig{}, nodes, {}, fallback);
  const auto list = suggest(h, "swimming pool", 2);
  EXPECT_EQ(list.suggestions, (std::vector<std::string>{"parking permit", "exam dates"}));
  EXPECT_EQ(suggest(h, "exam dates", 5).suggestions,
            (std::vector<std::string>{"parking permit", "zzz"}));
  EXPECT_THROW(suggest(h, "x", 0), std::invalid_argument);
}

TEST(Suggest, PropertiesOnSyntheticLogs) {
  const auto world = small_world(3);
  HierarchyConfig config;
  const auto h = build_hierarchy(world.index, world.sessions, config);
  ASSERT_FALSE(h.edges().empty());

  std::set<std::pair<std::uint32_t, std::uint32_t>> edge_set;
  for (const auto& e : h.edges()) {
    EXPECT_GT(e.weight, 0.0);
    EXPECT_LE(e.weight, 1.0);
    edge_set.insert({e.parent, e.child});
  }
  for (const auto& [p, c] : edge_set) EXPECT_FALSE(edge_set.contains({c, p}));
  for (const auto& n : h.nodes()) EXPECT_GE(n.corpus_freq + n.log_freq, config.min_freq);

  // Acyclic: Kahn's algorithm consumes every node.
  std::vector<int> indegree(h.nodes().size(), 0);
  for (const auto& e : h.edges()) ++indegree[e.child];
  std::vector<std::uint32_t> ready;
  for (std::uint32_t v = 0; v < indegree.size(); ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  std::size_t seen = 0;
  while (!ready.empty()) {
    const auto v = ready.back();
    ready.pop_back();
    ++seen;
    for (auto e : h.child_edges(v)) {
      if (--indegree[h.edges()[e].child] == 0) ready.push_back(h.edges()[e].child);
    }
  }
  EXPECT_EQ(seen, h.nodes().size());

  std::size_t checked = 0;
  for (const auto& s : world.sessions) {
    for (const auto& e : s.events) {
      if (e.type != EventType::kQuery) continue;
      for (std::size_t n : {1u, 3u, 10u}) {
        const auto list = suggest(h, e.content, n);
        EXPECT_LE(list.suggestions.size(), n);
        EXPECT_EQ(list.suggestions.size(), list.scores.size());
        std::set<std::string> unique;
        for (std::size_t i = 0; i < list.suggestions.size(); ++i) {
          EXPECT_NE(normalize_query(list.suggestions[i]), normalize_query(e.content));
          unique.insert(normalize_query(list.suggestions[i]));
          if (i > 0) {
            EXPECT_LE(list.scores[i], list.scores[i - 1]);
          }
        }
        EXPECT_EQ(unique.size(), list.suggestions.size());
      }
      ++checked;
    }
  }
  EXPECT_GT(checked, 100u);
}

TEST(Suggest, DeterministicAndRoundTrips) {
  const auto world = small_world(11);
  const auto a = build_hierarchy(world.index, world.sessions, HierarchyConfig{});
  const auto b = build_hierarchy(world.index, world.sessions, HierarchyConfig{});
  std::ostringstream sa;
  std::ostringstream sb;
  a.save(sa);
  b.save(sb);
  EXPECT_EQ(sa.str(), sb.str());

  std::istringstream in(sa.str());
  const auto loaded = ConceptHierarchy::load(in);
  std::ostringstream again;
  loaded.save(again);
  EXPECT_EQ(again.str(), sa.str());
  EXPECT_EQ(loaded.trained_through(), a.trained_through());
  for (const auto& s : world.sessions) {
    for (const auto& e : s.events) {
      if (e.type != EventType::kQuery) continue;
      const auto x = suggest(a, e.content, 10);
      const auto y = suggest(loaded, e.content, 10);
      EXPECT_EQ(x.suggestions, y.suggestions);
      EXPECT_EQ(x.scores, y.scores);
    }
  }
}

TEST(Suggest, LoadRejectsGarbage) {
  std::istringstream in("not a hierarchy\n");
  EXPECT_THROW(ConceptHierarchy::load(in), DataError);
}

TEST(UnionWithRefinement, PresentRefinementLeavesListAlone) {
  const std::vector<std::string> list{"a", "b", "c"};
  EXPECT_EQ(union_with_refinement(list, "B", 3, 7), list);
}

TEST(UnionWithRefinement, InsertsAtUniformSlot) {
  const std::vector<std::string> list{"a", "b", "c"};
  std::map<std::size_t, int> slots;
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    const auto out = union_with_refinement(list, "r", 10, seed);
    ASSERT_EQ(out.size(), 4u);
    const auto pos = static_cast<std::size_t>(std::find(out.begin(), out.end(), "r") - out.begin());
    ++slots[pos];
    std::vector<std::string> rest;
    for (const auto& s : out) {
      if (s != "r") rest.push_back(s);
    }
    EXPECT_EQ(rest, list);
  }
  ASSERT_EQ(slots.size(), 4u);
  for (const auto& [pos, count] : slots) EXPECT_NEAR(count, 1000, 150) << pos;
}

TEST(UnionWithRefinement, FullListStaysAtN) {
  const std::vector<std::string> list{"a", "b", "c"};
  std::set<std::size_t> positions;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto out = union_with_refinement(list, "r", 3, seed);
    ASSERT_EQ(out.size(), 3u);
    const auto it = std::find(out.begin(), out.end(), "r");
    ASSERT_NE(it, out.end());
    positions.insert(static_cast<std::size_t>(it - out.begin()));
  }
  EXPECT_EQ(positions, (std::set<std::size_t>{0, 1, 2}));
  EXPECT_EQ(union_with_refinement({}, "r", 3, 1), std::vector<std::string>{"r"});
}
