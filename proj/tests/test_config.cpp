#include <map>

#include <gtest/gtest.h>

#include "qsuggest/config.hpp"
#include "qsuggest/error.hpp"

using namespace qsuggest;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars](const std::string& name) -> std::optional<std::string> {
    const auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

const EnvLookup kNoEnv = env_of({});

}  // namespace

TEST(Config, Defaults) {
  const auto c = parse_config("", kNoEnv);
  EXPECT_DOUBLE_EQ(c.decay.decay_alpha, 0.95);
  EXPECT_EQ(c.list_size, 10u);
  EXPECT_TRUE(c.refinement_union);
  EXPECT_EQ(c.ranker.num_trees, 100);
  EXPECT_EQ(c.ranker.num_leaves, 10);
  EXPECT_EQ(c.ranker.min_instances_per_leaf, 10);
  EXPECT_DOUBLE_EQ(c.ranker.learning_rate, 0.15);
  EXPECT_EQ(c.lda.num_topics, 20);
  EXPECT_EQ(c.seed, 42u);
}

TEST(Config, SectionsCommentsAndLists) {
  const auto c = parse_config(
      "# experiment\n"
      "[profiles]\n"
      "decay_alpha = 0.5   ; recency\n"
      "[lda]\n"
      "topics=7\n"
      "topic_candidates = 2, 5 ,20\n"
      "dirichlet_alpha = 0.1\n"
      "[suggest]\n"
      "refinement_union = off\n"
      "[synth]\n"
      "needs_distribution = 0.6,0.4\n",
      kNoEnv);
  EXPECT_DOUBLE_EQ(c.decay.decay_alpha, 0.5);
  EXPECT_EQ(c.lda.num_topics, 7);
  EXPECT_EQ(c.topic_candidates, (std::vector<int>{2, 5, 20}));
  EXPECT_DOUBLE_EQ(*c.lda.dirichlet_alpha, 0.1);
  EXPECT_FALSE(c.refinement_union);
  EXPECT_EQ(c.synth.needs_distribution, (std::vector<double>{0.6, 0.4}));
}

TEST(Config, EnvironmentOverridesFile) {
  const auto c = parse_config("[ranker]\ntrees = 50\n",
                              env_of({{"SUGGEST_RANKER_TREES", "12"}, {"SUGGEST_RUN_SEED", "7"}}));
  EXPECT_EQ(c.ranker.num_trees, 12);
  EXPECT_EQ(c.seed, 7u);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("[ranker]\nbogus = 1\n", kNoEnv), ConfigError);
  EXPECT_THROW(parse_config("trees = 1\n", kNoEnv), ConfigError);
  EXPECT_THROW(parse_config("[ranker\n", kNoEnv), ConfigError);
  EXPECT_THROW(parse_config("[ranker]\ntrees\n", kNoEnv), ConfigError);
  EXPECT_THROW(parse_config("[ranker]\ntrees = many\n", kNoEnv), ConfigError);
  EXPECT_THROW(parse_config("[profiles]\ndecay_alpha = 1.5\n", kNoEnv), ConfigError);
  EXPECT_THROW(parse_config("[ranker]\nleaves = 1\n", kNoEnv), ConfigError);
  EXPECT_THROW(parse_config("[suggest]\nrefinement_union = maybe\n", kNoEnv), ConfigError);
  EXPECT_THROW(parse_config("[synth]\nstart_date = 2012-01-03\n", kNoEnv), ConfigError);
  EXPECT_THROW(parse_config("", env_of({{"SUGGEST_SUGGEST_LIST_SIZE", "0"}})), ConfigError);
  EXPECT_THROW(load_config(std::filesystem::path("/nonexistent/q.conf"), kNoEnv), ConfigError);
}

TEST(Config, EffectiveTextRoundTrips) {
  const auto c = parse_config("[ranker]\nlearning_rate = 0.25\n[eval]\nend_week = 3\n", kNoEnv);
  const auto text = c.effective_text();
  EXPECT_NE(text.find("[ranker]\n"), std::string::npos);
  EXPECT_NE(text.find("learning_rate = 0.25\n"), std::string::npos);
  EXPECT_NE(text.find("dirichlet_alpha = auto\n"), std::string::npos);
  const auto again = parse_config(text, kNoEnv);
  EXPECT_EQ(again.effective_text(), text);
  EXPECT_EQ(again.fingerprint(), c.fingerprint());
  EXPECT_NE(parse_config("", kNoEnv).fingerprint(), c.fingerprint());
}
