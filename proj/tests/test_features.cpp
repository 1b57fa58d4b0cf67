#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "qsuggest/features.hpp"

using namespace qsuggest;

namespace {

// Plain recursive Levenshtein with memo, independent of the library DP.
template <typename Seq>
std::size_t oracle_distance(const Seq& a, const Seq& b) {
  std::vector<std::vector<long>> memo(a.size() + 1, std::vector<long>(b.size() + 1, -1));
  std::function<long(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> long {
    if (i == 0) return static_cast<long>(j);
    if (j == 0) return static_cast<long>(i);
    if (memo[i][j] >= 0) return memo[i][j];
    long best = std::min(go(i - 1, j), go(i, j - 1)) + 1;
    best = std::min(best, go(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1));
    return memo[i][j] = best;
  };
  return static_cast<std::size_t>(go(a.size(), b.size()));
}

std::string random_words(std::mt19937_64& gen) {
  static const char* kWords[] = {"a", "b", "map", "campus", "exam", "b"};
  std::string out;
  const int n = static_cast<int>(gen() % 5);
  for (int i = 0; i < n; ++i) {
    if (i > 0) out += ' ';
    out += kWords[gen() % 6];
  }
  return out;
}

std::string random_chars(std::mt19937_64& gen) {
  std::string out;
  const int n = static_cast<int>(gen() % 8);
  for (int i = 0; i < n; ++i) out += static_cast<char>('a' + gen() % 3);
  return out;
}

double js(const std::vector<double>& p, const std::vector<double>& q) {
  double total = 0.0;
  for (std::size_t z = 0; z < p.size(); ++z) {
    const double m = 0.5 * (p[z] + q[z]);
    if (p[z] > 0) total += 0.5 * p[z] * std::log(p[z] / m);
    if (q[z] > 0) total += 0.5 * q[z] * std::log(q[z] / m);
  }
  return total;
}

}  // namespace

TEST(StringFeatures, CosineExamples) {
  EXPECT_NEAR(cosine_sim("university webmail", "university email"), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(cosine_sim("exam dates", "Exam  Dates"), 1.0);
  EXPECT_DOUBLE_EQ(cosine_sim("exam", "parking"), 0.0);
  EXPECT_DOUBLE_EQ(cosine_sim("", "parking"), 0.0);
  EXPECT_NEAR(cosine_sim("map map campus", "map"), 2.0 / std::sqrt(5.0), 1e-12);
}

TEST(StringFeatures, JaccardExamples) {
  EXPECT_NEAR(jaccard("university webmail", "university email"), 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(jaccard("b a", "a b a"), 1.0);
  EXPECT_DOUBLE_EQ(jaccard("a", "b"), 0.0);
  EXPECT_DOUBLE_EQ(jaccard("", ""), 0.0);
}

TEST(StringFeatures, EditDistanceExamples) {
  EXPECT_EQ(word_edit_distance("campus map", "campus parking map"), 1u);
  EXPECT_EQ(word_edit_distance("campus map", "campus map"), 0u);
  EXPECT_EQ(word_edit_distance("a b", "c d"), 2u);
  EXPECT_EQ(char_levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(char_levenshtein("abc", "abc"), 0u);
  EXPECT_EQ(char_levenshtein("", "abc"), 3u);
  EXPECT_EQ(char_levenshtein("café", "cafe"), 1u);  // code points, not bytes
}

TEST(StringFeatures, DistancesMatchOracleAndAreMetrics) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 2000; ++trial) {
    const bool words = trial % 2 == 0;
    const auto a = words ? random_words(gen) : random_chars(gen);
    const auto b = words ? random_words(gen) : random_chars(gen);
    const auto c = words ? random_words(gen) : random_chars(gen);
    const auto d = words ? word_edit_distance : char_levenshtein;
    const std::size_t ab = d(a, b);
    if (words) {
      std::vector<std::string> ta;
      std::vector<std::string> tb;
      std::istringstream sa(a);
      std::istringstream sb(b);
      for (std::string w; sa >> w;) ta.push_back(w);
      for (std::string w; sb >> w;) tb.push_back(w);
      EXPECT_EQ(ab, oracle_distance(ta, tb));
    } else {
      EXPECT_EQ(ab, oracle_distance(a, b));
    }
    EXPECT_EQ(d(a, a), 0u);
    EXPECT_EQ(ab, d(b, a));
    EXPECT_LE(d(a, c), ab + d(b, c));
    if (ab == 0 && !words) {
      EXPECT_EQ(a, b);
    }
    const double cs = cosine_sim(a, b);
    const double jc = jaccard(a, b);
    EXPECT_GE(cs, 0.0);
    EXPECT_LE(cs, 1.0);
    EXPECT_GE(jc, 0.0);
    EXPECT_LE(jc, 1.0);
  }
}

TEST(ExtractFeatures, FirstQueryOfSession) {
  SuggestionContext ctx;
  ctx.current_query = "exam dates";
  ctx.query_profile = TopicDistribution({0.5, 0.5});
  const auto v = extract_features(ctx, "exam timetable", TopicDistribution({0.5, 0.5}), 1);
  EXPECT_EQ(at(v, Feature::kClickPersonalisedScore), -1.0);
  EXPECT_EQ(at(v, Feature::kQueryPersonalisedScore), 0.0);
  EXPECT_EQ(at(v, Feature::kQuerySim), 0.0);
  EXPECT_EQ(at(v, Feature::kQueryNo), 1.0);
  EXPECT_EQ(at(v, Feature::kSuggestedQueryPreUsed), 0.0);
}

TEST(ExtractFeatures, MissingSuggestionDistributionUsesSentinel) {
  SuggestionContext ctx;
  ctx.current_query = "exam";
  ctx.click_profile = TopicDistribution({0.5, 0.5});
  ctx.query_profile = TopicDistribution({0.5, 0.5});
  const auto v = extract_features(ctx, "exam", std::nullopt, 1);
  EXPECT_EQ(at(v, Feature::kClickPersonalisedScore), kMissingProfileScore);
  EXPECT_EQ(at(v, Feature::kQueryPersonalisedScore), kMissingProfileScore);
  EXPECT_LT(kMissingProfileScore, -std::log(2.0));
  EXPECT_THROW(extract_features(ctx, "exam", std::nullopt, 0), std::invalid_argument);
}

TEST(ExtractFeatures, FullVectorByHand) {
  SuggestionContext ctx;
  ctx.current_query = "campus map";
  ctx.previous_query = "campus library";
  ctx.query_count = 3;
  ctx.used_queries = {"campus library", "campus parking map"};
  ctx.click_profile = TopicDistribution({0.5, 0.5});
  const TopicDistribution sugg({1.0, 0.0});
  const auto v = extract_features(ctx, "Campus Parking Map", sugg, 2);
  EXPECT_NEAR(at(v, Feature::kClickPersonalisedScore), -js({1, 0}, {0.5, 0.5}), 1e-12);
  EXPECT_NEAR(at(v, Feature::kClickPersonalisedScore), -0.215762, 1e-6);
  EXPECT_EQ(at(v, Feature::kQueryPersonalisedScore), -1.0);
  EXPECT_EQ(at(v, Feature::kQueryRank), 2.0);
  EXPECT_NEAR(at(v, Feature::kQuerySim), 0.5, 1e-12);
  EXPECT_EQ(at(v, Feature::kQueryNo), 3.0);
  EXPECT_NEAR(at(v, Feature::kSuggestedQueryCosine), 2.0 / std::sqrt(6.0), 1e-12);
  EXPECT_NEAR(at(v, Feature::kSuggestedQueryJaccard), 2.0 / 3.0, 1e-12);
  EXPECT_EQ(at(v, Feature::kSuggestedQueryEdit), 1.0);
  EXPECT_EQ(at(v, Feature::kSuggestedQueryLevenshtein), 8.0);  // insert "parking "
  EXPECT_EQ(at(v, Feature::kSuggestedQueryPreUsed), 1.0);
  EXPECT_EQ(v, extract_features(ctx, "Campus Parking Map", sugg, 2));
}

TEST(ExtractFeatures, PersonalisedScoresStayInRange) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    SuggestionContext ctx;
    ctx.current_query = "q";
    ctx.click_profile = TopicDistribution::from_weights({u(gen), u(gen), u(gen) + 1e-3});
    const auto s = TopicDistribution::from_weights({u(gen) + 1e-3, u(gen), u(gen)});
    const auto v = extract_features(ctx, "s", s, 1);
    EXPECT_GE(at(v, Feature::kClickPersonalisedScore), -std::log(2.0));
    EXPECT_LE(at(v, Feature::kClickPersonalisedScore), 0.0);
  }
}

TEST(FeatureMask, ProjectAndNames) {
  const auto all = FeatureMask::all();
  EXPECT_EQ(all.width(), kNumFeatures);
  const auto click = FeatureMask::without({Feature::kQueryPersonalisedScore});
  EXPECT_EQ(click.width(), kNumFeatures - 1);
  FeatureVector v{};
  for (std::size_t i = 0; i < kNumFeatures; ++i) v[i] = static_cast<double>(i);
  std::vector<double> out{99.0};
  click.project(v, out);
  EXPECT_EQ(out, (std::vector<double>{0, 2, 3, 4, 5, 6, 7, 8, 9}));
  click.project(v, out);
  EXPECT_EQ(out.size(), 9u);
  EXPECT_EQ(click.names()[1], "QueryRank");
}

TEST(FeatureMask, MatrixDump) {
  FeatureRow row{"s1:2", 1, {}};
  row.values[2] = 3;
  std::ostringstream out;
  const std::vector<FeatureRow> rows{row};
  write_feature_matrix(out, FeatureMask::all(), rows);
  std::istringstream in(out.str());
  std::string header;
  std::string line;
  std::getline(in, header);
  std::getline(in, line);
  EXPECT_EQ(header.rfind("impression_id,label,ClickPersonalisedScore,", 0), 0u);
  EXPECT_EQ(line.rfind("s1:2,1,0,0,3,", 0), 0u);
}
