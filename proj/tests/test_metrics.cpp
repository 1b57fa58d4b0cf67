#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "metric_oracles.hpp"
#include "qsuggest/metrics.hpp"

using namespace qsuggest;
using namespace qsuggest::testing;

namespace {
using V = std::vector<int>;
}

TEST(AveragePrecision, Examples) {
  EXPECT_NEAR(average_precision(V{1, 0, 1}), 5.0 / 6.0, 1e-12);
  EXPECT_DOUBLE_EQ(average_precision(V{1, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(average_precision(V{0, 0, 0, 1}), 0.25);
  EXPECT_THROW(average_precision(V{0, 0}), std::invalid_argument);
}

TEST(PrecisionAtK, Examples) {
  EXPECT_DOUBLE_EQ(precision_at_k(V{1, 0, 1, 0, 0}, 5), 0.4);
  EXPECT_DOUBLE_EQ(precision_at_k(V{0, 0, 0, 0, 0, 1}, 5), 0.0);
  EXPECT_DOUBLE_EQ(precision_at_k(V{1}, 1), 1.0);
  EXPECT_DOUBLE_EQ(precision_at_k(V{1, 1}, 5), 0.4);  // padded
  EXPECT_THROW(precision_at_k(V{1}, 0), std::invalid_argument);
}

TEST(ReciprocalRank, Examples) {
  EXPECT_NEAR(reciprocal_rank_at_10(V{0, 0, 1}), 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(reciprocal_rank_at_10(V{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1}), 0.0);
  EXPECT_DOUBLE_EQ(reciprocal_rank_at_10(V{1, 1}), 1.0);
}

TEST(Ndcg, Examples) {
  EXPECT_NEAR(ndcg_at_k(V{0, 1, 0, 0, 0}, 5), 1.0 / std::log2(3.0), 1e-12);
  EXPECT_NEAR(ndcg_at_k(V{0, 1, 0, 0, 0}, 5), 0.6309, 1e-4);
  EXPECT_DOUBLE_EQ(ndcg_at_k(V{1, 1, 0, 0}, 5), 1.0);
  EXPECT_DOUBLE_EQ(ndcg_at_k(V{0, 0, 0, 0, 0, 1}, 5), 0.0);
  EXPECT_DOUBLE_EQ(ndcg_at_k(V{0, 0}, 5), 0.0);
}

TEST(Metrics, MatchOracleOnRandomVectors) {
  std::mt19937_64 gen(1234);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + gen() % 15;
    V y(n);
    for (auto& v : y) v = gen() % 4 == 0 ? 1 : 0;
    y[gen() % n] = 1;
    const auto m = compute_metrics(y);
    EXPECT_NEAR(m[0], MetricOracle::ap(y), 1e-9);
    EXPECT_NEAR(m[1], MetricOracle::precision(y, 1), 1e-9);
    EXPECT_NEAR(m[2], MetricOracle::precision(y, 5), 1e-9);
    EXPECT_NEAR(m[3], MetricOracle::rr10(y), 1e-9);
    EXPECT_NEAR(m[4], MetricOracle::ndcg(y, 5), 1e-9);
    EXPECT_NEAR(m[5], MetricOracle::ndcg(y, 10), 1e-9);
    for (double v : m) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    // nDCG@10 is 1 exactly when no negative precedes a positive in the top 10.
    bool ideal = true;
    bool seen_negative = false;
    for (std::size_t r = 0; r < n && r < 10; ++r) {
      if (!y[r]) {
        seen_negative = true;
      } else if (seen_negative) {
        ideal = false;
      }
    }
    if (ideal) {
      for (std::size_t r = 10; r < n; ++r) {
        if (y[r]) ideal = false;
      }
    }
    EXPECT_EQ(std::abs(m[5] - 1.0) < 1e-12, ideal);
  }
}

TEST(RelativeImprovement, Examples) {
  EXPECT_NEAR(*relative_improvement(0.6037, 0.5440), 10.97, 0.005);
  EXPECT_NEAR(*relative_improvement(0.5833, 0.5440), 7.22, 0.005);
  EXPECT_DOUBLE_EQ(*relative_improvement(0.5, 0.5), 0.0);
  EXPECT_FALSE(relative_improvement(0.5, 0.0));
}

TEST(TTest, IdenticalSamples) {
  const std::vector<double> a{0.1, 0.5, 0.9};
  const auto r = paired_t_test(a, a);
  EXPECT_EQ(r.p, 1.0);
  EXPECT_FALSE(r.degenerate);
}

TEST(TTest, ZeroVarianceNonzeroMean) {
  const std::vector<double> a{2, 3, 4, 5};
  const std::vector<double> b{1, 2, 3, 4};
  const auto r = paired_t_test(a, b);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.p, 0.0);
  EXPECT_DOUBLE_EQ(r.mean_difference, 1.0);
}

TEST(TTest, BoundaryAtTwoPointTwoSixTwo) {
  // Deviations with mean 0 and sample sd 1; the mean shift gives t = 2.262.
  const std::vector<double> e{-1.5, -1, -0.5, -0.25, 0, 0, 0.25, 0.5, 1, 1.5};
  double ss = 0.0;
  for (double x : e) ss += x * x;
  const double sd = std::sqrt(ss / 9.0);
  const double shift = 2.262 * sd / std::sqrt(10.0);
  std::vector<double> a;
  const std::vector<double> b(10, 0.0);
  for (double x : e) a.push_back(x + shift);
  const auto r = paired_t_test(a, b);
  EXPECT_NEAR(r.t, 2.262, 1e-9);
  const double reference = 2.0 * (1.0 - t_cdf_quadrature(2.262, 9.0));
  EXPECT_NEAR(r.p, reference, 1e-6);
  EXPECT_NEAR(r.p, 0.05, 1e-3);
}

TEST(TTest, Errors) {
  EXPECT_THROW(paired_t_test(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
  EXPECT_THROW(paired_t_test(std::vector<double>{1, 2}, std::vector<double>{1}), std::invalid_argument);
}

TEST(StudentT, MatchesQuadrature) {
  for (double dof : {1.0, 2.0, 5.0, 9.0, 30.0, 500.0, 5000.0}) {
    for (double t : {-6.0, -2.5, -1.0, -0.1, 0.0, 0.3, 1.0, 2.262, 4.0, 10.0}) {
      EXPECT_NEAR(student_t_cdf(t, dof), t_cdf_quadrature(t, dof), 1e-6) << t << " " << dof;
    }
  }
  EXPECT_DOUBLE_EQ(student_t_cdf(0.0, 3.0), 0.5);
}

TEST(IncompleteBeta, ClosedForms) {
  EXPECT_NEAR(incomplete_beta(0.3, 1, 1), 0.3, 1e-12);
  EXPECT_NEAR(incomplete_beta(0.3, 2, 1), 0.09, 1e-12);
  EXPECT_NEAR(incomplete_beta(0.3, 1, 2), 1 - 0.49, 1e-12);
  EXPECT_EQ(incomplete_beta(0.0, 2, 3), 0.0);
  EXPECT_EQ(incomplete_beta(1.0, 2, 3), 1.0);
}
