#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace qsuggest {

/// Labels are binary and given in ranked order (index 0 = rank 1).

/// Mean over positive ranks r of (positives at or above r) / r. Throws
/// std::invalid_argument when there is no positive.
double average_precision(std::span<const int> ranked_labels);
/// Lists shorter than k count the missing ranks as negatives.
double precision_at_k(std::span<const int> ranked_labels, std::size_t k);
double reciprocal_rank_at_10(std::span<const int> ranked_labels);
/// DCG@k over the ideal DCG@k; 0 when there is no positive.
double ndcg_at_k(std::span<const int> ranked_labels, std::size_t k);

enum class Metric : std::size_t { kAp = 0, kP1, kP5, kRr10, kNdcg5, kNdcg10 };
inline constexpr std::size_t kNumMetrics = 6;
/// Names of the run-level means.
inline constexpr std::array<std::string_view, kNumMetrics> kMetricNames = {
    "MAP", "P@1", "P@5", "MRR@10", "nDCG@5", "nDCG@10"};

using MetricValues = std::array<double, kNumMetrics>;

MetricValues compute_metrics(std::span<const int> ranked_labels);

/// 100 * (candidate - baseline) / baseline; nullopt when baseline is not
/// positive.
std::optional<double> relative_improvement(double candidate, double baseline);

struct TTestResult {
  std::size_t n = 0;
  double mean_difference = 0.0;
  double t = 0.0;  // +-inf for the zero-variance case
  double p = 1.0;
  bool degenerate = false;  // zero variance with nonzero mean: p reported as 0
};

/// Two-sided paired t-test on a - b. Throws std::invalid_argument on unequal
/// lengths or fewer than two pairs.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// P(T <= t) for Student's t with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);
/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double x, double a, double b);

}  // namespace qsuggest
