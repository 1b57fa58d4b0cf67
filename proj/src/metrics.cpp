#include "qsuggest/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace qsuggest {

namespace {

double discount(std::size_t rank0) { return 1.0 / std::log2(static_cast<double>(rank0) + 2.0); }

// Lentz's method for the continued fraction of I_x(a, b).
double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + num / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + num / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double average_precision(std::span<const int> ranked_labels) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ranked_labels.size(); ++r) {
    if (ranked_labels[r] > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  if (hits == 0) throw std::invalid_argument("average precision needs at least one positive");
  return sum / static_cast<double>(hits);
}

double precision_at_k(std::span<const int> ranked_labels, std::size_t k) {
  if (k == 0) throw std::invalid_argument("precision cutoff must be positive");
  const auto top = std::min(k, ranked_labels.size());
  const auto hits = std::count_if(ranked_labels.begin(), ranked_labels.begin() + top,
                                  [](int l) { return l > 0; });
  return static_cast<double>(hits) / static_cast<double>(k);
}

double reciprocal_rank_at_10(std::span<const int> ranked_labels) {
  const auto top = std::min<std::size_t>(10, ranked_labels.size());
  for (std::size_t r = 0; r < top; ++r) {
    if (ranked_labels[r] > 0) return 1.0 / static_cast<double>(r + 1);
  }
  return 0.0;
}

double ndcg_at_k(std::span<const int> ranked_labels, std::size_t k) {
  const auto positives = static_cast<std::size_t>(
      std::count_if(ranked_labels.begin(), ranked_labels.end(), [](int l) { return l > 0; }));
  if (positives == 0) return 0.0;
  double ideal = 0.0;
  for (std::size_t r = 0; r < std::min(positives, k); ++r) ideal += discount(r);
  double dcg = 0.0;
  for (std::size_t r = 0; r < std::min(k, ranked_labels.size()); ++r) {
    if (ranked_labels[r] > 0) dcg += discount(r);
  }
  return dcg / ideal;
}

MetricValues compute_metrics(std::span<const int> ranked_labels) {
  return {average_precision(ranked_labels), precision_at_k(ranked_labels, 1),
          precision_at_k(ranked_labels, 5), reciprocal_rank_at_10(ranked_labels),
          ndcg_at_k(ranked_labels, 5),      ndcg_at_k(ranked_labels, 10)};
}

std::optional<double> relative_improvement(double candidate, double baseline) {
  if (!(baseline > 0.0)) return std::nullopt;
  return 100.0 * (candidate - baseline) / baseline;
}

double incomplete_beta(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("degrees of freedom must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * incomplete_beta(dof / (dof + t * t), dof / 2.0, 0.5);
  return t > 0 ? 1.0 - tail : tail;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired samples differ in length");
  if (a.size() < 2) throw std::invalid_argument("paired t-test needs at least two pairs");
  TTestResult r;
  r.n = a.size();
  const auto n = static_cast<double>(r.n);
  double mean = 0.0;
  for (std::size_t i = 0; i < r.n; ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < r.n; ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  r.mean_difference = mean;
  const double var = ss / (n - 1.0);
  // Differences that agree to rounding are treated as constant.
  const double scale = std::max(1.0, std::abs(mean));
  if (var <= 1e-24 * scale * scale) {
    if (mean == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = mean > 0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
      r.degenerate = true;
    }
    return r;
  }
  r.t = mean / std::sqrt(var / n);
  const double dof = n - 1.0;
  r.p = std::min(1.0, incomplete_beta(dof / (dof + r.t * r.t), dof / 2.0, 0.5));
  return r;
}

}  // namespace qsuggest
