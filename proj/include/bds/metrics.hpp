#pragma once

// Accuracy/speed metrics and decision-level relevance metrics.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bds/policy.hpp"

namespace bds::metrics {

struct DecisionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  DecisionCounts& operator+=(const DecisionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  bool operator==(const DecisionCounts&) const = default;
};

/// Windows before the stop are negative decisions (fn when the argmax was
/// already correct, tn otherwise); the stop is a positive one (tp / fp).
/// `argmax_correct` must cover windows 0..stopped_at. With
/// count_forced = false a forced trial contributes nothing.
DecisionCounts count_decisions(const StopOutcome& outcome, const std::vector<bool>& argmax_correct,
                               bool count_forced = true);

/// A ratio whose denominator may be zero; then value is 0 and degenerate set.
struct Rate {
  double value = 0.0;
  bool degenerate = false;
};

Rate precision(const DecisionCounts& c);
Rate recall(const DecisionCounts& c);
Rate specificity(const DecisionCounts& c);
Rate f_score(const DecisionCounts& c);

/// Wolpaw information transfer rate in bits/min; 0 below chance.
double itr(double p, std::size_t n_classes, double seconds);

/// Selections per minute.
double spm(double t_select_s, double overhead_s = 0.0);

inline constexpr std::size_t kMetricCount = 8;
inline constexpr std::array<const char*, kMetricCount> kMetricNames = {
    "accuracy", "mean_stop_s", "itr", "spm", "precision", "recall", "specificity", "f_score"};

struct MetricsRow {
  std::string subject;
  std::string method;
  double hyperparam = 0.0;
  std::string similarity;
  std::array<double, kMetricCount> values{};  // ordered as kMetricNames
  std::array<double, kMetricCount> ci{};      // 95% half-widths

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  double accuracy() const { return values[0]; }
  double mean_stop_s() const { return values[1]; }
  bool operator==(const MetricsRow&) const = default;
};

/// Across-subject mean with 1.96 * sd / sqrt(n) half-widths. Subject "all";
/// method, hyperparam and similarity are taken from the first row.
MetricsRow aggregate(std::span<const MetricsRow> rows);

}  // namespace bds::metrics
