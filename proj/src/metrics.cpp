#include "bds/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bds::metrics {

DecisionCounts count_decisions(const StopOutcome& outcome, const std::vector<bool>& argmax_correct,
                               bool count_forced) {
  if (argmax_correct.size() <= outcome.stopped_at) {
    throw std::invalid_argument("count_decisions: correctness flags do not cover the stop window");
  }
  DecisionCounts c;
  if (outcome.forced && !count_forced) return c;
  for (std::size_t k = 0; k < outcome.stopped_at; ++k) {
    if (argmax_correct[k]) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  if (argmax_correct[outcome.stopped_at]) {
    ++c.tp;
  } else {
    ++c.fp;
  }
  return c;
}

namespace {

Rate ratio(std::size_t num, std::size_t den) {
  if (den == 0) return {0.0, true};
  return {static_cast<double>(num) / static_cast<double>(den), false};
}

}  // namespace

Rate precision(const DecisionCounts& c) { return ratio(c.tp, c.tp + c.fp); }
Rate recall(const DecisionCounts& c) { return ratio(c.tp, c.tp + c.fn); }
Rate specificity(const DecisionCounts& c) { return ratio(c.tn, c.tn + c.fp); }

Rate f_score(const DecisionCounts& c) {
  const Rate p = precision(c);
  const Rate r = recall(c);
  if (p.degenerate || r.degenerate || p.value + r.value == 0.0) return {0.0, true};
  return {2.0 * p.value * r.value / (p.value + r.value), false};
}

double itr(double p, std::size_t n_classes, double seconds) {
  if (n_classes < 2) throw std::invalid_argument("itr: need at least 2 classes");
  if (!(seconds > 0.0)) throw std::invalid_argument("itr: selection time must be positive");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("itr: accuracy outside [0, 1]");
  const double n = static_cast<double>(n_classes);
  if (p <= 1.0 / n) return 0.0;
  double bits = std::log2(n);
  if (p > 0.0) bits += p * std::log2(p);
  if (p < 1.0) bits += (1.0 - p) * std::log2((1.0 - p) / (n - 1.0));
  return std::max(bits, 0.0) * 60.0 / seconds;
}

double spm(double t_select_s, double overhead_s) {
  if (!(t_select_s > 0.0)) throw std::invalid_argument("spm: selection time must be positive");
  if (!(overhead_s >= 0.0)) throw std::invalid_argument("spm: overhead must be non-negative");
  return 60.0 / (t_select_s + overhead_s);
}

MetricsRow aggregate(std::span<const MetricsRow> rows) {
  if (rows.empty()) throw std::invalid_argument("aggregate: no rows");
  MetricsRow out;
  out.subject = "all";
  out.method = rows.front().method;
  out.hyperparam = rows.front().hyperparam;
  out.similarity = rows.front().similarity;
  const double n = static_cast<double>(rows.size());
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    // shifted by the first value so identical inputs give exactly zero spread
    const double ref = rows.front().values[m];
    double shift = 0.0;
    for (const auto& r : rows) shift += r.values[m] - ref;
    shift /= n;
    double ss = 0.0;
    for (const auto& r : rows) ss += (r.values[m] - ref - shift) * (r.values[m] - ref - shift);
    out.values[m] = ref + shift;
    out.ci[m] = rows.size() > 1 ? 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  }
  return out;
}

}  // namespace bds::metrics
