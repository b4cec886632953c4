#include "bds/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bds/beta.hpp"
#include "bds/metrics.hpp"

namespace bds::baselines {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ValidationTraces cross_validated_traces(const FitFn& fit, std::span<const decode::Trial> trials,
                                        std::span<const std::size_t> grid,
                                        decode::Similarity similarity, std::size_t folds) {
  if (trials.size() < 2) throw std::invalid_argument("cross_validated_traces: need at least 2 trials");
  if (grid.empty()) throw std::invalid_argument("cross_validated_traces: empty grid");
  ValidationTraces out;
  if (folds < 2) folds = 2;
  if (trials.size() < folds) {
    out.warning = "only " + std::to_string(trials.size()) + " trials; reducing inner folds from " +
                  std::to_string(folds) + " to " + std::to_string(trials.size());
    folds = trials.size();
  }
  out.folds_used = folds;
  out.traces.resize(trials.size());
  out.labels.resize(trials.size());
  out.fold_of.resize(trials.size());

  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<decode::Trial> train;
    std::vector<std::size_t> test;
    for (std::size_t k = 0; k < trials.size(); ++k) {
      if (k % folds == f) {
        test.push_back(k);
      } else {
        train.push_back(trials[k]);
      }
    }
    const decode::DecoderModel model = fit(train);
    for (std::size_t k : test) {
      if (!trials[k].label) throw std::invalid_argument("cross_validated_traces: unlabeled trial");
      out.traces[k] = decode::score_trace(model, trials[k], grid, similarity);
      out.labels[k] = *trials[k].label;
      out.fold_of[k] = f;
    }
  }
  return out;
}

DecodingCurve make_curve(std::vector<double> windows_s, std::vector<double> accuracy,
                         std::size_t n_classes) {
  if (windows_s.size() != accuracy.size()) {
    throw std::invalid_argument("make_curve: windows and accuracies differ in length");
  }
  DecodingCurve curve;
  curve.windows_s = std::move(windows_s);
  curve.accuracy = std::move(accuracy);
  curve.itr.reserve(curve.accuracy.size());
  for (std::size_t k = 0; k < curve.accuracy.size(); ++k) {
    curve.itr.push_back(metrics::itr(curve.accuracy[k], n_classes, curve.windows_s[k]));
  }
  return curve;
}

DecodingCurve decoding_curve(const ValidationTraces& traces, std::span<const std::size_t> grid,
                             double fs, std::size_t n_classes) {
  const std::size_t folds = traces.folds_used;
  std::vector<double> accuracy(grid.size(), 0.0);
  for (std::size_t w = 0; w < grid.size(); ++w) {
    // mean over folds of the per-fold accuracy
    std::vector<double> hits(folds, 0.0), counts(folds, 0.0);
    for (std::size_t k = 0; k < traces.traces.size(); ++k) {
      counts[traces.fold_of[k]] += 1.0;
      if (decode::classify(traces.traces[k][w]) == traces.labels[k]) hits[traces.fold_of[k]] += 1.0;
    }
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t f = 0; f < folds; ++f) {
      if (counts[f] > 0.0) {
        sum += hits[f] / counts[f];
        ++used;
      }
    }
    accuracy[w] = used ? sum / static_cast<double>(used) : 0.0;
  }
  std::vector<double> windows_s;
  windows_s.reserve(grid.size());
  for (std::size_t g : grid) windows_s.push_back(static_cast<double>(g) / fs);
  DecodingCurve curve = make_curve(std::move(windows_s), std::move(accuracy), n_classes);
  curve.warning = traces.warning;
  return curve;
}

DecodingCurve decoding_curve(const FitFn& fit, std::span<const decode::Trial> trials,
                             std::span<const std::size_t> grid, double fs, std::size_t n_classes,
                             decode::Similarity similarity, std::size_t folds) {
  return decoding_curve(cross_validated_traces(fit, trials, grid, similarity, folds), grid, fs,
                        n_classes);
}

std::size_t static_max_accuracy(const DecodingCurve& curve) {
  if (curve.accuracy.empty()) throw std::invalid_argument("static_max_accuracy: empty curve");
  return static_cast<std::size_t>(
      std::max_element(curve.accuracy.begin(), curve.accuracy.end()) - curve.accuracy.begin());
}

std::size_t static_targeted_accuracy(const DecodingCurve& curve, double theta) {
  for (std::size_t k = 0; k < curve.accuracy.size(); ++k) {
    if (curve.accuracy[k] >= theta) return k;
  }
  return static_max_accuracy(curve);
}

std::size_t static_max_itr(const DecodingCurve& curve) {
  if (curve.itr.empty()) throw std::invalid_argument("static_max_itr: empty curve");
  return static_cast<std::size_t>(std::max_element(curve.itr.begin(), curve.itr.end()) -
                                  curve.itr.begin());
}

double margin(std::span<const double> scores) {
  if (scores.size() < 2) throw std::invalid_argument("margin: need at least 2 scores");
  double first = -kInf, second = -kInf;
  for (double s : scores) {
    if (s > first) {
      second = first;
      first = s;
    } else if (s > second) {
      second = s;
    }
  }
  return first - second;
}

double margin_threshold(std::span<const double> margins, const std::vector<bool>& correct,
                        double theta) {
  if (margins.empty()) throw std::invalid_argument("fit_margin: empty training set");
  if (margins.size() != correct.size()) {
    throw std::invalid_argument("fit_margin: margins and correctness differ in length");
  }
  std::vector<std::size_t> order(margins.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return margins[a] < margins[b] || (margins[a] == margins[b] && a < b);
  });
  std::vector<std::size_t> suffix_correct(order.size() + 1, 0);
  for (std::size_t i = order.size(); i-- > 0;) {
    suffix_correct[i] = suffix_correct[i + 1] + (correct[order[i]] ? 1 : 0);
  }
  // Candidate thresholds are the distinct observed margins, ascending; the
  // subset for threshold m starts at its first occurrence.
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0 && margins[order[i]] == margins[order[i - 1]]) continue;
    const double n = static_cast<double>(order.size() - i);
    if (static_cast<double>(suffix_correct[i]) / n >= theta) return margins[order[i]];
  }
  return kInf;
}

MarginTable fit_margin(const ValidationTraces& traces, double theta) {
  if (traces.traces.empty()) throw std::invalid_argument("fit_margin: empty training set");
  const std::size_t windows = traces.traces.front().size();
  MarginTable table;
  table.target_accuracy = theta;
  table.thresholds.reserve(windows);
  const std::size_t n = traces.traces.size();
  std::vector<double> margins(n);
  std::vector<bool> correct(n);
  for (std::size_t w = 0; w < windows; ++w) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto& s = traces.traces[k][w].scores;
      margins[k] = margin(s);
      correct[k] = decode::classify(s) == traces.labels[k];
    }
    table.thresholds.push_back(
        margin_threshold(margins, correct, theta));
  }
  return table;
}

FixedLengthPolicy::FixedLengthPolicy(std::size_t window, decode::Similarity similarity)
    : window_(window), similarity_(similarity) {}

Decision FixedLengthPolicy::decide(const decode::ScoreVector& scores, std::size_t window,
                                   bool is_last) const {
  return {window >= window_ || is_last, decode::classify(scores)};
}

MarginPolicy::MarginPolicy(MarginTable table, decode::Similarity similarity)
    : table_(std::move(table)), similarity_(similarity) {}

Decision MarginPolicy::decide(const decode::ScoreVector& scores, std::size_t window,
                              bool is_last) const {
  if (window >= table_.thresholds.size()) throw std::out_of_range("MarginPolicy: window outside the table");
  const bool reached = margin(scores.scores) >= table_.thresholds[window];
  return {reached || is_last, decode::classify(scores)};
}

BetaPolicy::BetaPolicy(double theta) : theta_(theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("BetaPolicy: theta outside [0, 1]");
}

std::optional<double> BetaPolicy::max_cdf(std::span<const double> scores) const {
  auto map = [](double s) { return std::clamp((s + 1.0) / 2.0, kClampEps, 1.0 - kClampEps); };
  const std::size_t best = decode::classify(scores);
  const double top = map(scores[best]);
  std::vector<double> rest;
  rest.reserve(scores.size());
  for (double s : scores) {
    const double m = map(s);
    if (m != top) rest.push_back(m);
  }
  const auto params = beta::fit_moments(rest);
  if (!params) return std::nullopt;
  return beta::beta_cdf(top, params->a, params->b);
}

Decision BetaPolicy::decide(const decode::ScoreVector& scores, std::size_t, bool is_last) const {
  const std::size_t best = decode::classify(scores);
  const auto cdf = max_cdf(scores.scores);
  return {is_last || (cdf && *cdf >= theta_), best};
}

}  // namespace bds::baselines
