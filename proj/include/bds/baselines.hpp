#pragma once

// Comparison stopping strategies: fixed length, three static stopping times
// picked from a cross-validated decoding curve, and the dynamic margin and
// Beta methods.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bds/decode.hpp"
#include "bds/policy.hpp"

namespace bds::baselines {

using FitFn = std::function<decode::DecoderModel(std::span<const decode::Trial>)>;

/// Out-of-fold score traces for every trial of a training set.
struct ValidationTraces {
  std::vector<std::vector<decode::ScoreVector>> traces;  // trial -> window -> scores
  std::vector<std::size_t> labels;
  std::vector<std::size_t> fold_of;
  std::size_t folds_used = 0;
  std::string warning;
};

/// Trial k goes to fold k % folds. Folds are reduced (with a warning) when
/// there are fewer trials than folds.
ValidationTraces cross_validated_traces(const FitFn& fit, std::span<const decode::Trial> trials,
                                        std::span<const std::size_t> grid,
                                        decode::Similarity similarity, std::size_t folds = 5);

struct DecodingCurve {
  std::vector<double> windows_s;
  std::vector<double> accuracy;
  std::vector<double> itr;  // bits/min
  std::string warning;
};

DecodingCurve decoding_curve(const ValidationTraces& traces, std::span<const std::size_t> grid,
                             double fs, std::size_t n_classes);
DecodingCurve decoding_curve(const FitFn& fit, std::span<const decode::Trial> trials,
                             std::span<const std::size_t> grid, double fs, std::size_t n_classes,
                             decode::Similarity similarity, std::size_t folds = 5);

/// Builds a curve from explicit accuracies, computing ITR per window.
DecodingCurve make_curve(std::vector<double> windows_s, std::vector<double> accuracy,
                         std::size_t n_classes);

std::size_t static_max_accuracy(const DecodingCurve& curve);
/// Earliest window reaching theta; falls back to static_max_accuracy.
std::size_t static_targeted_accuracy(const DecodingCurve& curve, double theta);
std::size_t static_max_itr(const DecodingCurve& curve);

struct MarginTable {
  std::vector<double> thresholds;  // +inf means never stop at that window
  double target_accuracy = 0.0;
};

/// max score minus runner-up.
double margin(std::span<const double> scores);

/// Smallest observed margin m such that the trials with margin >= m are
/// correct at a rate >= theta; +inf if none qualifies.
double margin_threshold(std::span<const double> margins, const std::vector<bool>& correct,
                        double theta);

MarginTable fit_margin(const ValidationTraces& traces, double theta);

class FixedLengthPolicy final : public StoppingPolicy {
 public:
  explicit FixedLengthPolicy(std::size_t window,
                             decode::Similarity similarity = decode::Similarity::inner);
  Decision decide(const decode::ScoreVector& scores, std::size_t window,
                  bool is_last) const override;
  decode::Similarity similarity() const override { return similarity_; }
  std::string name() const override { return "fixed"; }
  std::size_t window() const { return window_; }

 private:
  std::size_t window_;
  decode::Similarity similarity_;
};

class MarginPolicy final : public StoppingPolicy {
 public:
  explicit MarginPolicy(MarginTable table,
                        decode::Similarity similarity = decode::Similarity::inner);
  Decision decide(const decode::ScoreVector& scores, std::size_t window,
                  bool is_last) const override;
  decode::Similarity similarity() const override { return similarity_; }
  std::string name() const override { return "margin"; }
  const MarginTable& table() const { return table_; }

 private:
  MarginTable table_;
  decode::Similarity similarity_;
};

/// Correlation scores only. Fits a Beta distribution by moments to the
/// non-maximum scores mapped into (0, 1) and stops once the maximum lies at
/// CDF >= theta.
class BetaPolicy final : public StoppingPolicy {
 public:
  static constexpr double kClampEps = 1e-6;

  explicit BetaPolicy(double theta);
  Decision decide(const decode::ScoreVector& scores, std::size_t window,
                  bool is_last) const override;
  decode::Similarity similarity() const override { return decode::Similarity::correlation; }
  std::string name() const override { return "beta"; }
  double theta() const { return theta_; }

  /// CDF of the mapped maximum under the fitted Beta; empty when the window is
  /// skipped (degenerate fit).
  std::optional<double> max_cdf(std::span<const double> scores) const;

 private:
  double theta_;
};

}  // namespace bds::baselines
