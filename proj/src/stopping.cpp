#include "bds/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bds::stopping {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void validate(const BdsModel& m) {
  if (!std::isfinite(m.alpha)) throw std::invalid_argument("BdsModel: alpha must be finite");
  if (!(m.sigma > 0.0)) throw std::invalid_argument("BdsModel: sigma must be positive");
  if (!(m.zeta > 0.0)) throw std::invalid_argument("BdsModel: zeta must be positive");
  if (m.n_classes < 2) throw std::invalid_argument("BdsModel: need at least 2 classes");
  if (m.grid.empty()) throw std::invalid_argument("BdsModel: empty decision grid");
  if (m.pairs.size() != m.grid.size() || m.eta.size() != m.grid.size()) {
    throw std::invalid_argument("BdsModel: grid, pairs and eta must have equal length");
  }
  for (std::size_t k = 0; k < m.grid.size(); ++k) {
    if (m.grid[k] == 0 || (k > 0 && m.grid[k] <= m.grid[k - 1])) {
      throw std::invalid_argument("BdsModel: grid must be strictly increasing and positive");
    }
    const GaussPair& p = m.pairs[k];
    if (!(p.s0 > 0.0) || !(p.s1 > 0.0) || !std::isfinite(p.b0) || !std::isfinite(p.b1)) {
      throw std::invalid_argument("BdsModel: invalid distribution parameters at window " +
                                  std::to_string(k));
    }
  }
  if (m.grid.back() != m.t_star) {
    throw std::invalid_argument("BdsModel: last grid window must equal t_star");
  }
}

AlphaSigma estimate_alpha_sigma(std::span<const SignalTemplate> pairs) {
  if (pairs.empty()) throw std::invalid_argument("estimate_alpha_sigma: no trials");
  double tx = 0.0, tt = 0.0;
  std::size_t n = 0;
  for (const auto& p : pairs) {
    if (p.signal.size() != p.templ.size()) {
      throw std::invalid_argument("estimate_alpha_sigma: signal and template lengths differ");
    }
    for (std::size_t i = 0; i < p.signal.size(); ++i) {
      tx += p.templ[i] * p.signal[i];
      tt += p.templ[i] * p.templ[i];
    }
    n += p.signal.size();
  }
  if (!(tt > 0.0)) throw std::invalid_argument("estimate_alpha_sigma: all-zero template");

  AlphaSigma out;
  out.alpha = tx / tt;
  // Two-pass population variance of the residuals.
  double sum = 0.0;
  for (const auto& p : pairs) {
    for (std::size_t i = 0; i < p.signal.size(); ++i) sum += p.signal[i] - out.alpha * p.templ[i];
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& p : pairs) {
    for (std::size_t i = 0; i < p.signal.size(); ++i) {
      const double e = p.signal[i] - out.alpha * p.templ[i] - mean;
      ss += e * e;
    }
  }
  out.sigma = std::sqrt(ss / static_cast<double>(n));
  const double floor = 1e-9 * std::sqrt(tt / static_cast<double>(n));
  if (!(out.sigma > floor)) {
    out.sigma = floor;
    out.floored = true;
  }
  return out;
}

GaussPair distribution_params(const Eigen::MatrixXd& gram, double alpha, double sigma,
                              std::size_t window_samples) {
  const Eigen::Index n = gram.rows();
  if (n < 2 || gram.cols() != n) {
    throw std::invalid_argument("distribution_params: need a square Gram matrix over >= 2 classes");
  }
  const double nn = static_cast<double>(n);
  const double pairs = nn * nn - nn;

  GaussPair out;
  out.window_samples = window_samples;
  out.b1 = gram.diagonal().sum() / nn;
  out.b0 = (gram.sum() - gram.diagonal().sum()) / pairs;

  double spread1 = 0.0, spread0 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) {
        const double d = alpha * gram(i, i) - alpha * out.b1;
        spread1 += d * d;
      } else {
        const double d = alpha * gram(i, j) - alpha * out.b0;
        spread0 += d * d;
      }
    }
  }
  const double noise = sigma * sigma * out.b1;
  const double var1 = noise + spread1 / nn;
  const double var0 = noise + spread0 / pairs;

  // Floor relative to the largest template energy so that a zero-energy
  // window still yields a usable (if uninformative) pair.
  const double scale = std::max({std::abs(noise), gram.diagonal().cwiseAbs().maxCoeff(), 1e-300});
  const double floor = 1e-24 * scale;
  out.s1 = std::sqrt(std::max(var1, floor));
  out.s0 = std::sqrt(std::max(var0, floor));
  return out;
}

GaussPair distribution_params(std::span<const Eigen::VectorXd> truncated_templates, double alpha,
                              double sigma) {
  const auto n = static_cast<Eigen::Index>(truncated_templates.size());
  if (n < 2) throw std::invalid_argument("distribution_params: need at least 2 templates");
  const Eigen::Index len = truncated_templates.front().size();
  if (len < 1) throw std::invalid_argument("distribution_params: empty window");
  Eigen::MatrixXd stacked(n, len);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (truncated_templates[static_cast<std::size_t>(i)].size() != len) {
      throw std::invalid_argument("distribution_params: templates differ in length");
    }
    stacked.row(i) = truncated_templates[static_cast<std::size_t>(i)].transpose();
  }
  return distribution_params(Eigen::MatrixXd(stacked * stacked.transpose()), alpha, sigma,
                             static_cast<std::size_t>(len));
}

double llr(double f, const GaussPair& p, double alpha) {
  const double v0 = p.s0 * p.s0;
  const double v1 = p.s1 * p.s1;
  const double quad = (v1 - v0) * f * f - 2.0 * alpha * (v1 * p.b0 - v0 * p.b1) * f -
                      alpha * alpha * (v0 * p.b1 * p.b1 - v1 * p.b0 * p.b0);
  return std::log(p.s0 / p.s1) + quad / (2.0 * v0 * v1);
}

double log_threshold(std::size_t n_classes, double zeta) {
  if (n_classes < 2) throw std::invalid_argument("log_threshold: need N >= 2");
  if (!(zeta > 0.0)) throw std::invalid_argument("log_threshold: zeta must be positive");
  return std::log(static_cast<double>(n_classes - 1)) + std::log(zeta);
}

double decision_boundary(const GaussPair& p, double alpha, double zeta, std::size_t n_classes) {
  const double threshold = log_threshold(n_classes, zeta);
  const double v0 = p.s0 * p.s0;
  const double v1 = p.s1 * p.s1;

  // llr(f) - threshold = (a f^2 + b f + c) / (2 v0 v1)
  const double a = v1 - v0;
  const double b = -2.0 * alpha * (v1 * p.b0 - v0 * p.b1);
  const double c = -alpha * alpha * (v0 * p.b1 * p.b1 - v1 * p.b0 * p.b0) +
                   2.0 * v0 * v1 * (std::log(p.s0 / p.s1) - threshold);

  double eta = 0.0;
  if (a == 0.0) {
    if (b > 0.0) {
      eta = -c / b;
    } else if (b == 0.0) {
      return c < 0.0 ? kInf : -kInf;
    } else {
      return -kInf;
    }
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return a > 0.0 ? -kInf : kInf;
    const double root = std::sqrt(disc);
    // (-b + sqrt(disc)) / (2a) is the crossing with positive slope for either
    // sign of a; pick the algebraic form without cancellation.
    eta = b >= 0.0 ? (2.0 * c) / (-b - root) : (-b + root) / (2.0 * a);
    if (!std::isfinite(eta)) return a > 0.0 ? -kInf : kInf;
  }

  // Newton polish on the log-likelihood ratio itself.
  for (int it = 0; it < 3; ++it) {
    const double g = llr(eta, p, alpha) - threshold;
    const double slope = (eta - alpha * p.b0) / v0 - (eta - alpha * p.b1) / v1;
    if (g == 0.0 || !(slope > 0.0)) break;
    const double next = eta - g / slope;
    if (!(std::abs(llr(next, p, alpha) - threshold) < std::abs(g))) break;
    eta = next;
  }
  return eta;
}

std::vector<std::size_t> make_grid(std::size_t step, std::size_t t_star) {
  if (step == 0) throw std::invalid_argument("make_grid: step must be positive");
  if (t_star < step) throw std::invalid_argument("make_grid: t_star shorter than one step");
  std::vector<std::size_t> grid;
  for (std::size_t w = step; w < t_star; w += step) grid.push_back(w);
  grid.push_back(t_star);
  return grid;
}

std::vector<std::size_t> make_grid_ms(double step_ms, double t_star_s, double fs) {
  if (!(step_ms > 0.0) || !(fs > 0.0)) {
    throw std::invalid_argument("make_grid_ms: step and fs must be positive");
  }
  const auto t_star = static_cast<std::size_t>(std::llround(t_star_s * fs));
  if (std::llround(step_ms * fs / 1000.0) < 1 || static_cast<double>(t_star) < step_ms * fs / 1000.0) {
    throw std::invalid_argument("make_grid_ms: grid step must be >= 1 sample and <= t_star");
  }
  std::vector<std::size_t> grid;
  for (std::size_t k = 1;; ++k) {
    const auto w = static_cast<std::size_t>(std::llround(static_cast<double>(k) * step_ms * fs / 1000.0));
    if (w >= t_star) break;
    if (grid.empty() || w > grid.back()) grid.push_back(w);
  }
  grid.push_back(t_star);
  return grid;
}

BdsModel calibrate(const decode::DecoderModel& model, std::span<const decode::Trial> trials,
                   std::span<const std::size_t> grid, double zeta, std::size_t t_star) {
  if (trials.empty()) throw std::invalid_argument("calibrate: no training trials");
  if (grid.empty()) throw std::invalid_argument("calibrate: empty decision grid");
  if (grid.back() != t_star) throw std::invalid_argument("calibrate: last grid window must equal t_star");
  if (static_cast<Eigen::Index>(t_star) > model.template_length()) {
    throw std::invalid_argument("calibrate: t_star exceeds template length");
  }
  if (!(zeta > 0.0)) throw std::invalid_argument("calibrate: zeta must be positive");
  const std::size_t n = model.n_classes();
  if (n < 2) throw std::invalid_argument("calibrate: need at least 2 classes");

  // (alpha, sigma) from the filtered training data against the true templates.
  std::vector<Eigen::VectorXd> filtered;
  filtered.reserve(trials.size());
  std::vector<SignalTemplate> pairs;
  pairs.reserve(trials.size());
  const auto len = static_cast<Eigen::Index>(t_star);
  for (const auto& trial : trials) {
    if (!trial.label || *trial.label >= n) throw std::invalid_argument("calibrate: trial without valid label");
    if (trial.samples() < len) throw std::invalid_argument("calibrate: trial shorter than t_star");
    filtered.push_back(decode::spatially_filter(model, trial).head(len));
    const Eigen::VectorXd& t = model.templates[*trial.label];
    pairs.push_back({std::span<const double>(filtered.back().data(), t_star),
                     std::span<const double>(t.data(), t_star)});
  }
  const AlphaSigma as = estimate_alpha_sigma(pairs);

  BdsModel out;
  out.alpha = as.alpha;
  out.sigma = as.sigma;
  out.sigma_floored = as.floored;
  out.zeta = zeta;
  out.n_classes = n;
  out.t_star = t_star;
  out.fs = model.fs;
  out.grid.assign(grid.begin(), grid.end());

  Eigen::MatrixXd stacked(static_cast<Eigen::Index>(n), len);
  for (std::size_t i = 0; i < n; ++i) stacked.row(static_cast<Eigen::Index>(i)) = model.templates[i].head(len).transpose();

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::size_t done = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k] <= done && k > 0) throw std::invalid_argument("calibrate: grid must be strictly increasing");
    const auto block = stacked.middleCols(static_cast<Eigen::Index>(done),
                                          static_cast<Eigen::Index>(grid[k] - done));
    gram.noalias() += block * block.transpose();
    done = grid[k];
    const GaussPair pair = distribution_params(gram, out.alpha, out.sigma, grid[k]);
    out.pairs.push_back(pair);
    out.eta.push_back(decision_boundary(pair, out.alpha, zeta, n));
  }
  return out;
}

BdsPolicy::BdsPolicy(BdsModel model) : model_(std::move(model)) { validate(model_); }

Decision BdsPolicy::decide(const decode::ScoreVector& scores, std::size_t window,
                           bool is_last) const {
  if (window >= model_.eta.size()) throw std::out_of_range("BdsPolicy: window outside the grid");
  const std::size_t best = decode::classify(scores);
  // The largest score is in the accept set whenever the set is non-empty.
  const bool accept = scores.scores[best] > model_.eta[window];
  return {accept || is_last, best};
}

StopOutcome run_trial(const BdsModel& bds, const decode::DecoderModel& model,
                      const decode::Trial& trial, ForcedEmission forced_mode) {
  if (trial.samples() < static_cast<Eigen::Index>(bds.t_star)) {
    throw std::invalid_argument("run_trial: trial shorter than t_star");
  }
  const BdsPolicy policy(bds);
  const auto trace = decode::score_trace(model, trial, bds.grid, decode::Similarity::inner);
  return run_policy(policy, trace, forced_mode);
}

}  // namespace bds::stopping
