#include "bds/sim.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace bds::sim {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t SimConfig::samples() const {
  return static_cast<std::size_t>(std::llround(trial_seconds * fs));
}

std::size_t SimConfig::response_length() const {
  return static_cast<std::size_t>(std::llround(response_ms * fs / 1000.0));
}

Eigen::VectorXd SimConfig::pattern() const {
  return spatial_pattern.size() > 0 ? spatial_pattern : default_pattern(channels);
}

Eigen::VectorXd SimConfig::true_response() const {
  return response.size() > 0 ? response : default_response(response_length(), fs);
}

void validate(const SimConfig& cfg) {
  if (cfg.n_classes < 2) throw std::invalid_argument("sim: need at least 2 classes");
  if (cfg.channels < 1) throw std::invalid_argument("sim: need at least 1 channel");
  if (!(cfg.fs > 0.0) || !(cfg.trial_seconds > 0.0)) {
    throw std::invalid_argument("sim: fs and trial_seconds must be positive");
  }
  if (!(cfg.sigma_true >= 0.0)) throw std::invalid_argument("sim: sigma_true must be non-negative");
  if (!std::isfinite(cfg.alpha_true)) throw std::invalid_argument("sim: alpha_true must be finite");
  if (cfg.response_length() < 1 || cfg.response_length() > cfg.samples()) {
    throw std::invalid_argument("sim: response length must be between 1 sample and the trial length");
  }
  const Eigen::VectorXd p = cfg.pattern();
  if (static_cast<std::size_t>(p.size()) != cfg.channels || !(p.norm() > 0.0)) {
    throw std::invalid_argument("sim: spatial pattern must have one non-zero entry per channel");
  }
  if (static_cast<std::size_t>(cfg.true_response().size()) !=
      codec::kEventKinds * cfg.response_length()) {
    throw std::invalid_argument("sim: response must have 2 * L samples");
  }
}

Eigen::VectorXd default_pattern(std::size_t channels) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(channels));
  for (std::size_t c = 0; c < channels; ++c) {
    p(static_cast<Eigen::Index>(c)) = std::exp(-0.25 * static_cast<double>(c));
  }
  return p / p.norm();
}

Eigen::VectorXd default_response(std::size_t response_length, double fs) {
  const auto l = static_cast<Eigen::Index>(response_length);
  const double duration = static_cast<double>(response_length) / fs;
  Eigen::VectorXd r(2 * l);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (Eigen::Index j = 0; j < l; ++j) {
    const double t = static_cast<double>(j) / fs;
    // slow positive half-wave under each burst
    const double slow = 0.1 * std::sin(std::numbers::pi * t / duration);
    const double a = (t - 0.10) / 0.04, b = (t - 0.12) / 0.05;
    r(j) = std::exp(-a * a) * std::sin(two_pi * 15.0 * t) + slow;
    r(l + j) = 1.5 * (std::exp(-b * b) * std::sin(two_pi * 9.0 * t) + slow);
  }
  return r;
}

codec::Codebook standard_codebook(std::size_t n_classes, double fs, double response_ms,
                                  std::uint32_t poly_a, std::uint32_t poly_b, int degree) {
  const codec::Codebook gold = codec::modulate(codec::generate_gold(poly_a, poly_b, degree));
  if (n_classes > gold.size()) {
    throw std::invalid_argument("standard_codebook: only " + std::to_string(gold.size()) +
                                " codes available");
  }
  const auto l = static_cast<std::size_t>(std::llround(response_ms * fs / 1000.0));
  // One code cycle, rounded to samples.
  const auto cycle = static_cast<std::size_t>(
      std::llround(static_cast<double>(gold.length()) * fs / gold.rate_hz()));
  const auto structures = codec::structure_matrices(gold, fs, std::max(cycle, l), l);
  const auto templates = decode::predict_templates(default_response(l, fs), structures);
  if (n_classes == gold.size()) return gold;
  return codec::select_subset(gold, templates, n_classes);
}

std::vector<Eigen::VectorXd> true_templates(const SimConfig& cfg, const codec::Codebook& codebook) {
  const auto structures =
      codec::structure_matrices(codebook, cfg.fs, cfg.samples(), cfg.response_length());
  return decode::predict_templates(cfg.true_response(), structures);
}

std::vector<decode::Trial> make_dataset(const SimConfig& cfg, const codec::Codebook& codebook,
                                        std::size_t trials_per_class) {
  validate(cfg);
  if (trials_per_class < 1) throw std::invalid_argument("make_dataset: need at least 1 trial per class");
  if (codebook.size() < cfg.n_classes) {
    throw std::invalid_argument("make_dataset: codebook has fewer codes than classes");
  }
  const auto templates = true_templates(cfg, codebook);
  const Eigen::VectorXd pattern = cfg.pattern();
  const auto samples = static_cast<Eigen::Index>(cfg.samples());
  const auto channels = static_cast<Eigen::Index>(cfg.channels);
  const std::size_t n_trials = trials_per_class * cfg.n_classes;

  std::vector<decode::Trial> out;
  out.reserve(n_trials);
  for (std::size_t j = 0; j < n_trials; ++j) {
    const std::size_t label = j % cfg.n_classes;
    std::mt19937_64 rng(splitmix64(cfg.rng_seed + j));
    std::normal_distribution<double> noise(0.0, 1.0);

    decode::Trial trial;
    trial.fs = cfg.fs;
    trial.label = label;
    trial.data = pattern * (cfg.alpha_true * templates[label]).transpose();
    for (Eigen::Index t = 0; t < samples; ++t) {
      for (Eigen::Index c = 0; c < channels; ++c) trial.data(c, t) += cfg.sigma_true * noise(rng);
    }
    out.push_back(std::move(trial));
  }
  return out;
}

std::vector<decode::ScoreVector> oracle_scores(const SimConfig& cfg,
                                               const codec::Codebook& codebook,
                                               std::span<const decode::Trial> dataset,
                                               std::size_t window_samples) {
  const auto templates = true_templates(cfg, codebook);
  const Eigen::VectorXd pattern = cfg.pattern();
  const auto window = static_cast<Eigen::Index>(window_samples);
  if (window < 1 || window > static_cast<Eigen::Index>(cfg.samples())) {
    throw std::invalid_argument("oracle_scores: window outside the trial");
  }
  std::vector<decode::ScoreVector> out;
  out.reserve(dataset.size());
  for (const auto& trial : dataset) {
    const Eigen::VectorXd source =
        (trial.data.leftCols(window).transpose() * pattern) / pattern.squaredNorm();
    decode::ScoreVector s;
    s.window_samples = window_samples;
    s.scores.reserve(cfg.n_classes);
    for (std::size_t i = 0; i < cfg.n_classes; ++i) {
      s.scores.push_back(source.dot(templates[i].head(window)));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace bds::sim
