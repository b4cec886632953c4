#pragma once

// Synthetic multi-channel data from the single-source forward model
// x = alpha * t_y + noise, projected onto the channels by a spatial pattern.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bds/codec.hpp"
#include "bds/decode.hpp"

namespace bds::sim {

struct SimConfig {
  std::size_t n_classes = 36;
  std::size_t channels = 8;
  double fs = 120.0;
  double trial_seconds = 4.2;
  double alpha_true = 1.0;
  double sigma_true = 3.0;       // per-channel noise std
  double response_ms = 300.0;    // event response length L
  Eigen::VectorXd spatial_pattern;  // empty: default_pattern(channels)
  Eigen::VectorXd response;         // empty: default_response(L)
  std::uint64_t rng_seed = 1;

  std::size_t samples() const;
  std::size_t response_length() const;
  Eigen::VectorXd pattern() const;
  Eigen::VectorXd true_response() const;
};

/// Throws std::invalid_argument when the configuration is unusable.
void validate(const SimConfig& cfg);

/// Unit-norm pattern with a smooth fall-off across channels.
Eigen::VectorXd default_pattern(std::size_t channels);

/// [short block; long block] of length L each: a Gaussian-windowed burst
/// (15 Hz short, 9 Hz long) on a small positive half-wave. The long-flash
/// response is 1.5 times larger and later.
Eigen::VectorXd default_response(std::size_t response_length, double fs);

/// Degree-6 Gold codes, modulated, reduced to n_classes by greedy subset
/// selection on templates predicted from default_response.
codec::Codebook standard_codebook(std::size_t n_classes, double fs, double response_ms = 300.0,
                                  std::uint32_t poly_a = codec::kDefaultPolyA,
                                  std::uint32_t poly_b = codec::kDefaultPolyB, int degree = 6);

/// Planted templates r' M_i over the full trial length.
std::vector<Eigen::VectorXd> true_templates(const SimConfig& cfg, const codec::Codebook& codebook);

/// k trials per class, labels cycling 0..N-1. Trial j draws its noise from a
/// generator seeded with splitmix64(rng_seed + j).
std::vector<decode::Trial> make_dataset(const SimConfig& cfg, const codec::Codebook& codebook,
                                        std::size_t trials_per_class);

/// Inner-product scores against the planted templates on the source estimate
/// pattern' X / |pattern|^2 (the data row itself for a single unit channel).
std::vector<decode::ScoreVector> oracle_scores(const SimConfig& cfg,
                                               const codec::Codebook& codebook,
                                               std::span<const decode::Trial> dataset,
                                               std::size_t window_samples);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace bds::sim
