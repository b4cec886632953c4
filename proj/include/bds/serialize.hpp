#pragma once

// JSON documents for calibrated models and simulation jobs. Infinite values
// are written as the strings "inf" / "-inf".

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bds/baselines.hpp"
#include "bds/decode.hpp"
#include "bds/sim.hpp"
#include "bds/stopping.hpp"

namespace bds::serialize {

std::string to_json(const stopping::BdsModel& model);
stopping::BdsModel bds_model_from_json(const std::string& text);

std::string to_json(const decode::DecoderModel& model);
decode::DecoderModel decoder_model_from_json(const std::string& text);

/// A calibrated stopping policy of any kind plus the decoder it runs on.
struct PolicyEnvelope {
  std::string kind;  // bds | fixed | static_max_acc | static_target_acc | static_max_itr | margin | beta
  std::string similarity = "inner";
  double hyperparam = 0.0;
  double fs = 0.0;
  std::vector<std::size_t> grid;
  std::optional<stopping::BdsModel> bds;
  std::optional<baselines::MarginTable> margin;
  std::optional<std::size_t> window_index;
  std::optional<decode::DecoderModel> decoder;
};

std::string to_json(const PolicyEnvelope& envelope);
PolicyEnvelope envelope_from_json(const std::string& text);

/// Everything `simulate` needs: the forward model plus dataset size and the
/// codebook recipe.
struct SimJob {
  sim::SimConfig sim;
  std::size_t trials_per_class = 3;
  int degree = 6;
  std::uint32_t poly_a = codec::kDefaultPolyA;
  std::uint32_t poly_b = codec::kDefaultPolyB;
  std::string codebook_path;  // overrides the generated codebook when set
  std::string subject;
};

std::string to_json(const SimJob& job);
SimJob sim_job_from_json(const std::string& text);

}  // namespace bds::serialize
