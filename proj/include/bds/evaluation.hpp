#pragma once

// Cross-validated evaluation of a stopping method on a trial store.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bds/baselines.hpp"
#include "bds/codec.hpp"
#include "bds/decode.hpp"
#include "bds/metrics.hpp"
#include "bds/policy.hpp"
#include "bds/serialize.hpp"
#include "bds/store.hpp"

namespace bds::evaluation {

/// bds, fixed, static_max_acc, static_target_acc, static_max_itr, margin, beta
const std::vector<std::string>& method_names();

/// Throws std::invalid_argument for an unknown method or a method/similarity
/// combination that is not supported (beta needs correlation, bds needs inner).
void check_method(const std::string& method, decode::Similarity similarity);

/// Fixed quantities shared by every fold of one store.
struct Setup {
  codec::Codebook codebook;
  std::size_t n_classes = 0;
  double fs = 0.0;
  std::size_t samples = 0;
  std::size_t response_length = 0;
  std::vector<std::size_t> grid;
  std::vector<codec::StructureMatrix> structures;

  std::size_t t_star() const { return grid.back(); }
  baselines::FitFn fit() const;
};

Setup make_setup(const store::StoreMetadata& meta, const codec::Codebook& codebook,
                 const store::ExperimentConfig& cfg);

struct CalibratedPolicy {
  std::unique_ptr<StoppingPolicy> policy;
  serialize::PolicyEnvelope envelope;
  std::string warning;
};

/// Calibrates `method` at `hyperparam` on the training trials with an already
/// fitted decoder. Static and margin methods are trained on inner
/// cross-validated traces of the same trials.
CalibratedPolicy calibrate_policy(const Setup& setup, const store::ExperimentConfig& cfg,
                                  double hyperparam, const decode::DecoderModel& model,
                                  std::span<const decode::Trial> train);

struct TrialResult {
  std::size_t trial = 0;
  std::size_t label = 0;
  std::size_t fold = 0;
  StopOutcome outcome;
  bool correct = false;
  double stop_s = 0.0;
};

struct SubjectResult {
  metrics::MetricsRow row;
  metrics::DecisionCounts counts;
  double forced_fraction = 0.0;
  std::size_t folds_used = 0;
  std::vector<TrialResult> trials;
  std::vector<std::string> warnings;
};

/// Outer cross-validation: trial k is tested in fold k % folds; the decoder and
/// the stopping policy are calibrated on the remaining trials.
SubjectResult evaluate_subject(const store::LoadedStore& data, const store::ExperimentConfig& cfg,
                               double hyperparam);

/// Sorted, de-duplicated copy (values equal within 1e-12 relative merge).
std::vector<double> dedupe_hyperparams(std::vector<double> values);

/// One row per (store, hyperparameter), plus an "all" aggregate row per
/// hyperparameter when more than one store is given. Hyperparameter values run
/// in parallel; row order is deterministic.
std::vector<metrics::MetricsRow> sweep(std::span<const store::LoadedStore> stores,
                                       const store::ExperimentConfig& cfg,
                                       std::vector<std::string>* warnings = nullptr);

}  // namespace bds::evaluation
