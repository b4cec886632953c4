#pragma once

// On-disk formats: trial store (manifest.json + eeg.f32), experiment
// configuration, and results CSV.

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bds/codec.hpp"
#include "bds/decode.hpp"
#include "bds/metrics.hpp"

namespace bds::store {

/// Malformed or inconsistent store content. field() names the offending
/// manifest field or "blob".
class StoreError : public std::runtime_error {
 public:
  StoreError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kBlobName = "eeg.f32";
inline constexpr const char* kCodebookName = "codebook.txt";

struct StoreMetadata {
  int format_version = kFormatVersion;
  double fs = 0.0;
  std::size_t channels = 0;
  std::size_t samples_per_trial = 0;
  std::size_t n_trials = 0;
  std::size_t n_classes = 0;
  std::vector<std::size_t> labels;
  std::string codebook;  // path relative to the store directory; may be empty
  std::string byte_order = "little";
  std::string subject;
};

/// Streams trials from a store directory one at a time.
class StoreReader {
 public:
  explicit StoreReader(const std::string& dir);

  const StoreMetadata& metadata() const { return meta_; }
  /// Next trial in stored order, or empty at the end.
  std::optional<decode::Trial> next();
  std::size_t position() const { return position_; }

 private:
  StoreMetadata meta_;
  std::ifstream blob_;
  std::size_t position_ = 0;
  std::vector<float> buffer_;
};

StoreMetadata read_manifest(const std::string& dir);

struct LoadedStore {
  StoreMetadata metadata;
  std::vector<decode::Trial> trials;
  std::optional<codec::Codebook> codebook;
};

LoadedStore load_store(const std::string& dir);

/// Writes little-endian float32 samples (trial, channel, sample order) and the
/// JSON manifest. n_trials, labels, channels and samples_per_trial in `meta`
/// are filled from the trials. When a codebook is given it is written next to
/// the manifest and referenced from it.
void write_store(const std::string& dir, std::span<const decode::Trial> trials,
                 StoreMetadata meta, const codec::Codebook* codebook = nullptr);

struct ExperimentConfig {
  std::string method = "bds";
  decode::Similarity similarity = decode::Similarity::inner;
  std::vector<double> hyperparams{1.0};
  std::size_t folds = 5;
  double grid_ms = 100.0;
  double t_star_s = 0.0;  // 0: full trial length
  double response_ms = 300.0;
  std::uint64_t seed = 1;
  double overhead_s = 0.0;
  bool count_forced = true;
  bool abstain_forced = false;
};

void validate(const ExperimentConfig& cfg);
std::string to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const std::string& text);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

std::vector<std::string> results_header();

/// Sorted by (subject, method, hyperparam, similarity); header always written.
void write_results_csv(std::vector<metrics::MetricsRow> rows, const std::string& path);
std::vector<metrics::MetricsRow> read_results_csv(const std::string& path);

/// Generic RFC-4180 reader: first record is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(std::istream& in);

}  // namespace bds::store
