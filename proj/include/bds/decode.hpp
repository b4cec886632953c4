#pragma once

// Reconvolution CCA template decoder.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bds/codec.hpp"

namespace bds::decode {

struct Trial {
  Eigen::MatrixXd data;  // channels x samples
  std::optional<std::size_t> label;
  double fs = 0.0;

  Eigen::Index channels() const { return data.rows(); }
  Eigen::Index samples() const { return data.cols(); }
};

struct DecoderModel {
  Eigen::VectorXd w;  // spatial filter, unit norm
  Eigen::VectorXd r;  // temporal response, kEventKinds * L
  std::vector<Eigen::VectorXd> templates;
  double fs = 0.0;
  double rho = 0.0;  // canonical correlation on the training data

  std::size_t n_classes() const { return templates.size(); }
  Eigen::Index template_length() const { return templates.empty() ? 0 : templates.front().size(); }
};

enum class Similarity { inner, correlation };

std::string to_string(Similarity s);
Similarity similarity_from_string(const std::string& name);

struct ScoreVector {
  std::vector<double> scores;
  std::size_t window_samples = 0;
  // Only filled by correlation scoring: true where the window or template had
  // zero variance and the score was set to 0.
  std::vector<bool> degenerate;
};

struct CcaOptions {
  double ridge = 1e-6;  // relative to the mean autocovariance diagonal
};

/// Fits (w, r) maximizing corr(w'S, r'D) where S concatenates the trials and D
/// stacks structures[label] for each trial. Templates are r' M_i for every
/// structure. Throws std::invalid_argument on bad input or rank deficiency.
DecoderModel fit_cca(std::span<const Trial> trials,
                     std::span<const codec::StructureMatrix> structures,
                     const CcaOptions& options = {});

std::vector<Eigen::VectorXd> predict_templates(const Eigen::VectorXd& r,
                                               std::span<const codec::StructureMatrix> structures);
std::vector<Eigen::VectorXd> predict_templates(const DecoderModel& model,
                                               std::span<const codec::StructureMatrix> structures);

/// w' X over the full trial.
Eigen::VectorXd spatially_filter(const DecoderModel& model, const Trial& trial);

/// f_i = (w' X[:, :window]) . t_i[:window]
ScoreVector score(const DecoderModel& model, const Trial& trial, std::size_t window_samples);

/// Pearson correlation between the filtered window and each truncated template.
ScoreVector correlation_score(const DecoderModel& model, const Trial& trial,
                              std::size_t window_samples);

ScoreVector similarity_score(const DecoderModel& model, const Trial& trial,
                             std::size_t window_samples, Similarity similarity);

/// Same as score / correlation_score on an already filtered signal.
ScoreVector score_filtered(const DecoderModel& model, const Eigen::VectorXd& filtered,
                           std::size_t window_samples, Similarity similarity);

/// Scores at every window of `grid`.
std::vector<ScoreVector> score_trace(const DecoderModel& model, const Trial& trial,
                                     std::span<const std::size_t> grid, Similarity similarity);

/// argmax, lowest index on ties.
std::size_t classify(std::span<const double> scores);
inline std::size_t classify(const ScoreVector& s) { return classify(s.scores); }

double pearson(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

}  // namespace bds::decode
