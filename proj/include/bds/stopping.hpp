#pragma once

// Bayesian dynamic stopping: score distribution model, minimum-risk decision
// boundaries and the online stopping controller.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bds/decode.hpp"
#include "bds/policy.hpp"

namespace bds::stopping {

/// Target / non-target score distributions at one decision window. The means
/// are alpha * b1 and alpha * b0; s1 and s0 are standard deviations.
struct GaussPair {
  double b0 = 0.0;
  double b1 = 0.0;
  double s0 = 1.0;
  double s1 = 1.0;
  std::size_t window_samples = 0;
};

struct BdsModel {
  double alpha = 1.0;
  double sigma = 1.0;
  double zeta = 1.0;
  std::size_t n_classes = 0;
  std::size_t t_star = 0;
  double fs = 0.0;
  std::vector<std::size_t> grid;
  std::vector<GaussPair> pairs;
  std::vector<double> eta;
  bool sigma_floored = false;
};

/// Throws std::invalid_argument if the model breaks its invariants.
void validate(const BdsModel& model);

struct SignalTemplate {
  std::span<const double> signal;
  std::span<const double> templ;
};

struct AlphaSigma {
  double alpha = 0.0;
  double sigma = 0.0;
  bool floored = false;  // residual std was below the floor and was raised to it
};

/// Least-squares scale of x on t over all pairs concatenated, and the
/// population standard deviation of the residuals. sigma is floored at
/// 1e-9 * RMS(t).
AlphaSigma estimate_alpha_sigma(std::span<const SignalTemplate> pairs);

/// Pooled one-vs-rest parameters from the Gram matrix G(i, j) = t_i' t_j of the
/// templates truncated to the window.
GaussPair distribution_params(const Eigen::MatrixXd& gram, double alpha, double sigma,
                              std::size_t window_samples = 0);
GaussPair distribution_params(std::span<const Eigen::VectorXd> truncated_templates, double alpha,
                              double sigma);

/// ln N(f; alpha b1, s1) - ln N(f; alpha b0, s0), evaluated as a quadratic in f.
double llr(double f, const GaussPair& pair, double alpha);

/// ln((N - 1) zeta), the acceptance threshold on llr under equal class priors.
double log_threshold(std::size_t n_classes, double zeta);

/// Score at which llr rises through log_threshold(N, zeta). +inf when llr
/// never reaches the threshold, -inf when there is no rising crossing and llr
/// is not everywhere below it.
double decision_boundary(const GaussPair& pair, double alpha, double zeta, std::size_t n_classes);

/// Decision windows every `step` samples up to and including t_star.
std::vector<std::size_t> make_grid(std::size_t step, std::size_t t_star);
std::vector<std::size_t> make_grid_ms(double step_ms, double t_star_s, double fs);

BdsModel calibrate(const decode::DecoderModel& model, std::span<const decode::Trial> trials,
                   std::span<const std::size_t> grid, double zeta, std::size_t t_star);

/// Stops at the first window where some f_i exceeds eta; emits the largest
/// such f_i.
class BdsPolicy final : public StoppingPolicy {
 public:
  explicit BdsPolicy(BdsModel model);

  Decision decide(const decode::ScoreVector& scores, std::size_t window,
                  bool is_last) const override;
  std::string name() const override { return "bds"; }
  const BdsModel& model() const { return model_; }

 private:
  BdsModel model_;
};

StopOutcome run_trial(const BdsModel& bds, const decode::DecoderModel& model,
                      const decode::Trial& trial,
                      ForcedEmission forced_mode = ForcedEmission::emit);

}  // namespace bds::stopping
