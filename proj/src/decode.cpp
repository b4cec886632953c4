#include "bds/decode.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace bds::decode {

std::string to_string(Similarity s) {
  return s == Similarity::inner ? "inner" : "correlation";
}

Similarity similarity_from_string(const std::string& name) {
  if (name == "inner") return Similarity::inner;
  if (name == "correlation") return Similarity::correlation;
  throw std::invalid_argument("unknown similarity '" + name + "' (expected inner|correlation)");
}

namespace {

// Inverse matrix square root of a symmetric positive definite matrix.
Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& cov, const char* which) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw std::invalid_argument(std::string("fit_cca: eigendecomposition of ") + which + " failed");
  }
  const Eigen::VectorXd values = eig.eigenvalues();
  if (!(values.minCoeff() > 0.0) || !values.allFinite()) {
    throw std::invalid_argument(std::string("fit_cca: ") + which +
                                " covariance is rank deficient after regularization");
  }
  return eig.eigenvectors() * values.cwiseSqrt().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

void regularize(Eigen::MatrixXd& cov, double ridge, const char* which) {
  const double mean_diag = cov.diagonal().mean();
  if (!(mean_diag > 0.0) || !std::isfinite(mean_diag)) {
    throw std::invalid_argument(std::string("fit_cca: ") + which +
                                " covariance is rank deficient (zero variance)");
  }
  cov.diagonal().array() += ridge * mean_diag;
}

}  // namespace

DecoderModel fit_cca(std::span<const Trial> trials,
                     std::span<const codec::StructureMatrix> structures,
                     const CcaOptions& options) {
  if (trials.size() < 2) throw std::invalid_argument("fit_cca: need at least 2 trials");
  if (structures.empty()) throw std::invalid_argument("fit_cca: no structure matrices");

  const Eigen::Index channels = trials.front().channels();
  const Eigen::Index samples = trials.front().samples();
  const double fs = trials.front().fs;
  const Eigen::Index m = structures.front().rows();
  if (channels < 1 || samples < 1) throw std::invalid_argument("fit_cca: empty trial");

  std::map<std::size_t, std::size_t> label_counts;
  for (const Trial& t : trials) {
    if (t.channels() != channels || t.samples() != samples || t.fs != fs) {
      throw std::invalid_argument("fit_cca: trials differ in channels, samples or fs");
    }
    if (!t.label) throw std::invalid_argument("fit_cca: unlabeled training trial");
    if (*t.label >= structures.size()) {
      throw std::invalid_argument("fit_cca: label " + std::to_string(*t.label) +
                                  " has no structure matrix");
    }
    if (!t.data.allFinite()) throw std::invalid_argument("fit_cca: non-finite sample in trial");
    ++label_counts[*t.label];
  }
  if (label_counts.size() < 2) throw std::invalid_argument("fit_cca: need at least 2 distinct labels");
  for (const auto& s : structures) {
    if (s.rows() != m || s.cols() < samples) {
      throw std::invalid_argument("fit_cca: structure matrices must share M and cover the trial length");
    }
  }

  // Accumulate first and second moments of S (C x KT) and D (M x KT).
  Eigen::VectorXd sum_s = Eigen::VectorXd::Zero(channels);
  Eigen::VectorXd sum_d = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(channels, channels);
  Eigen::MatrixXd dd = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd sd = Eigen::MatrixXd::Zero(channels, m);

  for (const auto& [label, count] : label_counts) {
    const auto d = structures[label].matrix.leftCols(samples);
    const double k = static_cast<double>(count);
    dd.noalias() += k * (d * d.transpose());
    sum_d += k * d.rowwise().sum();
  }
  for (const Trial& t : trials) {
    const auto d = structures[*t.label].matrix.leftCols(samples);
    ss.noalias() += t.data * t.data.transpose();
    sd.noalias() += t.data * d.transpose();
    sum_s += t.data.rowwise().sum();
  }

  const double n = static_cast<double>(trials.size()) * static_cast<double>(samples);
  const Eigen::VectorXd mean_s = sum_s / n;
  const Eigen::VectorXd mean_d = sum_d / n;
  Eigen::MatrixXd css = ss / n - mean_s * mean_s.transpose();
  Eigen::MatrixXd cdd = dd / n - mean_d * mean_d.transpose();
  const Eigen::MatrixXd csd = sd / n - mean_s * mean_d.transpose();
  const Eigen::MatrixXd css_raw = css;
  const Eigen::MatrixXd cdd_raw = cdd;

  regularize(css, options.ridge, "EEG");
  regularize(cdd, options.ridge, "structure");
  const Eigen::MatrixXd ws = inverse_sqrt(css, "EEG");
  const Eigen::MatrixXd wd = inverse_sqrt(cdd, "structure");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ws * csd * wd, Eigen::ComputeThinU | Eigen::ComputeThinV);
  DecoderModel model;
  model.fs = fs;
  model.w = ws * svd.matrixU().col(0);
  model.r = wd * svd.matrixV().col(0);

  const double w_norm = model.w.norm();
  if (!(w_norm > 0.0)) throw std::invalid_argument("fit_cca: degenerate spatial filter");
  model.w /= w_norm;
  model.r /= w_norm;
  // Rescale r so the predicted response has unit variance on the training data.
  const double r_var = model.r.dot(cdd_raw * model.r);
  if (r_var > 0.0) model.r /= std::sqrt(r_var);

  const double tol = 1e-12 * model.w.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < model.w.size(); ++i) {
    if (std::abs(model.w(i)) > tol) {
      if (model.w(i) < 0.0) {
        model.w = -model.w;
        model.r = -model.r;
      }
      break;
    }
  }

  const double denom = std::sqrt(model.w.dot(css_raw * model.w) * model.r.dot(cdd_raw * model.r));
  model.rho = denom > 0.0 ? model.w.dot(csd * model.r) / denom : 0.0;
  model.templates = predict_templates(model.r, structures);
  return model;
}

std::vector<Eigen::VectorXd> predict_templates(const Eigen::VectorXd& r,
                                               std::span<const codec::StructureMatrix> structures) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(structures.size());
  for (const auto& s : structures) {
    if (s.rows() != r.size()) {
      throw std::invalid_argument("predict_templates: structure has " + std::to_string(s.rows()) +
                                  " rows, response has " + std::to_string(r.size()));
    }
    out.emplace_back(s.matrix.transpose() * r);
  }
  return out;
}

std::vector<Eigen::VectorXd> predict_templates(const DecoderModel& model,
                                               std::span<const codec::StructureMatrix> structures) {
  return predict_templates(model.r, structures);
}

Eigen::VectorXd spatially_filter(const DecoderModel& model, const Trial& trial) {
  if (trial.channels() != model.w.size()) {
    throw std::invalid_argument("spatially_filter: trial has " + std::to_string(trial.channels()) +
                                " channels, model expects " + std::to_string(model.w.size()));
  }
  return trial.data.transpose() * model.w;
}

double pearson(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  const double na = ca.norm();
  const double nb = cb.norm();
  if (na <= 1e-12 * a.norm() || nb <= 1e-12 * b.norm() || na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(ca.dot(cb) / (na * nb), -1.0, 1.0);
}

ScoreVector score_filtered(const DecoderModel& model, const Eigen::VectorXd& filtered,
                           std::size_t window_samples, Similarity similarity) {
  if (window_samples == 0) throw std::invalid_argument("score: window must be positive");
  const auto window = static_cast<Eigen::Index>(window_samples);
  if (window > filtered.size() || window > model.template_length()) {
    throw std::invalid_argument("score: window of " + std::to_string(window_samples) +
                                " samples exceeds trial or template length");
  }
  ScoreVector out;
  out.window_samples = window_samples;
  out.scores.resize(model.n_classes());
  const auto x = filtered.head(window);

  if (similarity == Similarity::inner) {
    for (std::size_t i = 0; i < model.n_classes(); ++i) {
      out.scores[i] = x.dot(model.templates[i].head(window));
    }
    return out;
  }

  out.degenerate.assign(model.n_classes(), false);
  const Eigen::VectorXd cx = x.array() - x.mean();
  const double nx = cx.norm();
  const bool x_flat = nx == 0.0 || nx <= 1e-12 * x.norm();
  for (std::size_t i = 0; i < model.n_classes(); ++i) {
    const auto t = model.templates[i].head(window);
    const Eigen::VectorXd ct = t.array() - t.mean();
    const double nt = ct.norm();
    if (x_flat || nt == 0.0 || nt <= 1e-12 * t.norm()) {
      out.scores[i] = 0.0;
      out.degenerate[i] = true;
      continue;
    }
    out.scores[i] = std::clamp(cx.dot(ct) / (nx * nt), -1.0, 1.0);
  }
  return out;
}

ScoreVector score(const DecoderModel& model, const Trial& trial, std::size_t window_samples) {
  return score_filtered(model, spatially_filter(model, trial), window_samples, Similarity::inner);
}

ScoreVector correlation_score(const DecoderModel& model, const Trial& trial,
                              std::size_t window_samples) {
  return score_filtered(model, spatially_filter(model, trial), window_samples,
                        Similarity::correlation);
}

ScoreVector similarity_score(const DecoderModel& model, const Trial& trial,
                             std::size_t window_samples, Similarity similarity) {
  return score_filtered(model, spatially_filter(model, trial), window_samples, similarity);
}

std::vector<ScoreVector> score_trace(const DecoderModel& model, const Trial& trial,
                                     std::span<const std::size_t> grid, Similarity similarity) {
  const Eigen::VectorXd filtered = spatially_filter(model, trial);
  std::vector<ScoreVector> out;
  out.reserve(grid.size());
  for (std::size_t window : grid) out.push_back(score_filtered(model, filtered, window, similarity));
  return out;
}

std::size_t classify(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("classify: empty score vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

}  // namespace bds::decode
