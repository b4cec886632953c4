#include "bds/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

#include "bds/stopping.hpp"

namespace bds::evaluation {

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {
      "bds", "fixed", "static_max_acc", "static_target_acc", "static_max_itr", "margin", "beta"};
  return names;
}

void check_method(const std::string& method, decode::Similarity similarity) {
  const auto& names = method_names();
  if (std::find(names.begin(), names.end(), method) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown method '" + method + "' (expected one of: " + list + ")");
  }
  if (method == "beta" && similarity != decode::Similarity::correlation) {
    throw std::invalid_argument("method 'beta' supports only --similarity correlation");
  }
  if (method == "bds" && similarity != decode::Similarity::inner) {
    throw std::invalid_argument("method 'bds' supports only --similarity inner");
  }
}

baselines::FitFn Setup::fit() const {
  const auto* s = &structures;
  return [s](std::span<const decode::Trial> trials) { return decode::fit_cca(trials, *s); };
}

Setup make_setup(const store::StoreMetadata& meta, const codec::Codebook& codebook,
                 const store::ExperimentConfig& cfg) {
  store::validate(cfg);
  if (codebook.size() < meta.n_classes) {
    throw std::invalid_argument("codebook has " + std::to_string(codebook.size()) +
                                " codes but the store has " + std::to_string(meta.n_classes) +
                                " classes");
  }
  Setup s;
  s.codebook = codebook;
  s.codebook.codes.resize(meta.n_classes);
  s.n_classes = meta.n_classes;
  s.fs = meta.fs;
  s.samples = meta.samples_per_trial;
  s.response_length = static_cast<std::size_t>(std::llround(cfg.response_ms * meta.fs / 1000.0));
  const double trial_s = static_cast<double>(meta.samples_per_trial) / meta.fs;
  const double t_star_s = cfg.t_star_s > 0.0 ? cfg.t_star_s : trial_s;
  if (t_star_s > trial_s + 1e-9) {
    throw std::invalid_argument("t_star_s exceeds the trial length");
  }
  s.grid = stopping::make_grid_ms(cfg.grid_ms, t_star_s, meta.fs);
  s.structures = codec::structure_matrices(s.codebook, s.fs, s.samples, s.response_length);
  return s;
}

namespace {

std::size_t nearest_window(std::span<const std::size_t> grid, double fs, double seconds) {
  std::size_t best = 0;
  double best_d = std::abs(static_cast<double>(grid[0]) / fs - seconds);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double d = std::abs(static_cast<double>(grid[k]) / fs - seconds);
    if (d < best_d - 1e-12) {
      best = k;
      best_d = d;
    }
  }
  return best;
}

}  // namespace

CalibratedPolicy calibrate_policy(const Setup& setup, const store::ExperimentConfig& cfg,
                                  double hyperparam, const decode::DecoderModel& model,
                                  std::span<const decode::Trial> train) {
  check_method(cfg.method, cfg.similarity);
  CalibratedPolicy out;
  auto& env = out.envelope;
  env.kind = cfg.method;
  env.similarity = decode::to_string(cfg.similarity);
  env.hyperparam = hyperparam;
  env.fs = setup.fs;
  env.grid = setup.grid;
  env.decoder = model;

  const std::string& m = cfg.method;
  if (m == "bds") {
    if (!(hyperparam > 0.0)) throw std::invalid_argument("bds: zeta must be positive");
    auto bds = stopping::calibrate(model, train, setup.grid, hyperparam, setup.t_star());
    env.bds = bds;
    out.policy = std::make_unique<stopping::BdsPolicy>(std::move(bds));
  } else if (m == "fixed") {
    if (!(hyperparam > 0.0)) throw std::invalid_argument("fixed: window length must be positive");
    const std::size_t k = nearest_window(setup.grid, setup.fs, hyperparam);
    env.window_index = k;
    out.policy = std::make_unique<baselines::FixedLengthPolicy>(k, cfg.similarity);
  } else if (m == "beta") {
    if (!(hyperparam >= 0.0 && hyperparam <= 1.0)) throw std::invalid_argument("beta: theta must lie in [0, 1]");
    out.policy = std::make_unique<baselines::BetaPolicy>(hyperparam);
  } else {
    const bool uses_theta = m == "static_target_acc" || m == "margin";
    if (uses_theta && !(hyperparam >= 0.0 && hyperparam <= 1.0)) {
      throw std::invalid_argument(m + ": theta must lie in [0, 1]");
    }
    const auto traces =
        baselines::cross_validated_traces(setup.fit(), train, setup.grid, cfg.similarity, cfg.folds);
    out.warning = traces.warning;
    if (m == "margin") {
      auto table = baselines::fit_margin(traces, hyperparam);
      env.margin = table;
      out.policy = std::make_unique<baselines::MarginPolicy>(std::move(table), cfg.similarity);
    } else {
      const auto curve = baselines::decoding_curve(traces, setup.grid, setup.fs, setup.n_classes);
      std::size_t k = 0;
      if (m == "static_max_acc") {
        k = baselines::static_max_accuracy(curve);
      } else if (m == "static_target_acc") {
        k = baselines::static_targeted_accuracy(curve, hyperparam);
      } else {
        k = baselines::static_max_itr(curve);
      }
      env.window_index = k;
      out.policy = std::make_unique<baselines::FixedLengthPolicy>(k, cfg.similarity);
    }
  }
  return out;
}

SubjectResult evaluate_subject(const store::LoadedStore& data, const store::ExperimentConfig& cfg,
                               double hyperparam) {
  check_method(cfg.method, cfg.similarity);
  if (!data.codebook) throw std::invalid_argument("store has no codebook; cannot build templates");
  const auto& trials = data.trials;
  if (trials.size() < 2) throw std::invalid_argument("evaluation needs at least 2 trials");
  const Setup setup = make_setup(data.metadata, *data.codebook, cfg);

  SubjectResult result;
  std::size_t folds = cfg.folds;
  if (trials.size() < folds) {
    result.warnings.push_back("only " + std::to_string(trials.size()) +
                              " trials; reducing folds from " + std::to_string(folds) + " to " +
                              std::to_string(trials.size()));
    folds = trials.size();
  }
  result.folds_used = folds;
  const auto fit = setup.fit();
  const auto forced_mode = cfg.abstain_forced ? ForcedEmission::abstain : ForcedEmission::emit;

  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<decode::Trial> train;
    std::vector<std::size_t> test;
    for (std::size_t k = 0; k < trials.size(); ++k) {
      if (k % folds == f) {
        test.push_back(k);
      } else {
        train.push_back(trials[k]);
      }
    }
    const decode::DecoderModel model = fit(train);
    const CalibratedPolicy cal = calibrate_policy(setup, cfg, hyperparam, model, train);
    if (!cal.warning.empty() && f == 0) result.warnings.push_back(cal.warning);

    for (std::size_t k : test) {
      const auto& trial = trials[k];
      if (!trial.label) throw std::invalid_argument("trial " + std::to_string(k) + " has no label");
      const auto trace = decode::score_trace(model, trial, setup.grid, cal.policy->similarity());
      TrialResult tr;
      tr.trial = k;
      tr.label = *trial.label;
      tr.fold = f;
      tr.outcome = run_policy(*cal.policy, trace, forced_mode);
      tr.correct = !tr.outcome.abstained && tr.outcome.emitted_label == tr.label;
      tr.stop_s = static_cast<double>(setup.grid[tr.outcome.stopped_at]) / setup.fs;
      std::vector<bool> argmax_correct;
      argmax_correct.reserve(tr.outcome.stopped_at + 1);
      for (std::size_t w = 0; w <= tr.outcome.stopped_at; ++w) {
        argmax_correct.push_back(decode::classify(trace[w]) == tr.label);
      }
      result.counts += metrics::count_decisions(tr.outcome, argmax_correct, cfg.count_forced);
      result.trials.push_back(std::move(tr));
    }
  }
  std::sort(result.trials.begin(), result.trials.end(),
            [](const TrialResult& a, const TrialResult& b) { return a.trial < b.trial; });

  double correct = 0.0, stop = 0.0, forced = 0.0;
  for (const auto& t : result.trials) {
    correct += t.correct ? 1.0 : 0.0;
    stop += t.stop_s;
    forced += t.outcome.forced ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(result.trials.size());
  auto& row = result.row;
  row.subject = data.metadata.subject.empty() ? "subject" : data.metadata.subject;
  row.method = cfg.method;
  row.hyperparam = hyperparam;
  row.similarity = decode::to_string(cfg.similarity);
  const double accuracy = correct / n;
  const double mean_stop = stop / n;
  row.values = {accuracy,
                mean_stop,
                metrics::itr(accuracy, setup.n_classes, mean_stop),
                metrics::spm(mean_stop, cfg.overhead_s),
                metrics::precision(result.counts).value,
                metrics::recall(result.counts).value,
                metrics::specificity(result.counts).value,
                metrics::f_score(result.counts).value};
  result.forced_fraction = forced / n;
  return result;
}

std::vector<double> dedupe_hyperparams(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  for (double v : values) {
    if (out.empty() || std::abs(v - out.back()) > 1e-12 * std::max(std::abs(v), std::abs(out.back()))) {
      out.push_back(v);
    }
  }
  return out;
}

std::vector<metrics::MetricsRow> sweep(std::span<const store::LoadedStore> stores,
                                       const store::ExperimentConfig& cfg,
                                       std::vector<std::string>* warnings) {
  check_method(cfg.method, cfg.similarity);
  if (stores.empty()) throw std::invalid_argument("sweep: no stores");
  const std::vector<double> values = dedupe_hyperparams(cfg.hyperparams);
  if (values.empty()) throw std::invalid_argument("sweep: empty hyperparameter list");

  // One work item per (hyperparameter, store); results land in fixed slots.
  const std::size_t n_items = values.size() * stores.size();
  std::vector<SubjectResult> results(n_items);
  std::vector<std::exception_ptr> errors(n_items);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n_items; i = next++) {
      try {
        results[i] = evaluate_subject(stores[i % stores.size()], cfg, values[i / stores.size()]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(n_items, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<metrics::MetricsRow> rows;
  for (std::size_t v = 0; v < values.size(); ++v) {
    std::vector<metrics::MetricsRow> subject_rows;
    for (std::size_t s = 0; s < stores.size(); ++s) {
      auto& r = results[v * stores.size() + s];
      if (stores.size() > 1 && stores[s].metadata.subject.empty()) {
        r.row.subject = "subject" + std::to_string(s + 1);
      }
      if (warnings) {
        for (const auto& w : r.warnings) warnings->push_back(r.row.subject + ": " + w);
      }
      subject_rows.push_back(r.row);
    }
    rows.insert(rows.end(), subject_rows.begin(), subject_rows.end());
    if (stores.size() > 1) rows.push_back(metrics::aggregate(subject_rows));
  }
  return rows;
}

}  // namespace bds::evaluation
