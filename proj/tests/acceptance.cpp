// Acceptance suite: one PASS/FAIL line per criterion.
// usage: acceptance <bdstop> <work-dir>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bds/baselines.hpp"
#include "bds/beta.hpp"
#include "bds/codec.hpp"
#include "bds/decode.hpp"
#include "bds/evaluation.hpp"
#include "bds/metrics.hpp"
#include "bds/sim.hpp"
#include "bds/stopping.hpp"
#include "bds/store.hpp"

using namespace bds;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Result {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double log_normal(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

// ---------------------------------------------------------------- 1
Result boundary_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> mean(-3.0, 3.0), sd(0.05, 4.0), lz(-10.0, 10.0);
  std::uniform_int_distribution<int> classes(2, 100);
  int found = 0, draws = 0;
  double worst = 0.0;
  while (found < 1000) {
    ++draws;
    const stopping::GaussPair p{mean(rng), mean(rng), sd(rng), sd(rng), 0};
    const double alpha = sd(rng), zeta = std::pow(10.0, lz(rng));
    const auto n = static_cast<std::size_t>(classes(rng));
    const double eta = stopping::decision_boundary(p, alpha, zeta, n);
    if (!std::isfinite(eta)) continue;
    ++found;
    worst = std::max(worst, std::abs(stopping::llr(eta, p, alpha) - std::log((n - 1.0) * zeta)));
  }
  const double t = seconds_since(t0);
  return {worst < 1e-9 && t < 1.0,
          fmt("max |llr(eta) - ln((N-1)zeta)| = %.3g over 1000 crossings (%d draws), %.3f s", worst,
              draws, t)};
}

// ---------------------------------------------------------------- 2
Result analytic_midpoint() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0), sd(0.05, 4.0), a(0.1, 3.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    double b0 = u(rng), b1 = u(rng);
    if (b1 < b0) std::swap(b0, b1);
    if (b1 - b0 < 1e-3) continue;
    const double s = sd(rng), alpha = a(rng);
    const double eta = stopping::decision_boundary({b0, b1, s, s, 0}, alpha, 1.0, 2);
    worst = std::max(worst, std::abs(eta - alpha * (b0 + b1) / 2.0));
  }
  return {worst < 1e-12, fmt("max |eta - alpha(b0+b1)/2| = %.3g over 1000 equal-variance cases", worst)};
}

// ---------------------------------------------------------------- 3
Result llr_identity() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> mean(-3.0, 3.0), sd(0.2, 4.0), z(-4.0, 4.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const stopping::GaussPair p{mean(rng), mean(rng), sd(rng), sd(rng), 0};
    const double alpha = sd(rng);
    // evaluation points within a few deviations of either distribution
    const double f = (i % 2 ? alpha * p.b1 + z(rng) * p.s1 : alpha * p.b0 + z(rng) * p.s0);
    const double direct = log_normal(f, alpha * p.b1, p.s1) - log_normal(f, alpha * p.b0, p.s0);
    worst = std::max(worst, std::abs(stopping::llr(f, p, alpha) - direct));
  }
  return {worst < 1e-10, fmt("max |llr - (ln N1 - ln N0)| = %.3g over 10^4 points", worst)};
}

// ---------------------------------------------------------------- 4
Result distribution_fidelity() {
  const auto t0 = Clock::now();
  sim::SimConfig cfg;
  cfg.n_classes = 36;
  cfg.channels = 1;
  cfg.spatial_pattern = Eigen::VectorXd::Ones(1);
  cfg.sigma_true = 3.0;
  cfg.alpha_true = 1.0;
  cfg.rng_seed = 404;
  const auto book = sim::standard_codebook(cfg.n_classes, cfg.fs);
  const auto templates = sim::true_templates(cfg, book);
  const auto data = sim::make_dataset(cfg, book, 100);

  bool ok = true;
  std::string detail = fmt("%zu trials;", data.size());
  double worst = 0.0;
  for (std::size_t window : {60u, 240u, 504u}) {
    std::vector<Eigen::VectorXd> cut;
    for (const auto& t : templates) cut.push_back(t.head(static_cast<Eigen::Index>(window)));
    const auto pred = stopping::distribution_params(cut, cfg.alpha_true, cfg.sigma_true);
    const auto scores = sim::oracle_scores(cfg, book, data, window);
    double s1 = 0, ss1 = 0, s0 = 0, ss0 = 0, n1 = 0, n0 = 0;
    for (std::size_t j = 0; j < data.size(); ++j) {
      for (std::size_t i = 0; i < cfg.n_classes; ++i) {
        const double f = scores[j].scores[i];
        if (i == *data[j].label) {
          s1 += f;
          ss1 += f * f;
          n1 += 1;
        } else {
          s0 += f;
          ss0 += f * f;
          n0 += 1;
        }
      }
    }
    const double m1 = s1 / n1, m0 = s0 / n0;
    const double sd1 = std::sqrt((ss1 - n1 * m1 * m1) / (n1 - 1));
    const double sd0 = std::sqrt((ss0 - n0 * m0 * m0) / (n0 - 1));
    const double e[4] = {std::abs(m1 / (cfg.alpha_true * pred.b1) - 1.0),
                         std::abs(m0 / (cfg.alpha_true * pred.b0) - 1.0),
                         std::abs(sd1 / pred.s1 - 1.0), std::abs(sd0 / pred.s0 - 1.0)};
    for (double v : e) {
      worst = std::max(worst, v);
      ok = ok && v < 0.05;
    }
    detail += fmt(" T=%zu: mean1 %.4g/%.4g mean0 %.4g/%.4g sd1 %.4g/%.4g sd0 %.4g/%.4g;", window, m1,
                  cfg.alpha_true * pred.b1, m0, cfg.alpha_true * pred.b0, sd1, pred.s1, sd0, pred.s0);
  }
  const double t = seconds_since(t0);
  return {ok && t < 30.0, detail + fmt(" max relative error %.3g, %.1f s", worst, t)};
}

// Synthetic store on disk, read back through the store module.
store::LoadedStore make_store(const fs::path& dir, double sigma, double alpha, std::uint64_t seed,
                              std::size_t per_class) {
  sim::SimConfig cfg;
  cfg.n_classes = 36;
  cfg.channels = 8;
  cfg.sigma_true = sigma;
  cfg.alpha_true = alpha;
  cfg.rng_seed = seed;
  const auto book = sim::standard_codebook(cfg.n_classes, cfg.fs);
  const auto trials = sim::make_dataset(cfg, book, per_class);
  store::StoreMetadata meta;
  meta.fs = cfg.fs;
  meta.n_classes = cfg.n_classes;
  meta.subject = dir.filename().string();
  store::write_store(dir.string(), trials, meta, &book);
  return store::load_store(dir.string());
}

// ---------------------------------------------------------------- 5
Result zeta_monotonicity(const fs::path& work) {
  const auto t0 = Clock::now();
  const auto data = make_store(work / "moderate", 5.0, 1.0, 505, 10);
  store::ExperimentConfig cfg;
  cfg.method = "bds";
  const std::vector<double> zetas = {1e-10, 1e-4, 1.0, 1e4, 1e10};
  std::vector<evaluation::SubjectResult> results;
  for (double z : zetas) results.push_back(evaluation::evaluate_subject(data, cfg, z));

  bool ok = data.trials.size() == 360;
  std::string detail;
  const double step = cfg.grid_ms / 1000.0;
  for (std::size_t k = 0; k < zetas.size(); ++k) {
    const auto& r = results[k].row;
    detail += fmt(" zeta=%g: stop %.3f s, precision %.3f, forced %.3f;", zetas[k], r[1], r[4],
                  results[k].forced_fraction);
    if (k > 0) {
      const auto& prev = results[k - 1].row;
      ok = ok && r[1] >= prev[1] - step && r[4] >= prev[4] - 0.02;
    }
  }
  const auto& last = results.back();
  bool all_at_tstar = true;
  for (const auto& t : last.trials) {
    all_at_tstar = all_at_tstar && t.outcome.forced && t.stop_s == last.trials.front().stop_s;
  }
  ok = ok && last.forced_fraction == 1.0 && all_at_tstar;
  return {ok, fmt("N=36 C=8 sigma=5, %zu trials;", data.trials.size()) + detail +
                  fmt(" %.1f s", seconds_since(t0))};
}

// Exact two-sided 99% binomial acceptance band for the count of successes.
std::pair<std::size_t, std::size_t> binomial_band(std::size_t n, double p) {
  std::vector<double> pmf(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    pmf[k] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                      k * std::log(p) + (n - k) * std::log1p(-p));
  }
  std::size_t lo = 0, hi = n;
  double tail = 0.0;
  while (lo < n && tail + pmf[lo] <= 0.005) tail += pmf[lo++];
  tail = 0.0;
  while (hi > 0 && tail + pmf[hi] <= 0.005) tail += pmf[hi--];
  return {lo, hi};
}

// ---------------------------------------------------------------- 6 and 11 (aggregate part)
struct EndToEnd {
  Result result;
  std::size_t trials = 0;
  std::size_t positives = 0;
};

EndToEnd end_to_end(const fs::path& work) {
  const auto t0 = Clock::now();
  store::ExperimentConfig cfg;
  cfg.method = "bds";
  const auto high = make_store(work / "high", 0.1, 1.0, 606, 10);
  const auto hr = evaluation::evaluate_subject(high, cfg, 1.0);
  const double t_star = static_cast<double>(high.metadata.samples_per_trial) / high.metadata.fs;

  const auto noise = make_store(work / "noise", 5.0, 0.0, 607, 10);
  const auto nr = evaluation::evaluate_subject(noise, cfg, 1.0);
  const auto [lo, hi] = binomial_band(nr.trials.size(), 1.0 / 36.0);
  std::size_t hits = 0;
  for (const auto& t : nr.trials) hits += t.correct ? 1 : 0;

  const bool ok_high = hr.row[0] >= 0.95 && hr.row[1] < 0.5 * t_star;
  const bool ok_noise = hits >= lo && hits <= hi && nr.forced_fraction >= 0.95;
  const double t = seconds_since(t0);

  EndToEnd out;
  out.trials = hr.trials.size() + nr.trials.size();
  out.positives = hr.counts.tp + hr.counts.fp + nr.counts.tp + nr.counts.fp;
  out.result = {ok_high && ok_noise && t < 120.0,
                fmt("high SNR (sigma=0.1): accuracy %.3f, mean stop %.3f s (t*=%.1f s); pure noise: "
                    "%zu/%zu correct, 99%% band [%zu, %zu], forced %.3f; %.1f s",
                    hr.row[0], hr.row[1], t_star, hits, nr.trials.size(), lo, hi, nr.forced_fraction,
                    t)};
  return out;
}

// ---------------------------------------------------------------- 7
Result cca_recovery() {
  sim::SimConfig cfg;
  cfg.n_classes = 36;
  cfg.sigma_true = 5.0;
  cfg.rng_seed = 707;
  const auto book = sim::standard_codebook(cfg.n_classes, cfg.fs);
  const auto structures = codec::structure_matrices(book, cfg.fs, cfg.samples(), cfg.response_length());
  const auto train = sim::make_dataset(cfg, book, 4);
  cfg.rng_seed = 70707;
  const auto test = sim::make_dataset(cfg, book, 4);
  const auto model = decode::fit_cca(train, structures);
  std::size_t correct = 0;
  for (const auto& t : test) {
    correct += decode::classify(decode::score(model, t, cfg.samples())) == *t.label ? 1 : 0;
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(test.size());
  const double cw = std::abs(decode::pearson(model.w, cfg.pattern()));
  const double cr = std::abs(decode::pearson(model.r, cfg.true_response()));
  return {acc >= 0.9 && cw > 0.95 && cr > 0.95,
          fmt("sigma=5: held-out single-trial accuracy %.3f, |corr(w,w*)| %.4f, |corr(r,r*)| %.4f",
              acc, cw, cr)};
}

// ---------------------------------------------------------------- 8
Result gold_properties() {
  const auto t0 = Clock::now();
  const auto gold = codec::generate_gold(codec::kDefaultPolyA, codec::kDefaultPolyB, 6);
  bool ok = gold.size() == 65 && gold.length() == 63;
  std::set<int> values;
  const std::size_t n = gold.length();
  for (std::size_t a = 0; a < gold.size(); ++a) {
    for (std::size_t b = 0; b < gold.size(); ++b) {
      for (std::size_t s = 0; s < n; ++s) {
        if (a == b && s == 0) continue;
        int acc = 0;
        for (std::size_t i = 0; i < n; ++i) {
          acc += gold.codes[a].bits[i] == gold.codes[b].bits[(i + s) % n] ? 1 : -1;
        }
        values.insert(acc);
      }
    }
  }
  for (int v : values) ok = ok && (v == -1 || v == -17 || v == 15);

  const auto mod = codec::modulate(gold);
  ok = ok && mod.length() == 126;
  std::set<std::size_t> runs;
  for (const auto& c : mod.codes) {
    // cyclic one-runs, starting after a zero
    std::size_t start = 0;
    while (start < c.size() && c.bits[start]) ++start;
    std::size_t run = 0;
    for (std::size_t k = 1; k <= c.size(); ++k) {
      if (c.bits[(start + k) % c.size()]) {
        ++run;
      } else if (run) {
        runs.insert(run);
        run = 0;
      }
    }
  }
  ok = ok && runs == std::set<std::size_t>{1, 2};
  std::string vs;
  for (int v : values) vs += (vs.empty() ? "" : ",") + std::to_string(v);
  const double t = seconds_since(t0);
  return {ok && t < 5.0, fmt("65 codes x 63 bits; correlation values {%s}; modulated length %zu, one-run "
                             "lengths {%s}; %.2f s",
                             vs.c_str(), mod.length(), runs.size() == 2 ? "1,2" : "other", t)};
}

// ---------------------------------------------------------------- 9
double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

// Adaptive Simpson on fixed panels; a single top-level panel can accept a
// coarse estimate whose halves agree by coincidence.
double integrate(const std::function<double(double)>& f, double a, double b) {
  constexpr int kPanels = 16;
  double sum = 0.0;
  for (int p = 0; p < kPanels; ++p) {
    const double lo = a + (b - a) * p / kPanels, hi = a + (b - a) * (p + 1) / kPanels;
    const double fa = f(lo), fb = f(hi), fm = f(0.5 * (lo + hi));
    sum += simpson(f, lo, hi, fa, fm, fb, (hi - lo) / 6.0 * (fa + 4.0 * fm + fb), 1e-13, 50);
  }
  return sum;
}

Result beta_cdf_quadrature() {
  const std::vector<double> shapes = {1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 7.0, 10.0, 20.0};
  double worst_quad = 0.0, worst_reflect = 0.0;
  for (double a : shapes) {
    for (double b : shapes) {
      // density from log-gamma, independent of the continued fraction
      const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
      const auto pdf = [=](double t) {
        if (t <= 0.0) return a == 1.0 ? std::exp(log_norm) : 0.0;
        if (t >= 1.0) return b == 1.0 ? std::exp(log_norm) : 0.0;
        return std::exp(log_norm + (a - 1) * std::log(t) + (b - 1) * std::log1p(-t));
      };
      for (int k = 1; k <= 9; ++k) {
        const double x = 0.1 * k;
        const double q = integrate(pdf, 0.0, x);
        worst_quad = std::max(worst_quad, std::abs(beta::beta_cdf(x, a, b) - q));
        worst_reflect =
            std::max(worst_reflect, std::abs(beta::beta_cdf(x, a, b) - (1.0 - beta::beta_cdf(1.0 - x, b, a))));
      }
    }
  }
  return {worst_quad < 1e-8 && worst_reflect < 1e-10,
          fmt("10x10x9 grid: max |I - quadrature| = %.3g, max reflection error %.3g", worst_quad,
              worst_reflect)};
}

// ---------------------------------------------------------------- 10
Result baseline_selectors() {
  using namespace baselines;
  bool ok = true;
  const auto c1 = make_curve({0.5, 1.0, 1.5}, {0.2, 0.9, 0.9}, 36);
  ok = ok && static_max_accuracy(c1) == 1 && static_targeted_accuracy(c1, 0.5) == 1;
  const auto c2 = make_curve({0.5, 1.0, 1.5}, {0.3, 0.6, 0.8}, 36);
  ok = ok && static_max_accuracy(c2) == 2 && static_targeted_accuracy(c2, 0.5) == 1 &&
       static_targeted_accuracy(c2, 0.99) == 2 && static_targeted_accuracy(c2, 0.1) == 0;
  const auto c3 = make_curve({1.0, 2.0, 3.0}, {1.0, 1.0, 0.5}, 36);
  ok = ok && static_max_itr(c3) == 0 && static_max_accuracy(c3) == 0;
  ok = ok && static_max_itr(c1) == 1 && static_max_itr(c2) == 2;
  const double thr = margin_threshold(std::vector<double>{0.1, 0.2, 0.3, 0.4}, {false, true, true, true}, 0.99);
  ok = ok && std::abs(thr - 0.2) < 1e-15;
  return {ok, fmt("curve selections as enumerated; 4-trial margin threshold %.3g", thr)};
}

// ---------------------------------------------------------------- 11
Result decision_accounting(const EndToEnd& e2e) {
  bool ok = true;
  auto stop = [](std::size_t k, bool forced) {
    StopOutcome o;
    o.stopped_at = k;
    o.forced = forced;
    return o;
  };
  using metrics::DecisionCounts;
  // correct stop after two correct continues; wrong stop; forced wrong stop after wrong continues
  ok = ok && metrics::count_decisions(stop(2, false), {true, true, true}) == DecisionCounts{1, 0, 0, 2};
  ok = ok && metrics::count_decisions(stop(0, false), {false}) == DecisionCounts{0, 1, 0, 0};
  ok = ok && metrics::count_decisions(stop(3, true), {false, false, true, false}) == DecisionCounts{0, 1, 2, 1};
  ok = ok && metrics::count_decisions(stop(1, true), {true, false}, false) == DecisionCounts{};

  // scripted traces through the controller
  stopping::BdsModel m;
  m.n_classes = 3;
  m.fs = 1.0;
  m.grid = {1, 2, 3};
  m.t_star = 3;
  m.pairs.assign(3, stopping::GaussPair{0.0, 1.0, 1.0, 1.0, 0});
  m.eta = {2.0, 2.0, 2.0};
  const stopping::BdsPolicy policy(m);
  const std::vector<decode::ScoreVector> trace = {{{0.5, 1.0, 0.2}, 1, {}}, {{0.1, 2.5, 0.3}, 2, {}},
                                                  {{0.0, 0.0, 9.0}, 3, {}}};
  const auto o = run_policy(policy, trace);
  std::vector<bool> correct;
  for (std::size_t k = 0; k <= o.stopped_at; ++k) correct.push_back(decode::classify(trace[k]) == 1);
  ok = ok && o.stopped_at == 1 && metrics::count_decisions(o, correct) == DecisionCounts{1, 0, 0, 1};

  ok = ok && e2e.positives == e2e.trials;
  return {ok, fmt("scripted outcomes match; tp+fp = %zu over %zu evaluated trials", e2e.positives,
                  e2e.trials)};
}

// ---------------------------------------------------------------- 12
int run_cli(const std::string& bdstop, const std::string& args, const fs::path& log) {
  const std::string cmd = "'" + bdstop + "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Result cli_determinism(const std::string& bdstop, const fs::path& work) {
  const auto dir = work / "cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream(dir / "sim.json") << R"({"n_classes": 8, "trials_per_class": 3, "trial_seconds": 2.1, "rng_seed": 12})";
  }
  const auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
  std::vector<std::string> mismatched;
  bool ok = true;
  std::size_t compared = 0;
  for (int run = 0; run < 2; ++run) {
    const auto d = dir / ("run" + std::to_string(run));
    fs::create_directories(d);
    const auto log = d / "log.txt";
    const std::vector<std::string> cmds = {
        "codes --subset-k 36 --out " + q(d / "codes.txt"),
        "simulate --config " + q(dir / "sim.json") + " --seed 3 --out " + q(d / "store"),
        "calibrate --store " + q(d / "store") + " --method bds --hyperparam 1 --out " + q(d / "model.json"),
        "evaluate --store " + q(d / "store") + " --method margin --hyperparam 0.9 --out-csv " + q(d / "eval.csv"),
        "sweep --store " + q(d / "store") + " --method bds --hyperparam-list 1e-4,1,1e4 --out-csv " +
            q(d / "sweep.csv"),
        "report --csv " + q(d / "sweep.csv") + " --out-svg " + q(d / "plot.svg")};
    for (const auto& c : cmds) ok = ok && run_cli(bdstop, c, log) == 0;
  }
  for (const char* f : {"codes.txt", "store/manifest.json", "store/eeg.f32", "store/codebook.txt", "model.json",
                        "eval.csv", "sweep.csv", "plot.svg"}) {
    const auto a = slurp(dir / "run0" / f), b = slurp(dir / "run1" / f);
    ++compared;
    if (a.empty() || a != b) {
      ok = false;
      mismatched.push_back(f);
    }
  }
  std::string detail = fmt("6 subcommands run twice, %zu outputs compared byte for byte", compared);
  if (!mismatched.empty()) {
    detail += "; differing or missing:";
    for (const auto& m : mismatched) detail += " " + m;
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <bdstop> <work-dir>\n");
    return 2;
  }
  const std::string bdstop = argv[1];
  const fs::path work = argv[2];
  fs::remove_all(work);
  fs::create_directories(work);

  std::vector<std::pair<std::string, std::function<Result()>>> criteria;
  EndToEnd e2e;
  criteria.emplace_back("boundary oracle", boundary_oracle);
  criteria.emplace_back("analytic midpoint", analytic_midpoint);
  criteria.emplace_back("llr identity", llr_identity);
  criteria.emplace_back("distribution fidelity", distribution_fidelity);
  criteria.emplace_back("zeta monotonicity", [&] { return zeta_monotonicity(work); });
  criteria.emplace_back("end-to-end decoding", [&] {
    e2e = end_to_end(work);
    return e2e.result;
  });
  criteria.emplace_back("cca recovery", cca_recovery);
  criteria.emplace_back("gold code properties", gold_properties);
  criteria.emplace_back("beta cdf", beta_cdf_quadrature);
  criteria.emplace_back("baseline selectors", baseline_selectors);
  criteria.emplace_back("decision accounting", [&] { return decision_accounting(e2e); });
  criteria.emplace_back("cli determinism", [&] { return cli_determinism(bdstop, work); });

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failures += r.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s\n", r.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                r.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
