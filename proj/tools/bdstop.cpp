// bdstop: code generation, simulation, calibration, evaluation and plotting
// for dynamic stopping of c-VEP decoders.
//
// Exit codes: 0 success, 2 usage or configuration error, 1 runtime failure.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bds/codec.hpp"
#include "bds/decode.hpp"
#include "bds/evaluation.hpp"
#include "bds/report.hpp"
#include "bds/serialize.hpp"
#include "bds/sim.hpp"
#include "bds/store.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::uint32_t parse_poly(const std::string& s) {
  try {
    std::size_t pos = 0;
    const unsigned long v = std::stoul(s, &pos, 0);
    if (pos != s.size() || v == 0 || v > 0xFFFFFFFFul) throw std::invalid_argument(s);
    return static_cast<std::uint32_t>(v);
  } catch (const std::logic_error&) {
    throw std::invalid_argument("invalid polynomial '" + s + "'");
  }
}

void print_config(const std::string& command, json config) {
  json out = {{"command", command}, {"config", std::move(config)}};
  std::cout << out.dump(2) << '\n';
}

struct ExperimentFlags {
  std::string config_path;
  std::string method;
  std::string similarity;
  std::size_t folds = 0;
  double grid_ms = 0.0;
  double t_star_s = 0.0;
  double response_ms = 0.0;
  double overhead_s = 0.0;
  bool exclude_forced = false;
  bool abstain_forced = false;

  CLI::App* app = nullptr;

  void attach(CLI::App* sub) {
    app = sub;
    sub->add_option("--config", config_path, "Experiment config JSON (flags override it)")
        ->check(CLI::ExistingFile);
    sub->add_option("--method", method,
                    "bds | fixed | static_max_acc | static_target_acc | static_max_itr | margin | beta");
    sub->add_option("--similarity", similarity, "inner | correlation");
    sub->add_option("--folds", folds, "Cross-validation folds");
    sub->add_option("--grid-ms", grid_ms, "Decision grid step in ms");
    sub->add_option("--t-star", t_star_s, "Maximum trial length in s (default: full trial)");
    sub->add_option("--response-ms", response_ms, "Event response length in ms");
    sub->add_option("--overhead", overhead_s, "Per-selection overhead in s for SPM");
    sub->add_flag("--exclude-forced", exclude_forced, "Leave forced emissions out of decision counts");
    sub->add_flag("--abstain-forced", abstain_forced, "Abstain instead of emitting at the last window");
  }

  bool given(const char* name) const { return app->count(name) > 0; }

  bds::store::ExperimentConfig resolve() const {
    bds::store::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = bds::store::experiment_config_from_json(read_text(config_path));
    if (given("--method")) cfg.method = method;
    if (given("--similarity")) cfg.similarity = bds::decode::similarity_from_string(similarity);
    if (given("--folds")) cfg.folds = folds;
    if (given("--grid-ms")) cfg.grid_ms = grid_ms;
    if (given("--t-star")) cfg.t_star_s = t_star_s;
    if (given("--response-ms")) cfg.response_ms = response_ms;
    if (given("--overhead")) cfg.overhead_s = overhead_s;
    if (exclude_forced) cfg.count_forced = false;
    if (abstain_forced) cfg.abstain_forced = true;
    bds::store::validate(cfg);
    bds::evaluation::check_method(cfg.method, cfg.similarity);
    return cfg;
  }
};

std::vector<bds::store::LoadedStore> load_stores(const std::vector<std::string>& dirs) {
  std::vector<bds::store::LoadedStore> out;
  for (const auto& d : dirs) out.push_back(bds::store::load_store(d));
  return out;
}

json resolved(const bds::store::ExperimentConfig& cfg, const std::vector<std::string>& stores) {
  json j = json::parse(bds::store::to_json(cfg));
  j["stores"] = stores;
  return j;
}

// Rows already in `path` are kept unless the new rows replace the same
// (subject, method, hyperparam, similarity) key.
void merge_into_csv(const std::string& path, std::vector<bds::metrics::MetricsRow> rows) {
  std::vector<bds::metrics::MetricsRow> merged;
  if (fs::exists(path) && fs::file_size(path) > 0) {
    for (auto& old : bds::store::read_results_csv(path)) {
      const bool replaced = std::any_of(rows.begin(), rows.end(), [&](const auto& r) {
        return r.subject == old.subject && r.method == old.method && r.hyperparam == old.hyperparam &&
               r.similarity == old.similarity;
      });
      if (!replaced) merged.push_back(std::move(old));
    }
  }
  merged.insert(merged.end(), rows.begin(), rows.end());
  bds::store::write_results_csv(std::move(merged), path);
}

void print_rows(const std::vector<bds::metrics::MetricsRow>& rows) {
  for (const auto& r : rows) {
    std::cout << r.subject << ' ' << r.method << ' ' << bds::store::format_double(r.hyperparam) << ' '
              << r.similarity;
    for (std::size_t i = 0; i < bds::metrics::kMetricCount; ++i) {
      std::cout << ' ' << bds::metrics::kMetricNames[i] << '=' << bds::store::format_double(r.values[i]);
    }
    std::cout << '\n';
  }
}

void print_warnings(std::vector<std::string> warnings) {
  std::sort(warnings.begin(), warnings.end());
  warnings.erase(std::unique(warnings.begin(), warnings.end()), warnings.end());
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic stopping toolkit for code-modulated VEP decoding"};
  app.require_subcommand(1);

  // codes
  auto* codes = app.add_subcommand("codes", "Generate a modulated Gold codebook");
  int degree = 6;
  std::string poly_a = "0x43", poly_b = "0x67";
  std::size_t subset_k = 0;
  double codes_fs = 120.0, codes_response_ms = 300.0;
  std::string codes_out;
  codes->add_option("--degree", degree, "LFSR degree")->capture_default_str();
  codes->add_option("--poly-a", poly_a, "First feedback polynomial as a bitmask")->capture_default_str();
  codes->add_option("--poly-b", poly_b, "Second feedback polynomial as a bitmask")->capture_default_str();
  codes->add_option("--subset-k", subset_k, "Keep k codes with the lowest template correlation (0: all)");
  codes->add_option("--fs", codes_fs, "Sampling rate used for subset templates")->capture_default_str();
  codes->add_option("--response-ms", codes_response_ms, "Response length used for subset templates")
      ->capture_default_str();
  codes->add_option("--out", codes_out, "Output codebook file")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic trial store");
  std::string sim_config, sim_out;
  std::uint64_t sim_seed = 0;
  simulate->add_option("--config", sim_config, "Simulation config JSON")->check(CLI::ExistingFile);
  simulate->add_option("--seed", sim_seed, "Override rng_seed");
  simulate->add_option("--out", sim_out, "Output store directory")->required();

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Fit decoder and stopping policy on a whole store");
  ExperimentFlags cal_flags;
  cal_flags.attach(calibrate);
  std::string cal_store, cal_out;
  double cal_hyper = 1.0;
  calibrate->add_option("--store", cal_store, "Trial store directory")->required();
  calibrate->add_option("--hyperparam", cal_hyper, "zeta, theta or window length in s");
  calibrate->add_option("--out", cal_out, "Output policy JSON")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validated evaluation at one hyperparameter");
  ExperimentFlags eval_flags;
  eval_flags.attach(evaluate);
  std::vector<std::string> eval_stores;
  double eval_hyper = 1.0;
  std::string eval_csv;
  evaluate->add_option("--store", eval_stores, "Trial store directory (repeat for several subjects)")
      ->required();
  evaluate->add_option("--hyperparam", eval_hyper, "zeta, theta or window length in s");
  evaluate->add_option("--out-csv", eval_csv, "Results CSV (rows are merged into it)")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Evaluate a list of hyperparameter values");
  ExperimentFlags sweep_flags;
  sweep_flags.attach(sweep);
  std::vector<std::string> sweep_stores;
  std::vector<double> sweep_list;
  std::string sweep_csv;
  sweep->add_option("--store", sweep_stores, "Trial store directory (repeat for several subjects)")
      ->required();
  sweep->add_option("--hyperparam-list", sweep_list, "Comma-separated hyperparameter values")->delimiter(',');
  sweep->add_option("--out-csv", sweep_csv, "Results CSV (rows are merged into it)")->required();

  // report
  auto* report = app.add_subcommand("report", "Plot one results column against another as SVG");
  std::string rep_csv, rep_x = "mean_stop_s", rep_y = "accuracy", rep_svg;
  report->add_option("--csv", rep_csv, "Results CSV")->required();
  report->add_option("--x", rep_x, "Column for the x axis")->capture_default_str();
  report->add_option("--y", rep_y, "Column for the y axis")->capture_default_str();
  report->add_option("--out-svg", rep_svg, "Output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*codes) {
      const std::uint32_t pa = parse_poly(poly_a), pb = parse_poly(poly_b);
      print_config("codes", {{"degree", degree}, {"poly_a", pa}, {"poly_b", pb}, {"subset_k", subset_k},
                             {"fs", codes_fs}, {"response_ms", codes_response_ms}, {"out", codes_out}});
      bds::codec::Codebook book;
      if (subset_k == 0) {
        book = bds::codec::modulate(bds::codec::generate_gold(pa, pb, degree));
      } else {
        book = bds::sim::standard_codebook(subset_k, codes_fs, codes_response_ms, pa, pb, degree);
      }
      bds::codec::write_codebook_file(codes_out, book);
      std::cout << "wrote " << book.size() << " codes of length " << book.length() << " to " << codes_out
                << '\n';
    } else if (*simulate) {
      bds::serialize::SimJob job;
      if (!sim_config.empty()) job = bds::serialize::sim_job_from_json(read_text(sim_config));
      if (simulate->count("--seed")) job.sim.rng_seed = sim_seed;
      bds::sim::validate(job.sim);
      json cfg = json::parse(bds::serialize::to_json(job));
      cfg["out"] = sim_out;
      print_config("simulate", cfg);
      const bds::codec::Codebook book =
          job.codebook_path.empty()
              ? bds::sim::standard_codebook(job.sim.n_classes, job.sim.fs, job.sim.response_ms, job.poly_a,
                                            job.poly_b, job.degree)
              : bds::codec::read_codebook_file(job.codebook_path);
      const auto trials = bds::sim::make_dataset(job.sim, book, job.trials_per_class);
      bds::store::StoreMetadata meta;
      meta.fs = job.sim.fs;
      meta.n_classes = job.sim.n_classes;
      meta.subject = job.subject;
      bds::store::write_store(sim_out, trials, meta, &book);
      std::cout << "wrote " << trials.size() << " trials to " << sim_out << '\n';
    } else if (*calibrate) {
      const auto cfg = cal_flags.resolve();
      print_config("calibrate", resolved(cfg, {cal_store}));
      const auto data = bds::store::load_store(cal_store);
      if (!data.codebook) throw std::invalid_argument("store has no codebook; cannot build templates");
      const auto setup = bds::evaluation::make_setup(data.metadata, *data.codebook, cfg);
      const auto model = setup.fit()(data.trials);
      const auto cal = bds::evaluation::calibrate_policy(setup, cfg, cal_hyper, model, data.trials);
      if (!cal.warning.empty()) print_warnings({cal.warning});
      write_text(cal_out, bds::serialize::to_json(cal.envelope) + "\n");
      std::cout << "wrote " << cfg.method << " policy to " << cal_out << '\n';
    } else if (*evaluate || *sweep) {
      const bool is_sweep = static_cast<bool>(*sweep);
      auto cfg = is_sweep ? sweep_flags.resolve() : eval_flags.resolve();
      const auto& dirs = is_sweep ? sweep_stores : eval_stores;
      if (is_sweep) {
        if (sweep->count("--hyperparam-list")) cfg.hyperparams = sweep_list;
      } else if (evaluate->count("--hyperparam") || eval_flags.config_path.empty()) {
        cfg.hyperparams = {eval_hyper};
      } else {
        cfg.hyperparams.resize(std::min<std::size_t>(cfg.hyperparams.size(), 1));
      }
      cfg.hyperparams = bds::evaluation::dedupe_hyperparams(cfg.hyperparams);
      if (cfg.hyperparams.empty()) throw std::invalid_argument("no hyperparameter values given");
      const std::string& csv = is_sweep ? sweep_csv : eval_csv;
      json shown = resolved(cfg, dirs);
      shown["out_csv"] = csv;
      print_config(is_sweep ? "sweep" : "evaluate", shown);
      const auto stores = load_stores(dirs);
      std::vector<std::string> warnings;
      const auto rows = bds::evaluation::sweep(stores, cfg, &warnings);
      print_warnings(warnings);
      print_rows(rows);
      merge_into_csv(csv, rows);
    } else if (*report) {
      print_config("report", {{"csv", rep_csv}, {"x", rep_x}, {"y", rep_y}, {"out_svg", rep_svg}});
      bds::report::write_report(rep_csv, rep_x, rep_y, rep_svg);
      std::cout << "wrote " << rep_svg << '\n';
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
