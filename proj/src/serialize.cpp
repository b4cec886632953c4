#include "bds/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

using nlohmann::json;

namespace bds::serialize {

namespace {

json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double get_number(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("expected a number or \"inf\"/\"-inf\", got \"" + s + "\"");
  }
  return j.get<double>();
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json bds_json(const stopping::BdsModel& m) {
  json j;
  j["alpha"] = m.alpha;
  j["sigma"] = m.sigma;
  j["zeta"] = number(m.zeta);
  j["n_classes"] = m.n_classes;
  j["t_star"] = m.t_star;
  j["fs"] = m.fs;
  j["sigma_floored"] = m.sigma_floored;
  j["grid"] = m.grid;
  json windows = json::array();
  for (std::size_t k = 0; k < m.pairs.size(); ++k) {
    windows.push_back({{"b0", m.pairs[k].b0},
                       {"b1", m.pairs[k].b1},
                       {"s0", m.pairs[k].s0},
                       {"s1", m.pairs[k].s1},
                       {"eta", number(m.eta[k])}});
  }
  j["windows"] = windows;
  return j;
}

stopping::BdsModel bds_from(const json& j) {
  stopping::BdsModel m;
  m.alpha = j.at("alpha").get<double>();
  m.sigma = j.at("sigma").get<double>();
  m.zeta = get_number(j.at("zeta"));
  m.n_classes = j.at("n_classes").get<std::size_t>();
  m.t_star = j.at("t_star").get<std::size_t>();
  m.fs = j.value("fs", 0.0);
  m.sigma_floored = j.value("sigma_floored", false);
  m.grid = j.at("grid").get<std::vector<std::size_t>>();
  for (std::size_t k = 0; k < j.at("windows").size(); ++k) {
    const json& w = j.at("windows")[k];
    stopping::GaussPair p;
    p.b0 = w.at("b0").get<double>();
    p.b1 = w.at("b1").get<double>();
    p.s0 = w.at("s0").get<double>();
    p.s1 = w.at("s1").get<double>();
    p.window_samples = k < m.grid.size() ? m.grid[k] : 0;
    m.pairs.push_back(p);
    m.eta.push_back(get_number(w.at("eta")));
  }
  stopping::validate(m);
  return m;
}

json decoder_json(const decode::DecoderModel& m) {
  json j;
  j["fs"] = m.fs;
  j["rho"] = m.rho;
  j["w"] = vector_json(m.w);
  j["r"] = vector_json(m.r);
  json templates = json::array();
  for (const auto& t : m.templates) templates.push_back(vector_json(t));
  j["templates"] = templates;
  return j;
}

decode::DecoderModel decoder_from(const json& j) {
  decode::DecoderModel m;
  m.fs = j.at("fs").get<double>();
  m.rho = j.value("rho", 0.0);
  m.w = vector_from(j.at("w"));
  m.r = vector_from(j.at("r"));
  for (const auto& t : j.at("templates")) m.templates.push_back(vector_from(t));
  return m;
}

template <typename F>
auto parse_with(const std::string& text, const char* what, F&& f) {
  try {
    return f(json::parse(text));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string to_json(const stopping::BdsModel& model) { return bds_json(model).dump(2); }

stopping::BdsModel bds_model_from_json(const std::string& text) {
  return parse_with(text, "BdsModel JSON", [](const json& j) { return bds_from(j); });
}

std::string to_json(const decode::DecoderModel& model) { return decoder_json(model).dump(2); }

decode::DecoderModel decoder_model_from_json(const std::string& text) {
  return parse_with(text, "decoder JSON", [](const json& j) { return decoder_from(j); });
}

std::string to_json(const PolicyEnvelope& e) {
  json j;
  j["kind"] = e.kind;
  j["similarity"] = e.similarity;
  j["hyperparam"] = number(e.hyperparam);
  j["fs"] = e.fs;
  j["grid"] = e.grid;
  json params = json::object();
  if (e.bds) params = bds_json(*e.bds);
  if (e.margin) {
    params["target_accuracy"] = e.margin->target_accuracy;
    json th = json::array();
    for (double t : e.margin->thresholds) th.push_back(number(t));
    params["thresholds"] = th;
  }
  if (e.window_index) {
    params["window_index"] = *e.window_index;
    if (*e.window_index < e.grid.size() && e.fs > 0.0) {
      params["window_s"] = static_cast<double>(e.grid[*e.window_index]) / e.fs;
    }
  }
  if (e.kind == "beta") params["theta"] = e.hyperparam;
  j["parameters"] = params;
  if (e.decoder) j["decoder"] = decoder_json(*e.decoder);
  return j.dump(2);
}

PolicyEnvelope envelope_from_json(const std::string& text) {
  return parse_with(text, "policy JSON", [](const json& j) {
    PolicyEnvelope e;
    e.kind = j.at("kind").get<std::string>();
    e.similarity = j.value("similarity", std::string("inner"));
    e.hyperparam = get_number(j.at("hyperparam"));
    e.fs = j.value("fs", 0.0);
    e.grid = j.value("grid", std::vector<std::size_t>{});
    const json& params = j.at("parameters");
    if (e.kind == "bds") e.bds = bds_from(params);
    if (params.contains("thresholds")) {
      baselines::MarginTable table;
      table.target_accuracy = params.at("target_accuracy").get<double>();
      for (const auto& t : params.at("thresholds")) table.thresholds.push_back(get_number(t));
      e.margin = table;
    }
    if (params.contains("window_index")) e.window_index = params.at("window_index").get<std::size_t>();
    if (j.contains("decoder")) e.decoder = decoder_from(j.at("decoder"));
    return e;
  });
}

std::string to_json(const SimJob& job) {
  const auto& s = job.sim;
  json j;
  j["n_classes"] = s.n_classes;
  j["channels"] = s.channels;
  j["fs"] = s.fs;
  j["trial_seconds"] = s.trial_seconds;
  j["alpha_true"] = s.alpha_true;
  j["sigma_true"] = s.sigma_true;
  j["response_ms"] = s.response_ms;
  j["rng_seed"] = s.rng_seed;
  j["trials_per_class"] = job.trials_per_class;
  j["spatial_pattern"] = vector_json(s.pattern());
  j["response"] = vector_json(s.true_response());
  if (job.codebook_path.empty()) {
    j["codebook"] = {{"degree", job.degree}, {"poly_a", job.poly_a}, {"poly_b", job.poly_b}};
  } else {
    j["codebook_path"] = job.codebook_path;
  }
  j["subject"] = job.subject;
  return j.dump(2);
}

SimJob sim_job_from_json(const std::string& text) {
  return parse_with(text, "simulation config", [](const json& j) {
    static const std::vector<std::string> known = {
        "n_classes", "channels", "fs", "trial_seconds", "alpha_true", "sigma_true",
        "response_ms", "rng_seed", "trials_per_class", "spatial_pattern", "response",
        "codebook", "codebook_path", "subject"};
    for (const auto& [key, _] : j.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw std::invalid_argument("simulation config: unknown field '" + key + "'");
      }
    }
    SimJob job;
    auto& s = job.sim;
    s.n_classes = j.value("n_classes", s.n_classes);
    s.channels = j.value("channels", s.channels);
    s.fs = j.value("fs", s.fs);
    s.trial_seconds = j.value("trial_seconds", s.trial_seconds);
    s.alpha_true = j.value("alpha_true", s.alpha_true);
    s.sigma_true = j.value("sigma_true", s.sigma_true);
    s.response_ms = j.value("response_ms", s.response_ms);
    s.rng_seed = j.value("rng_seed", s.rng_seed);
    if (j.contains("spatial_pattern")) s.spatial_pattern = vector_from(j.at("spatial_pattern"));
    if (j.contains("response")) s.response = vector_from(j.at("response"));
    job.trials_per_class = j.value("trials_per_class", job.trials_per_class);
    if (j.contains("codebook")) {
      const json& c = j.at("codebook");
      job.degree = c.value("degree", job.degree);
      job.poly_a = c.value("poly_a", job.poly_a);
      job.poly_b = c.value("poly_b", job.poly_b);
    }
    job.codebook_path = j.value("codebook_path", std::string());
    job.subject = j.value("subject", std::string());
    sim::validate(s);
    return job;
  });
}

}  // namespace bds::serialize
