#include "doctest.h"

#include <limits>

#include "json.hpp"

#include "bds/serialize.hpp"

using namespace bds;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

stopping::BdsModel small_model() {
  stopping::BdsModel m;
  m.alpha = 0.8;
  m.sigma = 2.25;
  m.zeta = 1e-4;
  m.n_classes = 36;
  m.fs = 120.0;
  m.grid = {12, 24, 36};
  m.t_star = 36;
  m.pairs = {{0.1, 1.0 / 3.0, 0.5, 0.7, 12}, {0.2, 2.0, 1.1, 1.3, 24}, {0.3, 3.0, 1.7, 1.9, 36}};
  m.eta = {kInf, 1.2345678901234567, -kInf};
  m.sigma_floored = true;
  return m;
}

decode::DecoderModel small_decoder() {
  decode::DecoderModel d;
  d.w = Eigen::VectorXd::LinSpaced(3, -0.5, 0.5);
  d.r = Eigen::VectorXd::LinSpaced(4, 0.1, 0.4);
  d.templates = {Eigen::VectorXd::Constant(5, 1.0 / 7.0), Eigen::VectorXd::LinSpaced(5, -1, 1)};
  d.fs = 120.0;
  d.rho = 0.987654321;
  return d;
}

}  // namespace

TEST_CASE("bds model round trip keeps infinities and exact values") {
  const auto m = small_model();
  const std::string text = serialize::to_json(m);
  const auto j = nlohmann::json::parse(text);
  CHECK(j["windows"][0]["eta"] == "inf");
  CHECK(j["windows"][2]["eta"] == "-inf");
  const auto back = serialize::bds_model_from_json(text);
  CHECK(back.alpha == m.alpha);
  CHECK(back.sigma == m.sigma);
  CHECK(back.zeta == m.zeta);
  CHECK(back.n_classes == 36);
  CHECK(back.t_star == 36);
  CHECK(back.grid == m.grid);
  CHECK(back.sigma_floored);
  REQUIRE(back.pairs.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(back.pairs[k].b0 == m.pairs[k].b0);
    CHECK(back.pairs[k].b1 == m.pairs[k].b1);
    CHECK(back.pairs[k].s0 == m.pairs[k].s0);
    CHECK(back.pairs[k].s1 == m.pairs[k].s1);
    CHECK(back.pairs[k].window_samples == m.grid[k]);
    CHECK(back.eta[k] == m.eta[k]);
  }
  CHECK(serialize::to_json(back) == text);
}

TEST_CASE("bds model reading validates") {
  auto j = nlohmann::json::parse(serialize::to_json(small_model()));
  j["sigma"] = -1.0;
  CHECK_THROWS_AS(serialize::bds_model_from_json(j.dump()), std::invalid_argument);
  j = nlohmann::json::parse(serialize::to_json(small_model()));
  j["t_star"] = 48;
  CHECK_THROWS_AS(serialize::bds_model_from_json(j.dump()), std::invalid_argument);
  j = nlohmann::json::parse(serialize::to_json(small_model()));
  j["windows"][1]["eta"] = "big";
  CHECK_THROWS_AS(serialize::bds_model_from_json(j.dump()), std::invalid_argument);
  CHECK_THROWS_AS(serialize::bds_model_from_json("{"), std::invalid_argument);
  CHECK_THROWS_AS(serialize::bds_model_from_json("{}"), std::invalid_argument);
}

TEST_CASE("decoder round trip") {
  const auto d = small_decoder();
  const std::string text = serialize::to_json(d);
  const auto back = serialize::decoder_model_from_json(text);
  CHECK(back.w == d.w);
  CHECK(back.r == d.r);
  REQUIRE(back.templates.size() == 2);
  CHECK(back.templates[0] == d.templates[0]);
  CHECK(back.templates[1] == d.templates[1]);
  CHECK(back.rho == d.rho);
  CHECK(back.fs == d.fs);
  CHECK(serialize::to_json(back) == text);
}

TEST_CASE("policy envelopes") {
  serialize::PolicyEnvelope bds_env;
  bds_env.kind = "bds";
  bds_env.hyperparam = 1e-4;
  bds_env.fs = 120.0;
  bds_env.grid = {12, 24, 36};
  bds_env.bds = small_model();
  bds_env.decoder = small_decoder();
  auto text = serialize::to_json(bds_env);
  auto back = serialize::envelope_from_json(text);
  CHECK(back.kind == "bds");
  CHECK(back.similarity == "inner");
  CHECK(back.grid == bds_env.grid);
  REQUIRE(back.bds);
  CHECK(back.bds->eta[0] == kInf);
  REQUIRE(back.decoder);
  CHECK(back.decoder->w == bds_env.decoder->w);
  CHECK(serialize::to_json(back) == text);

  serialize::PolicyEnvelope margin_env;
  margin_env.kind = "margin";
  margin_env.similarity = "correlation";
  margin_env.hyperparam = 0.9;
  margin_env.fs = 120.0;
  margin_env.grid = {12, 24};
  margin_env.margin = baselines::MarginTable{{0.25, kInf}, 0.9};
  text = serialize::to_json(margin_env);
  back = serialize::envelope_from_json(text);
  REQUIRE(back.margin);
  CHECK(back.margin->thresholds[0] == 0.25);
  CHECK(back.margin->thresholds[1] == kInf);
  CHECK(back.margin->target_accuracy == 0.9);
  CHECK_FALSE(back.decoder);

  serialize::PolicyEnvelope fixed_env;
  fixed_env.kind = "static_max_itr";
  fixed_env.fs = 120.0;
  fixed_env.grid = {12, 24};
  fixed_env.window_index = 1;
  back = serialize::envelope_from_json(serialize::to_json(fixed_env));
  REQUIRE(back.window_index);
  CHECK(*back.window_index == 1);
  const auto j = nlohmann::json::parse(serialize::to_json(fixed_env));
  CHECK(j["parameters"]["window_s"] == doctest::Approx(0.2));
}

TEST_CASE("simulation jobs") {
  serialize::SimJob job;
  job.sim.n_classes = 8;
  job.sim.sigma_true = 4.5;
  job.sim.rng_seed = 1234567890123ULL;
  job.trials_per_class = 5;
  job.subject = "synthetic";
  const std::string text = serialize::to_json(job);
  const auto back = serialize::sim_job_from_json(text);
  CHECK(back.sim.n_classes == 8);
  CHECK(back.sim.sigma_true == 4.5);
  CHECK(back.sim.rng_seed == 1234567890123ULL);
  CHECK(back.trials_per_class == 5);
  CHECK(back.subject == "synthetic");
  CHECK(back.poly_a == codec::kDefaultPolyA);
  CHECK(serialize::to_json(back) == text);

  // partial documents fall back to defaults
  const auto partial = serialize::sim_job_from_json(R"({"n_classes": 4, "rng_seed": 9})");
  CHECK(partial.sim.n_classes == 4);
  CHECK(partial.sim.channels == 8);
  CHECK(partial.trials_per_class == 3);

  const auto custom = serialize::sim_job_from_json(
      R"({"channels": 2, "spatial_pattern": [0.6, 0.8], "codebook": {"degree": 5, "poly_a": 37, "poly_b": 61}})");
  CHECK(custom.sim.spatial_pattern.size() == 2);
  CHECK(custom.degree == 5);
  CHECK(custom.poly_a == 37);

  CHECK_THROWS_AS(serialize::sim_job_from_json(R"({"sigma": 1})"), std::invalid_argument);
  CHECK_THROWS_AS(serialize::sim_job_from_json(R"({"sigma_true": "x"})"), std::invalid_argument);
  CHECK_THROWS_AS(serialize::sim_job_from_json("nope"), std::invalid_argument);
}
