#include "doctest.h"

#include "adem/serialize.hpp"

using namespace adem;

TEST_CASE("mixture JSON uses the fixed field names and round-trips") {
  GaussianMixture m;
  m.components = {{0.25, 31.5, 12.0}, {0.75, 190.125, 40.5}};
  m.loglik_trace = {-1000.0, -900.25};
  m.iterations = 7;
  m.converged = true;
  const Json j = mixture_to_json(m);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"k", "components", "loglik", "iterations", "converged"});
  CHECK(j["k"] == 2);
  CHECK(j["components"][1]["mean"] == 190.125);
  CHECK(j["loglik"] == -900.25);

  const GaussianMixture back = mixture_from_json(Json::parse(j.dump()));
  CHECK(back.components == m.components);
  CHECK(back.iterations == 7);
  CHECK(back.converged);
  CHECK(back.loglik() == -900.25);

  Json bad = j;
  bad["k"] = 3;
  CHECK_THROWS_AS(mixture_from_json(bad), DataError);
  CHECK_THROWS_AS(mixture_from_json(Json::object()), DataError);
}

TEST_CASE("fuzzy system JSON round-trips") {
  const FuzzySystem fs = FuzzySystem::make_default(25.0);
  const Json j = fuzzy_to_json(fs);
  CHECK(j["sigma_small"].size() == 4);
  CHECK(j["p_great"][0] == fs.p_great.a);
  CHECK(fuzzy_from_json(Json::parse(j.dump())) == fs);
}

TEST_CASE("fuzzy override with only the breakpoints") {
  Json j;
  j["sigma_small"] = {0, 0, 10, 30};
  j["sigma_great"] = {10, 30, 100, 100};
  j["ncn_small"] = {0, 0, 1, 3};
  j["ncn_moderate"] = {1, 3, 5, 7};
  j["ncn_great"] = {5, 7, 8, 8};
  j["p_small"] = {0, 0, 0.3, 0.5};
  j["p_great"] = {0.5, 0.7, 1, 1};
  const FuzzySystem fs = fuzzy_from_json(j);
  CHECK(fs.sigma_max == 100);
  CHECK(fs.ncn_max == 8);
  CHECK(fs.p_great == MembershipFn::trapezoid(0.5, 0.7, 1, 1));

  SUBCASE("missing set") {
    j.erase("ncn_great");
    CHECK_THROWS_AS(fuzzy_from_json(j), DataError);
  }
  SUBCASE("wrong arity") {
    j["p_small"] = {0, 0.5, 1};
    CHECK_THROWS_AS(fuzzy_from_json(j), DataError);
  }
  SUBCASE("unordered breakpoints") {
    j["p_small"] = {0, 0.5, 0.3, 0.6};
    CHECK_THROWS_AS(fuzzy_from_json(j), DataError);
  }
  SUBCASE("coverage gap") {
    j["sigma_great"] = {40, 50, 100, 100};
    CHECK_THROWS_AS(fuzzy_from_json(j), DataError);
  }
  SUBCASE("not an object") { CHECK_THROWS_AS(fuzzy_from_json(Json::array()), DataError); }
}

TEST_CASE("run manifest round-trips") {
  PipelineConfig cfg;
  cfg.method = SegMethod::dem;
  cfg.em.k = 4;
  cfg.em.epsilon = 1e-4;
  cfg.em.max_iter = 50;
  cfg.em.init = InitMode::identity_variance;
  cfg.window = WindowSpec{2, BorderPolicy::clamp};
  cfg.s_threshold = 12.5;
  cfg.sigma_break = 70;
  cfg.centers = SpatialCenterMode::weighted_mean;
  const Json j = manifest_to_json(cfg, 99, "fs.json");
  for (const char* key : {"method", "k", "seed", "epsilon", "window_radius", "s_threshold", "sigma_break", "border_policy"}) {
    CHECK(j.contains(key));
  }
  const Manifest m = manifest_from_json(Json::parse(j.dump()));
  CHECK(m.seed == 99);
  CHECK(m.membership_override == "fs.json");
  CHECK(m.config.method == SegMethod::dem);
  CHECK(m.config.em.k == 4);
  CHECK(m.config.em.epsilon == 1e-4);
  CHECK(m.config.em.max_iter == 50);
  CHECK(m.config.em.init == InitMode::identity_variance);
  CHECK(m.config.window.radius == 2);
  CHECK(m.config.window.border == BorderPolicy::clamp);
  CHECK(m.config.s_threshold == 12.5);
  CHECK(m.config.sigma_break == 70);
  CHECK(m.config.centers == SpatialCenterMode::weighted_mean);

  CHECK(manifest_to_json(cfg, 1, "")["membership_override"].is_null());
  Json bad = j;
  bad["method"] = "kmeans";
  CHECK_THROWS_AS(manifest_from_json(bad), DataError);
  bad = j;
  bad.erase("seed");
  CHECK_THROWS_AS(manifest_from_json(bad), DataError);
}

TEST_CASE("report JSON") {
  SegReport r;
  r.per_class = {{3, 4}, {0, 2}};
  r.region = 3;
  r.contour = 6;
  r.pixels = 100;
  const Json j = report_to_json(r);
  CHECK(j["total"] == 9);
  CHECK(j["per_class"][1]["contour"] == 2);
  CHECK(j["accuracy"] == doctest::Approx(0.91));
}
