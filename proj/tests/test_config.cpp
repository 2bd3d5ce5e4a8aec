#include "lovm/config.hpp"

#include <doctest.h>

using namespace lovm;

TEST_CASE("config JSON round trip") {
  RunConfig c;
  c.alpha = 0.25;
  c.lambda_filter = 0.3;
  c.mass_fraction = 0.7;
  c.exponentiate_cost = false;
  c.noise_sigma = 0.05;
  c.seeds = {3, 9};
  c.ot_method = OtMethod::sinkhorn;
  c.branch = Branch::swab_c;
  c.ridge = 0.1;
  c.gap_level = GapLevel::dataset_mean;
  c.partial_for_capability = false;
  c.zscore_gap_space = false;
  const RunConfig back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.seeds == c.seeds);
  CHECK(back.branch == Branch::swab_c);

  CHECK(to_json(config_from_json(nlohmann::json::object())) == to_json(RunConfig{}));
  CHECK(config_from_json(nlohmann::json{{"alpha", 1.0}}).alpha == 1.0);
}

TEST_CASE("config rejects bad input") {
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"alpah", 0.5}}), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"alpha", 1.5}}), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"mass_fraction", 0.0}}), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"mass_fraction", 1.2}}), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"noise_sigma", -0.1}}), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"seeds", nlohmann::json::array()}}), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"branch", "best"}}), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"ot_method", "greedy"}}), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"ridge", -1.0}}), Error);

  for (const auto& name : method_names()) CHECK(to_string(branch_from_string(name)) == name);
}
