#include <doctest.h>

#include <string>

#include "nadac/config.hpp"
#include "nadac/errors.hpp"
#include "support.hpp"

using namespace nadac;
using nlohmann::json;

namespace {

json opinion() { return read_json_file(support::preset_path("opinion")); }

std::string path_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ValidationError& e) {
    return e.path();
  }
  return "<accepted>";
}

}  // namespace

TEST_CASE("every shipped preset parses") {
  for (const char* name : {"opinion", "opinion_openloop", "opinion_leaky", "epidemic_sigma1", "epidemic_sigma5",
                           "epidemic_sigma10", "tanh_zero_input"}) {
    CAPTURE(name);
    CHECK_NOTHROW(support::load_preset(name));
  }
}

TEST_CASE("errors name the offending field") {
  auto j = opinion();
  j["noise"]["half_width"] = -1.0;
  CHECK(path_of(j) == "noise.half_width");

  j = opinion();
  j["bogus"] = 1;
  CHECK(path_of(j) == "bogus");

  j = opinion();
  j["estimator"]["delta"] = 0.0;
  CHECK(path_of(j) == "estimator.delta");

  j = opinion();
  j["policy"]["kind"] = "nonsense";
  CHECK(path_of(j) == "policy.kind");

  j = opinion();
  j["horizon"] = "many";
  CHECK(path_of(j) == "horizon");
}

TEST_CASE("true parameter outside the shrunken set is a validation error") {
  auto j = opinion();
  j["parameter_set"]["radius"] = 2.0;
  CHECK_THROWS_AS(parse_config(j), ValidationError);
}

TEST_CASE("gaussian noise on a bounded link is rejected") {
  auto j = opinion();
  j["noise"] = {{"kind", "gaussian"}, {"sigma", 1.0}};
  CHECK_THROWS_AS(parse_config(j), ValidationError);
}

TEST_CASE("rate probes need an admissible eta") {
  auto j = opinion();
  j["metrics"]["gamma"] = 4.0;
  CHECK(path_of(j).rfind("metrics", 0) == 0);
  j["metrics"]["eta"] = 0.05;
  CHECK(path_of(j) == "<accepted>");
}

TEST_CASE("a manifest wraps a re-runnable config") {
  const auto j = opinion();
  const json manifest = {{"config", j}, {"seed", j["seed"]}, {"version", "x"}};
  const auto a = parse_config(j);
  const auto b = parse_config(manifest);
  CHECK(a.sim.horizon == b.sim.horizon);
  CHECK(a.sim.seed == b.sim.seed);
  CHECK(a.sim.plant.theta_star.entries() == b.sim.plant.theta_star.entries());
}

TEST_CASE("sweep paths") {
  auto j = opinion();
  set_scalar_path(j, "noise.half_width", 0.2);
  CHECK(j["noise"]["half_width"] == 0.2);
  set_scalar_path(j, "seed", 9.0);
  CHECK(j["seed"].is_number_integer());
  CHECK_THROWS_AS(set_scalar_path(j, "noise.nothing", 1.0), ValidationError);
  CHECK_THROWS_AS(set_scalar_path(j, "noise.kind", 1.0), ValidationError);
  CHECK(find_path(j, "estimator.delta") != nullptr);
  CHECK(find_path(j, "estimator.x.y") == nullptr);
}

TEST_CASE("plant presets") {
  const auto epi = plant_preset("epidemic_si", "plant");
  CHECK(json_to_matrix(epi["B"], "B").cols() == 5);
  CHECK_THROWS_AS(plant_preset("nope", "plant.preset"), ValidationError);
  CHECK_THROWS_AS(json_to_matrix(json::array({json::array({1, 2}), json::array({1})}), "A"), ValidationError);
}
