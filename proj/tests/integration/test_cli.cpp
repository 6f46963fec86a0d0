#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kTmp = fs::path(NADAC_TEST_TMP) / "cli";

int nadac(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" + NADAC_BIN + "\" " + args + " > \"" + (kTmp / "stdout.txt").string() +
                          "\" 2> \"" + (kTmp / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path write_json(const std::string& name, const json& j) {
  const fs::path p = kTmp / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

json short_opinion(std::uint64_t horizon = 2000) {
  auto j = nadac::read_json_file(support::preset_path("opinion"));
  j["horizon"] = horizon;
  return j;
}

struct Fresh {
  Fresh() {
    fs::remove_all(kTmp);
    fs::create_directories(kTmp);
  }
};

}  // namespace

TEST_CASE_FIXTURE(Fresh, "run writes a CSV and a manifest; a manifest re-runs bit-identically") {
  const auto cfg = write_json("cfg.json", short_opinion());
  REQUIRE(nadac("run \"" + cfg.string() + "\" --out \"" + (kTmp / "a").string() + "\"") == 0);
  CHECK(slurp(kTmp / "stdout.txt").find("param_err=") != std::string::npos);
  const auto manifest = nadac::read_json_file((kTmp / "a" / "manifest.json").string());
  CHECK(manifest["status"] == "ok");
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest.contains("version"));
  CHECK(manifest["summary"]["steps"] == 2000);

  REQUIRE(nadac("run \"" + (kTmp / "a" / "manifest.json").string() + "\" --out \"" + (kTmp / "b").string() + "\"") ==
          0);
  const auto a = slurp(kTmp / "a" / "run.csv");
  CHECK(a.size() > 1000);
  CHECK(a == slurp(kTmp / "b" / "run.csv"));
  CHECK(a.rfind("t,x[0],x[1],", 0) == 0);
}

TEST_CASE_FIXTURE(Fresh, "output directory precedence") {
  auto j = short_opinion(50);
  j["output_dir"] = (kTmp / "from_config").string();
  const auto cfg = write_json("cfg.json", j);
  REQUIRE(nadac("run \"" + cfg.string() + "\"") == 0);
  CHECK(fs::exists(kTmp / "from_config" / "run.csv"));
  REQUIRE(nadac("run \"" + cfg.string() + "\"", "NADAC_OUT=\"" + (kTmp / "from_env").string() + "\"") == 0);
  CHECK(fs::exists(kTmp / "from_env" / "run.csv"));
  REQUIRE(nadac("run \"" + cfg.string() + "\" --out \"" + (kTmp / "from_flag").string() + "\"",
                "NADAC_OUT=\"" + (kTmp / "from_env2").string() + "\"") == 0);
  CHECK(fs::exists(kTmp / "from_flag" / "run.csv"));
  CHECK_FALSE(fs::exists(kTmp / "from_env2"));
}

TEST_CASE_FIXTURE(Fresh, "validation failures exit 2 and name the field") {
  auto j = short_opinion();
  j["noise"]["half_width"] = -0.1;
  const auto bad = write_json("bad.json", j);
  CHECK(nadac("run \"" + bad.string() + "\" --out \"" + (kTmp / "x").string() + "\"") == 2);
  CHECK(slurp(kTmp / "stderr.txt").find("noise.half_width") != std::string::npos);
  CHECK(nadac("validate \"" + bad.string() + "\"") == 2);
  CHECK(nadac("validate \"" + support::preset_path("opinion") + "\"") == 0);
  CHECK(nadac("run \"" + (kTmp / "missing.json").string() + "\"") == 2);
  CHECK(nadac("frobnicate") == 2);
}

TEST_CASE_FIXTURE(Fresh, "divergence exits 3 and keeps the partial log") {
  json j = {{"horizon", 1000},
            {"mode", "open_loop"},
            {"divergence_ceiling", 1e3},
            {"plant", {{"link", {{"kind", "identity"}}}, {"A", {{2.0, 0.0}, {0.0, 2.0}}}, {"B", {{1.0}, {0.0}}},
                       {"x0", {1.0, 1.0}}}},
            {"parameter_set", {{"kind", "frobenius_ball"}, {"radius", 10.0}}},
            {"open_loop_input", {{"kind", "zero"}}},
            {"noise", {{"kind", "uniform_cube"}, {"half_width", 0.1}}}};
  const auto cfg = write_json("div.json", j);
  CHECK(nadac("run \"" + cfg.string() + "\" --out \"" + (kTmp / "d").string() + "\"") == 3);
  const auto manifest = nadac::read_json_file((kTmp / "d" / "manifest.json").string());
  CHECK(manifest["status"] == "aborted");
  CHECK(manifest["abort_step"].get<int>() > 0);
  CHECK(fs::file_size(kTmp / "d" / "run.csv") > 100);
}

TEST_CASE_FIXTURE(Fresh, "sweep writes per-run directories and an aggregate") {
  const auto cfg = write_json("cfg.json", short_opinion(500));
  REQUIRE(nadac("sweep \"" + cfg.string() + "\" --axis noise.half_width --values 0.05,0.1 --seeds 1,2 --jobs 2 --out \"" +
                (kTmp / "s").string() + "\"") == 0);
  const auto agg = slurp(kTmp / "s" / "aggregate.csv");
  CHECK(agg.rfind("noise.half_width,seed,final_param_err,final_J,status\n", 0) == 0);
  CHECK(std::count(agg.begin(), agg.end(), '\n') == 5);
  CHECK(fs::exists(kTmp / "s" / "noise.half_width=0.05_seed1" / "run.csv"));

  CHECK(nadac("sweep \"" + cfg.string() + "\" --axis noise.nothing --values 1 --out \"" + (kTmp / "t").string() +
              "\"") == 2);
  // One of the grid points fails validation at run time: partial sweep.
  CHECK(nadac("sweep \"" + cfg.string() + "\" --axis noise.half_width --values 0.1,-1 --out \"" +
              (kTmp / "u").string() + "\"") == 4);
}

TEST_CASE_FIXTURE(Fresh, "dare subcommand") {
  const auto ok = write_json("ok.json", {{"A", {{1.3}}}, {"Q", {{2.0}}}, {"R", {{0.5}}}});
  REQUIRE(nadac("dare \"" + ok.string() + "\"") == 0);
  CHECK(slurp(kTmp / "stdout.txt").find("residual") != std::string::npos);
  const auto singular = write_json("sing.json", {{"A", {{1.0}}}, {"Q", {{1.0}}}, {"R", {{0.0}}}});
  CHECK(nadac("dare \"" + singular.string() + "\"") == 2);
  const auto slow = write_json("slow.json", {{"A", {{1.3}}}, {"Q", {{2.0}}}, {"R", {{0.5}}}, {"max_iter", 2}});
  CHECK(nadac("dare \"" + slow.string() + "\"") == 3);
}

TEST_CASE_FIXTURE(Fresh, "version flag") {
  CHECK(nadac("--version") == 0);
  CHECK_FALSE(slurp(kTmp / "stdout.txt").empty());
}
