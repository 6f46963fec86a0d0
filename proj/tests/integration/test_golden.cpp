// Regression: the first 100 logged rows of two presets against stored
// output. Regenerate with tools/make_golden.sh after an intended change.
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nadac/io.hpp"
#include "nadac/simulate.hpp"
#include "support.hpp"

namespace {

std::vector<std::string> lines_of(std::istream& in, std::size_t limit) {
  std::vector<std::string> out;
  std::string line;
  while (out.size() < limit && std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

void compare(const std::string& preset) {
  const auto cfg = support::load_preset(preset, 100).sim;
  std::ostringstream csv;
  nadac::write_csv(nadac::run(cfg), csv);
  std::istringstream got_in(csv.str());
  std::ifstream want_in(std::string(NADAC_SOURCE_DIR) + "/tests/golden/" + preset + "_head.csv");
  REQUIRE(want_in.good());
  const auto got = lines_of(got_in, 101);
  const auto want = lines_of(want_in, 101);
  REQUIRE(got.size() == 101);
  REQUIRE(want.size() == 101);
  CHECK(got[0] == want[0]);
  for (std::size_t i = 1; i < got.size(); ++i) {
    const auto g = split(got[i]);
    const auto w = split(want[i]);
    REQUIRE(g.size() == w.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g[k] == w[k]) continue;
      const double gv = std::stod(g[k]);
      const double wv = std::stod(w[k]);
      CAPTURE(i);
      CAPTURE(k);
      REQUIRE(std::abs(gv - wv) <= 1e-9 * std::max(1.0, std::abs(wv)));
    }
  }
}

}  // namespace

TEST_CASE("opinion preset head") { compare("opinion"); }
TEST_CASE("epidemic preset head") { compare("epidemic_sigma5"); }
