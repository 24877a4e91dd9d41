#include <cmath>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "mmm/error.hpp"
#include "mmm/gromov_prohorov.hpp"
#include "support.hpp"

using namespace mmm;

namespace {

FiniteMmmSpace two_far() { return FiniteMmmSpace::unmarked({0, 2, 2, 0}, {0.5, 0.5}); }

nlohmann::json oracle_cases() {
  std::ifstream in(MMM_TEST_DATA "/gp_oracle_cases.json");
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("gp_upper examples") {
  const auto x = two_far();
  CHECK(gp_upper(x, x) == 0.0);
  CHECK(gp_upper(x, FiniteMmmSpace()) == doctest::Approx(1.0));
  CHECK(gp_upper(FiniteMmmSpace(), FiniteMmmSpace()) == 0.0);
}

TEST_CASE("two atoms against one atom: exhaustive glueing grid") {
  const auto x = two_far();
  const auto y = testing::single_atom(1.0);
  double grid = INFINITY;
  for (int a = 0; a <= 300; ++a)
    for (int b = 0; b <= 300; ++b) {
      Glueing g{2, 1, {a * 0.01, b * 0.01}};
      if (!is_admissible(x, y, g)) continue;
      grid = std::min(grid, glueing_prohorov(x, y, g));
    }
  CHECK(grid == doctest::Approx(0.5));
  const double up = gp_upper(x, y);
  CHECK(up <= grid + 0.02);
  const double lo = gp_lower(x, y);
  CHECK(lo >= 0.0);
  CHECK(lo <= up);
  Glueing bad{2, 1, {0.1, 0.1}};
  CHECK_FALSE(is_admissible(x, y, bad));
  CHECK_THROWS_AS(glueing_prohorov(x, y, bad), InvalidMetric);
}

TEST_CASE("gp_upper against the exact relation oracle") {
  const auto cases = oracle_cases()["cases"];
  REQUIRE(cases.size() == 200);
  for (const auto& c : cases) {
    const auto x = space_from_json(c["x"]);
    const auto y = space_from_json(c["y"]);
    const double exact = c["exact"].get<double>();
    const auto r = gp_upper_search(x, y);
    CHECK(r.value >= exact - 1e-9);
    CHECK(r.value <= exact + 0.02);
    if (!r.glueing.cross.empty()) {
      CHECK(is_admissible(x, y, r.glueing, 1e-7));
      CHECK(glueing_prohorov(x, y, r.glueing) <= r.value + 1e-9);
    }
    CHECK(gp_lower(x, y) <= exact + 1e-9);
  }
}

TEST_CASE("gp_lower") {
  const auto one = testing::single_atom(1.0);
  const auto three = testing::single_atom(3.0);
  CHECK(gp_lower(one, three) >= 2.0);
  CHECK(gp_lower(two_far(), two_far()) == 0.0);
}

TEST_CASE("gp_upper symmetry and restriction bound") {
  Rng rng(41);
  std::uniform_int_distribution<int> size(1, 5);
  for (int t = 0; t < 40; ++t) {
    const auto a = testing::random_space(rng, size(rng), 1);
    const auto b = testing::random_space(rng, size(rng), 1);
    const double ab = gp_upper(a, b), ba = gp_upper(b, a);
    CHECK(std::abs(ab - ba) <= 0.02);
    CHECK(gp_lower(a, b) <= std::min(ab, ba) + 1e-9);

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (rng() % 2) keep.push_back(i);
    const auto r = restrict(a, keep);
    CHECK(gp_upper(r, a) <= a.mass() - r.mass() + 1e-9);
  }
}

TEST_CASE("star distance") {
  const auto one = testing::single_atom(1.0);
  const auto two = testing::single_atom(2.0);
  CHECK(star_distance(one, one) == 0.0);
  // |1 - 1/2| + min(d_GP, 1) with d_GP equal to the mass gap 1.
  CHECK(star_distance(one, two) == doctest::Approx(1.5));
  CHECK_THROWS_AS(star_distance(FiniteMmmSpace(), one), ZeroMass);
}

TEST_CASE("quantize stays within its radius") {
  Rng rng(44);
  for (int t = 0; t < 10; ++t) {
    const auto x = testing::random_space(rng, 12, 1);
    const auto q = quantize(x, 4);
    CHECK(q.space.size() <= 4);
    CHECK(q.space.mass() == doctest::Approx(x.mass()));
    CHECK(gp_lower(x, q.space) <= q.radius + 1e-9);
  }
}
