#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "mmm/error.hpp"
#include "mmm/law.hpp"
#include "mmm/moments.hpp"
#include "mmm/prohorov.hpp"
#include "support.hpp"

using namespace mmm;

namespace {

EmpiricalLaw atoms(std::vector<double> masses, double scale = 1.0) {
  std::vector<SpaceHandle> s;
  for (double m : masses) s.push_back(share(testing::single_atom(m)));
  return EmpiricalLaw(scale, std::move(s), std::vector<double>(masses.size(), 1.0));
}

EmpiricalLaw random_law(Rng& rng, std::size_t count, double max_weight) {
  std::vector<SpaceHandle> s;
  std::uniform_int_distribution<std::size_t> size(1, 3);
  for (std::size_t i = 0; i < count; ++i)
    s.push_back(share(testing::random_space(rng, size(rng), 0, 1.0, 0.1, max_weight)));
  return EmpiricalLaw(1.0, std::move(s));
}

LawDistanceOptions lazy() {
  LawDistanceOptions o;
  o.metric_closure = false;
  return o;
}

}  // namespace

TEST_CASE("restrict_eps") {
  const auto law = atoms({0.5, 2.0});
  const auto r = restrict_eps(law, 1.0);
  REQUIRE(r.size() == 1);
  CHECK(r.space(0).mass() == 2.0);
  CHECK(restrict_eps(law, 0.1).size() == 2);
  CHECK(restrict_eps(law, 3.0).empty());
  CHECK_THROWS_AS(restrict_eps(law, 0.0), PreconditionViolated);
}

TEST_CASE("integrate") {
  const auto law = atoms({0.5, 2.0}, 1.5);
  CHECK(integrate(law, [](const FiniteMmmSpace&) { return 1.0; }) == doctest::Approx(law.total_mass()));
  const auto single = atoms({2.0}, 3.0);
  CHECK(integrate(single, [](const FiniteMmmSpace& x) { return x.mass(); }) == 6.0);

  Rng rng(51);
  const auto r = random_law(rng, 6, 1.0);
  const Monomial m(TestFunction(2, Expr::exp_neg(1.0, Expr::dist(0, 1))));
  const double direct = integrate(r, [&](const FiniteMmmSpace& x) { return evaluate_exact(x, m); });
  CHECK(estimate_moment(r, m).value == doctest::Approx(direct).epsilon(1e-13));
}

TEST_CASE("law_prohorov examples") {
  const auto x = share(testing::single_atom(1.0));
  const EmpiricalLaw a(1.0, {x}, {1.0}), b(1.0, {x}, {0.4});
  CHECK(law_prohorov(a, a) == 0.0);
  CHECK(law_prohorov(a, b) == doctest::Approx(0.6));

  const auto u = share(FiniteMmmSpace::unmarked({0, 0.4, 0.4, 0}, {0.5, 0.5}));
  const auto v = share(FiniteMmmSpace::unmarked({0, 0.2, 0.2, 0}, {0.5, 0.5}));
  const EmpiricalLaw lu(1.0, {u}, {1.0}), lv(1.0, {v}, {1.0});
  const double gp = gp_upper(*u, *v);
  CHECK(law_prohorov(lu, lv) == doctest::Approx(std::min(gp, 1.0)));
}

TEST_CASE("vague distance closed form") {
  const auto unit = atoms({1.0});
  const EmpiricalLaw empty;
  CHECK(std::abs(vague_distance(unit, empty) - (1.0 - std::exp(-1.0))) <= 1e-12);
  CHECK(vague_distance(unit, unit) == 0.0);
}

TEST_CASE("vague distance matches quadrature of the restricted Prohorov distance") {
  Rng rng(52);
  for (int t = 0; t < 3; ++t) {
    const auto a = random_law(rng, 3, 1.0);
    const auto b = random_law(rng, 3, 1.0);
    double top = 0.0;
    for (const auto* law : {&a, &b})
      for (std::size_t i = 0; i < law->size(); ++i) top = std::max(top, law->space(i).mass());
    const int steps = 2000;
    const double h = top / steps;
    double sum = 0.0;
    for (int s = 0; s < steps; ++s) {
      const double u = (s + 0.5) * h;
      const double d = law_prohorov(restrict_eps(a, u), restrict_eps(b, u), lazy());
      sum += h * std::exp(-u) * std::min(1.0, d);
    }
    CHECK(std::abs(vague_distance(a, b, lazy()) - sum) <= 12 * h);
  }
}

TEST_CASE("vague distance is a pseudometric on samples") {
  Rng rng(53);
  std::vector<EmpiricalLaw> laws;
  for (int i = 0; i < 5; ++i) laws.push_back(random_law(rng, 3, 0.8));
  LawDistanceContext ctx;
  for (const auto& l : laws) ctx.add(l);
  for (std::size_t i = 0; i < laws.size(); ++i) {
    CHECK(ctx.vague_distance(laws[i], laws[i]) == 0.0);
    for (std::size_t j = 0; j < laws.size(); ++j) {
      const double dij = ctx.vague_distance(laws[i], laws[j]);
      CHECK(dij == doctest::Approx(ctx.vague_distance(laws[j], laws[i])).epsilon(1e-12));
      for (std::size_t k = 0; k < laws.size(); ++k)
        CHECK(dij <= ctx.vague_distance(laws[i], laws[k]) + ctx.vague_distance(laws[k], laws[j]) + 1e-9);
    }
  }
}

TEST_CASE("lemma bound examples") {
  const auto unit = atoms({1.0});
  const EmpiricalLaw empty;
  const auto r = lemma_bound_check(unit, empty, 1.2, 1.1);
  CHECK(r.holds);
  CHECK(r.lhs == doctest::Approx(1.0 - std::exp(-1.0)));
  CHECK(r.prohorov == doctest::Approx(1.0));
  CHECK_THROWS_AS(lemma_bound_check(unit, empty, 1.2, 0.9), PreconditionViolated);
  CHECK_THROWS_AS(lemma_bound_check(unit, atoms({1.0}, 2.0), 1.2, 1.1), PreconditionViolated);

  Rng rng(54);
  const auto law = random_law(rng, 4, 1.0);
  for (double x : {0.1, 1.0, 3.0}) CHECK(lemma_bound_check(law, law, x, x / 2).holds);
}

TEST_CASE("law json round trip") {
  Rng rng(55);
  const auto law = random_law(rng, 3, 1.0);
  const auto back = law_from_json(to_json(law));
  REQUIRE(back.size() == law.size());
  for (std::size_t i = 0; i < law.size(); ++i) CHECK(back.space(i) == law.space(i));
  CHECK(back.total_mass() == law.total_mass());
  CHECK_THROWS_AS(law_from_json(nlohmann::json::parse(R"({"spaces": 3})")), FormatError);
}

TEST_CASE("replicate standard error counts dropped replicates") {
  const auto law = EmpiricalLaw::from_replicates(1.0, {share(testing::single_atom(1.0))}, 4);
  // values (1, 0, 0, 0): mean 1/4, sample sd sqrt(1/4), se sqrt(1/16)
  CHECK(replicate_std_error(law, {1.0}) == doctest::Approx(0.25));
}

TEST_CASE("lazy law_prohorov equals the Prohorov distance over all searched pairs") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    // Spaces of 4 to 6 atoms keep the pair searches heuristic.
    std::uniform_int_distribution<std::size_t> size(4, 6);
    auto law = [&](std::size_t count) {
      std::vector<SpaceHandle> s;
      for (std::size_t i = 0; i < count; ++i)
        s.push_back(share(testing::random_space(rng, size(rng), trial % 2, 1.0, 0.02, 0.2)));
      return EmpiricalLaw(1.0, std::move(s));
    };
    const EmpiricalLaw a = law(2 + trial % 5), b = law(1 + trial % 4);
    std::vector<const FiniteMmmSpace*> all;
    std::vector<double> p, q;
    for (std::size_t i = 0; i < a.size(); ++i) {
      all.push_back(&a.space(i));
      p.push_back(a.atom_mass(i));
      q.push_back(0.0);
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      all.push_back(&b.space(i));
      p.push_back(0.0);
      q.push_back(b.atom_mass(i));
    }
    const std::size_t n = all.size();
    std::vector<double> d(n * n, 0.0);
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = u + 1; v < n; ++v) d[u * n + v] = d[v * n + u] = gp_upper(*all[u], *all[v]);
    const double top = std::max(a.total_mass(), b.total_mass());
    CHECK(law_prohorov(a, b, lazy()) == prohorov_on_relation(d, p, q, top));
  }
}
