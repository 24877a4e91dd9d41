// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "mmm/diagnostics.hpp"
#include "mmm/genealogy.hpp"
#include "mmm/gromov_prohorov.hpp"
#include "mmm/law.hpp"
#include "mmm/moments.hpp"
#include "mmm/monomial.hpp"
#include "mmm/prohorov.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mmm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Survival of geometric(1/2) by iterating f(s) = 1 / (2 - s).
double gf_survival(std::size_t n) {
  double q = 0.0;
  for (std::size_t t = 0; t < n; ++t) q = 1.0 / (2.0 - q);
  return 1.0 - q;
}

const std::vector<EmpiricalLaw>& survival_laws() {
  static const auto laws = mass_skeleton_laws(OffspringLaw::geometric_half(), {100}, 1'000'000, 101);
  return laws;
}

Outcome survival() {
  const auto t0 = std::chrono::steady_clock::now();
  const EmpiricalLaw& law = survival_laws()[0];
  const double secs = seconds_since(t0);
  const double n = 100, R = 1e6;
  const double p_hat = law.size() / R;
  const double exact = n * gf_survival(100);
  const double se = n * std::sqrt(p_hat * (1 - p_hat) / R);
  const double est = n * p_hat;
  const bool ok = std::abs(est - exact) <= 3 * se && secs < 120 &&
                  std::abs(exact - 100.0 / 101.0) < 1e-12;
  return {ok, fmt("n P(Z_n > 0) = %.5f, exact %.5f, se %.5f, %.1f s", est, exact, se, secs)};
}

Outcome vague_tails() {
  const EmpiricalLaw& law = survival_laws()[0];
  const testing::LinearFractional lf{100};
  bool ok = true;
  std::string detail;
  for (double eps : {0.5, 1.0}) {
    const auto r = restrict_eps(law, eps);
    std::vector<double> ind(r.size(), 1.0);
    const double est = r.total_mass();
    const double se = replicate_std_error(r, ind);
    const double exact = lf.scaled_tail(eps);
    const double tol = std::max(0.02, 3 * se);
    ok = ok && std::abs(est - exact) <= tol;
    detail += fmt("eps %.1f: %.4f vs %.4f (tol %.4f); ", eps, est, exact, tol);
  }
  return {ok, detail};
}

Outcome moments() {
  const std::vector<std::size_t> ns{25, 50, 100, 200};
  const std::uint64_t R = 14'400'000;
  const auto laws = mass_skeleton_laws(OffspringLaw::geometric_half(), ns, R, 303);
  bool ok = true;
  std::string detail;
  for (int k = 1; k <= 3; ++k) {
    const double limit = std::tgamma(k + 1.0);
    std::vector<double> v, se, exact;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const auto m = estimate_moment(laws[i], k);
      v.push_back(m.value);
      se.push_back(m.std_error);
      exact.push_back(testing::LinearFractional{double(ns[i])}.scaled_moment(k));
    }
    const bool match = std::abs(v.back() - exact.back()) <= 3 * se.back();
    // The exact trajectory must approach k! monotonically; the estimated one may
    // only move away by sampling noise.
    bool mono = true;
    for (std::size_t i = 1; i < ns.size(); ++i) {
      mono = mono && std::abs(exact[i] - limit) <= std::abs(exact[i - 1] - limit);
      mono = mono && std::abs(v[i] - limit) <= std::abs(v[i - 1] - limit) + 3 * std::hypot(se[i], se[i - 1]);
    }
    const double gap = std::abs(v.back() - limit) / limit;
    ok = ok && match && mono && gap <= 0.06;
    detail += fmt("k=%.0f: %.4f vs %.4f (se %.4f)", k, v.back(), exact.back(), se.back()) +
              fmt(" gap %.2f%%", 100 * gap) + (mono ? "; " : " not monotone; ");
  }
  return {ok, detail};
}

// Dyadic weights and integer path metrics keep every sum exact.
Outcome prohorov_exactness() {
  Rng rng(404);
  const auto t0 = std::chrono::steady_clock::now();
  int agree = 0;
  const int cases = 500;
  for (int c = 0; c < cases; ++c) {
    const std::size_t n = 1 + c % 8;
    std::uniform_int_distribution<int> edge(1, 12), w(0, 64);
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = edge(rng) / 16.0;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d[i * n + j] = std::min(d[i * n + j], d[i * n + k] + d[k * n + j]);
    std::vector<double> p(n), q(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = w(rng) / 128.0;
      q[i] = w(rng) / 128.0;
    }
    if (prohorov_exact(d, p, q) == testing::brute_force_prohorov(d, p, q)) ++agree;
  }
  const double secs = seconds_since(t0);
  return {agree == cases && secs < 10, fmt("%.0f/%.0f exact matches, %.2f s", agree, cases, secs)};
}

Outcome gp_sandwich() {
  std::ifstream in(MMM_TEST_DATA "/gp_oracle_cases.json");
  const auto cases = nlohmann::json::parse(in)["cases"];
  int sandwich = 0, close = 0;
  double worst = 0.0;
  for (const auto& c : cases) {
    const auto x = space_from_json(c["x"]), y = space_from_json(c["y"]);
    const double up = gp_upper(x, y), lo = gp_lower(x, y), opt = c["exact"].get<double>();
    sandwich += lo <= up + 1e-12;
    close += std::abs(up - opt) <= 0.02;
    worst = std::max(worst, std::abs(up - opt));
  }
  Rng rng(505);
  int bound = 0;
  const int restrictions = 1000;
  std::uniform_int_distribution<int> size(1, 6);
  for (int t = 0; t < restrictions; ++t) {
    const auto x = testing::random_space(rng, size(rng), t % 2);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (rng() % 2) keep.push_back(i);
    const auto r = restrict(x, keep);
    bound += gp_upper(r, x) <= x.mass() - r.mass() + 1e-9;
  }
  const int n = int(cases.size());
  return {n == 200 && sandwich == n && close == n && bound == restrictions,
          fmt("lower<=upper %.0f/200, within 0.02 of optimum %.0f/200 (worst %.2g), cutoff bound %.0f/1000",
              sandwich, close, worst, bound)};
}

EmpiricalLaw small_law(Rng& rng, std::size_t count) {
  std::vector<SpaceHandle> s;
  std::uniform_int_distribution<std::size_t> size(1, 3);
  std::uniform_real_distribution<double> mw(0.1, 0.8);
  for (std::size_t i = 0; i < count; ++i) {
    const double top = mw(rng);
    s.push_back(share(testing::random_space(rng, size(rng), 0, 1.0, 0.05, top)));
  }
  return EmpiricalLaw(1.0, std::move(s));
}

Outcome vague_metric() {
  const EmpiricalLaw unit(1.0, {share(testing::single_atom(1.0))}, {1.0}), empty;
  const double closed = vague_distance(unit, empty);
  const double err = std::abs(closed - (1.0 - std::exp(-1.0)));

  Rng rng(606);
  std::vector<EmpiricalLaw> laws;
  for (int i = 0; i < 12; ++i) laws.push_back(small_law(rng, 1 + i % 3));
  LawDistanceContext ctx;
  for (const auto& l : laws) ctx.add(l);
  bool sym = true, zero = true;
  for (std::size_t i = 0; i < laws.size(); ++i) {
    zero = zero && ctx.vague_distance(laws[i], laws[i]) == 0.0;
    for (std::size_t j = i + 1; j < laws.size(); ++j)
      sym = sym && std::abs(ctx.vague_distance(laws[i], laws[j]) - ctx.vague_distance(laws[j], laws[i])) <= 1e-12;
  }
  int triangles = 0;
  std::uniform_int_distribution<std::size_t> pick(0, laws.size() - 1);
  for (int t = 0; t < 200; ++t) {
    const std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
    triangles += ctx.vague_distance(laws[a], laws[c]) <=
                 ctx.vague_distance(laws[a], laws[b]) + ctx.vague_distance(laws[b], laws[c]) + 1e-9;
  }
  return {err <= 1e-12 && sym && zero && triangles == 200,
          fmt("|D* - (1 - 1/e)| = %.2g, triangles %.0f/200", err, triangles) +
              (sym ? "" : ", asymmetric") + (zero ? "" : ", nonzero self distance")};
}

Outcome lemma() {
  Rng rng(707);
  int holds = 0, total = 0;
  double worst = -INFINITY;
  EnsembleConfig gw;
  gw.n = 6;
  gw.replicates = 6;
  gw.law_scale = 1.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int pair = 0; pair < 250; ++pair) {
    EmpiricalLaw a, b;
    if (pair % 2) {
      gw.seed = 2 * pair;
      a = simulate_ensemble(gw).law;
      gw.seed = 2 * pair + 1;
      b = simulate_ensemble(gw).law;
    } else {
      a = small_law(rng, 1 + pair % 4);
      b = small_law(rng, 1 + (pair / 2) % 4);
    }
    LawDistanceContext ctx;
    ctx.add(a);
    ctx.add(b);
    const double d = ctx.law_prohorov(a, b);
    for (int c = 0; c < 4; ++c) {
      const double eps = d + 1e-6 + u(rng);
      const double x = eps + 1e-6 + 2.0 * u(rng);
      const auto r = lemma_bound_check(a, b, x, eps, ctx);
      ++total;
      holds += r.holds;
      worst = std::max(worst, r.lhs - r.rhs);
    }
  }
  return {holds == total && total == 1000,
          fmt("%.0f/%.0f hold, max lhs - rhs = %.3f", holds, total, worst)};
}

Outcome approximation() {
  const std::vector<std::size_t> ns{25, 50, 100, 200};
  const std::vector<double> ks{1, 2, 4, 8, 16, 32};
  std::vector<Cutoff> cuts;
  for (double k : ks) cuts.push_back(Cutoff::mass_floor(1.0 / k));
  EnsembleConfig cfg;
  cfg.replicates = 20000;
  std::vector<CoupledLevel> levels;
  for (std::size_t n : ns) {
    cfg.n = n;
    cfg.seed = derive_seed(808, n);
    levels.push_back(coupled_cutoffs(simulate_ensemble(cfg), cuts));
  }
  ApproxConfig ac;
  ac.cauchy_gaps = false;
  ac.distance.pair_cap = 1.0;
  ac.distance.metric_closure = false;
  const auto r = approximation_harness(levels, ks, {0.05}, ac);
  const auto sup = r.get("condition_ii_sup").numbers("sup_n");
  bool mono = true;
  for (std::size_t i = 1; i < sup.size(); ++i) mono = mono && sup[i] <= sup[i - 1];
  const double fin = r.scalars.at("final_vague_distance");
  std::ostringstream s;
  s << "condition (ii) sup over n:";
  for (double v : sup) s << ' ' << v;
  return {mono && sup.back() <= 0.02 && fin <= 0.05,
          s.str() + fmt("; final vague distance %.5f", fin)};
}

Outcome monomials() {
  Rng rng(909);
  int inside = 0;
  double lift_err = 0.0;
  std::uniform_int_distribution<std::size_t> size(1, 20), arity(1, 3), dim(0, 2);
  for (int c = 0; c < 100; ++c) {
    const std::size_t k = arity(rng), m = dim(rng);
    const auto x = testing::random_space(rng, size(rng), m, 1.5, 0.05, 0.5);
    const Monomial mono(TestFunction(k, testing::random_expr(rng, k, m)));
    const double exact = evaluate_exact(x, mono);
    const auto mc = evaluate_mc(x, mono, 20000, derive_seed(909, c));
    // Rounding slack for integrands that are constant on the sampled tuples.
    inside += std::abs(mc.estimate - exact) <= 3 * mc.std_error + 1e-12 * std::max(1.0, std::abs(exact));
    for (std::size_t e : {1, 2, 3}) {
      const double lifted = evaluate_exact(x, lift_mass(mono, e));
      const double want = std::pow(x.mass(), double(e)) * exact;
      lift_err = std::max(lift_err, std::abs(lifted - want) / std::max(1.0, std::abs(want)));
    }
  }
  return {inside == 100 && lift_err <= 1e-12,
          fmt("%.0f/100 within 3 std errors, lift_mass error %.2g", inside, lift_err)};
}

int run(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool same_tree(const fs::path& a, const fs::path& b, std::size_t& files) {
  std::vector<fs::path> la, lb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) la.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) lb.push_back(fs::relative(e.path(), b));
  std::sort(la.begin(), la.end());
  std::sort(lb.begin(), lb.end());
  if (la != lb || la.empty()) return false;
  for (const auto& f : la)
    if (slurp(a / f) != slurp(b / f)) return false;
  files += la.size();
  return true;
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "mmm_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  nlohmann::json cfg = {
      {"family", "geometric_half"},
      {"n", {10, 20, 40}},
      {"replicates", 3000},
      {"mark_dim", 1},
      {"seed", 1234},
      {"simulate", {{"jsonl", true}}},
      {"moments", {{"k_max", 3}, {"mc_samples", 256}, {"exact_budget", 1000}}},
      {"diagnose", {{"eps_grid", {0.25, 0.5, 1.0}}, {"pair_cap", 1.0}, {"metric_closure", false}}},
      {"approx", {{"k_list", {1, 2, 4, 8}}, {"cauchy_gaps", true}}},
      {"verify_bounds", {{"lemma_cases", 40}, {"cutoff_cases", 40}}}};
  {
    std::ofstream(dir / "config.json") << cfg.dump(2);
  }
  const std::string cli = MMM_CLI;
  // Law distances search pairs of genealogies, quadratic in the number of
  // atoms, so the subcommands that need them run on a smaller ensemble.
  nlohmann::json dcfg = cfg;
  dcfg["replicates"] = 300;
  {
    std::ofstream(dir / "small.json") << dcfg.dump(2);
  }
  if (run(cli + " simulate --config " + (dir / "small.json").string() + " --out " + (dir / "inputs").string()) != 0)
    return {false, "simulate failed"};
  dcfg["n"] = {10};
  dcfg["distance"] = {{"laws", {"inputs/law_n10.json", "inputs/law_n20.json"}},
                      {"spaces", nlohmann::json::array()},
                      {"pair_cap", 1.0}};
  {
    std::ifstream in(dir / "inputs" / "law_n10.json");
    const auto law = nlohmann::json::parse(in);
    for (int i = 0; i < 4 && i < int(law["spaces"].size()); ++i) {
      const std::string name = "space" + std::to_string(i) + ".json";
      std::ofstream(dir / name) << law["spaces"][i].dump();
      dcfg["distance"]["spaces"].push_back(name);
    }
  }
  {
    std::ofstream(dir / "distance.json") << dcfg.dump(2);
  }

  std::size_t files = 0;
  std::string failed;
  for (const std::string sub : {"simulate", "moments", "distance", "diagnose", "approx", "verify-bounds"}) {
    const fs::path conf = dir / (sub == "distance"                        ? "distance.json"
                                 : sub == "diagnose" || sub == "approx" ? "small.json"
                                                                        : "config.json");
    bool ok = true;
    for (int rep = 0; rep < 2 && ok; ++rep) {
      const fs::path one = dir / (sub + "_t1_" + std::to_string(rep)), four = dir / (sub + "_t4_" + std::to_string(rep));
      const std::string c = cli + " " + sub + " --config " + conf.string() + " --format both --svg";
      ok = run(c + " --threads 1 --out " + one.string()) == 0 && run(c + " --threads 4 --out " + four.string()) == 0 &&
           same_tree(one, four, files);
      if (ok && rep == 1) ok = same_tree(dir / (sub + "_t1_0"), one, files);
    }
    if (!ok) failed += " " + sub;
  }
  return {failed.empty(), failed.empty() ? fmt("6 subcommands, %.0f file comparisons identical", double(files))
                                         : "differences or failures in:" + failed};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"survival scaling", survival},
      {"vague mass limit", vague_tails},
      {"method of moments", moments},
      {"prohorov exactness", prohorov_exactness},
      {"gromov-prohorov sandwich", gp_sandwich},
      {"vague distance closed form and pseudometric", vague_metric},
      {"lemma bound", lemma},
      {"approximation harness", approximation},
      {"monomial engine", monomials},
      {"cli determinism", determinism},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = int(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
              << "): " << o.detail << fmt(" [%.1f s]", seconds_since(t0)) << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
