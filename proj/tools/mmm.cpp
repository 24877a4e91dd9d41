#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mmm/diagnostics.hpp"
#include "mmm/error.hpp"
#include "mmm/genealogy.hpp"
#include "mmm/gromov_prohorov.hpp"
#include "mmm/law.hpp"
#include "mmm/moments.hpp"
#include "mmm/random.hpp"
#include "mmm/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mmm;

namespace {

constexpr int kConfigError = 2;
constexpr int kBudgetError = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class T>
T opt(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

const json& section(const json& cfg, const char* name) {
  static const json empty = json::object();
  return cfg.contains(name) ? cfg.at(name) : empty;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream o;
  o << std::hex;
  o.width(16);
  o.fill('0');
  o << v;
  return o.str();
}

struct Run {
  std::string command;
  json cfg;
  fs::path out;
  OutputFormat format = OutputFormat::Both;
  unsigned threads = 1;
  bool svg = false;
  std::vector<std::string> files;

  std::uint64_t seed() const {
    if (!cfg.contains("seed") || cfg.at("seed").is_null())
      throw ConfigError("a seed is required for '" + command + "'");
    return cfg.at("seed").get<std::uint64_t>();
  }

  void emit(const ConvergenceReport& r, const std::string& stem) {
    for (const auto& p : write_report(r, out, stem, format)) files.push_back(p.filename().string());
  }

  void chart(const ConvergenceReport& r, const std::string& stem, const std::string& table,
             const std::string& x, const std::string& y, const std::string& series = {}) {
    if (!svg || !r.has(table)) return;
    const std::string name = stem + "_" + table + ".svg";
    std::ofstream(out / name, std::ios::binary) << to_svg(r.get(table), x, y, series);
    files.push_back(name);
  }

  void text(const std::string& name, const std::string& body) {
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw FormatError("cannot write " + (out / name).string());
    f << body;
    files.push_back(name);
  }
};

OffspringLaw offspring(const json& cfg) {
  if (!cfg.contains("family")) return OffspringLaw::geometric_half();
  const json& f = cfg.at("family");
  if (f.is_string()) return OffspringLaw::named(f.get<std::string>());
  if (f.is_object() && f.contains("pmf")) return OffspringLaw::custom(f.at("pmf").get<std::vector<double>>());
  throw ConfigError("family must be a name or {\"pmf\": [...]}");
}

std::vector<std::size_t> horizons(const json& cfg) {
  if (!cfg.contains("n")) throw ConfigError("missing n list");
  std::vector<std::size_t> n;
  if (cfg.at("n").is_number())
    n.push_back(cfg.at("n").get<std::size_t>());
  else
    n = cfg.at("n").get<std::vector<std::size_t>>();
  if (n.empty()) throw ConfigError("n list is empty");
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] == 0) throw ConfigError("n values must be >= 1");
    if (i > 0 && n[i] <= n[i - 1]) throw ConfigError("n list must be strictly increasing");
  }
  return n;
}

std::vector<std::uint64_t> replicate_counts(const json& cfg, std::size_t count) {
  std::vector<std::uint64_t> r;
  const json& j = cfg.contains("replicates") ? cfg.at("replicates") : json(1000);
  if (j.is_array())
    r = j.get<std::vector<std::uint64_t>>();
  else
    r.assign(count, j.get<std::uint64_t>());
  if (r.size() != count) throw ConfigError("one replicate count per n expected");
  for (auto v : r)
    if (v == 0) throw ConfigError("replicate counts must be >= 1");
  return r;
}

GenealogyScaling scaling(const json& cfg) {
  const json& s = section(cfg, "scaling");
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  GenealogyScaling g;
  g.mass_per_individual = opt(s, "mass_per_individual", nan);
  g.distance_divisor = opt(s, "distance_divisor", nan);
  g.mark_divisor = opt(s, "mark_divisor", nan);
  return g;
}

GlueSearchConfig search_config(const json& cfg) {
  const json& s = section(cfg, "search");
  GlueSearchConfig g;
  g.random_seeds = opt(s, "random_seeds", g.random_seeds);
  g.descent_steps = opt(s, "descent_steps", g.descent_steps);
  g.projection_tolerance = opt(s, "projection_tolerance", g.projection_tolerance);
  g.seed = opt(s, "seed", g.seed);
  g.max_atoms = opt(s, "max_atoms", g.max_atoms);
  g.greedy_starts = opt(s, "greedy_starts", g.greedy_starts);
  g.exact_cells = opt(s, "exact_cells", g.exact_cells);
  g.relation_rounds = opt(s, "relation_rounds", g.relation_rounds);
  return g;
}

LawDistanceOptions distance_options(const json& cfg, const json& local, unsigned threads) {
  LawDistanceOptions o;
  o.gp = search_config(cfg);
  o.pair_cap = opt(local, "pair_cap", o.pair_cap);
  o.metric_closure = opt(local, "metric_closure", o.metric_closure);
  o.threads = threads;
  return o;
}

struct Laws {
  std::vector<std::size_t> n;
  std::vector<EmpiricalLaw> laws;
  std::vector<double> labels;
};

/// Ensembles of genealogies, or coupled population chains when "skeleton" is set.
Laws simulate_laws(Run& run, const json& local) {
  const OffspringLaw off = offspring(run.cfg);
  Laws out;
  out.n = horizons(run.cfg);
  const auto reps = replicate_counts(run.cfg, out.n.size());
  const std::uint64_t seed = run.seed();
  if (opt(local, "skeleton", false)) {
    if (std::adjacent_find(reps.begin(), reps.end(), std::not_equal_to<>()) != reps.end())
      throw ConfigError("skeleton laws need one replicate count for every n");
    out.laws = mass_skeleton_laws(off, out.n, reps.front(), seed, run.threads);
  } else {
    for (std::size_t i = 0; i < out.n.size(); ++i) {
      EnsembleConfig ec;
      ec.off = off;
      ec.n = out.n[i];
      ec.mark_dim = opt(run.cfg, "mark_dim", std::size_t{0});
      ec.replicates = reps[i];
      ec.seed = derive_seed(seed, out.n[i]);
      ec.threads = run.threads;
      ec.scaling = scaling(run.cfg);
      out.laws.push_back(simulate_ensemble(ec).law);
    }
  }
  for (auto v : out.n) out.labels.push_back(static_cast<double>(v));
  return out;
}

int cmd_simulate(Run& run) {
  const OffspringLaw off = offspring(run.cfg);
  const auto n = horizons(run.cfg);
  const auto reps = replicate_counts(run.cfg, n.size());
  const std::uint64_t seed = run.seed();
  const json& local = section(run.cfg, "simulate");
  const bool jsonl = opt(local, "jsonl", false);
  ConvergenceReport r;
  r.title = "simulate";
  r.notes.push_back("family: " + off.name());
  Table& t = r.table("laws", {"n", "replicates", "survivors", "total_mass", "std_error", "exact_mass"});
  for (std::size_t i = 0; i < n.size(); ++i) {
    EnsembleConfig ec;
    ec.off = off;
    ec.n = n[i];
    ec.mark_dim = opt(run.cfg, "mark_dim", std::size_t{0});
    ec.replicates = reps[i];
    ec.seed = derive_seed(seed, n[i]);
    ec.threads = run.threads;
    ec.scaling = scaling(run.cfg);
    const GenealogyEnsemble ens = simulate_ensemble(ec);
    const LawEstimate m = integrate_with_error(ens.law, [](const FiniteMmmSpace&) { return 1.0; });
    const double exact = static_cast<double>(n[i]) * gf_oracle(off, n[i]).survival;
    t.add({n[i], reps[i], ens.law.size(), m.value, m.std_error, exact});
    const std::string stem = "law_n" + std::to_string(n[i]);
    run.text(stem + ".json", to_json(ens.law).dump() + "\n");
    if (jsonl) {
      std::ostringstream o;
      write_jsonl(o, ens, ec);
      run.text(stem + ".jsonl", o.str());
    }
  }
  run.emit(r, "simulate");
  run.chart(r, "simulate", "laws", "n", "total_mass");
  return 0;
}

int cmd_moments(Run& run) {
  const json& local = section(run.cfg, "moments");
  Laws L = simulate_laws(run, local);
  MomentsDiagConfig mc;
  mc.k_max = opt(local, "k_max", mc.k_max);
  mc.renorm_level = opt(local, "renorm_level", mc.renorm_level);
  mc.moment.exact_budget = opt(local, "exact_budget", mc.moment.exact_budget);
  mc.moment.mc_samples = opt(local, "mc_samples", mc.moment.mc_samples);
  mc.moment.seed = run.seed();
  mc.moment.threads = run.threads;
  if (opt(local, "phi", std::string("default")) == "one") {
    for (std::size_t k = 1; k <= mc.k_max; ++k) mc.families.push_back({NamedPhi{"one", std::nullopt}});
  }
  ConvergenceReport r = method_of_moments_diag(L.laws, L.labels, mc);

  const OffspringLaw off = offspring(run.cfg);
  Table& ex = r.table("exact_mass_moments", {"n", "k", "value"});
  for (std::size_t n : L.n) {
    const GfMoments g = gf_oracle(off, n);
    const double nd = static_cast<double>(n);
    const double m[4] = {nd * g.survival, g.mean, g.second / nd, g.third / (nd * nd)};
    for (std::size_t k = 0; k <= std::min<std::size_t>(mc.k_max, 3); ++k) ex.add({n, k, m[k]});
  }
  run.emit(r, "moments");
  run.chart(r, "moments", "mass", "n", "value");
  run.chart(r, "moments", "carleman", "k", "partial_sum");
  return 0;
}

std::vector<fs::path> paths(const json& local, const char* key, const fs::path& base) {
  std::vector<fs::path> out;
  if (!local.contains(key)) return out;
  for (const auto& s : local.at(key).get<std::vector<std::string>>()) {
    fs::path p(s);
    out.push_back(p.is_absolute() ? p : base / p);
  }
  return out;
}

json read_json(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw ConfigError("cannot read " + p.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

int cmd_distance(Run& run, const fs::path& base) {
  const json& local = section(run.cfg, "distance");
  GlueSearchConfig gp = search_config(run.cfg);
  if (run.cfg.contains("seed") && !run.cfg.at("seed").is_null()) gp.seed = run.cfg.at("seed").get<std::uint64_t>();
  const auto space_files = paths(local, "spaces", base);
  const auto law_files = paths(local, "laws", base);
  if (space_files.empty() && law_files.empty())
    throw ConfigError("distance needs \"spaces\" or \"laws\" file lists");
  ConvergenceReport r;
  r.title = "distance";
  if (!space_files.empty()) {
    std::vector<FiniteMmmSpace> xs;
    for (const auto& p : space_files) xs.push_back(space_from_json(read_json(p)));
    Table& t = r.table("spaces", {"i", "j", "gp_lower", "gp_upper", "star"});
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = i + 1; j < xs.size(); ++j) {
        const double up = gp_upper(xs[i], xs[j], gp);
        double star = std::numeric_limits<double>::quiet_NaN();
        if (xs[i].mass() > 0.0 && xs[j].mass() > 0.0) star = star_distance(xs[i], xs[j], gp);
        t.add({i, j, gp_lower(xs[i], xs[j]), up, star});
      }
  }
  if (!law_files.empty()) {
    std::vector<EmpiricalLaw> ls;
    for (const auto& p : law_files) ls.push_back(law_from_json(read_json(p), p.parent_path()));
    LawDistanceOptions o = distance_options(run.cfg, local, run.threads);
    o.gp = gp;
    LawDistanceContext ctx(o);
    for (const auto& l : ls) ctx.add(l);
    Table& t = r.table("laws", {"i", "j", "law_prohorov", "vague_distance"});
    for (std::size_t i = 0; i < ls.size(); ++i)
      for (std::size_t j = i + 1; j < ls.size(); ++j)
        t.add({i, j, ctx.law_prohorov(ls[i], ls[j]), ctx.vague_distance(ls[i], ls[j])});
  }
  run.emit(r, "distance");
  return 0;
}

int cmd_diagnose(Run& run) {
  const json& local = section(run.cfg, "diagnose");
  Laws L = simulate_laws(run, local);
  const auto eps = opt(local, "eps_grid", std::vector<double>{0.25, 0.5, 1.0});
  RestrictionConfig rc;
  rc.distance = distance_options(run.cfg, local, run.threads);
  rc.masses_only = opt(local, "masses_only", false);
  rc.gap_tolerance = opt(local, "gap_tolerance", rc.gap_tolerance);
  rc.atom_window = opt(local, "atom_window", rc.atom_window);
  rc.atom_mass = opt(local, "atom_mass", rc.atom_mass);
  if (L.laws.size() >= 2) {
    ConvergenceReport r = restriction_convergence(L.laws, L.labels, eps, rc);
    run.emit(r, "diagnose_restriction");
    run.chart(r, "diagnose_restriction", "restricted", "n", "mass", "eps");
  }

  SurvivalConfig sc;
  sc.base_tolerance = opt(local, "base_tolerance", sc.base_tolerance);
  const auto eta = opt(local, "eta_grid", std::vector<double>{2.0, 1.0, 0.5, 0.25, 0.1, 0.05});
  ConvergenceReport sr;
  try {
    sr = survival_estimate(L.laws, L.labels, eta, sc).report;
  } catch (const DegenerateGrid& e) {
    sr.title = "survival_estimate";
    sr.notes.push_back(e.what());
    sr.flag("degenerate_grid", true);
  }
  run.emit(sr, "diagnose_survival");
  run.chart(sr, "diagnose_survival", "survival", "n", "ratio");

  const PushforwardKind g = parse_pushforward(opt(local, "pushforward", std::string("total_mass")));
  const auto ts = opt(local, "thresholds", std::vector<double>{0.1, 0.25, 0.5, 1.0, 2.0});
  ConvergenceReport pr = pushforward_diag(L.laws, L.labels, g, ts, {}, opt(local, "tolerance", 0.05));
  run.emit(pr, "diagnose_pushforward");
  run.chart(pr, "diagnose_pushforward", "tails", "n", "tail", "t");
  return 0;
}

int cmd_approx(Run& run) {
  const json& local = section(run.cfg, "approx");
  const OffspringLaw off = offspring(run.cfg);
  const auto n = horizons(run.cfg);
  const auto reps = replicate_counts(run.cfg, n.size());
  const std::uint64_t seed = run.seed();
  const std::string kind = opt(local, "cutoff", std::string("mass_floor"));
  if (kind != "mass_floor" && kind != "reduced_tree") throw ConfigError("unknown cutoff '" + kind + "'");
  const auto ks = opt(local, "k_list", std::vector<double>{1, 2, 4, 8, 16, 32});
  std::vector<Cutoff> cuts;
  for (double k : ks) {
    if (!(k > 0.0)) throw ConfigError("k values must be positive");
    cuts.push_back(kind == "mass_floor" ? Cutoff::mass_floor(1.0 / k) : Cutoff::reduced_tree(1.0 / k));
  }
  std::vector<CoupledLevel> levels;
  for (std::size_t i = 0; i < n.size(); ++i) {
    EnsembleConfig ec;
    ec.off = off;
    ec.n = n[i];
    ec.mark_dim = opt(run.cfg, "mark_dim", std::size_t{0});
    ec.replicates = reps[i];
    ec.seed = derive_seed(seed, n[i]);
    ec.threads = run.threads;
    ec.scaling = scaling(run.cfg);
    levels.push_back(coupled_cutoffs(simulate_ensemble(ec, kind == "reduced_tree"), cuts));
  }
  ApproxConfig ac;
  json dl = local;
  if (!dl.contains("pair_cap")) dl["pair_cap"] = 1.0;
  if (!dl.contains("metric_closure")) dl["metric_closure"] = false;
  ac.distance = distance_options(run.cfg, dl, run.threads);
  ac.cauchy_gaps = opt(local, "cauchy_gaps", false);
  ConvergenceReport r =
      approximation_harness(levels, ks, opt(local, "eps_list", std::vector<double>{0.05}), ac);
  r.notes.push_back("cutoff: " + kind);
  run.emit(r, "approx");
  run.chart(r, "approx", "condition_ii_sup", "k", "sup_n", "eps");
  run.chart(r, "approx", "diagonal", "k", "vague_distance");
  return 0;
}

FiniteMmmSpace random_space(Rng& rng, std::size_t max_atoms, std::size_t mark_dim, double max_weight) {
  std::uniform_int_distribution<std::size_t> count(1, max_atoms);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t k = count(rng);
  // Points on the line give a valid metric; marks are independent.
  std::vector<double> pos(k), dist(k * k), marks(k * mark_dim), w(k);
  for (auto& p : pos) p = 2.0 * u(rng);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) dist[i * k + j] = std::abs(pos[i] - pos[j]);
  for (auto& m : marks) m = u(rng) - 0.5;
  for (auto& x : w) x = max_weight * (0.05 + 0.95 * u(rng));
  return FiniteMmmSpace(mark_dim, std::move(dist), std::move(marks), std::move(w));
}

EmpiricalLaw random_law(Rng& rng, double scale, std::size_t max_spaces) {
  std::uniform_int_distribution<std::size_t> count(1, max_spaces);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<SpaceHandle> xs;
  std::vector<double> w;
  const std::size_t k = count(rng);
  for (std::size_t i = 0; i < k; ++i) {
    xs.push_back(share(random_space(rng, 3, 0, 1.2)));
    w.push_back(u(rng) / static_cast<double>(k));
  }
  return EmpiricalLaw(scale, std::move(xs), std::move(w));
}

int cmd_verify(Run& run) {
  const json& local = section(run.cfg, "verify_bounds");
  const std::uint64_t seed = run.seed();
  const std::size_t lemma_cases = opt(local, "lemma_cases", std::size_t{200});
  const std::size_t cutoff_cases = opt(local, "cutoff_cases", std::size_t{200});
  const double tol = 1e-9;
  LawDistanceOptions o = distance_options(run.cfg, local, run.threads);
  ConvergenceReport r;
  r.title = "verify_bounds";

  Table& lt = r.table("lemma", {"case", "x", "eps", "prohorov", "lhs", "rhs", "holds"});
  std::size_t lemma_bad = 0;
  Rng rng = make_rng(seed, 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double scales[] = {1.0, 2.0, 5.0};
  for (std::size_t c = 0; c < lemma_cases; ++c) {
    const double a = scales[c % 3];
    const EmpiricalLaw p = random_law(rng, a, 3), q = random_law(rng, a, 3);
    LawDistanceContext ctx(o);
    ctx.add(p);
    ctx.add(q);
    const double d = ctx.law_prohorov(p, q);
    const double eps = d + 1e-6 + 0.5 * u(rng);
    const double x = eps + 1e-6 + 2.0 * u(rng);
    const LemmaBound b = lemma_bound_check(p, q, x, eps, ctx);
    lemma_bad += b.holds ? 0 : 1;
    lt.add({c, x, eps, b.prohorov, b.lhs, b.rhs, b.holds});
  }

  Table& ct = r.table("cutoff", {"case", "atoms", "kept", "gp_upper", "mass_gap", "holds"});
  std::size_t cutoff_bad = 0;
  Rng rng2 = make_rng(seed, 2);
  const GlueSearchConfig gp = search_config(run.cfg);
  for (std::size_t c = 0; c < cutoff_cases; ++c) {
    const FiniteMmmSpace x = random_space(rng2, 6, c % 2, 1.0);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (u(rng2) < 0.6) keep.push_back(i);
    const FiniteMmmSpace y = restrict(x, keep);
    const double up = gp_upper(y, x, gp);
    const double gap = x.mass() - y.mass();
    const bool ok = up <= gap + tol;
    cutoff_bad += ok ? 0 : 1;
    ct.add({c, x.size(), keep.size(), up, gap, ok});
  }
  r.scalars["lemma_violations"] = static_cast<double>(lemma_bad);
  r.scalars["cutoff_violations"] = static_cast<double>(cutoff_bad);
  r.flag("lemma_bound_holds", lemma_bad == 0);
  r.flag("cutoff_bound_holds", cutoff_bad == 0);
  run.emit(r, "verify_bounds");
  if (lemma_bad + cutoff_bad > 0) {
    std::cerr << "verify-bounds: " << lemma_bad << " lemma and " << cutoff_bad
              << " cutoff violations\n";
    return 1;
  }
  return 0;
}

void write_manifest(Run& run) {
  json cfg = run.cfg;
  cfg.erase("threads");
  cfg.erase("out");
  const std::string canonical = cfg.dump();
  json m = {{"command", run.command},
            {"config", cfg},
            {"config_hash", hex(fnv1a(canonical))},
            {"seed", cfg.contains("seed") ? cfg.at("seed") : json(nullptr)},
            {"outputs", run.files}};
  std::ofstream(run.out / "manifest.json", std::ios::binary) << m.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and convergence diagnostics for laws of marked metric measure spaces"};
  app.footer(
      "Settings come from the JSON file given by --config; --seed, --threads, --out,\n"
      "--format and --svg override the matching config fields. Built-in defaults apply\n"
      "last. Exit codes: 2 config error, 3 budget exceeded, 1 failed bound check.");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  std::optional<std::string> format;
  bool svg = false;
  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--seed", seed, "master seed (required for stochastic commands)");
  app.add_option("--threads", threads, "worker threads; outputs do not depend on it");
  app.add_option("--out", out, "output directory");
  app.add_option("--format", format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));
  app.add_flag("--svg", svg, "also write SVG line charts");

  const char* names[] = {"simulate", "moments", "distance", "diagnose", "approx", "verify-bounds"};
  const char* help[] = {"simulate Galton-Watson genealogies and write law files",
                        "method of moments diagnostics", "pairwise space and law distances",
                        "restriction, survival and pushforward diagnostics",
                        "approximation harness with cutoffs", "randomized checks of distance bounds"};
  for (int i = 0; i < 6; ++i) app.add_subcommand(names[i], help[i]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  Run run;
  run.command = app.get_subcommands().front()->get_name();
  fs::path base = fs::current_path();
  try {
    if (!config_path.empty()) {
      run.cfg = read_json(config_path);
      base = fs::absolute(config_path).parent_path();
    } else {
      run.cfg = json::object();
    }
    if (!run.cfg.is_object()) throw ConfigError("config must be a JSON object");
    if (seed) run.cfg["seed"] = *seed;
    if (threads) run.cfg["threads"] = *threads;
    if (out) run.cfg["out"] = *out;
    if (format) run.cfg["format"] = *format;
    if (svg) run.cfg["svg"] = true;
    run.threads = std::max(1u, opt(run.cfg, "threads", 1u));
    run.out = opt(run.cfg, "out", std::string("out"));
    run.format = parse_format(opt(run.cfg, "format", std::string("both")));
    run.svg = opt(run.cfg, "svg", false);
    fs::create_directories(run.out);

    int rc = 0;
    if (run.command == "simulate") rc = cmd_simulate(run);
    else if (run.command == "moments") rc = cmd_moments(run);
    else if (run.command == "distance") rc = cmd_distance(run, base);
    else if (run.command == "diagnose") rc = cmd_diagnose(run);
    else if (run.command == "approx") rc = cmd_approx(run);
    else rc = cmd_verify(run);
    write_manifest(run);
    return rc;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const FormatError& e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const BudgetExceeded& e) {
    std::cerr << e.what() << "\n";
    return kBudgetError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
