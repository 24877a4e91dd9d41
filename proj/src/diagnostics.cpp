#include "mmm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "mmm/error.hpp"

namespace mmm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

LawEstimate mass_above(const EmpiricalLaw& law, double t) {
  return integrate_with_error(law, [t](const FiniteMmmSpace& x) { return x.mass() >= t ? 1.0 : 0.0; });
}

LawEstimate total(const EmpiricalLaw& law) {
  return integrate_with_error(law, [](const FiniteMmmSpace&) { return 1.0; });
}

void check_labels(std::size_t laws, std::size_t labels) {
  if (labels != laws) throw PreconditionViolated("one label per law expected");
}

}  // namespace

ConvergenceReport restriction_convergence(const std::vector<EmpiricalLaw>& laws,
                                          const std::vector<double>& labels,
                                          const std::vector<double>& eps_grid,
                                          const RestrictionConfig& cfg) {
  if (laws.size() < 2) throw PreconditionViolated("restriction_convergence needs at least two laws");
  check_labels(laws.size(), labels.size());
  std::vector<double> grid = eps_grid;
  std::sort(grid.begin(), grid.end());
  if (grid.empty() || !(grid.front() > 0.0)) throw PreconditionViolated("eps grid must be positive");

  ConvergenceReport r;
  r.title = "restriction_convergence";
  const std::size_t L = laws.size(), E = grid.size();

  std::vector<std::vector<EmpiricalLaw>> restricted(E);
  for (std::size_t e = 0; e < E; ++e)
    for (const auto& law : laws) restricted[e].push_back(restrict_eps(law, grid[e]));

  std::vector<double> gaps(E * L, kNaN);
  if (!cfg.masses_only) {
    LawDistanceContext ctx(cfg.distance);
    for (const auto& law : laws) ctx.add(law);
    for (std::size_t e = 0; e < E; ++e)
      for (std::size_t i = 1; i < L; ++i)
        gaps[e * L + i] = ctx.law_prohorov(restricted[e][i - 1], restricted[e][i]);
  }

  Table& rt = r.table("restricted", {"n", "eps", "mass", "std_error", "cauchy_gap"});
  std::vector<double> se(E * L);
  for (std::size_t e = 0; e < E; ++e)
    for (std::size_t i = 0; i < L; ++i) {
      const LawEstimate m = total(restricted[e][i]);
      se[e * L + i] = m.std_error;
      rt.add({labels[i], grid[e], m.value, m.std_error, gaps[e * L + i]});
    }

  Table& tt = r.table("total", {"n", "mass", "std_error", "cauchy_gap"});
  std::vector<double> totals(L), total_se(L);
  for (std::size_t i = 0; i < L; ++i) {
    const LawEstimate m = total(laws[i]);
    totals[i] = m.value;
    total_se[i] = m.std_error;
    tt.add({labels[i], m.value, m.std_error, i == 0 ? kNaN : std::abs(m.value - totals[i - 1])});
  }

  // Atoms of the limit mass law show up as mass concentrated near eps in the
  // last law, or as restricted gaps that do not shrink.
  const EmpiricalLaw& last = laws.back();
  Table& gt = r.table("grid", {"eps", "window_mass", "last_gap", "suspect_atom"});
  bool gaps_small = true;
  for (std::size_t e = 0; e < E; ++e) {
    const double lo = grid[e] - cfg.atom_window, hi = grid[e] + cfg.atom_window;
    const double window = integrate(last, [lo, hi](const FiniteMmmSpace& x) {
      return x.mass() >= lo && x.mass() <= hi ? 1.0 : 0.0;
    });
    const double last_gap = gaps[e * L + L - 1];
    const double first_gap = gaps[e * L + 1];
    // Gaps within three combined standard errors are read as sampling noise.
    const double tol = std::max(cfg.gap_tolerance,
                                3.0 * std::hypot(se[e * L + L - 1], se[e * L + L - 2]));
    bool stuck = false;
    if (!cfg.masses_only) {
      stuck = last_gap > tol && last_gap >= first_gap;
      gaps_small = gaps_small && last_gap <= tol;
    }
    gt.add({grid[e], window, last_gap, window >= cfg.atom_mass || stuck});
  }

  const bool total_converges =
      std::abs(totals[L - 1] - totals[L - 2]) <=
      std::max(cfg.gap_tolerance, 3.0 * std::hypot(total_se[L - 1], total_se[L - 2]));
  const double finest = grid.front();
  const LawEstimate escaped_est = integrate_with_error(
      last, [finest](const FiniteMmmSpace& x) { return x.mass() < finest ? 1.0 : 0.0; });
  const double escaped = escaped_est.value;
  const bool not_weak = escaped > std::max(cfg.gap_tolerance, 3.0 * escaped_est.std_error);
  r.scalars["escaped_mass"] = escaped;
  r.scalars["finest_eps"] = finest;
  r.flag("total_mass_converges", total_converges, "last total mass gap <= max(gap_tolerance, 3 combined std_error)");
  if (!cfg.masses_only)
    r.flag("vague_gaps_small", gaps_small, "last restricted gap <= max(gap_tolerance, 3 combined std_error) for every eps");
  r.flag("vague_but_not_weak", not_weak,
         "mass of the last law below the finest eps exceeds max(gap_tolerance, 3 std_error)");
  r.flag("weak_upgrade", total_converges && !not_weak && (cfg.masses_only || gaps_small));
  return r;
}

SurvivalResult survival_estimate(const std::vector<EmpiricalLaw>& laws,
                                 const std::vector<double>& labels, std::vector<double> eta_grid,
                                 const SurvivalConfig& cfg) {
  if (laws.empty()) throw PreconditionViolated("survival_estimate needs at least one law");
  check_labels(laws.size(), labels.size());
  std::sort(eta_grid.begin(), eta_grid.end(), std::greater<>());
  if (eta_grid.empty() || !(eta_grid.back() > 0.0))
    throw DegenerateGrid("eta grid must be nonempty and positive");
  const std::size_t L = laws.size(), K = eta_grid.size();

  std::vector<double> limit(K);
  for (std::size_t k = 0; k < K; ++k)
    limit[k] = cfg.limit_tail ? cfg.limit_tail(eta_grid[k]) : mass_above(laws.back(), eta_grid[k]).value;
  const double tail0 = cfg.limit_tail0 ? *cfg.limit_tail0 : limit[K - 1];
  if (!(tail0 > 0.0)) throw DegenerateGrid("limit tail at 0+ vanishes");

  SurvivalResult out;
  ConvergenceReport& r = out.report;
  r.title = "survival_estimate";
  r.notes.push_back("tolerance schedule: max(base_tolerance, 3 std_error)");
  r.scalars["base_tolerance"] = cfg.base_tolerance;
  r.scalars["limit_tail0"] = tail0;

  Table& tails = r.table("tails", {"n", "eta", "tail", "std_error", "limit", "tolerance", "qualifies"});
  Table& surv = r.table("survival", {"n", "k", "eps", "tail", "ratio"});
  std::size_t k_prev = 0;
  bool any = false;
  for (std::size_t i = 0; i < L; ++i) {
    std::size_t k_n = 0;
    bool prefix = true;
    std::vector<double> tail(K);
    for (std::size_t k = 0; k < K; ++k) {
      const LawEstimate t = mass_above(laws[i], eta_grid[k]);
      tail[k] = t.value;
      const double tol = std::max(cfg.base_tolerance, 3.0 * t.std_error);
      const bool ok = std::abs(t.value - limit[k]) <= tol;
      prefix = prefix && ok;
      if (prefix) k_n = k + 1;
      tails.add({labels[i], eta_grid[k], t.value, t.std_error, limit[k], tol, ok});
    }
    k_n = std::max(k_n, k_prev);
    k_prev = k_n;
    if (k_n == 0) {
      out.eps.push_back(kNaN);
      out.ratio.push_back(kNaN);
      surv.add({labels[i], 0, kNaN, kNaN, kNaN});
      continue;
    }
    any = true;
    const double eps = eta_grid[k_n - 1];
    const double t = tail[k_n - 1];
    out.eps.push_back(eps);
    out.ratio.push_back(t / tail0);
    surv.add({labels[i], k_n, eps, t, t / tail0});
  }
  if (!any) throw DegenerateGrid("no eta matches the limit tail");
  r.scalars["final_ratio"] = out.ratio.back();
  return out;
}

PushforwardKind parse_pushforward(const std::string& s) {
  if (s == "total_mass") return PushforwardKind::TotalMass;
  if (s == "diameter_capped") return PushforwardKind::DiameterCapped;
  if (s == "mark_mean_norm") return PushforwardKind::MarkMeanNorm;
  if (s == "zero") return PushforwardKind::Zero;
  throw FormatError("unknown pushforward functional '" + s + "'");
}

std::string to_string(PushforwardKind g) {
  switch (g) {
    case PushforwardKind::TotalMass: return "total_mass";
    case PushforwardKind::DiameterCapped: return "diameter_capped";
    case PushforwardKind::MarkMeanNorm: return "mark_mean_norm";
    case PushforwardKind::Zero: return "zero";
  }
  return "zero";
}

double pushforward_value(PushforwardKind g, const FiniteMmmSpace& x) {
  if (!(x.mass() > 0.0)) return 0.0;
  switch (g) {
    case PushforwardKind::TotalMass: return x.mass();
    case PushforwardKind::DiameterCapped: return std::min(diameter(x), 1.0);
    case PushforwardKind::MarkMeanNorm: {
      double s = 0.0;
      for (double v : mark_mean(x)) s += v * v;
      return std::sqrt(s);
    }
    case PushforwardKind::Zero: return 0.0;
  }
  return 0.0;
}

EmpiricalLaw pushforward_law(const EmpiricalLaw& law, PushforwardKind g,
                             const Perturbation& perturb, std::size_t index) {
  std::vector<SpaceHandle> pts;
  std::vector<double> w;
  for (std::size_t i = 0; i < law.size(); ++i) {
    double v = pushforward_value(g, law.space(i));
    if (perturb) v = perturb(index, v);
    if (!(v > 0.0)) continue;
    pts.push_back(share(FiniteMmmSpace::unmarked({0.0}, {v})));
    w.push_back(law.weight(i));
  }
  return EmpiricalLaw(law.scale(), std::move(pts), std::move(w), law.replicates());
}

ConvergenceReport pushforward_diag(const std::vector<EmpiricalLaw>& laws,
                                   const std::vector<double>& labels, PushforwardKind g,
                                   const std::vector<double>& thresholds,
                                   const Perturbation& perturb, double tolerance) {
  check_labels(laws.size(), labels.size());
  ConvergenceReport r;
  r.title = "pushforward_diag";
  r.notes.push_back("functional: " + to_string(g));
  r.notes.push_back("target (0, inf] with metric |1/x - 1/y|; tails at thresholds > 0 only");
  r.notes.push_back("checks the conclusion for this functional only, not the hypothesis over all convergent sequences");

  std::vector<double> ts;
  for (double t : thresholds)
    if (t > 0.0) ts.push_back(t);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

  const std::size_t L = laws.size(), T = ts.size();
  std::vector<EmpiricalLaw> pushed(L);
  for (std::size_t i = 0; i < L; ++i) pushed[i] = pushforward_law(laws[i], g, perturb, i);

  Table& tt = r.table("tails", {"n", "t", "tail", "std_error", "cauchy_gap"});
  Table& ks = r.table("ks", {"n", "sup_gap"});
  std::vector<double> prev(T, kNaN), cur(T);
  double last_sup = kNaN;
  for (std::size_t i = 0; i < L; ++i) {
    double sup = i == 0 ? kNaN : 0.0;
    for (std::size_t j = 0; j < T; ++j) {
      const LawEstimate e = mass_above(pushed[i], ts[j]);
      cur[j] = e.value;
      const double gap = i == 0 ? kNaN : std::abs(e.value - prev[j]);
      if (i > 0) sup = std::max(sup, gap);
      tt.add({labels[i], ts[j], e.value, e.std_error, gap});
    }
    ks.add({labels[i], sup});
    last_sup = sup;
    prev = cur;
  }
  r.scalars["atoms_last"] = L ? static_cast<double>(pushed.back().size()) : 0.0;
  r.flag("tails_converge", L < 2 || last_sup <= tolerance, "last KS-style tail gap <= tolerance");
  return r;
}

namespace {

EmpiricalLaw level_law(const CoupledLevel& lv, const std::vector<SpaceHandle>& spaces) {
  std::vector<SpaceHandle> kept;
  for (const auto& h : spaces)
    if (h && h->mass() > 0.0) kept.push_back(h);
  const std::uint64_t R = lv.replicates ? lv.replicates : spaces.size();
  return EmpiricalLaw(lv.scale, std::move(kept), {}, R);
}

}  // namespace

EmpiricalLaw CoupledLevel::x_law() const { return level_law(*this, x); }

EmpiricalLaw CoupledLevel::y_law(std::size_t k) const { return level_law(*this, y.at(k)); }

CoupledLevel coupled_cutoffs(const GenealogyEnsemble& ens, const std::vector<Cutoff>& cutoffs) {
  const EmpiricalLaw& law = ens.law;
  CoupledLevel lv;
  lv.label = static_cast<double>(ens.n);
  lv.scale = law.scale();
  lv.replicates = law.replicates();
  lv.x.assign(law.size(), nullptr);
  for (std::size_t i = 0; i < law.size(); ++i) lv.x[i] = law.handle(i);
  const bool trees = !ens.samples.empty();
  for (const Cutoff& c : cutoffs) {
    if (!trees && c.kind == Cutoff::Kind::ReducedTree && c.param > 0.0)
      throw PreconditionViolated("reduced_tree cutoffs need the simulated trees");
    std::vector<SpaceHandle> ys(law.size());
    for (std::size_t i = 0; i < law.size(); ++i) {
      const FiniteMmmSpace& x = law.space(i);
      std::vector<std::size_t> keep;
      if (trees) {
        keep = cutoff(ens.samples[i], c);
      } else if (c.kind == Cutoff::Kind::ReducedTree ||
                 static_cast<double>(x.size()) >= c.param * static_cast<double>(ens.n)) {
        keep.resize(x.size());
        for (std::size_t k = 0; k < keep.size(); ++k) keep[k] = k;
      }
      if (keep.size() == x.size())
        ys[i] = law.handle(i);
      else if (!keep.empty())
        ys[i] = share(restrict(x, keep));
    }
    lv.y.push_back(std::move(ys));
  }
  return lv;
}

ConvergenceReport approximation_harness(const std::vector<CoupledLevel>& levels,
                                        const std::vector<double>& k_labels,
                                        const std::vector<double>& eps_list,
                                        const ApproxConfig& cfg) {
  if (levels.empty()) throw PreconditionViolated("approximation_harness needs at least one level");
  const std::size_t L = levels.size(), K = k_labels.size();
  for (const auto& lv : levels) {
    if (lv.y.size() != K) throw PreconditionViolated("one approximation per k expected");
    for (const auto& ys : lv.y)
      if (ys.size() != lv.x.size()) throw PreconditionViolated("approximations must align with X");
  }

  ConvergenceReport r;
  r.title = "approximation_harness";
  r.notes.push_back("condition (ii) uses the cutoff bound |X| - |Y|");

  std::vector<EmpiricalLaw> xl(L);
  std::vector<std::vector<EmpiricalLaw>> yl(L, std::vector<EmpiricalLaw>(K));
  for (std::size_t i = 0; i < L; ++i) {
    xl[i] = levels[i].x_law();
    for (std::size_t k = 0; k < K; ++k) yl[i][k] = levels[i].y_law(k);
  }

  Table& c2 = r.table("condition_ii", {"k", "eps", "n", "value", "std_error"});
  Table& sup = r.table("condition_ii_sup", {"k", "eps", "sup_n"});
  for (std::size_t k = 0; k < K; ++k)
    for (double eps : eps_list) {
      double worst = 0.0;
      for (std::size_t i = 0; i < L; ++i) {
        const CoupledLevel& lv = levels[i];
        std::vector<double> ind;
        for (std::size_t a = 0; a < lv.x.size(); ++a) {
          if (!lv.x[a] || !(lv.x[a]->mass() > 0.0)) continue;
          const double ym = lv.y[k][a] ? lv.y[k][a]->mass() : 0.0;
          ind.push_back(lv.x[a]->mass() - ym >= eps ? 1.0 : 0.0);
        }
        double v = 0.0;
        for (std::size_t a = 0; a < ind.size(); ++a) v += xl[i].atom_mass(a) * ind[a];
        const double se = replicate_std_error(xl[i], ind);
        worst = std::max(worst, v);
        c2.add({k_labels[k], eps, lv.label, v, se});
      }
      sup.add({k_labels[k], eps, worst});
    }

  LawDistanceContext ctx(cfg.distance);
  for (std::size_t i = 0; i < L; ++i) {
    ctx.add(xl[i]);
    for (const auto& y : yl[i]) ctx.add(y);
  }
  if (cfg.cauchy_gaps) {
    Table& ca = r.table("cauchy", {"k", "n", "vague_gap"});
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t i = 1; i < L; ++i)
        ca.add({k_labels[k], levels[i].label, ctx.vague_distance(yl[i - 1][k], yl[i][k])});
  }
  Table& dg = r.table("diagonal", {"k", "vague_distance"});
  for (std::size_t k = 0; k < K; ++k) {
    const double d = ctx.vague_distance(yl[L - 1][k], xl[L - 1]);
    dg.add({k_labels[k], d});
    if (k + 1 == K) r.scalars["final_vague_distance"] = d;
  }
  return r;
}

}  // namespace mmm
