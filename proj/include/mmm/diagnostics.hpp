#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mmm/genealogy.hpp"
#include "mmm/law.hpp"
#include "mmm/report.hpp"

namespace mmm {

struct RestrictionConfig {
  LawDistanceOptions distance;
  /// Skip law_prohorov gaps and report restricted masses only.
  bool masses_only = false;
  /// Largest Cauchy gap still read as "converged".
  double gap_tolerance = 0.05;
  /// Half width of the window used to look for atoms of the mass law.
  double atom_window = 0.01;
  /// Mass inside the window above which an eps is flagged as a likely atom.
  double atom_mass = 0.05;
};

/// Tables "restricted" (n, eps, mass, std_error, cauchy_gap), "total"
/// (n, mass, std_error, cauchy_gap) and "grid" (eps, window_mass, last_gap,
/// suspect_atom). Flags total_mass_converges, vague_gaps_small,
/// vague_but_not_weak.
ConvergenceReport restriction_convergence(const std::vector<EmpiricalLaw>& laws,
                                          const std::vector<double>& labels,
                                          const std::vector<double>& eps_grid,
                                          const RestrictionConfig& cfg = {});

struct SurvivalConfig {
  /// Floor of the tolerance schedule max(base_tolerance, 3 std_error).
  double base_tolerance = 0.1;
  /// Known limit tail t -> M(|X| >= t); estimated from the last law if empty.
  std::function<double(double)> limit_tail;
  /// Known M(|X| > 0); defaults to the limit tail at the finest eta.
  std::optional<double> limit_tail0;
};

struct SurvivalResult {
  /// eps_n per law (NaN where no eta has qualified yet).
  std::vector<double> eps;
  std::vector<double> ratio;
  ConvergenceReport report;
};

/// Extracts eps_n = eta_(k_n), k_n the largest index whose prefix of eta
/// values all match the limit tail within the tolerance, kept nondecreasing
/// in n. Throws DegenerateGrid when no eta ever qualifies or the limit tail
/// vanishes.
SurvivalResult survival_estimate(const std::vector<EmpiricalLaw>& laws,
                                 const std::vector<double>& labels, std::vector<double> eta_grid,
                                 const SurvivalConfig& cfg = {});

enum class PushforwardKind { TotalMass, DiameterCapped, MarkMeanNorm, Zero };

PushforwardKind parse_pushforward(const std::string& s);
std::string to_string(PushforwardKind g);

/// G(X); G(null) = 0. DiameterCapped is min(diameter, 1).
double pushforward_value(PushforwardKind g, const FiniteMmmSpace& x);

/// Optional perturbation G_n(X) = perturb(law index, G(X)).
using Perturbation = std::function<double(std::size_t, double)>;

/// Tables "tails" (n, t, tail, std_error, cauchy_gap) and "ks" (n, sup_gap),
/// with thresholds bounded away from 0. Flag tails_converge.
ConvergenceReport pushforward_diag(const std::vector<EmpiricalLaw>& laws,
                                   const std::vector<double>& labels, PushforwardKind g,
                                   const std::vector<double>& thresholds,
                                   const Perturbation& perturb = {}, double tolerance = 0.05);

/// Pushed-forward laws on (0, inf) as one-point spaces of mass G(X).
EmpiricalLaw pushforward_law(const EmpiricalLaw& law, PushforwardKind g,
                             const Perturbation& perturb = {}, std::size_t index = 0);

/// Replicates of X_n together with their approximations Y_(k,n), aligned by
/// survivor: y[k][i] approximates x[i] (null or empty means the null space).
struct CoupledLevel {
  double label = 0.0;
  double scale = 1.0;
  std::uint64_t replicates = 0;
  std::vector<SpaceHandle> x;
  std::vector<std::vector<SpaceHandle>> y;

  EmpiricalLaw x_law() const;
  EmpiricalLaw y_law(std::size_t k) const;
};

/// Y_(k,n) = cutoff_k(X_n) for every cutoff.
CoupledLevel coupled_cutoffs(const GenealogyEnsemble& ens, const std::vector<Cutoff>& cutoffs);

struct ApproxConfig {
  LawDistanceOptions distance;
  /// Condition (i) surrogate: vague distances between consecutive n per k.
  bool cauchy_gaps = true;
};

/// Tables "cauchy" (k, n, vague_gap), "condition_ii" (k, eps, n, value,
/// std_error), "condition_ii_sup" (k, eps, sup_n) and "diagonal" (k, vague_distance
/// between Y_(k, last n) and X_(last n)). k is the position in `k_labels`.
ConvergenceReport approximation_harness(const std::vector<CoupledLevel>& levels,
                                        const std::vector<double>& k_labels,
                                        const std::vector<double>& eps_list,
                                        const ApproxConfig& cfg = {});

}  // namespace mmm
