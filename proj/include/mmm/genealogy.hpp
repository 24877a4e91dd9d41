#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmm/law.hpp"
#include "mmm/random.hpp"
#include "mmm/space.hpp"

namespace mmm {

enum class OffspringFamily { GeometricHalf, Poisson1, BinaryHalf, Custom };

/// Offspring distribution of a Galton-Watson process.
class OffspringLaw {
 public:
  /// P(k) = 2^-(k+1): linear fractional, f(s) = 1 / (2 - s).
  static OffspringLaw geometric_half();
  static OffspringLaw poisson_1();
  /// 0 or 2 children with probability 1/2 each.
  static OffspringLaw binary_half();
  /// pmf on {0, ..., K}; throws InvalidSpace unless it is a probability vector.
  static OffspringLaw custom(std::vector<double> pmf);
  /// Accepts "geometric_half", "poisson_1", "binary_half".
  static OffspringLaw named(const std::string& name);

  OffspringFamily family() const noexcept { return family_; }
  std::string name() const;
  const std::vector<double>& pmf() const noexcept { return pmf_; }

  double mean() const noexcept { return f1_; }
  double variance() const noexcept { return f2_ + f1_ - f1_ * f1_; }
  /// Factorial moments f'(1), f''(1), f'''(1).
  double f1() const noexcept { return f1_; }
  double f2() const noexcept { return f2_; }
  double f3() const noexcept { return f3_; }

  /// Generating function f(s) on [0, 1].
  double pgf(double s) const;

  std::uint64_t sample(Rng& rng) const;
  /// Total offspring of `parents` independent individuals.
  std::uint64_t sample_sum(std::uint64_t parents, Rng& rng) const;

 private:
  OffspringLaw(OffspringFamily f, std::vector<double> pmf);

  OffspringFamily family_;
  std::vector<double> pmf_;
  double f1_ = 0.0, f2_ = 0.0, f3_ = 0.0;
};

/// One Galton-Watson tree from a single root, with branching random walk
/// positions. Generation g individuals are stored in planar order: children
/// follow the order of their parents.
struct GenealogySample {
  std::size_t horizon = 0;
  std::size_t mark_dim = 0;
  /// parent[g][i]: index in generation g-1 of individual i of generation g (g >= 1).
  std::vector<std::vector<std::uint32_t>> parent;
  /// positions[g][i * mark_dim + c].
  std::vector<std::vector<double>> positions;
  /// alive[g] for g = 0..horizon.
  std::vector<std::uint64_t> alive;

  std::uint64_t survivors() const { return alive.empty() ? 0 : alive.back(); }
};

GenealogySample simulate(const OffspringLaw& off, std::size_t n, std::size_t mark_dim, Rng& rng);
GenealogySample simulate(const OffspringLaw& off, std::size_t n, std::size_t mark_dim,
                         std::uint64_t seed);

/// NaN fields take the defaults 1/n, n and sqrt(n).
struct GenealogyScaling {
  double mass_per_individual = std::numeric_limits<double>::quiet_NaN();
  double distance_divisor = std::numeric_limits<double>::quiet_NaN();
  double mark_divisor = std::numeric_limits<double>::quiet_NaN();
};

/// Generation-n individuals as an ultrametric space: d(u, v) is the depth of
/// their most recent common ancestor below generation n.
FiniteMmmSpace to_mmm(const GenealogySample& sample, const GenealogyScaling& scaling = {});

struct GfMoments {
  double survival = 0.0;
  double mean = 0.0;
  double second = 0.0;
  double third = 0.0;
};

/// P(Z_n > 0) and E Z_n^j (j = 1, 2, 3) from the iterated generating function.
GfMoments gf_oracle(const OffspringLaw& off, std::size_t n);

struct Cutoff {
  enum class Kind { MassFloor, ReducedTree };
  Kind kind = Kind::MassFloor;
  /// theta for MassFloor, delta for ReducedTree.
  double param = 0.0;

  static Cutoff mass_floor(double theta) { return {Kind::MassFloor, theta}; }
  static Cutoff reduced_tree(double delta) { return {Kind::ReducedTree, delta}; }
};

/// Generation-n individuals kept by the cutoff (indices into to_mmm's atoms).
///   mass_floor(theta): all if Z_n >= theta n, else none.
///   reduced_tree(delta): those whose ancestor at generation floor(n (1 - delta))
///   has another descendant alive at n; delta = 0 keeps everyone.
std::vector<std::size_t> cutoff(const GenealogySample& sample, const Cutoff& c);

/// Z_n only, by iterating Z_{t+1} = sum of Z_t offspring counts. Returns the
/// population at each of the increasing `horizons`.
std::vector<std::uint64_t> sample_counts(const OffspringLaw& off,
                                         const std::vector<std::size_t>& horizons, Rng& rng);

struct EnsembleConfig {
  OffspringLaw off = OffspringLaw::geometric_half();
  std::size_t n = 100;
  std::size_t mark_dim = 0;
  std::uint64_t replicates = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  GenealogyScaling scaling;
  /// Law scale c_n; NaN means n.
  double law_scale = std::numeric_limits<double>::quiet_NaN();
};

struct GenealogyEnsemble {
  std::size_t n = 0;
  EmpiricalLaw law;
  /// Replicate index of each law atom.
  std::vector<std::uint64_t> replicate;
  /// Surviving samples, aligned with the law atoms.
  std::vector<GenealogySample> samples;
};

/// R replicates (replicate r uses stream r of the seed); survivors become
/// the atoms of c_n * L(X_n). Keeps the trees when `keep_samples`.
GenealogyEnsemble simulate_ensemble(const EnsembleConfig& cfg, bool keep_samples = false);

/// c_n * L(X_n) for the genealogies of one ensemble restricted by a cutoff.
EmpiricalLaw cutoff_law(const GenealogyEnsemble& ens, const Cutoff& c);

/// Laws of one-point spaces of mass Z_n / n at every horizon, from coupled
/// population chains. Blocks of 4096 consecutive replicates share one RNG
/// stream, so the result does not depend on `threads`. Scale at horizon n is n.
std::vector<EmpiricalLaw> mass_skeleton_laws(const OffspringLaw& off,
                                             const std::vector<std::size_t>& horizons,
                                             std::uint64_t replicates, std::uint64_t seed,
                                             unsigned threads = 1);

/// One JSON line per surviving replicate: {"n", "seed", "family", "replicate", "space"}.
void write_jsonl(std::ostream& out, const GenealogyEnsemble& ens, const EnsembleConfig& cfg);

}  // namespace mmm
