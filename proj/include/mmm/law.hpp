#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "mmm/gromov_prohorov.hpp"
#include "mmm/space.hpp"

namespace mmm {

/// The finite measure a * sum_i w_i delta_{X_i} on the non-null spaces.
///
/// Laws built from R i.i.d. replicates keep only the non-null ones (with
/// weight 1/R each) and remember R, so that replicate-level standard errors
/// can account for the dropped zero-valued replicates.
class EmpiricalLaw {
 public:
  /// The null measure.
  EmpiricalLaw() = default;

  /// Empty `weights` means 1/N each (N = spaces.size(), counted before null
  /// spaces are dropped). Throws InvalidSpace on negative or mismatched weights.
  EmpiricalLaw(double scale, std::vector<SpaceHandle> spaces, std::vector<double> weights = {},
               std::uint64_t replicates = 0);

  /// Law of R replicates of which `survivors` are the non-null ones.
  static EmpiricalLaw from_replicates(double scale, std::vector<SpaceHandle> survivors,
                                      std::uint64_t replicates);

  double scale() const noexcept { return scale_; }
  std::size_t size() const noexcept { return spaces_.size(); }
  bool empty() const noexcept { return spaces_.empty(); }
  const FiniteMmmSpace& space(std::size_t i) const { return *spaces_[i]; }
  const SpaceHandle& handle(std::size_t i) const { return spaces_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  /// Mass a * w_i of atom i.
  double atom_mass(std::size_t i) const { return scale_ * weights_[i]; }
  std::uint64_t replicates() const noexcept { return replicates_; }

  /// a * sum of weights.
  double total_mass() const noexcept;

 private:
  double scale_ = 1.0;
  std::vector<SpaceHandle> spaces_;
  std::vector<double> weights_;
  std::uint64_t replicates_ = 0;
};

/// Keeps the atoms with total mass >= eps. Throws PreconditionViolated unless eps > 0.
EmpiricalLaw restrict_eps(const EmpiricalLaw& law, double eps);

using Functional = std::function<double(const FiniteMmmSpace&)>;

double integrate(const EmpiricalLaw& law, const Functional& f);

struct LawEstimate {
  double value = 0.0;
  /// Replicate-level standard error; 0 for laws without a replicate count.
  double std_error = 0.0;
};

LawEstimate integrate_with_error(const EmpiricalLaw& law, const Functional& f);

/// Standard error of a * sum_i w_i v_i viewed as a mean over the law's
/// replicates (zero for the missing ones).
double replicate_std_error(const EmpiricalLaw& law, const std::vector<double>& values);

struct LawDistanceOptions {
  GlueSearchConfig gp;
  /// Pairs whose mass gap is at least this are never searched and count as
  /// infinitely far apart. Results below the cap are unaffected.
  double pair_cap = std::numeric_limits<double>::infinity();
  /// Replace pair distances by shortest-path distances (at most 256 nodes).
  bool metric_closure = true;
  unsigned threads = 1;
};

/// Shared pairwise gp_upper distances between the atoms of several laws.
/// Identical spaces become one node at distance 0.
///
/// With metric closure (up to 256 nodes) every pair is searched on the first
/// query after new atoms arrive and replaced by its shortest-path distance;
/// register every law first if all answers must come from the same metric.
/// Otherwise pairs are searched on demand, only when their mass gap is below
/// what the query can still use, and each pair value is query independent.
class LawDistanceContext {
 public:
  explicit LawDistanceContext(LawDistanceOptions opts = {});

  /// Registers every atom of the law; returns its node per atom.
  std::vector<std::size_t> add(const EmpiricalLaw& law);

  double law_prohorov(const EmpiricalLaw& a, const EmpiricalLaw& b);
  double vague_distance(const EmpiricalLaw& a, const EmpiricalLaw& b);

  std::size_t node_count() const noexcept { return nodes_.size(); }
  /// Current distance between two nodes (+inf if never searched).
  double node_distance(std::size_t u, std::size_t v);
  const LawDistanceOptions& options() const noexcept { return opts_; }

 private:
  struct Masses {
    std::vector<std::size_t> nodes;
    std::vector<double> p, q;
  };

  std::size_t node_of(const SpaceHandle& h);
  Masses collect(const EmpiricalLaw& a, const EmpiricalLaw& b, double min_mass);
  bool closure_mode() const;
  void grow();
  /// Searches missing pairs among `among` whose mass gap is below the cap.
  void search(const std::vector<std::size_t>& among, double cap);
  /// Pair distances among `among` (k x k) from cheap searches where no full
  /// search has run yet; +inf where the mass gap reaches the cap.
  std::vector<double> quick_bounds(const std::vector<std::size_t>& among, double cap);
  void prepare();
  double entry(std::size_t u, std::size_t v) const;
  double prohorov_of(const Masses& m, double cap);

  LawDistanceOptions opts_;
  std::vector<SpaceHandle> nodes_;
  std::vector<SpaceHandle> retained_;
  std::unordered_map<const FiniteMmmSpace*, std::size_t> by_ptr_;
  std::unordered_multimap<std::uint64_t, std::size_t> by_hash_;
  std::vector<double> raw_;      // row-major, NaN = not yet searched
  std::vector<double> closed_;   // after metric closure
  std::unordered_map<std::uint64_t, double> quick_;  // (u << 32) | v, u < v
  std::size_t stride_ = 0;
  std::size_t prepared_nodes_ = 0;
};

/// Prohorov distance between two laws on the common space of their atoms,
/// with gp_upper distances: an upper-bound estimator of D_Pr.
double law_prohorov(const EmpiricalLaw& a, const EmpiricalLaw& b,
                    const LawDistanceOptions& opts = {});

/// integral_0^inf e^-u (1 ^ D_Pr(a^(u), b^(u))) du, summed exactly over the
/// breakpoints given by the atom masses of both laws.
double vague_distance(const EmpiricalLaw& a, const EmpiricalLaw& b,
                      const LawDistanceOptions& opts = {});

struct LemmaBound {
  double prohorov = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// Checks D*(X, X') <= x + eps (1 + a P(|X| >= x - eps) + a P(|X'| >= x - eps)).
/// Throws PreconditionViolated unless both scales agree and x > eps > D_Pr.
LemmaBound lemma_bound_check(const EmpiricalLaw& x_law, const EmpiricalLaw& y_law, double x,
                             double eps, LawDistanceContext& ctx);
LemmaBound lemma_bound_check(const EmpiricalLaw& x_law, const EmpiricalLaw& y_law, double x,
                             double eps, const LawDistanceOptions& opts = {});

// {"scale": a, "replicates": R, "weights": [..], "spaces": [space | {"file": path}]}
nlohmann::json to_json(const EmpiricalLaw& law);
/// Relative "file" references are resolved against `base`.
EmpiricalLaw law_from_json(const nlohmann::json& j, const std::filesystem::path& base = {});

}  // namespace mmm
