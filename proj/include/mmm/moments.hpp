#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmm/law.hpp"
#include "mmm/monomial.hpp"
#include "mmm/report.hpp"
#include "mmm/test_function.hpp"

namespace mmm {

struct MomentConfig {
  /// Atoms whose support^k exceeds this are estimated by Monte Carlo.
  std::uint64_t exact_budget = 1'000'000;
  /// 0 disables Monte Carlo: atoms over budget throw BudgetExceeded.
  std::uint64_t mc_samples = 4096;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
  /// True when every atom was evaluated exactly.
  bool exact = true;
};

/// M_k[phi] = law[Phi]. k = 0 gives the total mass of the law; an empty
/// `phi` means phi = 1. A phi of smaller arity is read as a function of the
/// first atoms of a k-tuple. Throws PreconditionViolated if its arity exceeds k.
MomentEstimate estimate_moment(const EmpiricalLaw& law, std::size_t k,
                               const std::optional<TestFunction>& phi = std::nullopt,
                               const MomentConfig& cfg = {});

/// law[Phi] for a monomial (including its mass power).
MomentEstimate estimate_moment(const EmpiricalLaw& law, const Monomial& mono,
                               const MomentConfig& cfg = {});

struct MomentPoint {
  std::vector<double> dist;   // k x k
  std::vector<double> marks;  // k x mark_dim
  double weight = 0.0;
};

/// Weighted sample of (distance matrix, mark tuple) points representing M_k.
class EmpiricalMomentMeasure {
 public:
  EmpiricalMomentMeasure(std::size_t order, std::size_t mark_dim, double scale)
      : order_(order), mark_dim_(mark_dim), scale_(scale) {}

  std::size_t order() const noexcept { return order_; }
  std::size_t mark_dim() const noexcept { return mark_dim_; }
  double scale() const noexcept { return scale_; }
  const std::vector<MomentPoint>& points() const noexcept { return points_; }

  /// Adds weight to the point, merging with an identical existing point.
  void add(std::vector<double> dist, std::vector<double> marks, double weight);

  double total_mass() const;
  /// Sum of weight * phi(point); phi may only use atoms below the order.
  double integrate(const TestFunction& phi) const;
  /// Projection on E^k: every distance matrix replaced by zeros.
  EmpiricalMomentMeasure mark_projection() const;

 private:
  std::size_t order_;
  std::size_t mark_dim_;
  double scale_;
  std::vector<MomentPoint> points_;
  std::map<std::vector<double>, std::size_t> index_;  // dist ++ marks -> point
};

/// Draws `tuples_per_atom` k-tuples from each normalized atom; each carries
/// a * w * |X|^k / tuples_per_atom. Exact atom types are merged. k = 0 gives
/// a single point of weight law.total_mass().
EmpiricalMomentMeasure sample_moment_measure(const EmpiricalLaw& law, std::size_t k,
                                             std::uint64_t tuples_per_atom, std::uint64_t seed);

struct CarlemanReport {
  std::vector<double> terms;         // m_k^(-1/2k), k = 1..K
  std::vector<double> partial_sums;  // S_K
  /// log m_k ~ c0 + c1 k log k + c2 k^2 (least squares; NaN if underdetermined).
  double fit_const = 0.0;
  double fit_klogk = 0.0;
  double fit_ksq = 0.0;
  /// Slope of log term against log k over the upper half of k.
  double tail_slope = 0.0;
  /// Terms decay no faster than k^-1.25: the series looks divergent.
  bool divergent_like = false;
};

/// From m_1..m_K. Throws NonPositiveMoment if some m_k <= 0.
CarlemanReport carleman_report(const std::vector<double>& m);
/// Same from log m_1..log m_K, for moments beyond double range.
CarlemanReport carleman_report_log(const std::vector<double>& log_m);

struct NamedPhi {
  std::string name;
  /// Empty means phi = 1.
  std::optional<TestFunction> phi;
};

/// exp(-lambda d_ij) over all pairs times exp(-lambda e_ic^2) over all marks,
/// lambda in {0.5, 1, 2}, plus phi = 1.
std::vector<NamedPhi> default_phi_family(std::size_t k, std::size_t mark_dim);

struct MomentsDiagConfig {
  std::size_t k_max = 3;
  MomentConfig moment;
  /// Renormalized trajectory uses g(x) = clamp((x - level/2) / (level/2), 0, 1).
  double renorm_level = 0.5;
  /// When empty, default_phi_family is used for each k.
  std::vector<std::vector<NamedPhi>> families;
};

/// Tables: "moments" (n, k, phi, value, std_error, renormalized, cauchy_gap),
/// "mass" (n, value, std_error) for k = 0, "carleman" for the last law.
ConvergenceReport method_of_moments_diag(const std::vector<EmpiricalLaw>& laws,
                                         const std::vector<double>& labels,
                                         const MomentsDiagConfig& cfg = {});

}  // namespace mmm
