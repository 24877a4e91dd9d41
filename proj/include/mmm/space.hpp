#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "json.hpp"

namespace mmm {

/// Absolute tolerance used for every metric-axiom check.
inline constexpr double kMetricTolerance = 1e-9;

/// Euclidean mark space R^dim. dim == 0 means unmarked (E is a single point).
struct MarkSpaceSpec {
  std::size_t dim = 0;

  double distance(std::span<const double> a, std::span<const double> b) const;
};

/// Finite marked metric measure space: n atoms with pairwise distances,
/// marks in R^m and nonnegative weights. Immutable once constructed.
///
/// The space with no atoms (or only zero-weight atoms) represents the null
/// space. Distances are stored as a dense row-major n*n matrix.
class FiniteMmmSpace {
 public:
  /// Skips the O(n^3) triangle check; for generators that build metrics
  /// which are valid by construction (e.g. genealogical ultrametrics).
  struct Trusted {};

  FiniteMmmSpace() = default;
  explicit FiniteMmmSpace(std::size_t mark_dim) : mark_dim_(mark_dim) {}

  /// Validates shapes, weights and all metric axioms (tolerance 1e-9).
  /// Throws InvalidSpace / InvalidMetric.
  FiniteMmmSpace(std::size_t mark_dim, std::vector<double> dist, std::vector<double> marks,
                 std::vector<double> weights);

  /// Shape and weight checks only.
  FiniteMmmSpace(Trusted, std::size_t mark_dim, std::vector<double> dist,
                 std::vector<double> marks, std::vector<double> weights);

  /// Unmarked space.
  static FiniteMmmSpace unmarked(std::vector<double> dist, std::vector<double> weights);

  std::size_t size() const noexcept { return weights_.size(); }
  std::size_t mark_dim() const noexcept { return mark_dim_; }
  bool empty() const noexcept { return weights_.empty(); }

  double dist(std::size_t i, std::size_t j) const noexcept { return dist_[i * size() + j]; }
  std::span<const double> mark(std::size_t i) const noexcept {
    return {marks_.data() + i * mark_dim_, mark_dim_};
  }
  double weight(std::size_t i) const noexcept { return weights_[i]; }

  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> dist_data() const noexcept { return dist_; }
  std::span<const double> mark_data() const noexcept { return marks_; }

  /// Total mass |X|.
  double mass() const noexcept { return mass_; }

  /// Distance between the marks of atoms i and j.
  double mark_distance(std::size_t i, std::size_t j) const;

  friend bool operator==(const FiniteMmmSpace& a, const FiniteMmmSpace& b) {
    return a.mark_dim_ == b.mark_dim_ && a.weights_ == b.weights_ && a.marks_ == b.marks_ &&
           a.dist_ == b.dist_;
  }

 private:
  void check_shapes() const;

  std::size_t mark_dim_ = 0;
  std::vector<double> dist_;
  std::vector<double> marks_;
  std::vector<double> weights_;
  double mass_ = 0.0;
};

using SpaceHandle = std::shared_ptr<const FiniteMmmSpace>;

inline SpaceHandle share(FiniteMmmSpace s) {
  return std::make_shared<const FiniteMmmSpace>(std::move(s));
}

/// Throws InvalidMetric unless `dist` (n*n, row-major) is symmetric with zero
/// diagonal, nonnegative and satisfies the triangle inequality within `tol`.
void validate_metric(std::size_t n, std::span<const double> dist, double tol = kMetricTolerance);

double total_mass(const FiniteMmmSpace& space) noexcept;

/// Drops zero-weight atoms and sorts the rest by (weight, marks, sorted
/// distance row). Idempotent; keeps total mass and every monomial value.
FiniteMmmSpace canonicalize(const FiniteMmmSpace& space);

struct Normalized {
  double mass = 0.0;
  FiniteMmmSpace space;
};

/// Splits a space into its mass and the probability space mu / |X|.
/// Throws ZeroMass for the null space.
Normalized normalize(const FiniteMmmSpace& space);

/// Sub-space on the given atoms (duplicates ignored, original order kept).
/// Throws std::out_of_range on a bad index.
FiniteMmmSpace restrict(const FiniteMmmSpace& space, std::span<const std::size_t> keep);

/// Copy with every weight multiplied by `factor` (>= 0).
FiniteMmmSpace scale_weights(const FiniteMmmSpace& space, double factor);

bool is_ultrametric(const FiniteMmmSpace& space, double tol = kMetricTolerance);

/// Largest distance between atoms of positive weight; 0 for fewer than two.
double diameter(const FiniteMmmSpace& space) noexcept;

/// Mark of the mass barycentre; zero vector for the null space.
std::vector<double> mark_mean(const FiniteMmmSpace& space);

// JSON: {"dim": m, "atoms": [{"weight": w, "mark": [..]}, ...], "dist": [[..], ..]}
nlohmann::json to_json(const FiniteMmmSpace& space);
FiniteMmmSpace space_from_json(const nlohmann::json& j);

}  // namespace mmm
