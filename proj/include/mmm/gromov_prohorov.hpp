#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mmm/space.hpp"

namespace mmm {

/// Cross distances between the atoms of two spaces. Admissible when the
/// block matrix [[d, cross], [cross^T, d']] is a (pseudo)metric, i.e. it
/// defines a common space Z with isometric embeddings of both spaces.
struct Glueing {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> cross;  // rows * cols, row-major

  double at(std::size_t i, std::size_t j) const { return cross[i * cols + j]; }
  double& at(std::size_t i, std::size_t j) { return cross[i * cols + j]; }
};

struct GlueSearchConfig {
  std::size_t random_seeds = 32;
  /// Maximum number of coordinate-descent sweeps per start.
  std::size_t descent_steps = 200;
  double projection_tolerance = 1e-9;
  std::uint64_t seed = 0x6c7565ULL;
  /// Spaces with more atoms are first quantized to this many centres; the
  /// covering radii are added to the bound.
  std::size_t max_atoms = 24;
  /// Cap on deterministic greedy-matching starts.
  std::size_t greedy_starts = 64;
  /// Pairs with at most this many cross entries (and at most 20) try every
  /// relation between the two supports, which makes the result exact.
  std::size_t exact_cells = 9;
  /// Rounds of single-pair changes to the relation of the best glueing.
  std::size_t relation_rounds = 2;
};

bool is_admissible(const FiniteMmmSpace& x, const FiniteMmmSpace& y, const Glueing& g,
                   double tol = kMetricTolerance);

/// Prohorov distance between the two measures pushed into Z x E, where Z is
/// the glued space and Z x E carries d_Z + d_E. Throws InvalidMetric if the
/// glueing is not admissible.
double glueing_prohorov(const FiniteMmmSpace& x, const FiniteMmmSpace& y, const Glueing& g);

struct GpUpperResult {
  double value = 0.0;
  /// Glueing between the (possibly quantized) supports; empty when the value
  /// came from a trivial bound.
  Glueing glueing;
  /// Sum of covering radii added by quantization.
  double quantization_slack = 0.0;
};

/// Upper bound on the Gromov-Prohorov distance from the best glueing found.
/// Deterministic given the configuration.
GpUpperResult gp_upper_search(const FiniteMmmSpace& x, const FiniteMmmSpace& y,
                              const GlueSearchConfig& cfg = {});

double gp_upper(const FiniteMmmSpace& x, const FiniteMmmSpace& y,
                const GlueSearchConfig& cfg = {});

/// Certified lower bound: the mass gap and a family of Lipschitz monomials
/// whose values cannot move faster than a known multiple of d_GP.
double gp_lower(const FiniteMmmSpace& x, const FiniteMmmSpace& y);

/// |1/|X| - 1/|X'|| + min(gp_upper, 1). Throws ZeroMass on a null input.
double star_distance(const FiniteMmmSpace& x, const FiniteMmmSpace& y,
                     const GlueSearchConfig& cfg = {});

struct Quantized {
  FiniteMmmSpace space;
  /// Largest distance (d + d_E) from an atom to its centre.
  double radius = 0.0;
};

/// Farthest-point clustering into at most `centres` atoms; the result is
/// within `radius` of the input in Gromov-Prohorov distance.
Quantized quantize(const FiniteMmmSpace& space, std::size_t centres);

}  // namespace mmm
