#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "mmm/random.hpp"
#include "mmm/space.hpp"
#include "mmm/test_function.hpp"

namespace mmm::testing {

/// Points in [0, side]^2 with Euclidean distances; marks uniform in [-1, 1].
inline FiniteMmmSpace random_space(Rng& rng, std::size_t n, std::size_t dim,
                                   double side = 1.5, double min_weight = 0.1,
                                   double max_weight = 1.0) {
  std::uniform_real_distribution<double> coord(0.0, side), w(min_weight, max_weight),
      mk(-1.0, 1.0);
  std::vector<double> xs(n), ys(n), weights(n), marks(n * dim), dist(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = coord(rng);
    ys[i] = coord(rng);
    weights[i] = w(rng);
    for (std::size_t c = 0; c < dim; ++c) marks[i * dim + c] = mk(rng);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) dist[i * n + j] = std::hypot(xs[i] - xs[j], ys[i] - ys[j]);
  return FiniteMmmSpace(dim, std::move(dist), std::move(marks), std::move(weights));
}

inline FiniteMmmSpace single_atom(double weight) {
  return FiniteMmmSpace::unmarked({0.0}, {weight});
}

/// Smallest eps with P(C) <= Q(C^eps) + eps and Q(C) <= P(C^eps) + eps over
/// every subset C of the points, C^eps the closed eps-neighbourhood.
///
/// On [d_k, d_(k+1)) between consecutive distinct distances the neighbourhoods
/// do not change, so the optimum is min_k max(d_k, need_k).
inline double brute_force_prohorov(const std::vector<double>& dist, const std::vector<double>& p,
                                   const std::vector<double>& q) {
  const std::size_t n = p.size();
  std::vector<double> levels(dist.begin(), dist.end());
  levels.push_back(0.0);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  double best = std::max(std::accumulate(p.begin(), p.end(), 0.0), std::accumulate(q.begin(), q.end(), 0.0));
  for (double r : levels) {
    if (r >= best) break;
    double need = 0.0;
    for (std::uint32_t c = 1; c < (1u << n); ++c) {
      double pc = 0.0, qc = 0.0, pn = 0.0, qn = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        bool near = false;
        for (std::size_t i = 0; i < n && !near; ++i)
          near = (c >> i & 1u) && dist[i * n + j] <= r;
        if (c >> j & 1u) {
          pc += p[j];
          qc += q[j];
        }
        if (near) {
          pn += p[j];
          qn += q[j];
        }
      }
      need = std::max({need, pc - qn, qc - pn});
    }
    best = std::min(best, std::max(r, need));
  }
  return best;
}

/// Random bounded expression of arity k over dim mark coordinates.
inline Expr random_expr(Rng& rng, std::size_t k, std::size_t dim, int depth = 3) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 6 : 3);
  std::uniform_int_distribution<std::size_t> atom(0, k - 1);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  const auto leaf_dist = [&] { return Expr::dist(atom(rng), atom(rng)); };
  switch (pick(rng)) {
    case 0:
      return Expr::constant(u(rng) - 1.0);
    case 1:
      return Expr::exp_neg(u(rng), leaf_dist());
    case 2:
      return Expr::inv1p(leaf_dist());
    case 3:
      if (dim > 0) {
        const std::size_t c = std::uniform_int_distribution<std::size_t>(0, dim - 1)(rng);
        const Expr m = Expr::mark(atom(rng), c);
        return Expr::exp_neg(u(rng), m * m);
      }
      return Expr::min(leaf_dist(), u(rng));
    case 4:
      return random_expr(rng, k, dim, depth - 1) + random_expr(rng, k, dim, depth - 1);
    case 5:
      return random_expr(rng, k, dim, depth - 1) * random_expr(rng, k, dim, depth - 1);
    default:
      return Expr::min(random_expr(rng, k, dim, depth - 1), u(rng));
  }
}

}  // namespace mmm::testing
