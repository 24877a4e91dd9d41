#pragma once

#include <cstddef>
#include <cstdint>

#include "mmm/space.hpp"
#include "mmm/test_function.hpp"

namespace mmm {

/// Default cap on the number of k-tuples summed by evaluate_exact.
inline constexpr std::uint64_t kDefaultTermBudget = 100'000'000;

/// |X|^mass_power * integral of phi(d(x), e) over mu^k, with k = phi.arity().
struct Monomial {
  TestFunction phi;
  std::size_t mass_power = 0;

  explicit Monomial(TestFunction f, std::size_t power = 0) : phi(std::move(f)), mass_power(power) {}

  std::size_t order() const noexcept { return phi.arity(); }
};

/// Sum over all ordered k-tuples of atoms (with repetition). Throws
/// BudgetExceeded when support^k exceeds `budget`.
double evaluate_exact(const FiniteMmmSpace& space, const Monomial& mono,
                      std::uint64_t budget = kDefaultTermBudget);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Unbiased Monte Carlo estimate from i.i.d. k-tuples of the normalized
/// measure. Deterministic in `seed`; independent of `threads`.
/// Throws ZeroMass for the null space.
McEstimate evaluate_mc(const FiniteMmmSpace& space, const Monomial& mono, std::uint64_t samples,
                       std::uint64_t seed, unsigned threads = 1);

/// The monomial X -> |X|^extra * mono(X).
Monomial lift_mass(const Monomial& mono, std::size_t extra);

/// Row access for evaluating phi on atoms idx[0..k) of a space.
struct TupleAccess {
  const FiniteMmmSpace* space;
  const std::size_t* idx;

  double dist(std::size_t i, std::size_t j) const { return space->dist(idx[i], idx[j]); }
  double mark(std::size_t i, std::size_t c) const { return space->mark(idx[i])[c]; }
};

}  // namespace mmm
