#include "mmm/monomial.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "mmm/error.hpp"
#include "mmm/parallel.hpp"
#include "mmm/random.hpp"

namespace mmm {

namespace {

void check_marks(const FiniteMmmSpace& space, const Monomial& mono) {
  if (mono.phi.required_mark_dim() > space.mark_dim())
    throw PreconditionViolated("test function reads mark coordinate " +
                               std::to_string(mono.phi.required_mark_dim() - 1) +
                               " of a space with mark dimension " +
                               std::to_string(space.mark_dim()));
}

// Welford accumulator, merged with Chan's formula so that a constant
// integrand yields exactly zero variance.
struct Moments {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double delta = o.mean - mean;
    mean += delta * static_cast<double>(o.n) / total;
    m2 += o.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }
};

}  // namespace

double evaluate_exact(const FiniteMmmSpace& space, const Monomial& mono, std::uint64_t budget) {
  check_marks(space, mono);
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (space.weight(i) > 0.0) support.push_back(i);
  const std::size_t k = mono.order();
  const std::size_t n = support.size();
  if (n == 0) return 0.0;

  double terms = 1.0;
  for (std::size_t r = 0; r < k; ++r) terms *= static_cast<double>(n);
  if (terms > static_cast<double>(budget))
    throw BudgetExceeded(std::to_string(n) + "^" + std::to_string(k) + " terms");

  std::vector<std::size_t> digit(k, 0), idx(k);
  TupleAccess at{&space, idx.data()};
  double sum = 0.0;
  for (;;) {
    double w = 1.0;
    for (std::size_t r = 0; r < k; ++r) {
      idx[r] = support[digit[r]];
      w *= space.weight(idx[r]);
    }
    sum += w * mono.phi(at);
    std::size_t r = 0;
    while (r < k && ++digit[r] == n) digit[r++] = 0;
    if (r == k) break;
  }
  return std::pow(space.mass(), static_cast<double>(mono.mass_power)) * sum;
}

McEstimate evaluate_mc(const FiniteMmmSpace& space, const Monomial& mono, std::uint64_t samples,
                       std::uint64_t seed, unsigned threads) {
  check_marks(space, mono);
  if (!(space.mass() > 0.0)) throw ZeroMass("Monte Carlo evaluation on the null space");
  if (samples == 0) throw PreconditionViolated("need at least one sample");

  constexpr std::uint64_t kChunk = 1u << 16;
  const std::uint64_t chunks = (samples + kChunk - 1) / kChunk;
  const std::size_t k = mono.order();
  const std::discrete_distribution<std::size_t> pick(space.weights().begin(),
                                                     space.weights().end());
  std::vector<Moments> partial(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    Rng rng = make_rng(seed, c);
    auto draw = pick;
    std::vector<std::size_t> idx(k);
    TupleAccess at{&space, idx.data()};
    const std::uint64_t count = std::min<std::uint64_t>(kChunk, samples - c * kChunk);
    Moments m;
    for (std::uint64_t s = 0; s < count; ++s) {
      for (auto& i : idx) i = draw(rng);
      m.add(mono.phi(at));
    }
    partial[c] = m;
  });
  Moments all;
  for (const auto& m : partial) all.merge(m);

  const double factor =
      std::pow(space.mass(), static_cast<double>(k + mono.mass_power));
  McEstimate out;
  out.estimate = factor * all.mean;
  if (all.n > 1) {
    const double var = all.m2 / static_cast<double>(all.n - 1);
    out.std_error = factor * std::sqrt(std::max(0.0, var) / static_cast<double>(all.n));
  }
  return out;
}

Monomial lift_mass(const Monomial& mono, std::size_t extra) {
  return Monomial(mono.phi, mono.mass_power + extra);
}

}  // namespace mmm
