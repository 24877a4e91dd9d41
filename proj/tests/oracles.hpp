#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace mmm::testing {

// Geometric(1/2) offspring: P(Z_n = k) = n^(k-1) / (n+1)^(k+1) for k >= 1,
// i.e. Z_n given survival is geometric on {1, 2, ...} with success 1/(n+1).
struct LinearFractional {
  double n;

  double survival() const { return 1.0 / (n + 1.0); }
  /// E Z_n^j for j = 1, 2, 3.
  double raw_moment(int j) const {
    const double p = 1.0 / (n + 1.0);
    const double g = j == 1 ? 1.0 / p : j == 2 ? (2.0 - p) / (p * p) : (p * p - 6.0 * p + 6.0) / (p * p * p);
    return survival() * g;
  }
  /// n E[(Z_n / n)^k].
  double scaled_moment(int k) const { return raw_moment(k) / std::pow(n, k - 1); }
  /// n P(Z_n >= eps n).
  double scaled_tail(double eps) const {
    const double first = std::max(1.0, std::ceil(eps * n - 1e-9));
    return n * survival() * std::pow(n / (n + 1.0), first - 1.0);
  }
};

/// Exact law of Z_n for an offspring pmf with finite support, by repeated
/// composition of probability vectors, truncated at `cap` individuals.
inline std::vector<double> population_pmf(const std::vector<double>& off, std::size_t n,
                                          std::size_t cap) {
  std::vector<double> z{0.0, 1.0};
  for (std::size_t g = 0; g < n; ++g) {
    std::vector<double> next(cap + 1, 0.0), power{1.0};
    for (std::size_t k = 0; k < z.size(); ++k) {
      for (std::size_t i = 0; i < power.size() && i <= cap; ++i) next[i] += z[k] * power[i];
      std::vector<double> p(std::min(power.size() + off.size() - 1, cap + 1), 0.0);
      for (std::size_t i = 0; i < power.size(); ++i)
        for (std::size_t j = 0; j < off.size() && i + j <= cap; ++j) p[i + j] += power[i] * off[j];
      power = std::move(p);
    }
    z = std::move(next);
  }
  return z;
}

}  // namespace mmm::testing
