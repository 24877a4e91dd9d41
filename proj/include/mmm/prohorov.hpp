#pragma once

#include <cstddef>
#include <limits>
#include <span>

namespace mmm {

/// Prohorov distance between finite measures p and q living on the same N
/// points with pairwise distances `dist` (row-major N*N): the smallest
/// eps >= 0 with P(C) <= Q(C^eps) + eps and Q(C) <= P(C^eps) + eps for all C.
///
/// Validates `dist` as a metric (InvalidMetric) and the weights.
double prohorov_exact(std::span<const double> dist, std::span<const double> p,
                      std::span<const double> q);

/// Same computation without metric validation. `dist` only has to be
/// symmetric and nonnegative; +inf marks pairs that are never close. Using
/// entrywise upper bounds of a true metric yields an upper bound of the true
/// distance. The scan stops once eps reaches `cap`, so results >= cap are
/// reported as cap.
double prohorov_on_relation(std::span<const double> dist, std::span<const double> p,
                            std::span<const double> q,
                            double cap = std::numeric_limits<double>::infinity());

}  // namespace mmm
