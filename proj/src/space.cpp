#include "mmm/space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mmm/error.hpp"

namespace mmm {

double MarkSpaceSpec::distance(std::span<const double> a, std::span<const double> b) const {
  double s = 0.0;
  for (std::size_t c = 0; c < dim; ++c) {
    const double d = a[c] - b[c];
    s += d * d;
  }
  return std::sqrt(s);
}

FiniteMmmSpace::FiniteMmmSpace(std::size_t mark_dim, std::vector<double> dist,
                               std::vector<double> marks, std::vector<double> weights)
    : FiniteMmmSpace(Trusted{}, mark_dim, std::move(dist), std::move(marks), std::move(weights)) {
  validate_metric(size(), dist_);
}

FiniteMmmSpace::FiniteMmmSpace(Trusted, std::size_t mark_dim, std::vector<double> dist,
                               std::vector<double> marks, std::vector<double> weights)
    : mark_dim_(mark_dim),
      dist_(std::move(dist)),
      marks_(std::move(marks)),
      weights_(std::move(weights)) {
  check_shapes();
  mass_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

FiniteMmmSpace FiniteMmmSpace::unmarked(std::vector<double> dist, std::vector<double> weights) {
  return FiniteMmmSpace(0, std::move(dist), {}, std::move(weights));
}

void FiniteMmmSpace::check_shapes() const {
  const std::size_t n = weights_.size();
  if (dist_.size() != n * n) {
    throw InvalidSpace("distance matrix has " + std::to_string(dist_.size()) +
                       " entries, expected " + std::to_string(n * n));
  }
  if (marks_.size() != n * mark_dim_) {
    throw InvalidSpace("mark matrix has wrong shape");
  }
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidSpace("weights must be finite and >= 0");
  }
  for (double m : marks_) {
    if (!std::isfinite(m)) throw InvalidSpace("marks must be finite");
  }
}

double FiniteMmmSpace::mark_distance(std::size_t i, std::size_t j) const {
  return MarkSpaceSpec{mark_dim_}.distance(mark(i), mark(j));
}

void validate_metric(std::size_t n, std::span<const double> dist, double tol) {
  if (dist.size() != n * n) throw InvalidMetric("matrix is not n x n");
  auto at = [&](std::size_t i, std::size_t j) { return dist[i * n + j]; };
  for (std::size_t i = 0; i < n; ++i) {
    if (!(std::abs(at(i, i)) <= tol)) throw InvalidMetric("nonzero diagonal");
    for (std::size_t j = 0; j < n; ++j) {
      const double d = at(i, j);
      if (!std::isfinite(d)) throw InvalidMetric("non-finite distance");
      if (d < -tol) throw InvalidMetric("negative distance");
      if (std::abs(d - at(j, i)) > tol) throw InvalidMetric("asymmetric matrix");
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const double dik = at(i, k);
      for (std::size_t j = 0; j < n; ++j) {
        if (at(i, j) > dik + at(k, j) + tol) {
          std::ostringstream os;
          os << "triangle inequality fails for (" << i << ", " << k << ", " << j << ")";
          throw InvalidMetric(os.str());
        }
      }
    }
}

double total_mass(const FiniteMmmSpace& space) noexcept { return space.mass(); }

namespace {

FiniteMmmSpace select(const FiniteMmmSpace& s, const std::vector<std::size_t>& idx) {
  const std::size_t m = idx.size();
  const std::size_t dim = s.mark_dim();
  std::vector<double> dist(m * m), marks(m * dim), weights(m);
  for (std::size_t a = 0; a < m; ++a) {
    weights[a] = s.weight(idx[a]);
    auto mk = s.mark(idx[a]);
    std::copy(mk.begin(), mk.end(), marks.begin() + a * dim);
    for (std::size_t b = 0; b < m; ++b) dist[a * m + b] = s.dist(idx[a], idx[b]);
  }
  return FiniteMmmSpace(FiniteMmmSpace::Trusted{}, dim, std::move(dist), std::move(marks),
                        std::move(weights));
}

}  // namespace

FiniteMmmSpace canonicalize(const FiniteMmmSpace& space) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (space.weight(i) > 0.0) idx.push_back(i);

  // Sorted distance rows over the support are permutation invariant.
  std::vector<std::vector<double>> rows(space.size());
  for (std::size_t i : idx) {
    auto& r = rows[i];
    r.reserve(idx.size());
    for (std::size_t j : idx) r.push_back(space.dist(i, j));
    std::sort(r.begin(), r.end());
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (space.weight(a) != space.weight(b)) return space.weight(a) < space.weight(b);
    auto ma = space.mark(a), mb = space.mark(b);
    if (!std::equal(ma.begin(), ma.end(), mb.begin()))
      return std::lexicographical_compare(ma.begin(), ma.end(), mb.begin(), mb.end());
    return rows[a] < rows[b];
  });
  return select(space, idx);
}

Normalized normalize(const FiniteMmmSpace& space) {
  const double m = space.mass();
  if (!(m > 0.0)) throw ZeroMass("cannot normalize the null space");
  return {m, scale_weights(space, 1.0 / m)};
}

FiniteMmmSpace restrict(const FiniteMmmSpace& space, std::span<const std::size_t> keep) {
  std::vector<char> flag(space.size(), 0);
  for (std::size_t i : keep) {
    if (i >= space.size()) throw std::out_of_range("restrict: atom index out of range");
    flag[i] = 1;
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (flag[i]) idx.push_back(i);
  return select(space, idx);
}

FiniteMmmSpace scale_weights(const FiniteMmmSpace& space, double factor) {
  std::vector<double> w(space.weights().begin(), space.weights().end());
  for (double& x : w) x *= factor;
  return FiniteMmmSpace(FiniteMmmSpace::Trusted{}, space.mark_dim(),
                        {space.dist_data().begin(), space.dist_data().end()},
                        {space.mark_data().begin(), space.mark_data().end()}, std::move(w));
}

bool is_ultrametric(const FiniteMmmSpace& space, double tol) {
  const std::size_t n = space.size();
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      const double dxy = space.dist(x, y);
      for (std::size_t z = 0; z < n; ++z)
        if (space.dist(x, z) > std::max(dxy, space.dist(y, z)) + tol) return false;
    }
  return true;
}

double diameter(const FiniteMmmSpace& space) noexcept {
  double d = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (space.weight(i) <= 0.0) continue;
    for (std::size_t j = i + 1; j < space.size(); ++j)
      if (space.weight(j) > 0.0) d = std::max(d, space.dist(i, j));
  }
  return d;
}

std::vector<double> mark_mean(const FiniteMmmSpace& space) {
  std::vector<double> mean(space.mark_dim(), 0.0);
  if (!(space.mass() > 0.0)) return mean;
  for (std::size_t i = 0; i < space.size(); ++i) {
    auto mk = space.mark(i);
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += space.weight(i) * mk[c];
  }
  for (double& v : mean) v /= space.mass();
  return mean;
}

nlohmann::json to_json(const FiniteMmmSpace& space) {
  nlohmann::json atoms = nlohmann::json::array();
  for (std::size_t i = 0; i < space.size(); ++i) {
    auto mk = space.mark(i);
    atoms.push_back({{"weight", space.weight(i)},
                     {"mark", std::vector<double>(mk.begin(), mk.end())}});
  }
  nlohmann::json dist = nlohmann::json::array();
  for (std::size_t i = 0; i < space.size(); ++i) {
    std::vector<double> row(space.size());
    for (std::size_t j = 0; j < space.size(); ++j) row[j] = space.dist(i, j);
    dist.push_back(std::move(row));
  }
  return {{"dim", space.mark_dim()}, {"atoms", std::move(atoms)}, {"dist", std::move(dist)}};
}

FiniteMmmSpace space_from_json(const nlohmann::json& j) {
  try {
    const std::size_t dim = j.at("dim").get<std::size_t>();
    const auto& atoms = j.at("atoms");
    const auto& rows = j.at("dist");
    const std::size_t n = atoms.size();
    if (rows.size() != n) throw FormatError("dist must have one row per atom");
    std::vector<double> dist(n * n), marks(n * dim), weights(n);
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] = atoms[i].at("weight").get<double>();
      std::vector<double> mk = atoms[i].value("mark", std::vector<double>{});
      if (mk.size() != dim) throw FormatError("mark length differs from dim");
      std::copy(mk.begin(), mk.end(), marks.begin() + i * dim);
      if (rows[i].size() != n) throw FormatError("dist row has wrong length");
      for (std::size_t k = 0; k < n; ++k) dist[i * n + k] = rows[i][k].get<double>();
    }
    return FiniteMmmSpace(dim, std::move(dist), std::move(marks), std::move(weights));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(e.what());
  }
}

}  // namespace mmm
