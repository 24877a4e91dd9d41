#include "mmm/gromov_prohorov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "mmm/error.hpp"
#include "mmm/monomial.hpp"
#include "mmm/prohorov.hpp"
#include "mmm/random.hpp"

namespace mmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Anchor = std::pair<std::size_t, std::size_t>;

FiniteMmmSpace support_of(const FiniteMmmSpace& s) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.weight(i) > 0.0) keep.push_back(i);
  if (keep.size() == s.size()) return s;
  return restrict(s, keep);
}

void check_dims(const FiniteMmmSpace& x, const FiniteMmmSpace& y) {
  if (x.mark_dim() != y.mark_dim() && !x.empty() && !y.empty())
    throw InvalidSpace("spaces have different mark dimensions");
}

// Distances, marks and weights of a glueing problem, laid out for the
// Prohorov engine: points 0..n-1 carry x, points n..n+m-1 carry y.
class GlueProblem {
 public:
  GlueProblem(const FiniteMmmSpace& x, const FiniteMmmSpace& y)
      : x_(x), y_(y), n_(x.size()), m_(y.size()), size_(n_ + m_) {
    const MarkSpaceSpec marks{x.mark_dim()};
    mark_cross_.resize(n_ * m_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < m_; ++j)
        mark_cross_[i * m_ + j] = marks.distance(x.mark(i), y.mark(j));
    p_.assign(size_, 0.0);
    q_.assign(size_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) p_[i] = x.weight(i);
    for (std::size_t j = 0; j < m_; ++j) q_[n_ + j] = y.weight(j);
    common_.assign(size_ * size_, 0.0);
    for (std::size_t a = 0; a < n_; ++a)
      for (std::size_t b = 0; b < n_; ++b)
        common_[a * size_ + b] = x.dist(a, b) + x.mark_distance(a, b);
    for (std::size_t a = 0; a < m_; ++a)
      for (std::size_t b = 0; b < m_; ++b)
        common_[(n_ + a) * size_ + n_ + b] = y.dist(a, b) + y.mark_distance(a, b);
    diam_ = std::max(diameter(x), diameter(y));
  }

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  double dx(std::size_t a, std::size_t b) const { return x_.dist(a, b); }
  double dy(std::size_t a, std::size_t b) const { return y_.dist(a, b); }
  double mark_gap(std::size_t i, std::size_t j) const { return mark_cross_[i * m_ + j]; }
  double weight_gap(std::size_t i, std::size_t j) const {
    return std::abs(x_.weight(i) - y_.weight(j));
  }
  double diam() const { return diam_; }

  double evaluate(const Glueing& g, double cap) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < m_; ++j) {
        const double d = g.at(i, j) + mark_cross_[i * m_ + j];
        common_[i * size_ + n_ + j] = d;
        common_[(n_ + j) * size_ + i] = d;
      }
    return prohorov_on_relation(common_, p_, q_, cap);
  }

  // Glueing through a partial correspondence: cross(i, j) =
  // min_l d(i, a_l) + dis/2 + d'(b_l, j), dis the correspondence distortion.
  // With no anchors every cross distance equals the larger diameter.
  Glueing anchored(const std::vector<Anchor>& anchors, std::size_t count) const {
    Glueing g{n_, m_, std::vector<double>(n_ * m_, diam_)};
    if (count == 0) return g;
    double dis = 0.0;
    for (std::size_t l = 0; l < count; ++l)
      for (std::size_t k = 0; k < count; ++k)
        dis = std::max(dis, std::abs(dx(anchors[l].first, anchors[k].first) -
                                     dy(anchors[l].second, anchors[k].second)));
    const double r = 0.5 * dis;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < m_; ++j) {
        double best = kInf;
        for (std::size_t l = 0; l < count; ++l)
          best = std::min(best, dx(i, anchors[l].first) + r + dy(anchors[l].second, j));
        g.at(i, j) = best;
      }
    return g;
  }

  // Greedy correspondence grown from (a, b): each step adds the unused pair
  // of least distortion increase, mark gap and weight gap (plus noise).
  std::vector<Anchor> greedy(std::size_t a, std::size_t b, Rng* rng, double noise) const {
    std::vector<Anchor> anchors{{a, b}};
    std::vector<char> used_x(n_, 0), used_y(m_, 0);
    used_x[a] = used_y[b] = 1;
    std::vector<double> distortion(n_ * m_, 0.0);
    std::uniform_real_distribution<double> jitter(0.0, noise);
    const std::size_t target = std::min(n_, m_);
    while (anchors.size() < target) {
      const auto [la, lb] = anchors.back();
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < m_; ++j) {
          double& dd = distortion[i * m_ + j];
          dd = std::max(dd, std::abs(dx(i, la) - dy(j, lb)));
        }
      double best = kInf;
      Anchor pick{0, 0};
      for (std::size_t i = 0; i < n_; ++i) {
        if (used_x[i]) continue;
        for (std::size_t j = 0; j < m_; ++j) {
          if (used_y[j]) continue;
          double cost = distortion[i * m_ + j] + mark_gap(i, j) + weight_gap(i, j);
          if (rng != nullptr && noise > 0.0) cost += jitter(*rng);
          if (cost < best) {
            best = cost;
            pick = {i, j};
          }
        }
      }
      used_x[pick.first] = used_y[pick.second] = 1;
      anchors.push_back(pick);
    }
    return anchors;
  }

  // Lowers entries one at a time to the smallest value that keeps every
  // triangle through that entry valid. Each step stays admissible.
  void descend(Glueing& g, const std::vector<std::size_t>& order, std::size_t sweeps,
               double tol) const {
    for (std::size_t s = 0; s < sweeps; ++s) {
      bool changed = false;
      for (std::size_t e : order) {
        const std::size_t i = e / m_, j = e % m_;
        double lo = 0.0;
        for (std::size_t i2 = 0; i2 < n_; ++i2) {
          if (i2 == i) continue;
          const double c = g.at(i2, j), d = dx(i, i2);
          lo = std::max(lo, std::max(c - d, d - c));
        }
        for (std::size_t j2 = 0; j2 < m_; ++j2) {
          if (j2 == j) continue;
          const double c = g.at(i, j2), d = dy(j, j2);
          lo = std::max(lo, std::max(c - d, d - c));
        }
        if (lo < g.at(i, j) - tol) {
          g.at(i, j) = lo;
          changed = true;
        }
      }
      if (!changed) break;
    }
  }

  // Largest admissible glueing with cross + mark <= t on the relation, for
  // the least such t: cross = t + A with A(i, j) = min over (a, b) in the
  // relation of d(i, a) - mark(a, b) + d'(b, j).
  Glueing relation_glueing(const std::vector<char>& rel) const {
    std::vector<double> A(n_ * m_, kInf);
    double t = 0.0;
    for (std::size_t a = 0; a < n_; ++a)
      for (std::size_t b = 0; b < m_; ++b) {
        if (!rel[a * m_ + b]) continue;
        const double mk = mark_gap(a, b);
        t = std::max(t, mk);
        for (std::size_t i = 0; i < n_; ++i)
          for (std::size_t j = 0; j < m_; ++j) {
            double& v = A[i * m_ + j];
            v = std::min(v, dx(i, a) - mk + dy(b, j));
          }
      }
    if (A[0] == kInf) return anchored({}, 0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < m_; ++j) {
        const double aij = A[i * m_ + j];
        t = std::max(t, -aij);
        for (std::size_t i2 = i + 1; i2 < n_; ++i2)
          t = std::max(t, 0.5 * (dx(i, i2) - aij - A[i2 * m_ + j]));
        for (std::size_t j2 = j + 1; j2 < m_; ++j2)
          t = std::max(t, 0.5 * (dy(j, j2) - aij - A[i * m_ + j2]));
      }
    Glueing g{n_, m_, std::move(A)};
    for (double& v : g.cross) v += t;
    return g;
  }

  // Relation {cross + mark <= level}.
  std::vector<char> relation_at(const Glueing& g, double level) const {
    std::vector<char> rel(n_ * m_, 0);
    for (std::size_t e = 0; e < n_ * m_; ++e) rel[e] = g.cross[e] + mark_cross_[e] <= level;
    return rel;
  }

  // Anchored entries first, then the rest by current cross + mark distance.
  std::vector<std::size_t> priority_order(const Glueing& g, const std::vector<Anchor>& anchors,
                                          std::size_t count) const {
    std::vector<char> first(n_ * m_, 0);
    std::vector<std::size_t> order;
    for (std::size_t l = 0; l < count; ++l) {
      const std::size_t e = anchors[l].first * m_ + anchors[l].second;
      first[e] = 1;
      order.push_back(e);
    }
    std::vector<std::size_t> rest;
    for (std::size_t e = 0; e < n_ * m_; ++e)
      if (!first[e]) rest.push_back(e);
    std::stable_sort(rest.begin(), rest.end(), [&](std::size_t u, std::size_t v) {
      return g.cross[u] + mark_cross_[u] < g.cross[v] + mark_cross_[v];
    });
    order.insert(order.end(), rest.begin(), rest.end());
    return order;
  }

 private:
  const FiniteMmmSpace& x_;
  const FiniteMmmSpace& y_;
  std::size_t n_, m_, size_;
  std::vector<double> mark_cross_;
  std::vector<double> p_, q_;
  std::vector<double> common_;
  double diam_ = 0.0;
};

std::vector<std::size_t> prefix_lengths(std::size_t full) {
  std::vector<std::size_t> out;
  if (full <= 8) {
    for (std::size_t l = 1; l <= full; ++l) out.push_back(l);
    return out;
  }
  for (std::size_t l = 1; l < full; l *= 2) out.push_back(l);
  out.push_back(full);
  return out;
}

struct SearchState {
  double best;
  Glueing glueing;
  /// No glueing beats the mass gap; reaching it ends the search.
  double floor = 0.0;

  bool done() const { return best <= floor; }
};

void try_start(GlueProblem& pb, Glueing g, const std::vector<std::size_t>& order,
               const GlueSearchConfig& cfg, SearchState& st) {
  pb.descend(g, order, cfg.descent_steps, cfg.projection_tolerance);
  const double v = pb.evaluate(g, st.best);
  if (v < st.best) {
    st.best = v;
    st.glueing = std::move(g);
  }
}

void offer(GlueProblem& pb, Glueing g, SearchState& st) {
  const double v = pb.evaluate(g, st.best);
  if (v < st.best) {
    st.best = v;
    st.glueing = std::move(g);
  }
}

// Every relation, each through its largest admissible glueing.
void enumerate_relations(GlueProblem& pb, SearchState& st) {
  const std::size_t cells = pb.n() * pb.m();
  std::vector<char> rel(cells);
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << cells) && !st.done(); ++mask) {
    for (std::size_t e = 0; e < cells; ++e) rel[e] = (mask >> e) & 1;
    offer(pb, pb.relation_glueing(rel), st);
  }
}

// Toggles single pairs of the relation read off the best glueing while that helps.
void refine_relation(GlueProblem& pb, SearchState& st, std::size_t rounds) {
  if (st.glueing.cross.empty()) return;
  std::vector<char> rel = pb.relation_at(st.glueing, st.best);
  for (std::size_t r = 0; r < rounds && !st.done(); ++r) {
    bool improved = false;
    for (std::size_t e = 0; e < rel.size() && !st.done(); ++e) {
      rel[e] ^= 1;
      const double before = st.best;
      offer(pb, pb.relation_glueing(rel), st);
      if (st.best < before)
        improved = true;
      else
        rel[e] ^= 1;
    }
    if (!improved) break;
  }
}

SearchState search(const FiniteMmmSpace& x, const FiniteMmmSpace& y, const GlueSearchConfig& cfg) {
  GlueProblem pb(x, y);
  const std::size_t n = pb.n(), m = pb.m();
  SearchState st{std::max(x.mass(), y.mass()), {}};
  // Rounding slack so that a glueing hitting the gap exactly still counts.
  const double gap = std::abs(x.mass() - y.mass());
  st.floor = gap + 4.0 * std::numeric_limits<double>::epsilon() * std::max(x.mass(), y.mass());
  if (n * m <= std::min<std::size_t>(cfg.exact_cells, 20)) {
    enumerate_relations(pb, st);
    return st;
  }

  // Constant glueing, descended in row-major order.
  {
    std::vector<std::size_t> order(n * m);
    std::iota(order.begin(), order.end(), 0);
    try_start(pb, pb.anchored({}, 0), order, cfg, st);
    if (st.done()) return st;
  }

  // Greedy correspondences from the most promising start pairs.
  std::vector<Anchor> starts;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < m; ++b) starts.emplace_back(a, b);
  std::stable_sort(starts.begin(), starts.end(), [&](const Anchor& u, const Anchor& v) {
    return pb.mark_gap(u.first, u.second) + pb.weight_gap(u.first, u.second) <
           pb.mark_gap(v.first, v.second) + pb.weight_gap(v.first, v.second);
  });
  if (starts.size() > cfg.greedy_starts) starts.resize(cfg.greedy_starts);
  for (const auto& [a, b] : starts) {
    const auto anchors = pb.greedy(a, b, nullptr, 0.0);
    for (std::size_t len : prefix_lengths(anchors.size())) {
      Glueing g = pb.anchored(anchors, len);
      auto order = pb.priority_order(g, anchors, len);
      try_start(pb, std::move(g), order, cfg, st);
      if (st.done()) return st;
    }
  }

  // Randomized restarts: noisy correspondences and shuffled sweep orders.
  const double noise = 0.25 * (pb.diam() + 1e-3);
  for (std::size_t s = 0; s < cfg.random_seeds && !st.done(); ++s) {
    Rng rng = make_rng(cfg.seed, s);
    std::uniform_int_distribution<std::size_t> pick_x(0, n - 1), pick_y(0, m - 1);
    const std::size_t a = pick_x(rng), b = pick_y(rng);
    const auto anchors = pb.greedy(a, b, &rng, noise);
    std::uniform_int_distribution<std::size_t> pick_len(0, anchors.size());
    const std::size_t len = pick_len(rng);
    Glueing g = pb.anchored(anchors, len);
    std::vector<std::size_t> order(n * m);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    try_start(pb, std::move(g), order, cfg, st);
  }
  refine_relation(pb, st, cfg.relation_rounds);
  return st;
}

}  // namespace

bool is_admissible(const FiniteMmmSpace& x, const FiniteMmmSpace& y, const Glueing& g,
                   double tol) {
  const std::size_t n = x.size(), m = y.size(), size = n + m;
  if (g.rows != n || g.cols != m || g.cross.size() != n * m) return false;
  std::vector<double> block(size * size);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) block[a * size + b] = x.dist(a, b);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) block[(n + a) * size + n + b] = y.dist(a, b);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) block[i * size + n + j] = block[(n + j) * size + i] = g.at(i, j);
  try {
    validate_metric(size, block, tol);
  } catch (const InvalidMetric&) {
    return false;
  }
  return true;
}

double glueing_prohorov(const FiniteMmmSpace& x, const FiniteMmmSpace& y, const Glueing& g) {
  check_dims(x, y);
  if (!is_admissible(x, y, g)) throw InvalidMetric("glueing is not admissible");
  GlueProblem pb(x, y);
  return pb.evaluate(g, kInf);
}

Quantized quantize(const FiniteMmmSpace& space, std::size_t centres) {
  const FiniteMmmSpace s = support_of(space);
  const std::size_t n = s.size();
  if (n <= centres || centres == 0) return {s, 0.0};
  auto gap = [&](std::size_t a, std::size_t b) { return s.dist(a, b) + s.mark_distance(a, b); };

  std::vector<std::size_t> centre;
  std::size_t first = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (s.weight(i) > s.weight(first)) first = i;
  centre.push_back(first);
  std::vector<double> nearest(n);
  std::vector<std::size_t> owner(n, 0);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = gap(i, first);
  while (centre.size() < centres) {
    std::size_t far = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (nearest[i] > nearest[far]) far = i;
    if (nearest[far] <= 0.0) break;
    const std::size_t c = centre.size();
    centre.push_back(far);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = gap(i, far);
      if (d < nearest[i]) {
        nearest[i] = d;
        owner[i] = c;
      }
    }
  }
  const std::size_t k = centre.size();
  std::vector<double> w(k, 0.0);
  double radius = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[owner[i]] += s.weight(i);
    radius = std::max(radius, nearest[i]);
  }
  const std::size_t dim = s.mark_dim();
  std::vector<double> dist(k * k), marks(k * dim);
  for (std::size_t a = 0; a < k; ++a) {
    auto mk = s.mark(centre[a]);
    std::copy(mk.begin(), mk.end(), marks.begin() + a * dim);
    for (std::size_t b = 0; b < k; ++b) dist[a * k + b] = s.dist(centre[a], centre[b]);
  }
  return {FiniteMmmSpace(FiniteMmmSpace::Trusted{}, dim, std::move(dist), std::move(marks),
                         std::move(w)),
          radius};
}

GpUpperResult gp_upper_search(const FiniteMmmSpace& x, const FiniteMmmSpace& y,
                              const GlueSearchConfig& cfg) {
  check_dims(x, y);
  GpUpperResult out;
  const double trivial = std::max(x.mass(), y.mass());
  if (!(x.mass() > 0.0) || !(y.mass() > 0.0)) {
    out.value = trivial;
    return out;
  }
  if (x == y) return out;
  Quantized qx = quantize(x, cfg.max_atoms);
  Quantized qy = quantize(y, cfg.max_atoms);
  if (qx.space.size() <= 64 && qy.space.size() <= 64 &&
      canonicalize(qx.space) == canonicalize(qy.space) && qx.radius + qy.radius == 0.0)
    return out;
  SearchState st = search(qx.space, qy.space, cfg);
  out.quantization_slack = qx.radius + qy.radius;
  out.value = st.best + out.quantization_slack;
  out.glueing = std::move(st.glueing);
  if (out.value >= trivial) {
    out.value = trivial;
    out.glueing = {};
  }
  return out;
}

double gp_upper(const FiniteMmmSpace& x, const FiniteMmmSpace& y, const GlueSearchConfig& cfg) {
  return gp_upper_search(x, y, cfg).value;
}

namespace {

std::vector<TestFunction> lower_bound_family(std::size_t mark_dim) {
  std::vector<TestFunction> fam;
  const Expr d01 = Expr::dist(0, 1);
  for (double lam : {0.5, 1.0, 2.0}) fam.emplace_back(2, Expr::exp_neg(lam, d01));
  fam.emplace_back(2, Expr::min(d01, 1.0));
  fam.emplace_back(2, Expr::inv1p(d01));
  for (double lam : {0.5, 1.0, 2.0}) {
    if (mark_dim == 0) break;
    std::vector<Expr> single, pair;
    for (std::size_t c = 0; c < mark_dim; ++c) {
      Expr e0 = Expr::mark(0, c);
      single.push_back(Expr::exp_neg(lam, e0 * e0));
      Expr diff = Expr::mark(0, c) + Expr::constant(-1.0) * Expr::mark(1, c);
      pair.push_back(Expr::exp_neg(lam, diff * diff));
    }
    fam.emplace_back(1, Expr::mul(std::move(single)));
    fam.emplace_back(2, Expr::mul(std::move(pair)));
  }
  return fam;
}

}  // namespace

double gp_lower(const FiniteMmmSpace& x, const FiniteMmmSpace& y) {
  check_dims(x, y);
  const double mx = x.mass(), my = y.mass();
  double bound = std::abs(mx - my);
  if (!(mx > 0.0) || !(my > 0.0)) return bound;
  const double small = std::min(mx, my), big = std::max(mx, my);
  constexpr std::uint64_t kBudget = 4'000'000;
  // A partial coupling at distance eps moves each monomial of order k by at
  // most eps * (3 L small^k + 2 B k big^(k-1)).
  for (const auto& phi : lower_bound_family(x.mark_dim())) {
    const double lip = phi.lipschitz();
    if (!std::isfinite(lip)) continue;
    const std::size_t k = phi.arity();
    double a, b;
    try {
      a = evaluate_exact(x, Monomial(phi), kBudget);
      b = evaluate_exact(y, Monomial(phi), kBudget);
    } catch (const BudgetExceeded&) {
      continue;
    }
    const double kd = static_cast<double>(k);
    const double modulus =
        3.0 * lip * std::pow(small, kd) + 2.0 * phi.bound() * kd * std::pow(big, kd - 1.0);
    if (modulus > 0.0) bound = std::max(bound, std::abs(a - b) / modulus);
  }
  return bound;
}

double star_distance(const FiniteMmmSpace& x, const FiniteMmmSpace& y,
                     const GlueSearchConfig& cfg) {
  if (!(x.mass() > 0.0) || !(y.mass() > 0.0))
    throw ZeroMass("star distance is defined on non-null spaces only");
  return std::abs(1.0 / x.mass() - 1.0 / y.mass()) + std::min(gp_upper(x, y, cfg), 1.0);
}

}  // namespace mmm
