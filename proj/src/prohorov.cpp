#include "mmm/prohorov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mmm/error.hpp"
#include "mmm/space.hpp"

namespace mmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dinic max-flow on source -> left (cap p) -> right (cap inf) -> sink (cap q).
// Edges between left and right can be added between augmentations; the
// current flow stays feasible, so augmentation simply resumes.
class IncrementalFlow {
 public:
  IncrementalFlow(std::span<const double> left_cap, std::span<const double> right_cap, double tol)
      : nl_(left_cap.size()), nr_(right_cap.size()), tol_(tol), adj_(nl_ + nr_ + 2) {
    for (std::size_t i = 0; i < nl_; ++i) add_edge(source(), left(i), left_cap[i]);
    for (std::size_t j = 0; j < nr_; ++j) add_edge(right(j), sink(), right_cap[j]);
  }

  void connect(std::size_t i, std::size_t j) { add_edge(left(i), right(j), kInf); }

  double augment() {
    while (bfs()) {
      it_.assign(adj_.size(), 0);
      for (;;) {
        const double f = dfs(source(), kInf);
        if (!(f > tol_)) break;
        flow_ += f;
      }
    }
    return flow_;
  }

  double flow() const noexcept { return flow_; }

 private:
  struct Edge {
    std::size_t to;
    double cap;
  };

  std::size_t source() const { return nl_ + nr_; }
  std::size_t sink() const { return nl_ + nr_ + 1; }
  std::size_t left(std::size_t i) const { return i; }
  std::size_t right(std::size_t j) const { return nl_ + j; }

  void add_edge(std::size_t a, std::size_t b, double cap) {
    adj_[a].push_back(edges_.size());
    edges_.push_back({b, cap});
    adj_[b].push_back(edges_.size());
    edges_.push_back({a, 0.0});
  }

  bool bfs() {
    level_.assign(adj_.size(), -1);
    std::vector<std::size_t> queue{source()};
    level_[source()] = 0;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      const std::size_t v = queue[h];
      for (std::size_t e : adj_[v]) {
        const Edge& ed = edges_[e];
        if (ed.cap > tol_ && level_[ed.to] < 0) {
          level_[ed.to] = level_[v] + 1;
          queue.push_back(ed.to);
        }
      }
    }
    return level_[sink()] >= 0;
  }

  double dfs(std::size_t v, double pushed) {
    if (v == sink()) return pushed;
    for (std::size_t& k = it_[v]; k < adj_[v].size(); ++k) {
      const std::size_t e = adj_[v][k];
      Edge& ed = edges_[e];
      if (ed.cap > tol_ && level_[ed.to] == level_[v] + 1) {
        const double got = dfs(ed.to, std::min(pushed, ed.cap));
        if (got > tol_) {
          ed.cap -= got;
          edges_[e ^ 1].cap += got;
          return got;
        }
      }
    }
    return 0.0;
  }

  std::size_t nl_, nr_;
  double tol_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Edge> edges_;
  std::vector<int> level_;
  std::vector<std::size_t> it_;
  double flow_ = 0.0;
};

void check_weights(std::span<const double> w) {
  for (double x : w)
    if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidSpace("weights must be finite and >= 0");
}

}  // namespace

double prohorov_on_relation(std::span<const double> dist, std::span<const double> p,
                            std::span<const double> q, double cap) {
  const std::size_t n = p.size();
  std::vector<std::size_t> li, ri;
  std::vector<double> lw, rw;
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] > 0.0) {
      li.push_back(i);
      lw.push_back(p[i]);
    }
    if (q[i] > 0.0) {
      ri.push_back(i);
      rw.push_back(q[i]);
    }
  }
  const double total_p = std::accumulate(lw.begin(), lw.end(), 0.0);
  const double total_q = std::accumulate(rw.begin(), rw.end(), 0.0);
  const double top = std::max(total_p, total_q);
  // eps = max(|P|, |Q|) is always admissible.
  double best = top;
  if (li.empty() || ri.empty() || !(cap > 0.0)) return std::min(best, std::max(cap, 0.0));

  struct Pair {
    double d;
    std::size_t a, b;
  };
  std::vector<Pair> pairs;
  const double limit = std::min(best, cap);
  for (std::size_t a = 0; a < li.size(); ++a)
    for (std::size_t b = 0; b < ri.size(); ++b) {
      const double d = dist[li[a] * n + ri[b]];
      if (d < limit) pairs.push_back({d, a, b});
    }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    if (x.d != y.d) return x.d < y.d;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  // On [d_i, d_{i+1}) the relation {dist <= eps} is fixed, and the worst
  // violation max_C P(C) - Q(C^eps) equals |P| - maxflow (and symmetrically
  // |Q| - maxflow, with the same flow value).
  IncrementalFlow flow(lw, rw, top * 1e-15);
  std::size_t k = 0;
  while (k < pairs.size()) {
    const double d = pairs[k].d;
    if (d >= std::min(best, cap)) break;
    for (; k < pairs.size() && pairs[k].d == d; ++k) flow.connect(pairs[k].a, pairs[k].b);
    const double f = flow.augment();
    const double deficiency = std::max(0.0, top - f);
    best = std::min(best, std::max(d, deficiency));
  }
  return std::min(best, cap);
}

double prohorov_exact(std::span<const double> dist, std::span<const double> p,
                      std::span<const double> q) {
  if (p.size() != q.size()) throw InvalidSpace("p and q must live on the same points");
  check_weights(p);
  check_weights(q);
  validate_metric(p.size(), dist);
  return prohorov_on_relation(dist, p, q);
}

}  // namespace mmm
