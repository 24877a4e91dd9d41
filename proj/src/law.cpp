#include "mmm/law.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "mmm/error.hpp"
#include "mmm/parallel.hpp"
#include "mmm/prohorov.hpp"

namespace mmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kClosureLimit = 256;

std::uint64_t fnv(std::uint64_t h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t content_hash(const FiniteMmmSpace& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const std::uint64_t head[2] = {s.size(), s.mark_dim()};
  h = fnv(h, head, sizeof head);
  h = fnv(h, s.weights().data(), s.weights().size_bytes());
  h = fnv(h, s.mark_data().data(), s.mark_data().size_bytes());
  h = fnv(h, s.dist_data().data(), s.dist_data().size_bytes());
  return h;
}

// e^-lo - e^-hi without cancellation.
double exp_gap(double lo, double hi) { return -std::exp(-lo) * std::expm1(-(hi - lo)); }

}  // namespace

EmpiricalLaw::EmpiricalLaw(double scale, std::vector<SpaceHandle> spaces,
                           std::vector<double> weights, std::uint64_t replicates)
    : scale_(scale), replicates_(replicates) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidSpace("law scale must be positive");
  if (weights.empty()) {
    const double n = replicates > 0 ? static_cast<double>(replicates)
                                    : static_cast<double>(spaces.size());
    weights.assign(spaces.size(), n > 0 ? 1.0 / n : 0.0);
  }
  if (weights.size() != spaces.size()) throw InvalidSpace("one weight per space expected");
  for (std::size_t i = 0; i < spaces.size(); ++i) {
    const double w = weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidSpace("law weights must be finite and >= 0");
    if (!spaces[i]) throw InvalidSpace("missing space");
    if (w == 0.0 || !(spaces[i]->mass() > 0.0)) continue;
    spaces_.push_back(std::move(spaces[i]));
    weights_.push_back(w);
  }
}

EmpiricalLaw EmpiricalLaw::from_replicates(double scale, std::vector<SpaceHandle> survivors,
                                           std::uint64_t replicates) {
  if (replicates < survivors.size()) throw InvalidSpace("more survivors than replicates");
  return EmpiricalLaw(scale, std::move(survivors), {}, replicates);
}

double EmpiricalLaw::total_mass() const noexcept {
  return scale_ * std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

EmpiricalLaw restrict_eps(const EmpiricalLaw& law, double eps) {
  if (!(eps > 0.0)) throw PreconditionViolated("restriction level must be positive");
  std::vector<SpaceHandle> keep;
  std::vector<double> w;
  for (std::size_t i = 0; i < law.size(); ++i) {
    if (law.space(i).mass() >= eps) {
      keep.push_back(law.handle(i));
      w.push_back(law.weight(i));
    }
  }
  return EmpiricalLaw(law.scale(), std::move(keep), std::move(w), law.replicates());
}

double integrate(const EmpiricalLaw& law, const Functional& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < law.size(); ++i) s += law.weight(i) * f(law.space(i));
  return law.scale() * s;
}

double replicate_std_error(const EmpiricalLaw& law, const std::vector<double>& values) {
  const std::uint64_t r = law.replicates();
  if (r < 2) return 0.0;
  const double rd = static_cast<double>(r);
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < law.size(); ++i) {
    const double y = law.scale() * rd * law.weight(i) * values[i];
    sum += y;
    sq += y * y;
  }
  const double mean = sum / rd;
  const double var = std::max(0.0, (sq - rd * mean * mean) / (rd - 1.0));
  return std::sqrt(var / rd);
}

LawEstimate integrate_with_error(const EmpiricalLaw& law, const Functional& f) {
  std::vector<double> v(law.size());
  double s = 0.0;
  for (std::size_t i = 0; i < law.size(); ++i) {
    v[i] = f(law.space(i));
    s += law.weight(i) * v[i];
  }
  return {law.scale() * s, replicate_std_error(law, v)};
}

LawDistanceContext::LawDistanceContext(LawDistanceOptions opts) : opts_(std::move(opts)) {}

std::size_t LawDistanceContext::node_of(const SpaceHandle& h) {
  if (auto it = by_ptr_.find(h.get()); it != by_ptr_.end()) return it->second;
  const std::uint64_t key = content_hash(*h);
  std::size_t id = nodes_.size();
  auto [lo, hi] = by_hash_.equal_range(key);
  for (auto it = lo; it != hi; ++it) {
    if (*nodes_[it->second] == *h) {
      id = it->second;
      break;
    }
  }
  if (id == nodes_.size()) {
    nodes_.push_back(h);
    by_hash_.emplace(key, id);
  }
  retained_.push_back(h);
  by_ptr_.emplace(h.get(), id);
  return id;
}

std::vector<std::size_t> LawDistanceContext::add(const EmpiricalLaw& law) {
  std::vector<std::size_t> out(law.size());
  for (std::size_t i = 0; i < law.size(); ++i) out[i] = node_of(law.handle(i));
  return out;
}

bool LawDistanceContext::closure_mode() const {
  return opts_.metric_closure && nodes_.size() <= kClosureLimit;
}

void LawDistanceContext::grow() {
  const std::size_t n = nodes_.size();
  if (n == stride_) return;
  std::vector<double> grown(n * n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t u = 0; u < stride_; ++u)
    for (std::size_t v = 0; v < stride_; ++v) grown[u * n + v] = raw_[u * stride_ + v];
  for (std::size_t u = 0; u < n; ++u) grown[u * n + u] = 0.0;
  raw_ = std::move(grown);
  stride_ = n;
}

void LawDistanceContext::search(const std::vector<std::size_t>& among, double cap) {
  grow();
  const std::size_t n = stride_;
  const double limit = std::min(cap, opts_.pair_cap);
  std::vector<std::pair<std::size_t, std::size_t>> todo;
  for (std::size_t a = 0; a < among.size(); ++a)
    for (std::size_t b = a + 1; b < among.size(); ++b) {
      const std::size_t u = std::min(among[a], among[b]), v = std::max(among[a], among[b]);
      if (!std::isnan(raw_[u * n + v])) continue;
      if (std::abs(nodes_[u]->mass() - nodes_[v]->mass()) >= limit) {
        if (limit == opts_.pair_cap) raw_[u * n + v] = raw_[v * n + u] = kInf;
      } else {
        todo.emplace_back(u, v);
      }
    }
  std::vector<double> found(todo.size());
  parallel_for(todo.size(), opts_.threads, [&](std::size_t t) {
    found[t] = gp_upper(*nodes_[todo[t].first], *nodes_[todo[t].second], opts_.gp);
  });
  for (std::size_t t = 0; t < todo.size(); ++t) {
    const auto [u, v] = todo[t];
    raw_[u * n + v] = raw_[v * n + u] = found[t];
  }
}

void LawDistanceContext::prepare() {
  if (!closure_mode()) {
    grow();
    return;
  }
  const std::size_t n = nodes_.size();
  if (n == prepared_nodes_ && closed_.size() == n * n) return;
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  search(all, kInf);
  closed_ = raw_;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      const double dik = closed_[i * n + k];
      if (dik == kInf) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const double via = dik + closed_[k * n + j];
        if (via < closed_[i * n + j]) closed_[i * n + j] = via;
      }
    }
  prepared_nodes_ = n;
}

double LawDistanceContext::entry(std::size_t u, std::size_t v) const {
  const double d = closure_mode() ? closed_[u * stride_ + v] : raw_[u * stride_ + v];
  return std::isnan(d) ? kInf : d;
}

double LawDistanceContext::node_distance(std::size_t u, std::size_t v) {
  prepare();
  if (!closure_mode()) search({u, v}, kInf);
  return entry(u, v);
}

LawDistanceContext::Masses LawDistanceContext::collect(const EmpiricalLaw& a,
                                                       const EmpiricalLaw& b, double min_mass) {
  std::vector<double> p(nodes_.size(), 0.0), q(nodes_.size(), 0.0);
  std::vector<char> seen(nodes_.size(), 0);
  auto take = [&](const EmpiricalLaw& law, std::vector<double>& into) {
    for (std::size_t i = 0; i < law.size(); ++i) {
      if (law.space(i).mass() < min_mass) continue;
      const std::size_t id = node_of(law.handle(i));
      into[id] += law.atom_mass(i);
      seen[id] = 1;
    }
  };
  take(a, p);
  take(b, q);
  Masses m;
  for (std::size_t id = 0; id < seen.size(); ++id) {
    if (!seen[id]) continue;
    m.nodes.push_back(id);
    m.p.push_back(p[id]);
    m.q.push_back(q[id]);
  }
  return m;
}

double LawDistanceContext::prohorov_of(const Masses& m, double cap) {
  const double sp = std::accumulate(m.p.begin(), m.p.end(), 0.0);
  const double sq = std::accumulate(m.q.begin(), m.q.end(), 0.0);
  double shared = 0.0;
  for (std::size_t i = 0; i < m.p.size(); ++i) shared += std::min(m.p[i], m.q[i]);
  // Pairing equal nodes leaves at most this much unmatched on either side.
  const double free_bound = std::max(0.0, std::max(sp, sq) - shared);
  if (free_bound == 0.0) return 0.0;
  cap = std::min(cap, free_bound);
  // The total mass gap is a lower bound; when one side dominates node by node
  // it meets the free bound and no pair distance is needed.
  if (free_bound <= std::abs(sp - sq) + 1e-12 * std::max(sp, sq)) return cap;
  prepare();
  const std::size_t k = m.nodes.size();
  std::vector<double> sub(k * k);
  if (!closure_mode()) {
    // Quick searches never beat full ones, so their answer bounds the final
    // one and pairs whose mass gap exceeds it cannot matter. Pair values may
    // undercut the computed mass gap by rounding, hence the slack.
    const std::vector<double> rough = quick_bounds(m.nodes, cap);
    const double bound = prohorov_on_relation(rough, m.p, m.q, cap);
    double top = std::max(1.0, bound);
    for (std::size_t id : m.nodes) top = std::max(top, nodes_[id]->mass());
    search(m.nodes, std::min(cap, bound + 1e-9 * top));
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) sub[a * k + b] = entry(m.nodes[a], m.nodes[b]);
  return prohorov_on_relation(sub, m.p, m.q, cap);
}

std::vector<double> LawDistanceContext::quick_bounds(const std::vector<std::size_t>& among,
                                                     double cap) {
  grow();
  const std::size_t k = among.size(), n = stride_;
  const double limit = std::min(cap, opts_.pair_cap);
  std::vector<double> out(k * k, kInf);
  std::vector<std::pair<std::size_t, std::size_t>> todo;
  for (std::size_t a = 0; a < k; ++a) {
    out[a * k + a] = 0.0;
    for (std::size_t b = a + 1; b < k; ++b) {
      const std::size_t u = std::min(among[a], among[b]), v = std::max(among[a], among[b]);
      const double known = raw_[u * n + v];
      if (!std::isnan(known)) {
        out[a * k + b] = out[b * k + a] = known;
      } else if (std::abs(nodes_[u]->mass() - nodes_[v]->mass()) < limit) {
        if (auto it = quick_.find(std::uint64_t(u) << 32 | v); it != quick_.end())
          out[a * k + b] = out[b * k + a] = it->second;
        else
          todo.emplace_back(a, b);
      }
    }
  }
  GlueSearchConfig fast = opts_.gp;
  fast.greedy_starts = std::min<std::size_t>(fast.greedy_starts, 1);
  fast.random_seeds = 0;
  fast.relation_rounds = 0;
  std::vector<double> found(todo.size());
  parallel_for(todo.size(), opts_.threads, [&](std::size_t t) {
    found[t] = gp_upper(*nodes_[among[todo[t].first]], *nodes_[among[todo[t].second]], fast);
  });
  for (std::size_t t = 0; t < todo.size(); ++t) {
    const auto [a, b] = todo[t];
    const std::size_t u = std::min(among[a], among[b]), v = std::max(among[a], among[b]);
    quick_[std::uint64_t(u) << 32 | v] = found[t];
    out[a * k + b] = out[b * k + a] = found[t];
  }
  return out;
}

double LawDistanceContext::law_prohorov(const EmpiricalLaw& a, const EmpiricalLaw& b) {
  add(a);
  add(b);
  prepare();
  return prohorov_of(collect(a, b, 0.0), kInf);
}

double LawDistanceContext::vague_distance(const EmpiricalLaw& a, const EmpiricalLaw& b) {
  add(a);
  add(b);
  prepare();
  std::vector<double> cuts;
  for (const EmpiricalLaw* law : {&a, &b})
    for (std::size_t i = 0; i < law->size(); ++i) cuts.push_back(law->space(i).mass());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  // On (cuts[i-1], cuts[i]] both restrictions keep exactly the atoms of mass >= cuts[i].
  double total = 0.0, lo = 0.0;
  for (double hi : cuts) {
    const double d = prohorov_of(collect(a, b, hi), 1.0);
    total += exp_gap(lo, hi) * std::min(1.0, d);
    lo = hi;
  }
  return total;
}

double law_prohorov(const EmpiricalLaw& a, const EmpiricalLaw& b, const LawDistanceOptions& opts) {
  LawDistanceContext ctx(opts);
  return ctx.law_prohorov(a, b);
}

double vague_distance(const EmpiricalLaw& a, const EmpiricalLaw& b,
                      const LawDistanceOptions& opts) {
  LawDistanceContext ctx(opts);
  return ctx.vague_distance(a, b);
}

LemmaBound lemma_bound_check(const EmpiricalLaw& x_law, const EmpiricalLaw& y_law, double x,
                             double eps, LawDistanceContext& ctx) {
  if (x_law.scale() != y_law.scale())
    throw PreconditionViolated("laws must share the scale factor");
  LemmaBound out;
  out.prohorov = ctx.law_prohorov(x_law, y_law);
  if (!(eps > out.prohorov)) throw PreconditionViolated("eps must exceed the Prohorov distance");
  if (!(x > eps)) throw PreconditionViolated("x must exceed eps");
  out.lhs = ctx.vague_distance(x_law, y_law);
  const double level = x - eps;
  out.rhs = x + eps * (1.0 + restrict_eps(x_law, level).total_mass() +
                       restrict_eps(y_law, level).total_mass());
  out.holds = out.lhs <= out.rhs + 1e-9;
  return out;
}

LemmaBound lemma_bound_check(const EmpiricalLaw& x_law, const EmpiricalLaw& y_law, double x,
                             double eps, const LawDistanceOptions& opts) {
  LawDistanceContext ctx(opts);
  return lemma_bound_check(x_law, y_law, x, eps, ctx);
}

nlohmann::json to_json(const EmpiricalLaw& law) {
  nlohmann::json spaces = nlohmann::json::array();
  std::vector<double> w(law.size());
  for (std::size_t i = 0; i < law.size(); ++i) {
    spaces.push_back(to_json(law.space(i)));
    w[i] = law.weight(i);
  }
  return {{"scale", law.scale()},
          {"replicates", law.replicates()},
          {"weights", std::move(w)},
          {"spaces", std::move(spaces)}};
}

EmpiricalLaw law_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  try {
    const double scale = j.value("scale", 1.0);
    const std::uint64_t reps = j.value("replicates", std::uint64_t{0});
    std::vector<SpaceHandle> spaces;
    for (const auto& s : j.at("spaces")) {
      if (s.contains("file")) {
        std::filesystem::path p = s.at("file").get<std::string>();
        if (p.is_relative()) p = base / p;
        std::ifstream in(p);
        if (!in) throw FormatError("cannot open " + p.string());
        spaces.push_back(share(space_from_json(nlohmann::json::parse(in))));
      } else {
        spaces.push_back(share(space_from_json(s)));
      }
    }
    std::vector<double> w = j.value("weights", std::vector<double>{});
    return EmpiricalLaw(scale, std::move(spaces), std::move(w), reps);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(e.what());
  }
}

}  // namespace mmm
