#include "mmm/moments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_map>

#include "mmm/error.hpp"
#include "mmm/parallel.hpp"
#include "mmm/random.hpp"

namespace mmm {

namespace {

std::size_t support_size(const FiniteMmmSpace& s) {
  std::size_t c = 0;
  for (double w : s.weights()) c += w > 0.0;
  return c;
}

bool fits(std::size_t support, std::size_t k, std::uint64_t budget) {
  double terms = 1.0;
  for (std::size_t i = 0; i < k; ++i) terms *= static_cast<double>(support);
  return terms <= static_cast<double>(budget);
}

struct AtomValue {
  double value = 0.0;
  double std_error = 0.0;
  bool exact = true;
};

AtomValue atom_value(const FiniteMmmSpace& s, const Monomial& mono, const MomentConfig& cfg,
                     std::uint64_t stream) {
  if (fits(support_size(s), mono.order(), cfg.exact_budget))
    return {evaluate_exact(s, mono, cfg.exact_budget), 0.0, true};
  if (cfg.mc_samples == 0)
    throw BudgetExceeded(std::to_string(support_size(s)) + "^" + std::to_string(mono.order()) +
                         " terms with Monte Carlo disabled");
  const McEstimate e = evaluate_mc(s, mono, cfg.mc_samples, derive_seed(cfg.seed, stream), 1);
  return {e.estimate, e.std_error, false};
}

// Per-atom values; exact values are shared between atoms holding the same space.
std::vector<AtomValue> atom_values(const EmpiricalLaw& law, const Monomial& mono,
                                   const MomentConfig& cfg,
                                   const std::function<FiniteMmmSpace(const FiniteMmmSpace&)>* view =
                                       nullptr) {
  std::vector<const FiniteMmmSpace*> distinct;
  std::vector<std::size_t> slot(law.size());
  std::unordered_map<const FiniteMmmSpace*, std::size_t> seen;
  std::vector<std::size_t> first_atom;
  for (std::size_t i = 0; i < law.size(); ++i) {
    const FiniteMmmSpace* p = &law.space(i);
    auto [it, fresh] = seen.emplace(p, distinct.size());
    if (fresh) {
      distinct.push_back(p);
      first_atom.push_back(i);
    }
    slot[i] = it->second;
  }
  std::vector<AtomValue> per_space(distinct.size());
  parallel_for(distinct.size(), cfg.threads, [&](std::size_t d) {
    if (view != nullptr) {
      per_space[d] = atom_value((*view)(*distinct[d]), mono, cfg, first_atom[d]);
    } else {
      per_space[d] = atom_value(*distinct[d], mono, cfg, first_atom[d]);
    }
  });
  std::vector<AtomValue> out(law.size());
  for (std::size_t i = 0; i < law.size(); ++i) {
    out[i] = per_space[slot[i]];
    // Shared spaces estimated by Monte Carlo get independent draws per atom.
    if (!out[i].exact && first_atom[slot[i]] != i) {
      out[i] = view != nullptr ? atom_value((*view)(law.space(i)), mono, cfg, i)
                               : atom_value(law.space(i), mono, cfg, i);
    }
  }
  return out;
}

MomentEstimate combine(const EmpiricalLaw& law, const std::vector<AtomValue>& v) {
  MomentEstimate out;
  std::vector<double> values(v.size());
  double inner = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    values[i] = v[i].value;
    out.value += law.weight(i) * v[i].value;
    const double s = law.atom_mass(i) * v[i].std_error;
    inner += s * s;
    out.exact = out.exact && v[i].exact;
  }
  out.value *= law.scale();
  out.std_error = law.replicates() >= 2 ? replicate_std_error(law, values) : std::sqrt(inner);
  return out;
}

TestFunction widen(const std::optional<TestFunction>& phi, std::size_t k) {
  if (!phi) return TestFunction::one(k);
  if (phi->arity() > k)
    throw PreconditionViolated("test function arity " + std::to_string(phi->arity()) +
                               " exceeds the moment order " + std::to_string(k));
  if (phi->arity() == k) return *phi;
  return TestFunction(k, phi->expr(), phi->bound());
}

struct MatrixAccess {
  const double* d;
  const double* e;
  std::size_t k, dim;
  double dist(std::size_t i, std::size_t j) const { return d[i * k + j]; }
  double mark(std::size_t i, std::size_t c) const { return e[i * dim + c]; }
};

}  // namespace

MomentEstimate estimate_moment(const EmpiricalLaw& law, const Monomial& mono,
                               const MomentConfig& cfg) {
  return combine(law, atom_values(law, mono, cfg));
}

MomentEstimate estimate_moment(const EmpiricalLaw& law, std::size_t k,
                               const std::optional<TestFunction>& phi, const MomentConfig& cfg) {
  if (k == 0) {
    std::vector<double> ones(law.size(), 1.0);
    return {law.total_mass(), replicate_std_error(law, ones), true};
  }
  return estimate_moment(law, Monomial(widen(phi, k)), cfg);
}

void EmpiricalMomentMeasure::add(std::vector<double> dist, std::vector<double> marks,
                                 double weight) {
  std::vector<double> key = dist;
  key.insert(key.end(), marks.begin(), marks.end());
  auto [it, fresh] = index_.emplace(std::move(key), points_.size());
  if (fresh) {
    points_.push_back({std::move(dist), std::move(marks), weight});
  } else {
    points_[it->second].weight += weight;
  }
}

double EmpiricalMomentMeasure::total_mass() const {
  double s = 0.0;
  for (const auto& p : points_) s += p.weight;
  return s;
}

double EmpiricalMomentMeasure::integrate(const TestFunction& phi) const {
  if (phi.analysis().arity > order_)
    throw PreconditionViolated("test function uses atoms beyond the moment order");
  if (phi.required_mark_dim() > mark_dim_) throw PreconditionViolated("mark dimension too small");
  double s = 0.0;
  for (const auto& p : points_) {
    MatrixAccess at{p.dist.data(), p.marks.data(), order_, mark_dim_};
    s += p.weight * phi(at);
  }
  return s;
}

EmpiricalMomentMeasure EmpiricalMomentMeasure::mark_projection() const {
  EmpiricalMomentMeasure out(order_, mark_dim_, scale_);
  for (const auto& p : points_)
    out.add(std::vector<double>(p.dist.size(), 0.0), p.marks, p.weight);
  return out;
}

EmpiricalMomentMeasure sample_moment_measure(const EmpiricalLaw& law, std::size_t k,
                                             std::uint64_t tuples_per_atom, std::uint64_t seed) {
  const std::size_t dim = law.empty() ? 0 : law.space(0).mark_dim();
  EmpiricalMomentMeasure out(k, dim, law.scale());
  if (k == 0) {
    out.add({}, {}, law.total_mass());
    return out;
  }
  if (tuples_per_atom == 0) throw PreconditionViolated("need at least one tuple per atom");
  std::vector<std::size_t> idx(k);
  for (std::size_t a = 0; a < law.size(); ++a) {
    const FiniteMmmSpace& s = law.space(a);
    if (s.mark_dim() != dim) throw InvalidSpace("law mixes mark dimensions");
    Rng rng = make_rng(seed, a);
    std::discrete_distribution<std::size_t> pick(s.weights().begin(), s.weights().end());
    const double w = law.atom_mass(a) * std::pow(s.mass(), static_cast<double>(k)) /
                     static_cast<double>(tuples_per_atom);
    for (std::uint64_t t = 0; t < tuples_per_atom; ++t) {
      for (auto& i : idx) i = pick(rng);
      std::vector<double> dist(k * k), marks(k * dim);
      for (std::size_t i = 0; i < k; ++i) {
        auto mk = s.mark(idx[i]);
        std::copy(mk.begin(), mk.end(), marks.begin() + i * dim);
        for (std::size_t j = 0; j < k; ++j) dist[i * k + j] = s.dist(idx[i], idx[j]);
      }
      out.add(std::move(dist), std::move(marks), w);
    }
  }
  return out;
}

namespace {

// Least squares via normal equations on column-scaled data.
std::vector<double> least_squares(const std::vector<std::vector<double>>& cols,
                                  const std::vector<double>& y) {
  const std::size_t p = cols.size(), n = y.size();
  std::vector<double> scale(p, 1.0);
  for (std::size_t c = 0; c < p; ++c) {
    double m = 0.0;
    for (double v : cols[c]) m = std::max(m, std::abs(v));
    if (m > 0.0) scale[c] = m;
  }
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t c = 0; c < p; ++c)
      for (std::size_t i = 0; i < n; ++i)
        a[r][c] += cols[r][i] / scale[r] * cols[c][i] / scale[c];
    for (std::size_t i = 0; i < n; ++i) a[r][p] += cols[r][i] / scale[r] * y[i];
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    if (std::abs(a[c][c]) < 1e-300) return std::vector<double>(p, std::nan(""));
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t q = c; q <= p; ++q) a[r][q] -= f * a[c][q];
    }
  }
  std::vector<double> beta(p);
  for (std::size_t c = 0; c < p; ++c) beta[c] = a[c][p] / a[c][c] / scale[c];
  return beta;
}

}  // namespace

CarlemanReport carleman_report_log(const std::vector<double>& log_m) {
  CarlemanReport r;
  const std::size_t K = log_m.size();
  std::vector<double> log_t(K);
  double sum = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    if (std::isnan(log_m[i]) || log_m[i] == -std::numeric_limits<double>::infinity())
      throw NonPositiveMoment("m_" + std::to_string(i + 1));
    const double k = static_cast<double>(i + 1);
    log_t[i] = -log_m[i] / (2.0 * k);
    r.terms.push_back(std::exp(log_t[i]));
    sum += r.terms.back();
    r.partial_sums.push_back(sum);
  }
  if (K >= 3) {
    std::vector<std::vector<double>> cols(3, std::vector<double>(K));
    for (std::size_t i = 0; i < K; ++i) {
      const double k = static_cast<double>(i + 1);
      cols[0][i] = 1.0;
      cols[1][i] = k * std::log(k);
      cols[2][i] = k * k;
    }
    const auto beta = least_squares(cols, log_m);
    r.fit_const = beta[0], r.fit_klogk = beta[1], r.fit_ksq = beta[2];
  } else {
    r.fit_const = r.fit_klogk = r.fit_ksq = std::nan("");
  }
  const std::size_t from = K / 2;
  if (K - from >= 2) {
    std::vector<std::vector<double>> cols(2, std::vector<double>(K - from));
    std::vector<double> y(K - from);
    for (std::size_t i = from; i < K; ++i) {
      cols[0][i - from] = 1.0;
      cols[1][i - from] = std::log(static_cast<double>(i + 1));
      y[i - from] = log_t[i];
    }
    r.tail_slope = least_squares(cols, y)[1];
    r.divergent_like = r.tail_slope >= -1.25;
  } else {
    r.tail_slope = std::nan("");
  }
  return r;
}

CarlemanReport carleman_report(const std::vector<double>& m) {
  std::vector<double> logs(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!(m[i] > 0.0)) throw NonPositiveMoment("m_" + std::to_string(i + 1) + " <= 0");
    logs[i] = std::log(m[i]);
  }
  return carleman_report_log(logs);
}

std::vector<NamedPhi> default_phi_family(std::size_t k, std::size_t mark_dim) {
  std::vector<NamedPhi> fam;
  fam.push_back({"one", std::nullopt});
  if (k == 0) return fam;
  for (double lam : {0.5, 1.0, 2.0}) {
    std::vector<Expr> f;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) f.push_back(Expr::exp_neg(lam, Expr::dist(i, j)));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t c = 0; c < mark_dim; ++c)
        f.push_back(Expr::exp_neg(lam, Expr::mark(i, c) * Expr::mark(i, c)));
    if (f.empty()) break;
    fam.push_back({"exp_" + format_number(lam), TestFunction(k, Expr::mul(std::move(f)))});
  }
  return fam;
}

ConvergenceReport method_of_moments_diag(const std::vector<EmpiricalLaw>& laws,
                                         const std::vector<double>& labels,
                                         const MomentsDiagConfig& cfg) {
  if (cfg.k_max < 1) throw PreconditionViolated("k_max must be >= 1");
  if (labels.size() != laws.size()) throw PreconditionViolated("one label per law");
  ConvergenceReport rep;
  rep.title = "method of moments";
  rep.notes.push_back(
      "weak convergence of moment measures is checked on a finite family: phi = 1 and "
      "products of exp(-lambda d_ij) and exp(-lambda e_ic^2), lambda in {0.5, 1, 2}");
  rep.notes.push_back(
      "renormalized: law[Phi(normalized X) g(|X|)] with g a ramp from level/2 to level");
  rep.notes.push_back("vague conclusions use k >= 1 only; the mass table adds k = 0");
  const std::size_t dim = [&] {
    for (const auto& l : laws)
      if (!l.empty()) return l.space(0).mark_dim();
    return std::size_t{0};
  }();
  const double level = cfg.renorm_level;
  auto ramp = [level](double x) {
    return std::clamp((x - 0.5 * level) / (0.5 * level), 0.0, 1.0);
  };
  std::function<FiniteMmmSpace(const FiniteMmmSpace&)> unit = [](const FiniteMmmSpace& s) {
    return normalize(s).space;
  };

  Table& mass = rep.table("mass", {"n", "value", "std_error", "cauchy_gap"});
  double prev_mass = std::nan("");
  for (std::size_t li = 0; li < laws.size(); ++li) {
    const auto e = estimate_moment(laws[li], 0);
    nlohmann::json gap = std::isnan(prev_mass) ? nlohmann::json() : nlohmann::json(std::abs(e.value - prev_mass));
    mass.add({labels[li], e.value, e.std_error, gap});
    prev_mass = e.value;
  }

  Table& mom = rep.table("moments", {"n", "k", "phi", "value", "std_error", "renormalized",
                                     "cauchy_gap", "exact"});
  for (std::size_t k = 1; k <= cfg.k_max; ++k) {
    const std::vector<NamedPhi> fam =
        cfg.families.size() >= k ? cfg.families[k - 1] : default_phi_family(k, dim);
    for (const auto& f : fam) {
      double prev = std::nan("");
      const Monomial mono(widen(f.phi, k));
      for (std::size_t li = 0; li < laws.size(); ++li) {
        const EmpiricalLaw& law = laws[li];
        MomentConfig mc = cfg.moment;
        mc.seed = derive_seed(cfg.moment.seed, li * 1000 + k);
        const auto v = atom_values(law, mono, mc);
        const auto e = combine(law, v);
        const auto u = atom_values(law, mono, mc, &unit);
        double renorm = 0.0;
        for (std::size_t i = 0; i < law.size(); ++i)
          renorm += law.weight(i) * u[i].value * ramp(law.space(i).mass());
        renorm *= law.scale();
        nlohmann::json gap = std::isnan(prev) ? nlohmann::json() : nlohmann::json(std::abs(e.value - prev));
        mom.add({labels[li], k, f.name, e.value, e.std_error, renorm, gap, e.exact});
        prev = e.value;
      }
    }
  }

  if (!laws.empty()) {
    std::vector<double> m;
    for (std::size_t k = 1; k <= cfg.k_max; ++k) m.push_back(estimate_moment(laws.back(), k).value);
    Table& car = rep.table("carleman", {"k", "m_k", "term", "partial_sum"});
    try {
      const auto c = carleman_report(m);
      for (std::size_t i = 0; i < m.size(); ++i) car.add({i + 1, m[i], c.terms[i], c.partial_sums[i]});
      rep.scalars["carleman_fit_klogk"] = c.fit_klogk;
      rep.scalars["carleman_fit_ksq"] = c.fit_ksq;
      rep.scalars["carleman_tail_slope"] = c.tail_slope;
      rep.flag("carleman_divergent_like", c.divergent_like,
               "terms decay no faster than k^-1.25 over the upper half of k");
    } catch (const NonPositiveMoment& e) {
      rep.notes.push_back(e.what());
    }
  }
  return rep;
}

}  // namespace mmm
