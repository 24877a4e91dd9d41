#include "mmm/genealogy.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include "mmm/error.hpp"
#include "mmm/parallel.hpp"

namespace mmm {

namespace {

double or_default(double v, double fallback) { return std::isnan(v) ? fallback : v; }

constexpr std::uint64_t kChainChunk = 4096;
constexpr std::uint64_t kTreeChunk = 1024;

}  // namespace

OffspringLaw::OffspringLaw(OffspringFamily f, std::vector<double> pmf)
    : family_(f), pmf_(std::move(pmf)) {
  switch (family_) {
    case OffspringFamily::GeometricHalf:
      f1_ = 1.0, f2_ = 2.0, f3_ = 6.0;
      break;
    case OffspringFamily::Poisson1:
      f1_ = f2_ = f3_ = 1.0;
      break;
    case OffspringFamily::BinaryHalf:
      f1_ = 1.0, f2_ = 1.0, f3_ = 0.0;
      break;
    case OffspringFamily::Custom:
      for (std::size_t k = 0; k < pmf_.size(); ++k) {
        const double kd = static_cast<double>(k);
        f1_ += pmf_[k] * kd;
        f2_ += pmf_[k] * kd * (kd - 1.0);
        f3_ += pmf_[k] * kd * (kd - 1.0) * (kd - 2.0);
      }
      break;
  }
}

OffspringLaw OffspringLaw::geometric_half() { return {OffspringFamily::GeometricHalf, {}}; }
OffspringLaw OffspringLaw::poisson_1() { return {OffspringFamily::Poisson1, {}}; }
OffspringLaw OffspringLaw::binary_half() { return {OffspringFamily::BinaryHalf, {0.5, 0.0, 0.5}}; }

OffspringLaw OffspringLaw::custom(std::vector<double> pmf) {
  if (pmf.empty()) throw InvalidSpace("empty offspring pmf");
  double s = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidSpace("offspring pmf must be >= 0");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-12) throw InvalidSpace("offspring pmf must sum to 1");
  return {OffspringFamily::Custom, std::move(pmf)};
}

OffspringLaw OffspringLaw::named(const std::string& name) {
  if (name == "geometric_half") return geometric_half();
  if (name == "poisson_1") return poisson_1();
  if (name == "binary_half") return binary_half();
  throw FormatError("unknown offspring family '" + name + "'");
}

std::string OffspringLaw::name() const {
  switch (family_) {
    case OffspringFamily::GeometricHalf:
      return "geometric_half";
    case OffspringFamily::Poisson1:
      return "poisson_1";
    case OffspringFamily::BinaryHalf:
      return "binary_half";
    case OffspringFamily::Custom:
      return "custom";
  }
  return "custom";
}

double OffspringLaw::pgf(double s) const {
  switch (family_) {
    case OffspringFamily::GeometricHalf:
      return 1.0 / (2.0 - s);
    case OffspringFamily::Poisson1:
      return std::exp(s - 1.0);
    case OffspringFamily::BinaryHalf:
      return 0.5 * (1.0 + s * s);
    case OffspringFamily::Custom: {
      double v = 0.0;
      for (auto it = pmf_.rbegin(); it != pmf_.rend(); ++it) v = v * s + *it;
      return v;
    }
  }
  return 0.0;
}

std::uint64_t OffspringLaw::sample(Rng& rng) const {
  switch (family_) {
    case OffspringFamily::GeometricHalf:
      return std::geometric_distribution<std::uint64_t>(0.5)(rng);
    case OffspringFamily::Poisson1:
      return std::poisson_distribution<std::uint64_t>(1.0)(rng);
    case OffspringFamily::BinaryHalf:
      return std::bernoulli_distribution(0.5)(rng) ? 2 : 0;
    case OffspringFamily::Custom:
      return std::discrete_distribution<std::uint64_t>(pmf_.begin(), pmf_.end())(rng);
  }
  return 0;
}

std::uint64_t OffspringLaw::sample_sum(std::uint64_t parents, Rng& rng) const {
  if (parents == 0) return 0;
  switch (family_) {
    case OffspringFamily::GeometricHalf:
      return std::negative_binomial_distribution<std::uint64_t>(parents, 0.5)(rng);
    case OffspringFamily::Poisson1:
      return std::poisson_distribution<std::uint64_t>(static_cast<double>(parents))(rng);
    case OffspringFamily::BinaryHalf:
      return 2 * std::binomial_distribution<std::uint64_t>(parents, 0.5)(rng);
    case OffspringFamily::Custom: {
      std::discrete_distribution<std::uint64_t> d(pmf_.begin(), pmf_.end());
      std::uint64_t s = 0;
      for (std::uint64_t i = 0; i < parents; ++i) s += d(rng);
      return s;
    }
  }
  return 0;
}

GenealogySample simulate(const OffspringLaw& off, std::size_t n, std::size_t mark_dim, Rng& rng) {
  GenealogySample s;
  s.horizon = n;
  s.mark_dim = mark_dim;
  s.parent.resize(n + 1);
  s.positions.resize(n + 1);
  s.alive.assign(n + 1, 0);
  s.alive[0] = 1;
  s.positions[0].assign(mark_dim, 0.0);
  std::normal_distribution<double> step(0.0, 1.0);
  for (std::size_t g = 1; g <= n; ++g) {
    const std::uint64_t parents = s.alive[g - 1];
    if (parents == 0) break;
    auto& par = s.parent[g];
    auto& pos = s.positions[g];
    const auto& prev = s.positions[g - 1];
    for (std::uint64_t i = 0; i < parents; ++i) {
      const std::uint64_t kids = off.sample(rng);
      for (std::uint64_t c = 0; c < kids; ++c) {
        par.push_back(static_cast<std::uint32_t>(i));
        for (std::size_t d = 0; d < mark_dim; ++d) pos.push_back(prev[i * mark_dim + d] + step(rng));
      }
    }
    s.alive[g] = par.size();
  }
  return s;
}

GenealogySample simulate(const OffspringLaw& off, std::size_t n, std::size_t mark_dim,
                         std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  return simulate(off, n, mark_dim, rng);
}

FiniteMmmSpace to_mmm(const GenealogySample& sample, const GenealogyScaling& scaling) {
  const std::size_t n = sample.horizon;
  const std::size_t dim = sample.mark_dim;
  const std::uint64_t z = sample.survivors();
  if (z == 0) return FiniteMmmSpace(dim);
  const double nd = static_cast<double>(n);
  const double mass = or_default(scaling.mass_per_individual, 1.0 / nd);
  const double ddiv = or_default(scaling.distance_divisor, nd);
  const double mdiv = or_default(scaling.mark_divisor, std::sqrt(nd));

  // Adjacent survivors in planar order: their MRCA generation.
  std::vector<std::size_t> anc(z);
  for (std::size_t i = 0; i < z; ++i) anc[i] = i;
  std::vector<std::ptrdiff_t> meet(z > 0 ? z - 1 : 0, -1);
  std::size_t open = meet.size();
  for (std::size_t g = n + 1; g-- > 0 && open > 0;) {
    for (std::size_t i = 0; i + 1 < z; ++i) {
      if (meet[i] < 0 && anc[i] == anc[i + 1]) {
        meet[i] = static_cast<std::ptrdiff_t>(g);
        --open;
      }
    }
    if (g > 0)
      for (auto& a : anc) a = sample.parent[g][a];
  }
  std::vector<double> h(meet.size());
  for (std::size_t i = 0; i < meet.size(); ++i)
    h[i] = (nd - static_cast<double>(std::max<std::ptrdiff_t>(meet[i], 0))) / ddiv;

  std::vector<double> dist(z * z, 0.0);
  for (std::size_t i = 0; i < z; ++i) {
    double run = 0.0;
    for (std::size_t j = i + 1; j < z; ++j) {
      run = std::max(run, h[j - 1]);
      dist[i * z + j] = dist[j * z + i] = run;
    }
  }
  std::vector<double> marks(sample.positions[n].begin(), sample.positions[n].end());
  for (double& m : marks) m /= mdiv;
  return FiniteMmmSpace(FiniteMmmSpace::Trusted{}, dim, std::move(dist), std::move(marks),
                        std::vector<double>(z, mass));
}

GfMoments gf_oracle(const OffspringLaw& off, std::size_t n) {
  GfMoments out;
  if (off.family() == OffspringFamily::GeometricHalf) {
    out.survival = 1.0 / (static_cast<double>(n) + 1.0);
  } else {
    double q = 0.0;
    for (std::size_t t = 0; t < n; ++t) q = off.pgf(q);
    out.survival = 1.0 - q;
  }
  // Factorial moments of Z_t from f_t = f o f_(t-1).
  double m1 = 1.0, m2 = 0.0, m3 = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double n3 = off.f3() * m1 * m1 * m1 + 3.0 * off.f2() * m1 * m2 + off.f1() * m3;
    const double n2 = off.f2() * m1 * m1 + off.f1() * m2;
    m1 *= off.f1();
    m2 = n2;
    m3 = n3;
  }
  out.mean = m1;
  out.second = m2 + m1;
  out.third = m3 + 3.0 * m2 + m1;
  return out;
}

std::vector<std::size_t> cutoff(const GenealogySample& sample, const Cutoff& c) {
  const std::uint64_t z = sample.survivors();
  const std::size_t n = sample.horizon;
  std::vector<std::size_t> keep;
  if (z == 0) return keep;
  auto all = [&] {
    keep.resize(z);
    for (std::size_t i = 0; i < z; ++i) keep[i] = i;
    return keep;
  };
  if (c.kind == Cutoff::Kind::MassFloor) {
    if (static_cast<double>(z) >= c.param * static_cast<double>(n)) return all();
    return keep;
  }
  if (c.param <= 0.0) return all();
  const double level = std::floor(static_cast<double>(n) * (1.0 - c.param));
  const std::size_t target = level <= 0.0 ? 0 : static_cast<std::size_t>(level);
  std::vector<std::size_t> anc(z);
  for (std::size_t i = 0; i < z; ++i) anc[i] = i;
  for (std::size_t g = n; g > target; --g)
    for (auto& a : anc) a = sample.parent[g][a];
  // Planar order keeps descendants of one ancestor contiguous.
  for (std::size_t i = 0; i < z; ++i) {
    const bool shared = (i > 0 && anc[i - 1] == anc[i]) || (i + 1 < z && anc[i + 1] == anc[i]);
    if (shared) keep.push_back(i);
  }
  return keep;
}

std::vector<std::uint64_t> sample_counts(const OffspringLaw& off,
                                         const std::vector<std::size_t>& horizons, Rng& rng) {
  std::vector<std::uint64_t> out(horizons.size(), 0);
  std::uint64_t z = 1;
  std::size_t t = 0;
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    while (t < horizons[h] && z > 0) {
      z = off.sample_sum(z, rng);
      ++t;
    }
    if (z == 0) break;
    out[h] = z;
  }
  return out;
}

GenealogyEnsemble simulate_ensemble(const EnsembleConfig& cfg, bool keep_samples) {
  if (cfg.n == 0) throw PreconditionViolated("horizon must be >= 1");
  if (cfg.replicates == 0) throw PreconditionViolated("need at least one replicate");
  struct Chunk {
    std::vector<std::uint64_t> rep;
    std::vector<SpaceHandle> spaces;
    std::vector<GenealogySample> samples;
  };
  const std::uint64_t chunks = (cfg.replicates + kTreeChunk - 1) / kTreeChunk;
  std::vector<Chunk> parts(chunks);
  parallel_for(chunks, cfg.threads, [&](std::size_t c) {
    const std::uint64_t end = std::min(cfg.replicates, (c + 1) * kTreeChunk);
    for (std::uint64_t r = c * kTreeChunk; r < end; ++r) {
      Rng rng = make_rng(cfg.seed, r);
      GenealogySample s = simulate(cfg.off, cfg.n, cfg.mark_dim, rng);
      if (s.survivors() == 0) continue;
      parts[c].rep.push_back(r);
      parts[c].spaces.push_back(share(to_mmm(s, cfg.scaling)));
      if (keep_samples) parts[c].samples.push_back(std::move(s));
    }
  });
  GenealogyEnsemble ens;
  ens.n = cfg.n;
  std::vector<SpaceHandle> spaces;
  for (auto& p : parts) {
    ens.replicate.insert(ens.replicate.end(), p.rep.begin(), p.rep.end());
    spaces.insert(spaces.end(), p.spaces.begin(), p.spaces.end());
    for (auto& s : p.samples) ens.samples.push_back(std::move(s));
  }
  const double scale = or_default(cfg.law_scale, static_cast<double>(cfg.n));
  ens.law = EmpiricalLaw::from_replicates(scale, std::move(spaces), cfg.replicates);
  return ens;
}

EmpiricalLaw cutoff_law(const GenealogyEnsemble& ens, const Cutoff& c) {
  const EmpiricalLaw& law = ens.law;
  std::vector<SpaceHandle> kept;
  std::vector<double> w;
  const bool trees = !ens.samples.empty();
  if (!trees && c.kind == Cutoff::Kind::ReducedTree && c.param > 0.0)
    throw PreconditionViolated("reduced_tree cutoffs need the simulated trees");
  for (std::size_t i = 0; i < law.size(); ++i) {
    std::vector<std::size_t> keep;
    if (trees) {
      keep = cutoff(ens.samples[i], c);
    } else {
      // Without trees only whole-space decisions are possible.
      const std::size_t z = law.space(i).size();
      const double n = static_cast<double>(ens.n);
      if (c.kind == Cutoff::Kind::ReducedTree || static_cast<double>(z) >= c.param * n) {
        keep.resize(z);
        for (std::size_t k = 0; k < z; ++k) keep[k] = k;
      }
    }
    if (keep.empty()) continue;
    if (keep.size() == law.space(i).size()) {
      kept.push_back(law.handle(i));
    } else {
      kept.push_back(share(restrict(law.space(i), keep)));
    }
    w.push_back(law.weight(i));
  }
  return EmpiricalLaw(law.scale(), std::move(kept), std::move(w), law.replicates());
}

std::vector<EmpiricalLaw> mass_skeleton_laws(const OffspringLaw& off,
                                             const std::vector<std::size_t>& horizons,
                                             std::uint64_t replicates, std::uint64_t seed,
                                             unsigned threads) {
  if (horizons.empty()) return {};
  for (std::size_t h = 0; h < horizons.size(); ++h)
    if (horizons[h] == 0 || (h > 0 && horizons[h] <= horizons[h - 1]))
      throw PreconditionViolated("horizons must be positive and strictly increasing");
  const std::size_t hn = horizons.size();
  const std::uint64_t chunks = (replicates + kChainChunk - 1) / kChainChunk;
  // Survivor counts per chunk and horizon, in replicate order.
  std::vector<std::vector<std::vector<std::uint64_t>>> found(
      chunks, std::vector<std::vector<std::uint64_t>>(hn));
  parallel_for(chunks, threads, [&](std::size_t c) {
    Rng rng = make_rng(seed, c);
    const std::uint64_t end = std::min(replicates, (c + 1) * kChainChunk);
    for (std::uint64_t r = c * kChainChunk; r < end; ++r) {
      const auto z = sample_counts(off, horizons, rng);
      for (std::size_t h = 0; h < hn; ++h)
        if (z[h] > 0) found[c][h].push_back(z[h]);
    }
  });
  std::vector<EmpiricalLaw> laws;
  for (std::size_t h = 0; h < hn; ++h) {
    const double nd = static_cast<double>(horizons[h]);
    std::unordered_map<std::uint64_t, SpaceHandle> point;
    std::vector<SpaceHandle> spaces;
    for (const auto& part : found)
      for (std::uint64_t z : part[h]) {
        auto& slot = point[z];
        if (!slot)
          slot = share(FiniteMmmSpace(FiniteMmmSpace::Trusted{}, 0, {0.0}, {},
                                      {static_cast<double>(z) / nd}));
        spaces.push_back(slot);
      }
    laws.push_back(EmpiricalLaw::from_replicates(nd, std::move(spaces), replicates));
  }
  return laws;
}

void write_jsonl(std::ostream& out, const GenealogyEnsemble& ens, const EnsembleConfig& cfg) {
  for (std::size_t i = 0; i < ens.law.size(); ++i) {
    nlohmann::json line = {{"n", cfg.n},
                           {"seed", cfg.seed},
                           {"family", cfg.off.name()},
                           {"replicate", ens.replicate[i]},
                           {"space", to_json(ens.law.space(i))}};
    out << line.dump() << '\n';
  }
}

}  // namespace mmm
