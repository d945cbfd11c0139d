#include "slowssep/ensemble.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "slowssep/error.hpp"
#include "slowssep/parallel.hpp"

namespace slowssep {

namespace {

// Stream tags for substream().
constexpr std::uint64_t kTagInitial = 0x1001;
constexpr std::uint64_t kTagRings = 0x1002;
constexpr std::uint64_t kTagEvents = 0x1003;
constexpr std::uint64_t kTagBulkBatch = 0x1004;

constexpr int kLanes = 512;

}  // namespace

Configuration InitialCondition::sample(int lattice_n, Xoshiro256& rng) const {
  Configuration c(lattice_n);
  const int sites = c.sites();
  switch (kind) {
    case InitialKind::Empty:
      break;
    case InitialKind::Full:
      c = Configuration::full(lattice_n);
      break;
    case InitialKind::Product: {
      require(value >= 0 && value <= 1, "initial condition: density must lie in [0,1]");
      for (int x = 1; x <= sites; ++x) c.set(x, rng.uniform() < value);
      break;
    }
    case InitialKind::FixedMass: {
      require(value >= 0 && value <= 1, "initial condition: mass must lie in [0,1]");
      const int k = std::clamp(static_cast<int>(std::lround(value * lattice_n)), 0, sites);
      std::vector<int> idx(static_cast<std::size_t>(sites));
      for (int i = 0; i < sites; ++i) idx[static_cast<std::size_t>(i)] = i + 1;
      // partial Fisher-Yates: the first k entries are a uniform k-subset
      for (int i = 0; i < k; ++i) {
        const auto j = static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(sites - i));
        std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
        c.set(idx[static_cast<std::size_t>(i)], true);
      }
      break;
    }
  }
  return c;
}

const char* to_string(EnsembleKernel k) {
  switch (k) {
    case EnsembleKernel::Auto:
      return "auto";
    case EnsembleKernel::NextEvent:
      return "next-event";
    case EnsembleKernel::Stirring:
      return "stirring";
    case EnsembleKernel::Bitsliced:
      return "bitsliced";
  }
  return "?";
}

EnsembleKernel resolve_kernel(const EnsembleRequest& request) {
  if (request.kernel != EnsembleKernel::Auto) return request.kernel;
  if (request.params.N - 2 <= 64 && request.replicas >= 256) return EnsembleKernel::Bitsliced;
  return EnsembleKernel::Stirring;
}

namespace {

// Boundary dynamics in resampling form: site 1 (resp. N-1) rings at rate
// b * c(t) with c = e^G r + e^{-G} (1 - r) and takes a fresh Bernoulli(e^G r / c)
// value. This reproduces insertion rate b e^G r and removal rate b e^{-G}(1-r).
struct Ring {
  double time;
  std::uint64_t bulk_ticks;  // bulk ticks since the previous ring
  std::uint8_t right;        // 0: site 1, 1: site N-1
  std::uint8_t value;
};

class RingSampler {
 public:
  RingSampler(const SimParams& p, double bulk_tick_rate) : p_(p), bulk_tick_rate_(bulk_tick_rate) {
    bound_ = 1.0;
    if (p.tilted()) {
      const auto& g = *p.tilt;
      bound_ = 0;
      auto consider = [&](double gv) {
        bound_ = std::max(bound_, std::max(ring_factor(p.alpha, gv), ring_factor(p.beta, gv)));
      };
      for (Eigen::Index k = 0; k < g.nodes(); ++k)
        if (g.grid()(k) <= p.horizon) consider(g.values()(k));
      consider(g(p.horizon));
    }
    candidate_rate_ = 2 * p.boundary_rate() * bound_;
    if (p.tilted()) {
      const auto& g = *p.tilt;
      const double T = p.horizon;
      const double in = p.alpha + p.beta, out = 2 - in;
      excess_ = p.boundary_rate() * (in * (g.integrate_exp(0, T, +1) - T) + out * (g.integrate_exp(0, T, -1) - T));
    }
  }

  // Returns log dP/dP^G of the ring process: each ring contributes -G (+G)
  // when it writes 1 (0), plus b int sum_sides (c - 1) ds.
  double sample(Xoshiro256& rng, std::vector<Ring>& out) const {
    out.clear();
    double log_w = 0;
    std::exponential_distribution<double> exp1(1.0);
    double t = 0, last = 0;
    for (;;) {
      t += exp1(rng) / candidate_rate_;
      if (t > p_.horizon) break;
      const bool right = (rng() >> 63) != 0;
      const double r = right ? p_.beta : p_.alpha;
      double q = r;
      if (p_.tilted()) {
        const double g = (*p_.tilt)(t);
        const double c = ring_factor(r, g);
        if (rng.uniform() * bound_ >= c) continue;
        q = std::exp(g) * r / c;
      }
      const std::uint8_t value = rng.uniform() < q ? 1 : 0;
      if (p_.tilted()) log_w += value ? -(*p_.tilt)(t) : (*p_.tilt)(t);
      std::poisson_distribution<std::uint64_t> ticks(bulk_tick_rate_ * (t - last));
      const std::uint64_t n = (t > last) ? ticks(rng) : 0;
      out.push_back({t, n, static_cast<std::uint8_t>(right), value});
      last = t;
    }
    return log_w + excess_;
  }

 private:
  static double ring_factor(double r, double g) { return std::exp(g) * r + std::exp(-g) * (1 - r); }

  const SimParams& p_;
  double bulk_tick_rate_;
  double bound_ = 1.0;
  double candidate_rate_ = 0;
  double excess_ = 0;
};

// Writes mass observations and running max for one replica given its ring
// outcomes (delta[i] in {-1,0,1} for ring i).
void record_mass(const std::vector<Ring>& rings, const std::vector<std::int8_t>& delta, int count0, double N,
                 const std::vector<double>& times, EnsembleResult& res, Eigen::Index row) {
  int count = count0;
  int best = count0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < rings.size(); ++i) {
    while (k < times.size() && times[k] < rings[i].time) res.mass(row, static_cast<Eigen::Index>(k++)) = count / N;
    count += delta[i];
    best = std::max(best, count);
  }
  while (k < times.size()) res.mass(row, static_cast<Eigen::Index>(k++)) = count / N;
  res.max_mass(row) = best / N;
  res.initial_mass(row) = count0 / N;
}

std::uint32_t bond_from_bits(std::uint32_t bits, std::uint32_t nb, Xoshiro256& rng) {
  // Lemire's multiply-shift with rejection.
  std::uint64_t m = static_cast<std::uint64_t>(bits) * nb;
  auto low = static_cast<std::uint32_t>(m);
  if (low < nb) {
    const std::uint32_t threshold = (0u - nb) % nb;
    while (low < threshold) {
      m = static_cast<std::uint64_t>(static_cast<std::uint32_t>(rng())) * nb;
      low = static_cast<std::uint32_t>(m);
    }
  }
  return static_cast<std::uint32_t>(m >> 32);
}

void run_stirring(const EnsembleRequest& rq, EnsembleResult& res) {
  const SimParams& p = rq.params;
  const int sites = p.N - 1;
  const auto nb = static_cast<std::uint32_t>(p.N - 2);
  const RingSampler rings_of(p, p.bulk_rate() * nb);
  parallel_for(rq.replicas, [&](std::size_t r) {
    Xoshiro256 init_rng(substream(p.seed, kTagInitial, r));
    const Configuration c0 = rq.initial.sample(p.N, init_rng);
    Xoshiro256 rng(substream(p.seed, kTagRings, r));
    std::vector<Ring> rings;
    res.log_weight(static_cast<Eigen::Index>(r)) = rings_of.sample(rng, rings);
    std::vector<std::uint8_t> occ(c0.occupancy());
    std::vector<std::int8_t> delta(rings.size());
    std::uint8_t* a = occ.data();
    for (std::size_t i = 0; i < rings.size(); ++i) {
      std::uint64_t n = rings[i].bulk_ticks;
      for (; n >= 2; n -= 2) {
        const std::uint64_t bits = rng();
        const std::uint32_t b1 = bond_from_bits(static_cast<std::uint32_t>(bits), nb, rng);
        std::swap(a[b1], a[b1 + 1]);
        const std::uint32_t b2 = bond_from_bits(static_cast<std::uint32_t>(bits >> 32), nb, rng);
        std::swap(a[b2], a[b2 + 1]);
      }
      if (n == 1) {
        const std::uint32_t b1 = bond_from_bits(static_cast<std::uint32_t>(rng()), nb, rng);
        std::swap(a[b1], a[b1 + 1]);
      }
      std::uint8_t& site = rings[i].right ? a[sites - 1] : a[0];
      delta[i] = static_cast<std::int8_t>(static_cast<int>(rings[i].value) - static_cast<int>(site));
      site = rings[i].value;
    }
    record_mass(rings, delta, c0.particle_count(), p.N, rq.observe_times, res, static_cast<Eigen::Index>(r));
  });
}

void run_next_event(const EnsembleRequest& rq, EnsembleResult& res) {
  const SimParams& p = rq.params;
  parallel_for(rq.replicas, [&](std::size_t r) {
    Xoshiro256 init_rng(substream(p.seed, kTagInitial, r));
    const Configuration c0 = rq.initial.sample(p.N, init_rng);
    SimParams pr = p;
    pr.seed = substream(p.seed, kTagEvents, r);
    SimulationOptions opt;
    opt.observe_times = rq.observe_times;
    Eigen::Index k = 0;
    const auto row = static_cast<Eigen::Index>(r);
    opt.observer = [&](double, const Configuration& c) { res.mass(row, k++) = c.particle_count() / double(p.N); };
    const Trajectory tr = simulate(pr, c0, opt);
    res.max_mass(row) = tr.max_mass;
    res.log_weight(row) = tr.log_weight;
    res.initial_mass(row) = c0.particle_count() / double(p.N);
  });
}

// ---------------------------------------------------------------------------
// Bit-sliced kernel: bit l of word S[x] is the occupation of site x+1 in lane l.
// Every bulk tick picks one of Slots bond slots per lane; slots >= N-2 are
// no-ops, so the bulk tick rate is (per-bond rate) * Slots. Each lane follows
// the exact stirring dynamics with its own ring schedule.

typedef std::uint64_t Word __attribute__((vector_size(64)));
constexpr int kWords = kLanes / 64;
static_assert(sizeof(Word) / sizeof(std::uint64_t) == kWords);

inline Word rotl(Word x, int k) { return (x << k) | (x >> (64 - k)); }

struct LaneRng {
  Word s0, s1, s2, s3;
  explicit LaneRng(std::uint64_t key) {
    for (int i = 0; i < kWords; ++i) {
      std::uint64_t x = substream(key, static_cast<std::uint64_t>(i));
      s0[i] = x = mix64(x);
      s1[i] = x = mix64(x);
      s2[i] = x = mix64(x);
      s3[i] = mix64(x);
    }
  }
  Word next() {
    const Word r = rotl(s0 + s3, 23) + s0;
    const Word t = s1 << 17;
    s2 ^= s0;
    s3 ^= s1;
    s1 ^= s2;
    s0 ^= s3;
    s2 ^= t;
    s3 = rotl(s3, 45);
    return r;
  }
};

struct PendingRing {
  std::uint64_t step;
  std::uint16_t lane;
  std::uint16_t index;  // ring index within the lane
};

template <int Slots>
void run_bitsliced_batch(const EnsembleRequest& rq, const RingSampler& rings_of, std::size_t batch,
                         EnsembleResult& res) {
  constexpr int kBits = std::countr_zero(static_cast<unsigned>(Slots));
  const SimParams& p = rq.params;
  const int sites = p.N - 1;
  const int nb = p.N - 2;
  const std::size_t first = batch * kLanes;
  const int lanes = static_cast<int>(std::min<std::size_t>(kLanes, rq.replicas - first));

  Word S[Slots + 1];
  for (auto& w : S) w = Word{};
  std::vector<std::vector<Ring>> rings(static_cast<std::size_t>(lanes));
  std::vector<std::vector<std::int8_t>> delta(static_cast<std::size_t>(lanes));
  std::vector<int> count0(static_cast<std::size_t>(lanes));
  std::vector<PendingRing> pending;
  for (int l = 0; l < lanes; ++l) {
    const std::size_t r = first + static_cast<std::size_t>(l);
    Xoshiro256 init_rng(substream(p.seed, kTagInitial, r));
    const Configuration c0 = rq.initial.sample(p.N, init_rng);
    count0[static_cast<std::size_t>(l)] = c0.particle_count();
    for (int x = 0; x < sites; ++x)
      if (c0.occupancy()[static_cast<std::size_t>(x)]) S[x][l >> 6] |= std::uint64_t{1} << (l & 63);
    Xoshiro256 rng(substream(p.seed, kTagRings, r));
    auto& lr = rings[static_cast<std::size_t>(l)];
    res.log_weight(static_cast<Eigen::Index>(r)) = rings_of.sample(rng, lr);
    delta[static_cast<std::size_t>(l)].resize(lr.size());
    std::uint64_t step = 0;
    for (std::size_t i = 0; i < lr.size(); ++i) {
      step += lr[i].bulk_ticks;
      pending.push_back({step, static_cast<std::uint16_t>(l), static_cast<std::uint16_t>(i)});
    }
  }
  std::stable_sort(pending.begin(), pending.end(),
                   [](const PendingRing& a, const PendingRing& b) { return a.step < b.step; });

  LaneRng gen_a(substream(p.seed, kTagBulkBatch, 2 * batch));
  LaneRng gen_b(substream(p.seed, kTagBulkBatch, 2 * batch + 1));

  auto bulk_step = [&] {
    Word M[Slots];
    if constexpr (kBits == 0) {
      M[0] = ~Word{};
    } else {
      Word r[kBits];
      for (int k = 0; k < kBits; ++k) r[k] = (k & 1) ? gen_b.next() : gen_a.next();
      M[0] = ~r[0];
      M[1] = r[0];
      for (int k = 1, w = 2; k < kBits; ++k, w *= 2) {
        for (int b = w - 1; b >= 0; --b) {
          const Word m = M[b];
          M[b + w] = m & r[k];
          M[b] = m & ~r[k];
        }
      }
    }
    // Lanes pick exactly one slot, so the swaps below touch disjoint lane bits.
    Word D[Slots];
    for (int b = 0; b < nb; ++b) D[b] = (S[b] ^ S[b + 1]) & M[b];
    for (int b = 0; b < nb; ++b) {
      S[b] ^= D[b];
      S[b + 1] ^= D[b];
    }
  };

  std::uint64_t done = 0;
  for (const PendingRing& ev : pending) {
    for (; done < ev.step; ++done) bulk_step();
    const Ring& ring = rings[ev.lane][ev.index];
    const int x = ring.right ? sites - 1 : 0;
    const int w = ev.lane >> 6;
    const std::uint64_t bit = std::uint64_t{1} << (ev.lane & 63);
    const int old = (S[x][w] & bit) ? 1 : 0;
    if (ring.value)
      S[x][w] |= bit;
    else
      S[x][w] &= ~bit;
    delta[ev.lane][ev.index] = static_cast<std::int8_t>(ring.value - old);
  }
  for (int l = 0; l < lanes; ++l)
    record_mass(rings[static_cast<std::size_t>(l)], delta[static_cast<std::size_t>(l)],
                count0[static_cast<std::size_t>(l)], p.N, rq.observe_times, res,
                static_cast<Eigen::Index>(first + static_cast<std::size_t>(l)));
}

void run_bitsliced(const EnsembleRequest& rq, EnsembleResult& res) {
  const SimParams& p = rq.params;
  const int nb = p.N - 2;
  require(nb <= 64, "bitsliced kernel supports N <= 66");
  const unsigned slots = std::bit_ceil(static_cast<unsigned>(nb));
  const RingSampler rings_of(p, p.bulk_rate() * slots);
  const std::size_t batches = (rq.replicas + kLanes - 1) / kLanes;
  parallel_for(batches, [&](std::size_t batch) {
    switch (slots) {
      case 1: run_bitsliced_batch<1>(rq, rings_of, batch, res); break;
      case 2: run_bitsliced_batch<2>(rq, rings_of, batch, res); break;
      case 4: run_bitsliced_batch<4>(rq, rings_of, batch, res); break;
      case 8: run_bitsliced_batch<8>(rq, rings_of, batch, res); break;
      case 16: run_bitsliced_batch<16>(rq, rings_of, batch, res); break;
      case 32: run_bitsliced_batch<32>(rq, rings_of, batch, res); break;
      default: run_bitsliced_batch<64>(rq, rings_of, batch, res); break;
    }
  });
}

}  // namespace

EnsembleResult sample_ensemble(const EnsembleRequest& request) {
  request.params.validate();
  require(request.replicas >= 1, "ensemble: need at least one replica");
  require(std::is_sorted(request.observe_times.begin(), request.observe_times.end()),
          "ensemble: observation times must be sorted");
  for (double t : request.observe_times)
    require(t >= 0 && t <= request.params.horizon, "ensemble: observation times must lie in [0,T]");

  EnsembleResult res;
  const auto reps = static_cast<Eigen::Index>(request.replicas);
  res.mass = Eigen::MatrixXd::Zero(reps, static_cast<Eigen::Index>(request.observe_times.size()));
  res.max_mass = Eigen::VectorXd::Zero(reps);
  res.initial_mass = Eigen::VectorXd::Zero(reps);
  res.log_weight = Eigen::VectorXd::Zero(reps);
  res.kernel = resolve_kernel(request);
  switch (res.kernel) {
    case EnsembleKernel::NextEvent:
      run_next_event(request, res);
      break;
    case EnsembleKernel::Bitsliced:
      run_bitsliced(request, res);
      break;
    default:
      run_stirring(request, res);
      break;
  }
  return res;
}

}  // namespace slowssep
