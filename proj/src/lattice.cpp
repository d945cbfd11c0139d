#include "slowssep/lattice.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "slowssep/error.hpp"
#include "slowssep/random.hpp"

namespace slowssep {

Configuration::Configuration(int lattice_n) : n_(lattice_n) {
  require(lattice_n >= 3, "configuration: N must be at least 3");
  occ_.assign(static_cast<std::size_t>(lattice_n - 1), 0);
}

Configuration::Configuration(int lattice_n, const std::vector<int>& occupancy) : Configuration(lattice_n) {
  require(occupancy.size() == occ_.size(), "configuration: need exactly N-1 occupation values");
  for (std::size_t i = 0; i < occupancy.size(); ++i) {
    require(occupancy[i] == 0 || occupancy[i] == 1, "configuration: occupation values must be 0 or 1");
    occ_[i] = static_cast<std::uint8_t>(occupancy[i]);
  }
}

Configuration Configuration::full(int lattice_n) {
  Configuration c(lattice_n);
  std::fill(c.occ_.begin(), c.occ_.end(), 1);
  return c;
}

int Configuration::particle_count() const { return std::accumulate(occ_.begin(), occ_.end(), 0); }

double SimParams::bulk_rate() const {
  const double n = N;
  return time_scale == TimeScale::Diffusive ? n * n : n * n * n;
}

double SimParams::boundary_rate() const { return time_scale == TimeScale::Diffusive ? 1.0 : static_cast<double>(N); }

void SimParams::validate() const {
  require(N >= 3, "N must be at least 3");
  require(alpha > 0 && alpha < 1, "alpha must lie in (0,1)");
  require(beta > 0 && beta < 1, "beta must lie in (0,1)");
  require(horizon > 0, "horizon T must be positive");
  if (tilt) require(tilt->covers(horizon), "tilt control grid must cover [0,T]");
}

namespace {

struct BoundaryRates {
  double insert = 0, remove = 0;
};

BoundaryRates boundary_rates(bool occupied, double reservoir, double speed, double tilt) {
  BoundaryRates r;
  if (occupied)
    r.remove = speed * (1 - reservoir) * std::exp(-tilt);
  else
    r.insert = speed * reservoir * std::exp(tilt);
  return r;
}

}  // namespace

RateTable transition_rates(const Configuration& config, const SimParams& params, double t) {
  RateTable r;
  r.per_bond = params.bulk_rate();
  for (int x = 1; x + 1 <= config.sites(); ++x)
    if (config.occupied(x) != config.occupied(x + 1)) ++r.active_bonds;
  const double g = params.tilt ? (*params.tilt)(t) : 0.0;
  const double b = params.boundary_rate();
  const auto left = boundary_rates(config.occupied(1), params.alpha, b, g);
  const auto right = boundary_rates(config.occupied(config.sites()), params.beta, b, g);
  r.left_insert = left.insert;
  r.left_remove = left.remove;
  r.right_insert = right.insert;
  r.right_remove = right.remove;
  return r;
}

namespace {

// Indexed set of active bonds; bond x joins sites x and x+1.
class ActiveBonds {
 public:
  explicit ActiveBonds(const Configuration& c) : pos_(static_cast<std::size_t>(c.sites()), -1) {
    for (int x = 1; x + 1 <= c.sites(); ++x)
      if (c.occupied(x) != c.occupied(x + 1)) insert(x);
  }
  int size() const { return static_cast<int>(list_.size()); }
  int at(std::size_t i) const { return list_[i]; }
  void toggle(int x) {
    if (pos_[static_cast<std::size_t>(x)] < 0)
      insert(x);
    else
      erase(x);
  }

 private:
  void insert(int x) {
    pos_[static_cast<std::size_t>(x)] = static_cast<int>(list_.size());
    list_.push_back(x);
  }
  void erase(int x) {
    const int i = pos_[static_cast<std::size_t>(x)];
    const int last = list_.back();
    list_[static_cast<std::size_t>(i)] = last;
    pos_[static_cast<std::size_t>(last)] = i;
    list_.pop_back();
    pos_[static_cast<std::size_t>(x)] = -1;
  }
  std::vector<int> list_;
  std::vector<int> pos_;
};

// Time integral of the boundary part of (tilted - untilted) total rate with the
// configuration frozen on [t0, t1].
double rate_excess_integral(const ControlPath& g, double t0, double t1, bool left_occ, bool right_occ,
                            const SimParams& p) {
  if (t1 <= t0) return 0.0;
  const double h = t1 - t0;
  double insert_weight = 0, remove_weight = 0;
  if (left_occ)
    remove_weight += 1 - p.alpha;
  else
    insert_weight += p.alpha;
  if (right_occ)
    remove_weight += 1 - p.beta;
  else
    insert_weight += p.beta;
  double acc = 0;
  if (insert_weight > 0) acc += insert_weight * (g.integrate_exp(t0, t1, +1) - h);
  if (remove_weight > 0) acc += remove_weight * (g.integrate_exp(t0, t1, -1) - h);
  return p.boundary_rate() * acc;
}

}  // namespace

Trajectory simulate(const SimParams& params, const Configuration& initial, const SimulationOptions& options) {
  params.validate();
  require(initial.lattice_n() == params.N, "simulate: initial configuration has the wrong lattice size");

  Xoshiro256 rng(params.seed);
  std::exponential_distribution<double> exp1(1.0);

  Trajectory out;
  out.initial = initial;
  Configuration cfg = initial;
  ActiveBonds active(cfg);
  const int last_site = cfg.sites();
  const double T = params.horizon;
  const double s = params.bulk_rate();
  const double b = params.boundary_rate();
  const double N = params.N;
  const bool tilted = params.tilted();
  const ControlPath* control = tilted ? &*params.tilt : nullptr;

  int count = cfg.particle_count();
  out.max_mass = count / N;

  // Observation schedule: state at t_k is the state after all events at times <= t_k.
  std::vector<double> obs_times = options.observe_times;
  if (obs_times.empty() && options.observe_step > 0) {
    for (double u = 0; u < T; u += options.observe_step) obs_times.push_back(u);
    obs_times.push_back(T);
  }
  const bool observing = options.observer && !obs_times.empty();
  std::size_t next_obs = 0;
  auto emit_until = [&](double t_excl) {
    if (!observing) return;
    while (next_obs < obs_times.size() && obs_times[next_obs] < t_excl) options.observer(obs_times[next_obs++], cfg);
  };

  double t = 0;
  double pending_weight = 0;  // weight accrued since the last recorded event

  auto apply = [&](EventKind kind, int site) {
    double jump = 0;
    switch (kind) {
      case EventKind::Swap: {
        cfg.swap_bond(site);
        if (site > 1) active.toggle(site - 1);
        if (site + 1 < last_site) active.toggle(site + 1);
        break;
      }
      case EventKind::FlipLeft:
      case EventKind::FlipRight: {
        const bool was = cfg.occupied(site);
        cfg.flip(site);
        count += was ? -1 : 1;
        out.max_mass = std::max(out.max_mass, count / N);
        if (site == 1 && last_site >= 2) active.toggle(1);
        if (site == last_site && last_site >= 2) active.toggle(last_site - 1);
        if (control) jump = was ? (*control)(t) : -(*control)(t);
        break;
      }
    }
    const double inc = pending_weight + jump;
    out.log_weight += inc;
    pending_weight = 0;
    ++out.event_count;
    if (options.record_events) out.events.push_back({t, kind, site, inc});
  };

  auto pick = [&](const RateTable& r, double u) {
    if (u < r.bulk()) {
      const int bond = active.at(rng.below(static_cast<std::uint64_t>(active.size())));
      apply(EventKind::Swap, bond);
    } else if (u < r.bulk() + r.left()) {
      apply(EventKind::FlipLeft, 1);
    } else {
      apply(EventKind::FlipRight, last_site);
    }
  };

  if (!tilted) {
    for (;;) {
      RateTable rr;
      rr.per_bond = s;
      rr.active_bonds = active.size();
      (cfg.occupied(1) ? rr.left_remove : rr.left_insert) = cfg.occupied(1) ? b * (1 - params.alpha) : b * params.alpha;
      (cfg.occupied(last_site) ? rr.right_remove : rr.right_insert) =
          cfg.occupied(last_site) ? b * (1 - params.beta) : b * params.beta;
      const double total = rr.total();
      const double t_new = t + exp1(rng) / total;
      if (t_new > T) break;
      emit_until(t_new);
      t = t_new;
      pick(rr, rng.uniform() * total);
    }
  } else {
    // Thinning against a boundary bound that only moves when the boundary
    // occupancy or the control segment changes; the weight integral over each
    // such epoch is settled in one piece.
    const auto& grid = control->grid();
    double epoch_start = 0, seg_end = T, side = 0;
    bool l = false, rgt = false;
    auto settle = [&](double upto) {
      pending_weight += rate_excess_integral(*control, epoch_start, upto, l, rgt, params);
      epoch_start = upto;
    };
    auto open_epoch = [&] {
      // e^{+-G} is monotone on each linear piece of the control.
      const Eigen::Index k = control->segment(t);
      seg_end = (t >= control->horizon()) ? T : std::min(T, grid(k + 1));
      if (seg_end <= t) seg_end = T;
      const double g0 = (*control)(t), g1 = (*control)(seg_end);
      const double gmax = std::max(g0, g1), gmin = std::min(g0, g1);
      l = cfg.occupied(1);
      rgt = cfg.occupied(last_site);
      auto side_bound = [&](bool occ, double res) { return occ ? b * (1 - res) * std::exp(-gmin) : b * res * std::exp(gmax); };
      side = side_bound(l, params.alpha) + side_bound(rgt, params.beta);
    };
    open_epoch();
    for (;;) {
      const double bulk = s * active.size();
      const double bound = bulk + side;
      const double t_new = t + exp1(rng) / bound;
      if (t_new > seg_end) {
        emit_until(seg_end);
        t = seg_end;
        settle(t);
        if (t >= T) break;
        open_epoch();
        continue;
      }
      emit_until(t_new);
      t = t_new;
      const double u = rng.uniform() * bound;
      if (u < bulk) {
        const int bond = active.at(rng.below(static_cast<std::uint64_t>(active.size())));
        const bool edge = bond == 1 || bond + 1 == last_site;
        if (edge || options.record_events) settle(t);
        apply(EventKind::Swap, bond);
        if (edge) open_epoch();
        continue;
      }
      const double g = (*control)(t);
      const auto lr = boundary_rates(l, params.alpha, b, g);
      const auto rr = boundary_rates(rgt, params.beta, b, g);
      const double v = u - bulk, left = lr.insert + lr.remove, right = rr.insert + rr.remove;
      if (v >= left + right) continue;  // thinned
      settle(t);
      apply(v < left ? EventKind::FlipLeft : EventKind::FlipRight, v < left ? 1 : last_site);
      open_epoch();
    }
  }
  // Tail: weight accrued after the last event, then remaining observations.
  out.log_weight += pending_weight;
  emit_until(std::numeric_limits<double>::infinity());
  out.final = cfg;
  return out;
}

double change_of_measure_log_weight(const Trajectory& trajectory, const ControlPath& control, const SimParams& params) {
  require(control.covers(params.horizon), "change_of_measure_log_weight: control grid must cover [0,T]");
  require(trajectory.event_count == trajectory.events.size(),
          "change_of_measure_log_weight: trajectory was simulated without an event log");
  const double N = params.N;
  const double T = params.horizon;
  Configuration cfg = trajectory.initial;
  const int last_site = cfg.sites();

  // -N [ m_T G_T - m_0 G_0 - int dG m ds - (b/N) int sum_x (...) ds ]
  double m = cfg.particle_count() / N;
  const double boundary_term_start = m * control(0.0);
  double drift_integral = 0;  // int dG m ds, exact for piecewise-constant m
  double excess_integral = 0;
  double t = 0;
  auto advance = [&](double t1) {
    drift_integral += m * (control(t1) - control(t));
    excess_integral += rate_excess_integral(control, t, t1, cfg.occupied(1), cfg.occupied(last_site), params);
    t = t1;
  };
  for (const auto& e : trajectory.events) {
    advance(e.time);
    if (e.kind == EventKind::Swap) {
      cfg.swap_bond(e.site);
    } else {
      m += cfg.occupied(e.site) ? -1 / N : 1 / N;
      cfg.flip(e.site);
    }
  }
  advance(T);
  return -N * (m * control(T) - boundary_term_start - drift_integral - excess_integral / N);
}

}  // namespace slowssep
