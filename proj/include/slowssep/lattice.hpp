#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "slowssep/paths.hpp"

namespace slowssep {

/// Occupancy of the interior sites 1..N-1 of the lattice with parameter N.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(int lattice_n);
  Configuration(int lattice_n, const std::vector<int>& occupancy);

  static Configuration full(int lattice_n);

  int lattice_n() const { return n_; }
  int sites() const { return n_ - 1; }

  bool occupied(int x) const { return occ_[static_cast<std::size_t>(x - 1)] != 0; }
  void set(int x, bool value) { occ_[static_cast<std::size_t>(x - 1)] = value ? 1 : 0; }
  void flip(int x) { occ_[static_cast<std::size_t>(x - 1)] ^= 1; }
  /// Exchange the contents of sites x and x+1.
  void swap_bond(int x) { std::swap(occ_[static_cast<std::size_t>(x - 1)], occ_[static_cast<std::size_t>(x)]); }

  int particle_count() const;
  const std::vector<std::uint8_t>& occupancy() const { return occ_; }

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  int n_ = 0;
  std::vector<std::uint8_t> occ_;
};

enum class TimeScale { Diffusive, Accelerated };

struct SimParams {
  int N = 64;
  double alpha = 0.2;
  double beta = 0.8;
  TimeScale time_scale = TimeScale::Accelerated;
  std::optional<ControlPath> tilt;
  double horizon = 3.0;
  std::uint64_t seed = 0;

  double gamma() const { return (alpha + beta) / 2; }
  /// Rate per bulk bond: N^2 (diffusive) or N^3 (accelerated).
  double bulk_rate() const;
  /// Boundary speed factor: 1 (diffusive) or N (accelerated).
  double boundary_rate() const;
  /// True when a tilt is present and not identically zero.
  bool tilted() const { return tilt && !tilt->is_zero(); }
  void validate() const;
};

enum class EventKind : std::uint8_t { Swap, FlipLeft, FlipRight };

struct EventRecord {
  double time = 0;
  EventKind kind = EventKind::Swap;
  int site = 0;  ///< left site of the swapped bond, or the flipped site
  double log_weight_increment = 0;
};

struct RateTable {
  double per_bond = 0;  ///< rate of one active bulk bond
  int active_bonds = 0;
  double left_insert = 0, left_remove = 0;
  double right_insert = 0, right_remove = 0;

  double bulk() const { return per_bond * active_bonds; }
  double left() const { return left_insert + left_remove; }
  double right() const { return right_insert + right_remove; }
  double total() const { return bulk() + left() + right(); }
};

RateTable transition_rates(const Configuration& config, const SimParams& params, double t);

using Observer = std::function<void(double, const Configuration&)>;

struct SimulationOptions {
  bool record_events = false;
  /// Observation spacing; observations at 0, step, 2 step, ... and at T. Zero disables.
  double observe_step = 0;
  /// Explicit sorted observation times in [0, T]; takes precedence over observe_step.
  std::vector<double> observe_times;
  Observer observer;
};

struct Trajectory {
  Configuration initial;
  Configuration final;
  std::vector<EventRecord> events;  ///< empty unless requested
  std::size_t event_count = 0;
  /// log of dP/dP^G along the realized path; 0 for untilted runs.
  double log_weight = 0;
  double max_mass = 0;
};

/// Exact CTMC sample: exponential holding times on the total rate, events drawn
/// proportionally to their rates. A time-dependent tilt is handled by thinning.
Trajectory simulate(const SimParams& params, const Configuration& initial, const SimulationOptions& options = {});

/// Recomputes log dP/dP^G for a recorded trajectory from its event log.
double change_of_measure_log_weight(const Trajectory& trajectory, const ControlPath& control, const SimParams& params);

}  // namespace slowssep
