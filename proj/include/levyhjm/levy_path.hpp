#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "levyhjm/jump_set.hpp"
#include "levyhjm/levy_measure.hpp"
#include "levyhjm/rng.hpp"

namespace levyhjm {

/// Strictly increasing simulation times 0 = t_0 < ... < t_N = T*.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> times);
  static std::shared_ptr<const TimeGrid> uniform(double horizon, std::size_t steps);

  std::size_t steps() const { return times_.size() - 1; }
  std::size_t size() const { return times_.size(); }
  double horizon() const { return times_.back(); }
  double operator[](std::size_t k) const { return times_[k]; }
  double dt(std::size_t k) const { return times_[k + 1] - times_[k]; }
  std::span<const double> times() const { return times_; }

  /// Largest k with t_k <= t.
  std::size_t floor_index(double t) const;
  /// Index of t if it is a grid time (within 1e-12 relative), else npos.
  std::size_t index_of(double t) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<double> times_;
  double inv_step_ = 0.0;  // steps / horizon for uniform grids, else 0
};

using GridPtr = std::shared_ptr<const TimeGrid>;

struct Jump {
  double time = 0.0;
  double size = 0.0;
};

/// One simulated trajectory of Z with its jump record.
struct LevyPath {
  GridPtr grid;
  std::vector<double> brownian;  // W at grid times
  std::vector<Jump> jumps;       // chronological, times in (0, T*]
  std::vector<double> z;         // Z at grid times

  /// Number of jumps with time <= t.
  std::size_t jumps_through(double t) const;
  /// Number of jumps with time < t.
  std::size_t jumps_before(double t) const;
};

/// Strict-past view of a path: only information from times < `cut` (or
/// <= `cut` when constructed `inclusive`) is reachable. Integrand
/// evaluators receive this instead of the path, which makes anticipating
/// integrands unrepresentable.
class PathHistory {
 public:
  PathHistory() = default;
  PathHistory(const LevyPath& path, double cut, bool inclusive = false);
  /// A view exposing exactly the first `n_jumps` jumps and grid data up to `cut`.
  PathHistory(const LevyPath& path, double cut, std::size_t n_jumps);

  double cut() const { return cut_; }
  bool empty() const { return path_ == nullptr; }
  /// Simulation grid of the underlying path (null for an empty history).
  const TimeGrid* grid() const { return path_ ? path_->grid.get() : nullptr; }
  std::span<const Jump> jumps() const;
  /// W and Z at the last grid time not after the cut.
  double last_grid_time() const;
  double last_brownian() const;
  double last_z() const;
  /// The same path restricted to times <= t (or < t), t not after the cut.
  PathHistory truncated(double t, bool inclusive) const;

 private:
  const LevyPath* path_ = nullptr;
  double cut_ = 0.0;
  std::size_t n_jumps_ = 0;
  std::size_t grid_k_ = 0;
};

/// Samples a path. Brownian increments have variance q dt; jump times form
/// a Poisson process with rate nu({|y| >= eps_trunc}); the compensator of
/// the retained jumps with |y| <= 1 is folded into Z exactly.
LevyPath simulate_path(const LevyTriplet& triplet, const GridPtr& grid, RngStream stream);

/// Z_t = a t + W_t + sum_{tau <= t} y - t * int_{eps <= |y| <= 1} y nu(dy).
void recompute_z(LevyPath& path, const LevyTriplet& triplet);

/// pi(t, A): jumps with time <= t and size in A.
std::size_t jump_counting(const LevyPath& path, double t, const JumpSet& set);

/// Restriction of a path to every `factor`-th grid time. Jumps are kept.
LevyPath coarsen(const LevyPath& path, std::size_t factor);

}  // namespace levyhjm
