#include "levyhjm/levy_path.hpp"

#include <algorithm>
#include <cmath>

#include "levyhjm/errors.hpp"

namespace levyhjm {

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.size() < 2 || times_.front() != 0.0) {
    throw DomainError("time grid must start at 0 and contain at least two points");
  }
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1]) || !std::isfinite(times_[k])) {
      throw DomainError("time grid must be strictly increasing and finite");
    }
  }
}

GridPtr TimeGrid::uniform(double horizon, std::size_t steps) {
  if (!(horizon > 0.0) || steps == 0) throw DomainError("uniform grid needs horizon > 0 and steps > 0");
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) t[k] = horizon * static_cast<double>(k) / static_cast<double>(steps);
  t.back() = horizon;
  auto grid = std::make_shared<TimeGrid>(std::move(t));
  grid->inv_step_ = static_cast<double>(steps) / horizon;
  return grid;
}

std::size_t TimeGrid::floor_index(double t) const {
  if (t < 0.0) throw DomainError("time before 0");
  if (inv_step_ > 0.0) {
    std::size_t k = std::min(times_.size() - 1, static_cast<std::size_t>(t * inv_step_));
    while (k + 1 < times_.size() && times_[k + 1] <= t) ++k;
    while (k > 0 && times_[k] > t) --k;
    return k;
  }
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return static_cast<std::size_t>(it - times_.begin()) - 1;
}

std::size_t TimeGrid::index_of(double t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t - 1e-12 * std::max(1.0, std::abs(t)));
  if (it != times_.end() && std::abs(*it - t) <= 1e-12 * std::max(1.0, std::abs(t))) {
    return static_cast<std::size_t>(it - times_.begin());
  }
  return npos;
}

std::size_t LevyPath::jumps_through(double t) const {
  auto it = std::upper_bound(jumps.begin(), jumps.end(), t,
                             [](double v, const Jump& j) { return v < j.time; });
  return static_cast<std::size_t>(it - jumps.begin());
}

std::size_t LevyPath::jumps_before(double t) const {
  auto it = std::lower_bound(jumps.begin(), jumps.end(), t,
                             [](const Jump& j, double v) { return j.time < v; });
  return static_cast<std::size_t>(it - jumps.begin());
}

PathHistory::PathHistory(const LevyPath& path, double cut, bool inclusive)
    : path_(&path),
      cut_(cut),
      n_jumps_(inclusive ? path.jumps_through(cut) : path.jumps_before(cut)) {
  grid_k_ = path.grid->floor_index(std::min(cut, path.grid->horizon()));
  if (!inclusive && grid_k_ > 0 && (*path.grid)[grid_k_] == cut) --grid_k_;
}

PathHistory::PathHistory(const LevyPath& path, double cut, std::size_t n_jumps)
    : path_(&path), cut_(cut), n_jumps_(n_jumps) {
  grid_k_ = path.grid->floor_index(std::min(cut, path.grid->horizon()));
}

std::span<const Jump> PathHistory::jumps() const {
  if (path_ == nullptr) return {};
  return std::span<const Jump>(path_->jumps.data(), n_jumps_);
}

PathHistory PathHistory::truncated(double t, bool inclusive) const {
  if (path_ == nullptr) return {};
  PathHistory out(*path_, std::min(t, cut_), inclusive);
  out.n_jumps_ = std::min(out.n_jumps_, n_jumps_);
  out.grid_k_ = std::min(out.grid_k_, grid_k_);
  return out;
}

double PathHistory::last_grid_time() const { return path_ ? (*path_->grid)[grid_k_] : 0.0; }
double PathHistory::last_brownian() const { return path_ ? path_->brownian[grid_k_] : 0.0; }
double PathHistory::last_z() const { return path_ ? path_->z[grid_k_] : 0.0; }

LevyPath simulate_path(const LevyTriplet& triplet, const GridPtr& grid, RngStream stream) {
  LevyPath path;
  path.grid = grid;
  const std::size_t n = grid->size();
  path.brownian.assign(n, 0.0);
  if (triplet.q > 0.0) {
    CounterRng rng(stream, Substream::Brownian);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      path.brownian[k + 1] = path.brownian[k] + std::sqrt(triplet.q * grid->dt(k)) * rng.normal();
    }
  }
  const double rate = triplet.nu.simulated_rate();
  if (rate > 0.0) {
    CounterRng times(stream, Substream::JumpTimes);
    CounterRng sizes(stream, Substream::JumpSizes);
    const double horizon = grid->horizon();
    double t = times.exponential() / rate;
    while (t <= horizon) {
      path.jumps.push_back({t, triplet.nu.sample_jump(sizes)});
      t += times.exponential() / rate;
    }
  }
  recompute_z(path, triplet);
  return path;
}

void recompute_z(LevyPath& path, const LevyTriplet& triplet) {
  const auto& grid = *path.grid;
  const double compensator = triplet.nu.is_zero() ? 0.0 : triplet.nu.small_jump_drift();
  path.z.assign(grid.size(), 0.0);
  std::size_t j = 0;
  double jump_sum = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    while (j < path.jumps.size() && path.jumps[j].time <= t) jump_sum += path.jumps[j++].size;
    path.z[k] = triplet.a * t + path.brownian[k] + jump_sum - t * compensator;
  }
}

std::size_t jump_counting(const LevyPath& path, double t, const JumpSet& set) {
  set.require_separated("jump_counting");
  if (t < 0.0 || t > path.grid->horizon()) throw DomainError("jump_counting: t outside [0, T*]");
  std::size_t count = 0;
  for (const auto& j : path.jumps) {
    if (j.time > t) break;
    if (set.contains(j.size)) ++count;
  }
  return count;
}

LevyPath coarsen(const LevyPath& path, std::size_t factor) {
  const auto& g = *path.grid;
  if (factor == 0 || g.steps() % factor != 0) throw DomainError("coarsen: factor must divide the step count");
  std::vector<double> t;
  LevyPath out;
  for (std::size_t k = 0; k < g.size(); k += factor) {
    t.push_back(g[k]);
    out.brownian.push_back(path.brownian[k]);
    out.z.push_back(path.z[k]);
  }
  out.grid = std::make_shared<const TimeGrid>(std::move(t));
  out.jumps = path.jumps;
  return out;
}

}  // namespace levyhjm
