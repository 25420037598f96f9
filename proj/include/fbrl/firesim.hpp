#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numbers>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "fbrl/errors.hpp"
#include "fbrl/landscape.hpp"
#include "fbrl/rng.hpp"

namespace fbrl {

struct SpreadModel {
  double wind_gain = 0.0;
  double speed_ref = 1.0;

  void validate() const {
    if (!(wind_gain >= 0.0)) throw ArgumentError("wind_gain must be nonnegative");
    if (!(speed_ref > 0.0)) throw ArgumentError("speed_ref must be positive");
  }
};

// 8-neighbourhood offsets, row-major scan order.
inline constexpr std::array<std::array<int, 2>, 8> kNeighbors = {{
    {-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1},
}};

// Bearing of the (drow, dcol) step in degrees clockwise from north.
inline double step_bearing_deg(int drow, int dcol) {
  double deg = std::atan2(double(dcol), double(-drow)) * 180.0 / std::numbers::pi;
  return deg < 0 ? deg + 360.0 : deg;
}

// Wind multipliers max(0, 1 + gain * speed/ref * cos(dtheta)) for the 8 directions.
inline std::array<double, 8> wind_factors(const SpreadModel& m, const WeatherScenario& w) {
  std::array<double, 8> f{};
  const double strength = m.wind_gain * (w.wind_speed / m.speed_ref);
  for (std::size_t k = 0; k < 8; ++k) {
    const double dtheta =
        (step_bearing_deg(kNeighbors[k][0], kNeighbors[k][1]) - w.wind_dir_deg) * std::numbers::pi / 180.0;
    f[k] = std::max(0.0, 1.0 + strength * std::cos(dtheta));
  }
  return f;
}

inline double spread_prob(double base, double wind_factor) {
  return std::clamp(base * wind_factor, 0.0, 1.0);
}

inline int neighbor_slot(int drow, int dcol) {
  for (int k = 0; k < 8; ++k)
    if (kNeighbors[k][0] == drow && kNeighbors[k][1] == dcol) return k;
  return -1;
}

inline double edge_prob(const Landscape& l, const SpreadModel& m, const WeatherScenario& w,
                        CellIndex from, CellIndex to) {
  if (from >= l.size() || to >= l.size()) throw ArgumentError("edge_prob: cell out of bounds");
  const auto a = l.pos(from), b = l.pos(to);
  const int slot = neighbor_slot(b.row - a.row, b.col - a.col);
  if (slot < 0) throw ArgumentError("edge_prob: cells are not 8-neighbours");
  m.validate();
  return spread_prob(l.catalog().base_prob(l.at(to)), wind_factors(m, w)[slot]);
}

// One realized fire: burned cells and the BFS propagation tree.
struct FireOutcome {
  CellIndex ignition = 0;
  int rows = 0;
  int cols = 0;
  std::vector<CellIndex> burned;                         // ascending
  std::vector<std::pair<CellIndex, CellIndex>> edges;    // (parent, child), BFS order

  std::size_t n_cells() const { return static_cast<std::size_t>(rows) * cols; }
  friend bool operator==(const FireOutcome&, const FireOutcome&) = default;
};

// Fire spread with quenched randomness: edge i->j is active iff
// p(i->j) > u(seed, i, j). The fire is the set of flammable cells reachable
// from the ignition over active edges; the tree is level-synchronous BFS with
// the smallest-index parent winning ties.
inline FireOutcome simulate_fire(const Landscape& l, const SpreadModel& m, const WeatherScenario& w,
                                 CellIndex ignition, std::uint64_t seed) {
  if (ignition >= l.size()) throw ArgumentError("ignition out of bounds");
  m.validate();
  FireOutcome out;
  out.ignition = ignition;
  out.rows = l.rows();
  out.cols = l.cols();
  if (!l.flammable(ignition)) return out;

  const auto factors = wind_factors(m, w);
  const auto probs = l.catalog().prob_table();
  const auto cells = l.cells();
  std::vector<std::uint8_t> visited(l.size(), 0);
  std::vector<CellIndex> frontier{ignition}, next;
  visited[ignition] = 1;
  out.burned.push_back(ignition);

  while (!frontier.empty()) {
    next.clear();
    for (CellIndex from : frontier) {
      const auto p = l.pos(from);
      for (std::size_t k = 0; k < 8; ++k) {
        const int r = p.row + kNeighbors[k][0], c = p.col + kNeighbors[k][1];
        if (!l.in_bounds(r, c)) continue;
        const CellIndex to = l.index(r, c);
        if (visited[to] || cells[to] == kNonFuel) continue;
        const double prob = spread_prob(probs[cells[to]], factors[k]);
        if (prob > keyed_uniform(seed, from, to)) {
          visited[to] = 1;
          next.push_back(to);
          out.edges.emplace_back(from, to);
        }
      }
    }
    std::sort(next.begin(), next.end());
    out.burned.insert(out.burned.end(), next.begin(), next.end());
    frontier.swap(next);
  }
  std::sort(out.burned.begin(), out.burned.end());
  return out;
}

// Seeds for run r of a batch. All three are pure functions of (master, r).
struct RunSeeds {
  std::uint64_t weather;
  std::uint64_t ignition;
  std::uint64_t simulation;
};

inline RunSeeds run_seeds(std::uint64_t master_seed, std::uint64_t r) {
  const auto s = derive_seed(master_seed, {r});
  return RunSeeds{derive_seed(s, {1}), derive_seed(s, {2}), derive_seed(s, {3})};
}

inline FireOutcome simulate_run(const Landscape& l, const SpreadModel& m,
                                std::span<const WeatherScenario> weather, const IgnitionZone& zone,
                                std::uint64_t master_seed, std::uint64_t r) {
  const auto seeds = run_seeds(master_seed, r);
  Rng wr(seeds.weather), ir(seeds.ignition);
  const auto& w = sample_weather(weather, wr);
  const auto ignition = sample_ignition(l, zone, ir);
  return simulate_fire(l, m, w, ignition, seeds.simulation);
}

// n independent fires. Output is identical for any worker count.
inline std::vector<FireOutcome> run_batch(const Landscape& l, const SpreadModel& m,
                                          std::span<const WeatherScenario> weather,
                                          const IgnitionZone& zone, std::size_t n,
                                          std::uint64_t master_seed, unsigned workers = 1) {
  if (n < 1) throw ArgumentError("run_batch requires n >= 1");
  if (weather.empty()) throw ArgumentError("weather scenario list is empty");
  zone.validate(l.rows(), l.cols());
  std::vector<FireOutcome> out(n);
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  if (workers == 1) {
    for (std::size_t r = 0; r < n; ++r) out[r] = simulate_run(l, m, weather, zone, master_seed, r);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t r = w; r < n; r += workers)
          out[r] = simulate_run(l, m, weather, zone, master_seed, r);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline double average_burned(std::span<const FireOutcome> outcomes) {
  if (outcomes.empty()) throw ArgumentError("average_burned: no outcomes");
  double total = 0;
  for (const auto& o : outcomes) total += static_cast<double>(o.burned.size());
  return total / static_cast<double>(outcomes.size());
}

struct BurnProbabilityMap {
  int rows = 0;
  int cols = 0;
  std::vector<double> probs;
};

inline BurnProbabilityMap burn_probability_map(std::span<const FireOutcome> outcomes) {
  if (outcomes.empty()) throw ArgumentError("burn_probability_map: no outcomes");
  BurnProbabilityMap map{outcomes[0].rows, outcomes[0].cols, {}};
  std::vector<std::size_t> counts(outcomes[0].n_cells(), 0);
  for (const auto& o : outcomes) {
    if (o.rows != map.rows || o.cols != map.cols)
      throw ArgumentError("burn_probability_map: outcomes have mixed grid sizes");
    for (auto c : o.burned) ++counts[c];
  }
  map.probs.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    map.probs[i] = static_cast<double>(counts[i]) / static_cast<double>(outcomes.size());
  return map;
}

}  // namespace fbrl
