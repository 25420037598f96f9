#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fbrl/errors.hpp"
#include "fbrl/firesim.hpp"
#include "fbrl/landscape.hpp"
#include "fbrl/nn/tensor.hpp"
#include "fbrl/rng.hpp"

namespace fbrl {

// floor(alpha * n) with a small tolerance so 0.05 * 100 is 5, not 4.
inline std::size_t max_firebreaks(std::size_t n_cells, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  const auto t = static_cast<std::size_t>(std::floor(alpha * double(n_cells) + 1e-9));
  if (t == 0) throw ConfigError("firebreak budget floor(alpha*|N|) is 0");
  return t;
}

struct EnvConfig {
  double alpha = 0.05;
  // Terminal reward scale; defaults to -1/|N| so rewards are negative burned fractions.
  std::optional<double> k;
  std::size_t sims_per_eval = 32;
  IgnitionZone zone;
  std::vector<WeatherScenario> weather;
  SpreadModel model;
  std::vector<CellIndex> initial_forbidden;
  unsigned workers = 1;
};

// Compact snapshot of an EnvState, the unit stored in transitions.
struct Observation {
  std::vector<FuelCode> codes;
  std::vector<std::uint8_t> placed;
  std::vector<std::uint8_t> forbidden;

  bool available(std::size_t i) const { return !forbidden[i] && codes[i] != kNonFuel; }
  std::vector<std::uint8_t> mask() const {
    std::vector<std::uint8_t> m(codes.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = available(i) ? 1 : 0;
    return m;
  }
  friend bool operator==(const Observation&, const Observation&) = default;
};

struct EnvState {
  Landscape grid;
  std::vector<std::uint8_t> forbidden;
  std::vector<CellIndex> placed;
  std::size_t t = 0;

  bool available(CellIndex i) const { return i < grid.size() && !forbidden[i] && grid.flammable(i); }

  std::vector<CellIndex> available_cells() const {
    std::vector<CellIndex> out;
    for (CellIndex i = 0; i < grid.size(); ++i)
      if (available(i)) out.push_back(i);
    return out;
  }

  Observation observe() const {
    Observation o;
    o.codes.assign(grid.cells().begin(), grid.cells().end());
    o.placed.assign(grid.size(), 0);
    for (auto c : placed) o.placed[c] = 1;
    o.forbidden = forbidden;
    return o;
  }
};

// True exactly on available cells.
inline std::vector<std::uint8_t> action_mask(const EnvState& s) { return s.observe().mask(); }

struct Transition {
  Observation state;
  CellIndex action = 0;
  double reward = 0.0;
  Observation next_state;
  bool done = false;
  bool is_demo = false;
  std::uint32_t episode = 0;
  std::uint32_t step = 0;
  // n-step cache filled when the episode completes.
  double nstep_return = 0.0;
  bool nstep_bootstrap = false;
  double nstep_discount = 0.0;
  Observation nstep_state;

  friend bool operator==(const Transition&, const Transition&) = default;
};

// One-hot fuel channels in ascending code order, plus a placed-firebreak channel.
class StateEncoder {
 public:
  explicit StateEncoder(const FuelCatalog& catalog) {
    channel_of_.fill(-1);
    int ch = 0;
    for (auto code : catalog.codes()) channel_of_[code] = ch++;
    channels_ = ch + 1;
  }

  int channels() const { return channels_; }

  // Writes one (channels, rows, cols) block into dst, which must be zeroed.
  template <typename T>
  void encode_into(const Observation& o, T* dst) const {
    const std::size_t n = o.codes.size();
    for (std::size_t i = 0; i < n; ++i) {
      const int ch = channel_of_[o.codes[i]];
      if (ch < 0) throw ArgumentError("encode: fuel code not in catalog");
      dst[static_cast<std::size_t>(ch) * n + i] = T(1);
      if (o.placed[i]) dst[static_cast<std::size_t>(channels_ - 1) * n + i] = T(1);
    }
  }

  template <typename T>
  nn::Tensor<T> encode(const Observation& o, int rows, int cols) const {
    nn::Tensor<T> t({std::size_t(channels_), std::size_t(rows), std::size_t(cols)});
    encode_into(o, t.ptr());
    return t;
  }

  template <typename T>
  nn::Tensor<T> encode_batch(std::span<const Observation* const> obs, int rows, int cols) const {
    nn::Tensor<T> t({obs.size(), std::size_t(channels_), std::size_t(rows), std::size_t(cols)});
    const std::size_t block = static_cast<std::size_t>(channels_) * rows * cols;
    for (std::size_t b = 0; b < obs.size(); ++b) encode_into(*obs[b], t.ptr() + b * block);
    return t;
  }

 private:
  std::array<int, 256> channel_of_{};
  int channels_ = 0;
};

inline nn::Tensor<double> encode_state(const EnvState& s) {
  return StateEncoder(s.grid.catalog()).encode<double>(s.observe(), s.grid.rows(), s.grid.cols());
}

struct StepResult {
  EnvState state;
  double reward = 0.0;
  bool done = false;
  // Terminal steps only: mean burned cells over the evaluation fires.
  double average_burned = 0.0;
  std::vector<std::size_t> burned_counts;
};

// Firebreak placement MDP over a fixed base landscape. Episodes place exactly
// T = floor(alpha*|N|) firebreaks; the only nonzero reward is on the T-th
// placement, k * mean burned cells over simulated fires on the treated grid.
class FirebreakEnv {
 public:
  FirebreakEnv(Landscape base, EnvConfig cfg) : base_(std::move(base)), cfg_(std::move(cfg)) {
    budget_ = max_firebreaks(base_.size(), cfg_.alpha);
    if (cfg_.sims_per_eval < 1) throw ConfigError("sims_per_eval must be >= 1");
    if (cfg_.weather.empty()) throw ConfigError("at least one weather scenario is required");
    try {
      cfg_.model.validate();
      cfg_.zone.validate(base_.rows(), base_.cols());
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what());
    }
    for (auto c : cfg_.initial_forbidden)
      if (c >= base_.size()) throw ConfigError("initial_forbidden cell out of bounds");
    // A full budget must not be able to clear every ignition cell.
    std::size_t open = 0, kept = 0;
    for (auto c : cfg_.zone.cells(base_)) {
      if (!base_.flammable(c)) continue;
      const bool locked =
          std::find(cfg_.initial_forbidden.begin(), cfg_.initial_forbidden.end(), c) != cfg_.initial_forbidden.end();
      locked ? ++kept : ++open;
    }
    if (kept == 0 && open <= budget_)
      throw ConfigError("firebreak budget can clear the whole ignition zone; forbid an ignition cell or widen the zone");
  }

  const Landscape& base() const { return base_; }
  const EnvConfig& config() const { return cfg_; }
  std::size_t budget() const { return budget_; }
  std::size_t n_cells() const { return base_.size(); }
  double k() const { return cfg_.k ? *cfg_.k : -1.0 / double(base_.size()); }
  StateEncoder encoder() const { return StateEncoder(base_.catalog()); }

  EnvState reset() const {
    EnvState s{base_, std::vector<std::uint8_t>(base_.size(), 0), {}, 0};
    for (auto c : cfg_.initial_forbidden) s.forbidden[c] = 1;
    std::size_t available = 0;
    for (CellIndex i = 0; i < base_.size(); ++i) {
      if (!base_.flammable(i)) s.forbidden[i] = 1;
      available += !s.forbidden[i];
    }
    if (budget_ > available) throw ConfigError("firebreak budget exceeds available cells");
    return s;
  }

  // Terminal evaluation seeds are drawn from rng; non-terminal steps do not touch it.
  StepResult step(const EnvState& s, CellIndex action, Rng& rng) const {
    if (s.t >= budget_) throw StateError("episode already finished");
    if (action >= s.grid.size()) throw IllegalActionError("action out of bounds");
    if (s.forbidden[action]) throw IllegalActionError("action on a forbidden cell");
    if (!s.grid.flammable(action)) throw IllegalActionError("action on a non-fuel cell");
    StepResult r{s, 0.0, false, 0.0, {}};
    r.state.grid.clear_fuel(action);
    r.state.forbidden[action] = 1;
    r.state.placed.push_back(action);
    r.state.t += 1;
    if (r.state.t == budget_) {
      const auto outcomes = simulate(r.state.grid, cfg_.sims_per_eval, rng());
      r.average_burned = average_burned(outcomes);
      for (const auto& o : outcomes) r.burned_counts.push_back(o.burned.size());
      r.reward = r.average_burned * k();
      r.done = true;
    }
    return r;
  }

  std::vector<FireOutcome> simulate(const Landscape& grid, std::size_t n, std::uint64_t seed) const {
    return run_batch(grid, cfg_.model, cfg_.weather, cfg_.zone, n, seed, cfg_.workers);
  }

  // Base landscape with the given cells turned into firebreaks.
  Landscape treated(std::span<const CellIndex> placements) const {
    Landscape g = base_;
    for (auto c : placements) g.clear_fuel(c);
    return g;
  }

 private:
  Landscape base_;
  EnvConfig cfg_;
  std::size_t budget_ = 0;
};

// Episode trace CSV: one row per placement, then the terminal reward and the
// burned count of every evaluation fire.
inline std::string format_episode_trace(const Landscape& grid, std::span<const CellIndex> placed,
                                        double terminal_reward,
                                        std::span<const std::size_t> burned_counts) {
  std::string out = "kind,index,row,col,value\n";
  for (std::size_t i = 0; i < placed.size(); ++i) {
    const auto p = grid.pos(placed[i]);
    out += "placement," + std::to_string(i) + "," + std::to_string(p.row) + "," + std::to_string(p.col) + "," +
           std::to_string(placed[i]) + "\n";
  }
  out += "reward,0,,," + io::fmt_double(terminal_reward) + "\n";
  for (std::size_t i = 0; i < burned_counts.size(); ++i)
    out += "burned," + std::to_string(i) + ",,," + std::to_string(burned_counts[i]) + "\n";
  return out;
}

}  // namespace fbrl
