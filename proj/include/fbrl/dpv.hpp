#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fbrl/env.hpp"
#include "fbrl/errors.hpp"
#include "fbrl/firesim.hpp"
#include "fbrl/io.hpp"

namespace fbrl {

// For each burned cell i, the sum of values over the propagation subtree
// rooted at i (i included). Unburned cells get 0.
inline std::vector<double> subtree_values(const FireOutcome& outcome, std::span<const double> values) {
  if (values.size() != outcome.n_cells()) throw ArgumentError("subtree_values: values length mismatch");
  std::vector<double> sub(values.size(), 0.0);
  for (auto c : outcome.burned) sub[c] = values[c];
  // BFS edge order lists every edge into a subtree after the edge into its root.
  for (auto it = outcome.edges.rbegin(); it != outcome.edges.rend(); ++it) sub[it->first] += sub[it->second];
  return sub;
}

using DpvScores = std::vector<double>;

inline DpvScores dpv_scores(std::span<const FireOutcome> outcomes, std::span<const double> values) {
  if (outcomes.empty()) throw ArgumentError("dpv_scores: no outcomes");
  DpvScores scores(values.size(), 0.0);
  for (const auto& o : outcomes) {
    const auto sub = subtree_values(o, values);
    for (std::size_t i = 0; i < sub.size(); ++i) scores[i] += sub[i];
  }
  for (auto& s : scores) s /= static_cast<double>(outcomes.size());
  return scores;
}

// Available cell with maximal score; smallest index on ties.
inline CellIndex argmax_available(const EnvState& s, std::span<const double> scores) {
  std::optional<CellIndex> best;
  for (CellIndex i = 0; i < s.grid.size(); ++i) {
    if (!s.available(i)) continue;
    if (!best || scores[i] > scores[*best]) best = i;
  }
  if (!best) throw StateError("no available cell");
  return *best;
}

// Greedy DPV demonstrator: simulate fires on the current grid, place the
// firebreak on the available cell with the largest DPV.
inline CellIndex baseline_step(const FirebreakEnv& env, const EnvState& s, std::size_t sims_per_step,
                               std::span<const double> values, std::uint64_t seed) {
  if (s.available_cells().empty()) throw StateError("no available cell");
  const auto outcomes = env.simulate(s.grid, sims_per_step, seed);
  return argmax_available(s, dpv_scores(outcomes, values));
}

inline std::vector<double> unit_values(std::size_t n) { return std::vector<double>(n, 1.0); }

struct Episode {
  std::vector<Transition> transitions;
  double average_burned = 0.0;
  std::vector<std::size_t> burned_counts;
};

// Plays one episode with the DPV demonstrator.
inline Episode baseline_episode(const FirebreakEnv& env, std::size_t sims_per_step,
                                std::span<const double> values, std::uint64_t episode_seed,
                                std::uint32_t episode_id = 0) {
  Episode ep;
  Rng env_rng(derive_seed(episode_seed, {0xe4}));
  EnvState s = env.reset();
  bool done = false;
  while (!done) {
    const auto step_id = static_cast<std::uint32_t>(s.t);
    const auto a = baseline_step(env, s, sims_per_step, values, derive_seed(episode_seed, {0xd5, step_id}));
    auto r = env.step(s, a, env_rng);
    Transition tr;
    tr.state = s.observe();
    tr.action = a;
    tr.reward = r.reward;
    tr.next_state = r.state.observe();
    tr.done = r.done;
    tr.is_demo = true;
    tr.episode = episode_id;
    tr.step = step_id;
    ep.transitions.push_back(std::move(tr));
    done = r.done;
    if (done) {
      ep.average_burned = r.average_burned;
      ep.burned_counts = r.burned_counts;
    }
    s = std::move(r.state);
  }
  return ep;
}

inline std::vector<Transition> generate_demonstrations(const FirebreakEnv& env, std::size_t episodes,
                                                       std::size_t sims_per_step, std::uint64_t seed,
                                                       std::span<const double> values = {}) {
  if (episodes < 1) throw ArgumentError("generate_demonstrations: episodes must be >= 1");
  const auto ones = unit_values(env.n_cells());
  if (values.empty()) values = ones;
  std::vector<Transition> out;
  for (std::size_t e = 0; e < episodes; ++e) {
    auto ep = baseline_episode(env, sims_per_step, values, derive_seed(seed, {e}),
                               static_cast<std::uint32_t>(e));
    for (auto& t : ep.transitions) out.push_back(std::move(t));
  }
  return out;
}

// Demonstration file layout (little-endian):
//   char[8] "FBRLDEMO", u32 version (1), i32 rows, i32 cols, u64 count
//   per record: u32 episode, u32 step, u32 action, f64 reward, u8 done,
//               u8 is_demo, then state and next_state, each as
//               u8[n] codes, u8[n] placed, u8[n] forbidden   (n = rows*cols)
inline constexpr char kDemoMagic[8] = {'F', 'B', 'R', 'L', 'D', 'E', 'M', 'O'};
inline constexpr std::uint32_t kDemoVersion = 1;

namespace detail {

inline void put_observation(io::ByteWriter& w, const Observation& o) {
  w.put_bytes(o.codes.data(), o.codes.size());
  w.put_bytes(o.placed.data(), o.placed.size());
  w.put_bytes(o.forbidden.data(), o.forbidden.size());
}

inline Observation get_observation(io::ByteReader& r, std::size_t n) {
  Observation o;
  o.codes.resize(n);
  o.placed.resize(n);
  o.forbidden.resize(n);
  r.get_bytes(o.codes.data(), n);
  r.get_bytes(o.placed.data(), n);
  r.get_bytes(o.forbidden.data(), n);
  return o;
}

}  // namespace detail

inline std::string encode_demonstrations(int rows, int cols, std::span<const Transition> demos) {
  io::ByteWriter w;
  w.put_bytes(kDemoMagic, sizeof kDemoMagic);
  w.put<std::uint32_t>(kDemoVersion);
  w.put<std::int32_t>(rows);
  w.put<std::int32_t>(cols);
  w.put<std::uint64_t>(demos.size());
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  for (const auto& t : demos) {
    if (t.state.codes.size() != n || t.next_state.codes.size() != n)
      throw ArgumentError("demonstration grid size mismatch");
    w.put<std::uint32_t>(t.episode);
    w.put<std::uint32_t>(t.step);
    w.put<std::uint32_t>(t.action);
    w.put<double>(t.reward);
    w.put<std::uint8_t>(t.done);
    w.put<std::uint8_t>(t.is_demo);
    detail::put_observation(w, t.state);
    detail::put_observation(w, t.next_state);
  }
  return w.bytes();
}

struct DemoFile {
  int rows = 0;
  int cols = 0;
  std::vector<Transition> transitions;
};

inline DemoFile decode_demonstrations(std::string_view bytes) {
  io::ByteReader r(bytes);
  char magic[8];
  r.get_bytes(magic, sizeof magic);
  if (std::string_view(magic, 8) != std::string_view(kDemoMagic, 8)) throw ParseError("demo file: bad magic");
  if (r.get<std::uint32_t>() != kDemoVersion) throw ParseError("demo file: unsupported version");
  DemoFile f;
  f.rows = r.get<std::int32_t>();
  f.cols = r.get<std::int32_t>();
  if (f.rows < 1 || f.cols < 1) throw ParseError("demo file: bad dimensions");
  const auto count = r.get<std::uint64_t>();
  const std::size_t n = static_cast<std::size_t>(f.rows) * f.cols;
  f.transitions.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Transition t;
    t.episode = r.get<std::uint32_t>();
    t.step = r.get<std::uint32_t>();
    t.action = r.get<std::uint32_t>();
    t.reward = r.get<double>();
    t.done = r.get<std::uint8_t>() != 0;
    t.is_demo = r.get<std::uint8_t>() != 0;
    t.state = detail::get_observation(r, n);
    t.next_state = detail::get_observation(r, n);
    f.transitions.push_back(std::move(t));
  }
  if (!r.at_end()) throw ParseError("demo file: trailing bytes");
  return f;
}

inline void save_demonstrations(const std::filesystem::path& path, int rows, int cols,
                                std::span<const Transition> demos) {
  io::write_atomic(path, encode_demonstrations(rows, cols, demos));
}

inline DemoFile load_demonstrations(const std::filesystem::path& path) {
  return decode_demonstrations(io::read_text(path));
}

}  // namespace fbrl
