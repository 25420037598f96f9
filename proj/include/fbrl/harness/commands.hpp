#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fbrl/agent/learner.hpp"
#include "fbrl/dpv.hpp"
#include "fbrl/env.hpp"
#include "fbrl/firesim.hpp"
#include "fbrl/harness/config.hpp"
#include "fbrl/io.hpp"
#include "fbrl/nn/checkpoint.hpp"
#include "fbrl/nn/gradcam.hpp"

namespace fbrl::harness {

namespace fs = std::filesystem;

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
}

// --- simulate ----------------------------------------------------------------

struct SimulateSummary {
  std::size_t sims = 0;
  double mean_burned = 0.0;
  double mean_burned_pct = 0.0;
  BurnProbabilityMap map;
};

inline SimulateSummary simulate_untreated(const Instance& in, std::size_t sims, std::uint64_t seed) {
  const auto outcomes = in.env.simulate(in.landscape, sims, derive_seed(seed, {0x51}));
  SimulateSummary s;
  s.sims = sims;
  s.mean_burned = average_burned(outcomes);
  s.mean_burned_pct = 100.0 * s.mean_burned / double(in.landscape.size());
  s.map = burn_probability_map(outcomes);
  return s;
}

inline SimulateSummary cmd_simulate(const ExperimentSpec& spec) {
  const auto in = load_instance(spec);
  ensure_dir(spec.out);
  auto s = simulate_untreated(in, spec.simulate_sims, spec.seed);
  io::write_atomic(spec.out / "burn_probability.grid", format_value_grid(s.map.rows, s.map.cols, s.map.probs));
  io::write_atomic(spec.out / "burn_probability.pgm", format_pgm(s.map.rows, s.map.cols, s.map.probs));
  io::write_atomic(spec.out / "simulate_summary.csv",
                   "sims,mean_burned,mean_burned_pct\n" + std::to_string(s.sims) + "," +
                       io::fmt_fixed(s.mean_burned, 6) + "," + io::fmt_fixed(s.mean_burned_pct, 6) + "\n");
  return s;
}

// --- demo-gen ----------------------------------------------------------------

inline std::size_t cmd_demo_gen(const ExperimentSpec& spec) {
  const auto in = load_instance(spec);
  ensure_dir(spec.out);
  const auto demos = generate_demonstrations(in.env, spec.train.demo_episodes, spec.train.demo_sims_per_step,
                                             derive_seed(spec.seed, {0xde30}));
  save_demonstrations(spec.demo_path(), in.landscape.rows(), in.landscape.cols(), demos);
  return demos.size();
}

// --- pretrain / train ----------------------------------------------------------

inline void load_demos_into(agent::Learner& learner, const ExperimentSpec& spec, const Landscape& l) {
  const auto path = spec.demo_path();
  if (!fs::exists(path)) throw ConfigError("demonstration file not found: " + path.string());
  auto file = load_demonstrations(path);
  if (file.rows != l.rows() || file.cols != l.cols())
    throw ConfigError("demonstration file does not match the landscape dimensions");
  learner.load_demonstrations(std::move(file.transitions));
}

inline std::string format_losses(std::span<const double> losses) {
  std::string out = "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) out += std::to_string(i) + "," + io::fmt_double(losses[i]) + "\n";
  return out;
}

inline std::vector<double> cmd_pretrain(const ExperimentSpec& spec) {
  const auto in = load_instance(spec);
  ensure_dir(spec.out);
  agent::Learner learner(in.env, spec.train);
  load_demos_into(learner, spec, in.landscape);
  const auto losses = learner.pretrain(spec.train.pretrain_steps);
  io::write_atomic(spec.out / "pretrain_loss.csv", format_losses(losses));
  nn::save_network(spec.out / "model.ckpt", learner.online());
  learner.save(spec.out / "pretrain_state.bin");
  return losses;
}

struct TrainOptions {
  bool use_demos = true;
  bool resume = false;
  // Stops after this many total episodes without finishing (0: run to the end).
  std::size_t stop_after = 0;
};

// Pretrains (unless use_demos is false) and trains. The learner state is
// checkpointed every checkpoint_every episodes; with resume, training
// continues from <out>/train_state.bin when it exists.
inline std::vector<agent::CurveRow> cmd_train(const ExperimentSpec& spec, const TrainOptions& opt = {}) {
  const auto in = load_instance(spec);
  ensure_dir(spec.out);
  const auto state_path = spec.out / "train_state.bin";
  agent::Learner learner(in.env, spec.train);
  if (opt.resume && fs::exists(state_path)) {
    learner.restore(state_path);
  } else if (opt.use_demos) {
    load_demos_into(learner, spec, in.landscape);
    if (spec.train.pretrain_steps) learner.pretrain(spec.train.pretrain_steps);
  }
  const std::size_t total = spec.train.episodes;
  const std::size_t until = opt.stop_after ? std::min(opt.stop_after, total) : total;
  while (learner.episodes_done() < until) {
    learner.run_episode();
    if (spec.checkpoint_every && learner.episodes_done() % spec.checkpoint_every == 0) learner.save(state_path);
  }
  learner.save(state_path);
  io::write_atomic(spec.out / "curve.csv", agent::format_curve(learner.curve()));
  nn::save_network(spec.out / "model.ckpt", learner.online());
  return learner.curve();
}

// --- evaluate ------------------------------------------------------------------

enum class Policy { trained, baseline, random };

inline const char* to_string(Policy p) {
  switch (p) {
    case Policy::trained: return "trained";
    case Policy::baseline: return "baseline";
    default: return "random";
  }
}

inline Policy parse_policy(const std::string& s) {
  if (s == "trained") return Policy::trained;
  if (s == "baseline") return Policy::baseline;
  if (s == "random") return Policy::random;
  throw ConfigError("unknown policy '" + s + "' (trained|baseline|random)");
}

struct EvalReport {
  std::string policy;
  double mean_burned_pct = 0.0;
  double std_burned_pct = 0.0;
  std::vector<std::size_t> burned_counts;
  std::vector<CellIndex> placed;
};

inline std::vector<CellIndex> random_placements(const FirebreakEnv& env, std::uint64_t seed) {
  Rng rng(seed);
  EnvState s = env.reset();
  while (s.t < env.budget()) {
    const auto avail = s.available_cells();
    const auto a = avail[uniform_index(rng, avail.size())];
    s.grid.clear_fuel(a);
    s.forbidden[a] = 1;
    s.placed.push_back(a);
    ++s.t;
  }
  return s.placed;
}

// Burned percentages of a fixed placement over the shared evaluation seeds.
inline EvalReport evaluate_placements(const FirebreakEnv& env, std::string policy, std::vector<CellIndex> placed,
                                      std::size_t fires, std::uint64_t eval_seed) {
  if (placed.size() != env.budget())
    throw ConfigError("policy placed " + std::to_string(placed.size()) + " firebreaks, budget is " +
                      std::to_string(env.budget()));
  {
    auto s = env.reset();
    for (auto c : placed) {
      if (c >= s.forbidden.size() || s.forbidden[c]) throw ConfigError("placement on an unavailable cell");
      s.forbidden[c] = 1;
    }
  }
  const auto outcomes = env.simulate(env.treated(placed), fires, eval_seed);
  EvalReport r;
  r.policy = std::move(policy);
  r.placed = std::move(placed);
  const double n = double(env.n_cells());
  double sum = 0.0, sq = 0.0;
  for (const auto& o : outcomes) {
    r.burned_counts.push_back(o.burned.size());
    const double pct = 100.0 * double(o.burned.size()) / n;
    sum += pct;
    sq += pct * pct;
  }
  const double m = sum / double(outcomes.size());
  r.mean_burned_pct = m;
  r.std_burned_pct = std::sqrt(std::max(0.0, sq / double(outcomes.size()) - m * m));
  return r;
}

inline std::string format_report(const EvalReport& r, const Landscape& l) {
  std::string cells;
  for (std::size_t i = 0; i < r.placed.size(); ++i) {
    const auto p = l.pos(r.placed[i]);
    if (i) cells += ' ';
    cells += std::to_string(p.row) + ":" + std::to_string(p.col);
  }
  return "policy,fires,mean_burned_pct,std_burned_pct,placed\n" + r.policy + "," +
         std::to_string(r.burned_counts.size()) + "," + io::fmt_fixed(r.mean_burned_pct, 4) + "," +
         io::fmt_fixed(r.std_burned_pct, 4) + "," + cells + "\n";
}

inline std::string format_fire_counts(const EvalReport& r) {
  std::string out = "fire,burned\n";
  for (std::size_t i = 0; i < r.burned_counts.size(); ++i)
    out += std::to_string(i) + "," + std::to_string(r.burned_counts[i]) + "\n";
  return out;
}

inline std::vector<CellIndex> policy_placements(const Instance& in, const ExperimentSpec& spec, Policy policy,
                                                const fs::path& checkpoint) {
  switch (policy) {
    case Policy::trained: {
      if (!fs::exists(checkpoint)) throw ConfigError("checkpoint not found: " + checkpoint.string());
      agent::Learner learner(in.env, spec.train);
      learner.set_network(nn::load_network<agent::Real>(checkpoint));
      return learner.greedy_rollout();
    }
    case Policy::baseline: {
      const auto values = unit_values(in.env.n_cells());
      std::vector<CellIndex> placed;
      for (const auto& t : baseline_episode(in.env, spec.train.demo_sims_per_step, values,
                                            derive_seed(spec.seed, {0xba5e}))
                               .transitions)
        placed.push_back(t.action);
      return placed;
    }
    default: return random_placements(in.env, derive_seed(spec.seed, {0x7a2d}));
  }
}

inline EvalReport cmd_evaluate(const ExperimentSpec& spec, Policy policy, const fs::path& checkpoint = {}) {
  const auto in = load_instance(spec);
  ensure_dir(spec.out);
  const auto ckpt = checkpoint.empty() ? spec.out / "model.ckpt" : checkpoint;
  auto report = evaluate_placements(in.env, to_string(policy), policy_placements(in, spec, policy, ckpt),
                                    spec.eval_fires, spec.train.eval_seed);
  const std::string stem = std::string("eval_") + to_string(policy);
  io::write_atomic(spec.out / (stem + ".csv"), format_report(report, in.landscape));
  io::write_atomic(spec.out / (stem + "_fires.csv"), format_fire_counts(report));
  return report;
}

// --- gradcam -----------------------------------------------------------------------

struct AttentionStep {
  CellIndex action = 0;
  GridPos cell;
  std::vector<double> map;
};

// Greedy rollout from the checkpoint; one attention map per placement.
inline std::vector<AttentionStep> gradcam_rollout(const FirebreakEnv& env, agent::Net& net) {
  const auto enc = env.encoder();
  const auto& nc = net.config();
  std::vector<AttentionStep> out;
  EnvState s = env.reset();
  Rng unused(0);
  while (s.t < env.budget()) {
    const auto obs = s.observe();
    const auto a = agent::act(net, enc, obs, 0.0, unused);
    auto x = enc.encode<agent::Real>(obs, nc.rows, nc.cols);
    out.push_back({a, env.base().pos(a), nn::grad_cam(net, x, a)});
    s.grid.clear_fuel(a);
    s.forbidden[a] = 1;
    s.placed.push_back(a);
    ++s.t;
  }
  return out;
}

inline std::vector<AttentionStep> cmd_gradcam(const ExperimentSpec& spec, const fs::path& checkpoint = {}) {
  const auto in = load_instance(spec);
  ensure_dir(spec.out);
  const auto ckpt = checkpoint.empty() ? spec.out / "model.ckpt" : checkpoint;
  if (!fs::exists(ckpt)) throw ConfigError("checkpoint not found: " + ckpt.string());
  auto net = nn::load_network<agent::Real>(ckpt);
  if (net.config().rows != in.landscape.rows() || net.config().cols != in.landscape.cols())
    throw ConfigError("checkpoint does not match the landscape dimensions");
  const auto steps = gradcam_rollout(in.env, net);
  std::string index = "step,action,row,col\n";
  const int R = in.landscape.rows(), C = in.landscape.cols();
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const auto& st = steps[t];
    index += std::to_string(t) + "," + std::to_string(st.action) + "," + std::to_string(st.cell.row) + "," +
             std::to_string(st.cell.col) + "\n";
    const std::string stem = "gradcam_" + std::to_string(t);
    io::write_atomic(spec.out / (stem + ".grid"), format_value_grid(R, C, st.map));
    io::write_atomic(spec.out / (stem + ".pgm"), format_pgm(R, C, st.map));
  }
  io::write_atomic(spec.out / "gradcam_steps.csv", index);
  return steps;
}

// --- shrink --------------------------------------------------------------------------

inline Landscape cmd_shrink(const ExperimentSpec& spec) {
  if (spec.landscape.empty() || spec.fuels.empty()) throw ConfigError("shrink needs landscape and fuels");
  if (spec.shrink_rows < 2 || spec.shrink_cols < 2) throw ConfigError("shrink_rows and shrink_cols must be >= 2");
  const auto catalog = load_fuel_catalog(spec.fuels);
  const auto l = load_landscape(spec.landscape, catalog);
  ensure_dir(spec.out);
  auto small = shrink_nearest(l, spec.shrink_rows, spec.shrink_cols);
  save_landscape(spec.out / "shrunk.grid", small);
  return small;
}

}  // namespace fbrl::harness
