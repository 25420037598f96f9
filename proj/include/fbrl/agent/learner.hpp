#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fbrl/agent/global_loss.hpp"
#include "fbrl/agent/losses.hpp"
#include "fbrl/agent/replay_buffer.hpp"
#include "fbrl/dpv.hpp"
#include "fbrl/env.hpp"
#include "fbrl/errors.hpp"
#include "fbrl/io.hpp"
#include "fbrl/nn/adam.hpp"
#include "fbrl/nn/checkpoint.hpp"
#include "fbrl/nn/qnetwork.hpp"
#include "fbrl/rng.hpp"

namespace fbrl::agent {

using Real = float;
using Net = nn::QNetwork<Real>;

struct TrainConfig {
  Algo algo = Algo::dqn;
  nn::Architecture arch = nn::Architecture::small_net;
  std::size_t buffer_capacity = 100000;
  std::size_t batch_size = 64;
  std::size_t target_update = 200;  // C: episodes in training, steps in pre-training
  std::size_t episodes = 20000;
  double lr = 5e-5;
  double gamma = 1.0;
  double eps_start = 1.0;
  double eps_decay = 0.005;
  double eps_min = 0.001;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1e-5;
  double margin = 0.8;
  std::size_t n_step = 10;
  std::size_t pretrain_steps = 2000;
  std::size_t demo_episodes = 1000;
  std::size_t demo_sims_per_step = 32;
  double dropout = 0.1;
  std::uint64_t seed = 0;
  std::size_t eval_every = 0;   // 0 disables in-training evaluation
  std::size_t eval_sims = 100;
  std::uint64_t eval_seed = 20240501;

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0,1]");
    for (double e : {eps_start, eps_decay, eps_min})
      if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("epsilon parameters must lie in [0,1]");
    if (n_step < 1) throw ConfigError("n_step must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (target_update < 1) throw ConfigError("target_update must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  }

  LossConfig loss() const { return LossConfig{algo, gamma, lambda1, lambda2, lambda3, margin}; }
};

// Multiplicative per-episode decay with a floor.
inline double eps_schedule(double eps, const TrainConfig& cfg) {
  return std::max(cfg.eps_min, eps * (1.0 - cfg.eps_decay));
}

// eps-greedy over the available cells; greedy ties go to the smallest index.
template <typename T>
CellIndex act(nn::QNetwork<T>& net, const StateEncoder& enc, const Observation& obs, double eps, Rng& rng) {
  const auto mask = obs.mask();
  std::vector<CellIndex> avail;
  for (CellIndex i = 0; i < mask.size(); ++i)
    if (mask[i]) avail.push_back(i);
  if (avail.empty()) throw StateError("no available action");
  if (eps > 0.0 && uniform01(rng) < eps) return avail[uniform_index(rng, avail.size())];
  const auto& nc = net.config();
  auto x = enc.encode<T>(obs, nc.rows, nc.cols);
  x.reshape({1, x.dim(0), x.dim(1), x.dim(2)});
  const auto q = net.forward(x, mask, false);
  return static_cast<CellIndex>(nn::argmax_row(q.ptr(), q.size()));
}

struct CurveRow {
  std::size_t episode = 0;
  double ret = 0.0;
  double epsilon = 0.0;
  double loss_mean = std::numeric_limits<double>::quiet_NaN();
  double eval_burned_pct = std::numeric_limits<double>::quiet_NaN();
  friend bool operator==(const CurveRow& a, const CurveRow& b) {
    auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
    return a.episode == b.episode && a.ret == b.ret && a.epsilon == b.epsilon && same(a.loss_mean, b.loss_mean) &&
           same(a.eval_burned_pct, b.eval_burned_pct);
  }
};

inline std::string format_curve(std::span<const CurveRow> rows) {
  std::string out = "episode,return,epsilon,loss_mean,eval_burned_pct\n";
  for (const auto& r : rows) {
    out += std::to_string(r.episode) + "," + io::fmt_double(r.ret) + "," + io::fmt_double(r.epsilon) + ",";
    if (!std::isnan(r.loss_mean)) out += io::fmt_double(r.loss_mean);
    out += ",";
    if (!std::isnan(r.eval_burned_pct)) out += io::fmt_fixed(r.eval_burned_pct, 4);
    out += "\n";
  }
  return out;
}

// Mean of the last `window` returns.
inline double final_smoothed_return(std::span<const CurveRow> rows, std::size_t window = 100) {
  if (rows.empty()) throw ArgumentError("empty learning curve");
  const std::size_t n = std::min(window, rows.size());
  double s = 0;
  for (std::size_t i = rows.size() - n; i < rows.size(); ++i) s += rows[i].ret;
  return s / double(n);
}

// Deep Q-learning from demonstrations: online/target networks, protected
// replay memory, pre-training on demonstrations and eps-greedy training.
// Every random draw is keyed by (seed, phase, counter), so a run restored from
// a checkpoint continues exactly as the uninterrupted run would have.
class Learner {
 public:
  Learner(const FirebreakEnv& env, TrainConfig cfg)
      : env_(&env), cfg_(std::move(cfg)), enc_(env.encoder()), buffer_(cfg_.buffer_capacity) {
    cfg_.validate();
    const auto head = cfg_.algo == Algo::dueling_double_dqn ? nn::HeadType::dueling : nn::HeadType::single;
    auto nc = nn::NetConfig::preset(cfg_.arch, head, enc_.channels(), env.base().rows(), env.base().cols(),
                                    derive_seed(cfg_.seed, {0x4e7}));
    nc.dropout = cfg_.dropout;
    online_ = Net(nc);
    target_ = online_;
    eps_ = cfg_.eps_start;
  }

  // Replaces the default networks (custom architectures in tests).
  void set_network(Net net) {
    online_ = std::move(net);
    target_ = online_;
    adam_ = {};
  }

  Net& online() { return online_; }
  Net& target() { return target_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const TrainConfig& config() const { return cfg_; }
  const StateEncoder& encoder() const { return enc_; }
  double epsilon() const { return eps_; }
  std::size_t episodes_done() const { return episodes_done_; }
  std::size_t updates_done() const { return updates_; }
  const std::vector<CurveRow>& curve() const { return curve_; }

  // Annotates n-step caches per episode and stores demos in the protected region.
  void load_demonstrations(std::vector<Transition> demos) {
    std::size_t start = 0;
    for (std::size_t i = 0; i < demos.size(); ++i) {
      if (demos[i].done || i + 1 == demos.size()) {
        annotate_n_step(std::span<Transition>(demos).subspan(start, i + 1 - start), cfg_.gamma, cfg_.n_step);
        start = i + 1;
      }
    }
    buffer_.add_demonstrations(std::move(demos));
  }

  void push_episode(std::vector<Transition> episode) {
    annotate_n_step(episode, cfg_.gamma, cfg_.n_step);
    for (auto& t : episode) buffer_.push(std::move(t));
  }

  // One sampled-batch gradient step. Returns the loss value.
  double update() {
    Rng rng(derive_seed(cfg_.seed, {0x0bda7e, updates_}));
    const auto idx = buffer_.sample_indices(cfg_.batch_size, rng);
    std::vector<const Transition*> batch;
    batch.reserve(idx.size());
    for (auto i : idx) batch.push_back(&buffer_[i]);
    const auto loss = global_loss<Real>(batch, online_, target_, enc_, cfg_.loss(), true, &rng);
    nn::adam_step(online_.parameters(), nn::AdamConfig{cfg_.lr}, adam_);
    ++updates_;
    return loss.total;
  }

  // Updates on demonstrations only; target sync every C steps.
  std::vector<double> pretrain(std::size_t steps) {
    if (buffer_.empty()) throw StateError("pretrain: replay buffer is empty");
    std::vector<double> losses;
    losses.reserve(steps);
    for (std::size_t s = 0; s < steps; ++s) {
      losses.push_back(update());
      ++pretrain_done_;
      if (pretrain_done_ % cfg_.target_update == 0) sync_target(online_, target_);
    }
    return losses;
  }

  CellIndex act(const Observation& obs, double eps, Rng& rng) { return agent::act(online_, enc_, obs, eps, rng); }

  // One eps-greedy episode with a gradient step per environment step.
  CurveRow run_episode() {
    const auto e = episodes_done_;
    Rng act_rng(derive_seed(cfg_.seed, {0xe915, e, 1}));
    Rng env_rng(derive_seed(cfg_.seed, {0xe915, e, 2}));
    EnvState s = env_->reset();
    std::vector<Transition> episode;
    double ret = 0, loss_sum = 0;
    std::size_t n_updates = 0;
    bool done = false;
    while (!done) {
      const auto obs = s.observe();
      const auto a = act(obs, eps_, act_rng);
      auto r = env_->step(s, a, env_rng);
      Transition tr;
      tr.state = obs;
      tr.action = a;
      tr.reward = r.reward;
      tr.next_state = r.state.observe();
      tr.done = r.done;
      tr.episode = static_cast<std::uint32_t>(e);
      tr.step = static_cast<std::uint32_t>(s.t);
      episode.push_back(std::move(tr));
      ret += r.reward;
      done = r.done;
      s = std::move(r.state);
      if (!buffer_.empty()) {
        loss_sum += update();
        ++n_updates;
      }
    }
    push_episode(std::move(episode));

    CurveRow row;
    row.episode = e;
    row.ret = ret;
    row.epsilon = eps_;
    if (n_updates) row.loss_mean = loss_sum / double(n_updates);
    ++episodes_done_;
    eps_ = eps_schedule(eps_, cfg_);
    if (episodes_done_ % cfg_.target_update == 0) sync_target(online_, target_);
    if (cfg_.eval_every && episodes_done_ % cfg_.eval_every == 0)
      row.eval_burned_pct = evaluate_greedy(cfg_.eval_sims, cfg_.eval_seed);
    curve_.push_back(row);
    return row;
  }

  // Trains until `episodes` episodes are complete in total. The callback runs
  // after every episode.
  const std::vector<CurveRow>& train(std::size_t episodes,
                                     const std::function<void(const CurveRow&)>& on_episode = {}) {
    while (episodes_done_ < episodes) {
      const auto row = run_episode();
      if (on_episode) on_episode(row);
    }
    return curve_;
  }

  std::vector<CellIndex> greedy_rollout() {
    EnvState s = env_->reset();
    Rng unused(0);
    while (s.t < env_->budget()) {
      const auto a = act(s.observe(), 0.0, unused);
      s.grid.clear_fuel(a);
      s.forbidden[a] = 1;
      s.placed.push_back(a);
      ++s.t;
    }
    return s.placed;
  }

  double evaluate_greedy(std::size_t sims, std::uint64_t seed) {
    const auto placed = greedy_rollout();
    const auto outcomes = env_->simulate(env_->treated(placed), sims, seed);
    return 100.0 * average_burned(outcomes) / double(env_->n_cells());
  }

  // --- checkpointing -----------------------------------------------------------

  std::string serialize() const;
  void deserialize(std::string_view bytes);

  void save(const std::filesystem::path& path) const { io::write_atomic(path, serialize()); }
  void restore(const std::filesystem::path& path) { deserialize(io::read_text(path)); }

 private:
  const FirebreakEnv* env_;
  TrainConfig cfg_;
  StateEncoder enc_;
  ReplayBuffer buffer_;
  Net online_, target_;
  nn::AdamState<Real> adam_;
  double eps_ = 1.0;
  std::size_t episodes_done_ = 0;
  std::size_t pretrain_done_ = 0;
  std::size_t updates_ = 0;
  std::vector<CurveRow> curve_;
};

// Training-state checkpoint layout (little-endian):
//   char[8] "FBRLSTAT", u32 version (1)
//   u64 episodes_done, u64 pretrain_done, u64 updates, f64 epsilon
//   online network, target network (nn checkpoint layout), Adam state
//   u64 demo count, u64 ring count, u64 ring head, then transitions
//   u64 curve rows, each: u64 episode, f64 return, f64 epsilon, f64 loss, f64 eval
inline constexpr char kStateMagic[8] = {'F', 'B', 'R', 'L', 'S', 'T', 'A', 'T'};

namespace detail {

inline void put_transition(io::ByteWriter& w, const Transition& t) {
  w.put<std::uint32_t>(t.episode);
  w.put<std::uint32_t>(t.step);
  w.put<std::uint32_t>(t.action);
  w.put<double>(t.reward);
  w.put<std::uint8_t>(t.done);
  w.put<std::uint8_t>(t.is_demo);
  w.put<double>(t.nstep_return);
  w.put<std::uint8_t>(t.nstep_bootstrap);
  w.put<double>(t.nstep_discount);
  for (const auto* o : {&t.state, &t.next_state, &t.nstep_state}) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(o->codes.size()));
    fbrl::detail::put_observation(w, *o);
  }
}

inline Transition get_transition(io::ByteReader& r) {
  Transition t;
  t.episode = r.get<std::uint32_t>();
  t.step = r.get<std::uint32_t>();
  t.action = r.get<std::uint32_t>();
  t.reward = r.get<double>();
  t.done = r.get<std::uint8_t>() != 0;
  t.is_demo = r.get<std::uint8_t>() != 0;
  t.nstep_return = r.get<double>();
  t.nstep_bootstrap = r.get<std::uint8_t>() != 0;
  t.nstep_discount = r.get<double>();
  for (auto* o : {&t.state, &t.next_state, &t.nstep_state}) {
    const auto n = r.get<std::uint32_t>();
    *o = fbrl::detail::get_observation(r, n);
  }
  return t;
}

}  // namespace detail

inline std::string Learner::serialize() const {
  io::ByteWriter w;
  w.put_bytes(kStateMagic, sizeof kStateMagic);
  w.put<std::uint32_t>(1);
  w.put<std::uint64_t>(episodes_done_);
  w.put<std::uint64_t>(pretrain_done_);
  w.put<std::uint64_t>(updates_);
  w.put<double>(eps_);
  nn::write_network(w, online_);
  nn::write_network(w, target_);
  nn::write_adam(w, adam_);
  w.put<std::uint64_t>(buffer_.demo_count());
  w.put<std::uint64_t>(buffer_.ring_storage().size());
  w.put<std::uint64_t>(buffer_.ring_head());
  for (const auto& t : buffer_.demonstrations()) detail::put_transition(w, t);
  for (const auto& t : buffer_.ring_storage()) detail::put_transition(w, t);
  w.put<std::uint64_t>(curve_.size());
  for (const auto& c : curve_) {
    w.put<std::uint64_t>(c.episode);
    w.put<double>(c.ret);
    w.put<double>(c.epsilon);
    w.put<double>(c.loss_mean);
    w.put<double>(c.eval_burned_pct);
  }
  return w.bytes();
}

inline void Learner::deserialize(std::string_view bytes) {
  io::ByteReader r(bytes);
  char magic[8];
  r.get_bytes(magic, sizeof magic);
  if (std::string_view(magic, 8) != std::string_view(kStateMagic, 8)) throw ParseError("state file: bad magic");
  if (r.get<std::uint32_t>() != 1) throw ParseError("state file: unsupported version");
  episodes_done_ = r.get<std::uint64_t>();
  pretrain_done_ = r.get<std::uint64_t>();
  updates_ = r.get<std::uint64_t>();
  eps_ = r.get<double>();
  auto online = nn::read_network<Real>(r);
  auto target = nn::read_network<Real>(r);
  if (!(online.config() == online_.config())) throw ParseError("state file: network configuration differs");
  online_ = std::move(online);
  target_ = std::move(target);
  adam_ = nn::read_adam<Real>(r);
  const auto n_demo = r.get<std::uint64_t>();
  const auto n_ring = r.get<std::uint64_t>();
  const auto head = r.get<std::uint64_t>();
  std::vector<Transition> demos, ring;
  for (std::uint64_t i = 0; i < n_demo; ++i) demos.push_back(detail::get_transition(r));
  for (std::uint64_t i = 0; i < n_ring; ++i) ring.push_back(detail::get_transition(r));
  buffer_ = ReplayBuffer(cfg_.buffer_capacity);
  buffer_.add_demonstrations(std::move(demos));
  buffer_.restore_ring(std::move(ring), head);
  curve_.clear();
  const auto n_curve = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_curve; ++i) {
    CurveRow c;
    c.episode = r.get<std::uint64_t>();
    c.ret = r.get<double>();
    c.epsilon = r.get<double>();
    c.loss_mean = r.get<double>();
    c.eval_burned_pct = r.get<double>();
    curve_.push_back(c);
  }
}

}  // namespace fbrl::agent
