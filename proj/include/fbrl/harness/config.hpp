#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fbrl/agent/learner.hpp"
#include "fbrl/env.hpp"
#include "fbrl/errors.hpp"
#include "fbrl/io.hpp"
#include "fbrl/landscape.hpp"

namespace fbrl::harness {

// Everything one experiment needs. Paths are resolved relative to the
// config file's directory.
struct ExperimentSpec {
  std::filesystem::path landscape;
  std::filesystem::path fuels;
  std::filesystem::path weather;
  std::filesystem::path demos;  // empty: <out>/demos.bin
  EnvConfig env;
  agent::TrainConfig train;
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;
  std::size_t simulate_sims = 500;
  std::size_t eval_fires = 500;
  std::size_t checkpoint_every = 100;
  int shrink_rows = 0;
  int shrink_cols = 0;

  std::filesystem::path demo_path() const { return demos.empty() ? out / "demos.bin" : demos; }
};

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  const auto lines = io::lines_of(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    std::string line = lines[n];
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (io::split_ws(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(n + 1) + ": expected key=value");
    auto key = io::split_ws(line.substr(0, eq));
    auto val = io::split(line.substr(eq + 1), '\0');
    if (key.size() != 1) throw ConfigError("config line " + std::to_string(n + 1) + ": bad key");
    std::string v = val.empty() ? "" : val[0];
    while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.pop_back();
    while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.erase(v.begin());
    kv[key[0]] = v;
  }
  return kv;
}

namespace detail {

inline double as_double(const std::string& key, const std::string& v) {
  double d = 0;
  if (!io::parse_double(v, d)) throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  return d;
}

inline long long as_int(const std::string& key, const std::string& v) {
  long long i = 0;
  if (!io::parse_int(v, i)) throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  return i;
}

inline std::size_t as_count(const std::string& key, const std::string& v) {
  const auto i = as_int(key, v);
  if (i < 0) throw ConfigError("config: '" + key + "' must be nonnegative");
  return static_cast<std::size_t>(i);
}

inline std::uint64_t as_seed(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const auto s = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || errno || end != v.c_str() + v.size() || v[0] == '-')
    throw ConfigError("config: '" + key + "' expects an unsigned integer");
  return s;
}

inline agent::Algo as_algo(const std::string& v) {
  if (v == "dqn") return agent::Algo::dqn;
  if (v == "2dqn" || v == "double_dqn") return agent::Algo::double_dqn;
  if (v == "ddqn" || v == "dueling_double_dqn") return agent::Algo::dueling_double_dqn;
  throw ConfigError("config: unknown algo '" + v + "' (dqn|2dqn|ddqn)");
}

inline nn::Architecture as_arch(const std::string& v) {
  if (v == "small_net" || v == "small") return nn::Architecture::small_net;
  if (v == "big_net" || v == "big") return nn::Architecture::big_net;
  throw ConfigError("config: unknown arch '" + v + "' (small_net|big_net)");
}

}  // namespace detail

inline void apply_key(ExperimentSpec& s, const std::string& key, const std::string& v,
                      const std::filesystem::path& base_dir) {
  using namespace detail;
  auto path = [&](const std::string& p) { return p.empty() ? std::filesystem::path{} : base_dir / p; };
  auto& e = s.env;
  auto& t = s.train;
  if (key == "landscape") s.landscape = path(v);
  else if (key == "fuels") s.fuels = path(v);
  else if (key == "weather") s.weather = path(v);
  else if (key == "demos") s.demos = path(v);
  else if (key == "out") s.out = v;
  else if (key == "seed") s.seed = t.seed = as_seed(key, v);
  else if (key == "alpha") e.alpha = as_double(key, v);
  else if (key == "k") e.k = as_double(key, v);
  else if (key == "sims_per_eval") e.sims_per_eval = as_count(key, v);
  else if (key == "ignition_row") e.zone.center.row = static_cast<int>(as_int(key, v));
  else if (key == "ignition_col") e.zone.center.col = static_cast<int>(as_int(key, v));
  else if (key == "ignition_radius") e.zone.radius = static_cast<int>(as_int(key, v));
  else if (key == "ignition_shape") {
    if (v == "disc") e.zone.shape = IgnitionShape::disc;
    else if (v == "ring") e.zone.shape = IgnitionShape::ring;
    else throw ConfigError("config: ignition_shape must be disc or ring");
  } else if (key == "wind_gain") e.model.wind_gain = as_double(key, v);
  else if (key == "speed_ref") e.model.speed_ref = as_double(key, v);
  else if (key == "workers") e.workers = static_cast<unsigned>(as_count(key, v));
  else if (key == "initial_forbidden") {
    e.initial_forbidden.clear();
    for (const auto& f : io::split(v, ','))
      if (!f.empty()) e.initial_forbidden.push_back(static_cast<CellIndex>(as_count(key, f)));
  } else if (key == "algo") t.algo = as_algo(v);
  else if (key == "arch") t.arch = as_arch(v);
  else if (key == "buffer_capacity" || key == "D") t.buffer_capacity = as_count(key, v);
  else if (key == "batch_size" || key == "batch") t.batch_size = as_count(key, v);
  else if (key == "target_update" || key == "C") t.target_update = as_count(key, v);
  else if (key == "episodes") t.episodes = as_count(key, v);
  else if (key == "lr") t.lr = as_double(key, v);
  else if (key == "gamma") t.gamma = as_double(key, v);
  else if (key == "eps_start") t.eps_start = as_double(key, v);
  else if (key == "eps_decay") t.eps_decay = as_double(key, v);
  else if (key == "eps_min") t.eps_min = as_double(key, v);
  else if (key == "lambda1") t.lambda1 = as_double(key, v);
  else if (key == "lambda2") t.lambda2 = as_double(key, v);
  else if (key == "lambda3") t.lambda3 = as_double(key, v);
  else if (key == "margin") t.margin = as_double(key, v);
  else if (key == "n_step") t.n_step = as_count(key, v);
  else if (key == "pretrain_steps") t.pretrain_steps = as_count(key, v);
  else if (key == "demo_episodes") t.demo_episodes = as_count(key, v);
  else if (key == "demo_sims_per_step" || key == "sims_per_step") t.demo_sims_per_step = as_count(key, v);
  else if (key == "dropout") t.dropout = as_double(key, v);
  else if (key == "eval_every") t.eval_every = as_count(key, v);
  else if (key == "eval_sims") t.eval_sims = as_count(key, v);
  else if (key == "eval_seed") t.eval_seed = as_seed(key, v);
  else if (key == "simulate_sims") s.simulate_sims = as_count(key, v);
  else if (key == "eval_fires") s.eval_fires = as_count(key, v);
  else if (key == "checkpoint_every") s.checkpoint_every = as_count(key, v);
  else if (key == "shrink_rows") s.shrink_rows = static_cast<int>(as_int(key, v));
  else if (key == "shrink_cols") s.shrink_cols = static_cast<int>(as_int(key, v));
  else throw ConfigError("config: unknown key '" + key + "'");
}

inline ExperimentSpec parse_spec(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentSpec s;
  for (const auto& [k, v] : parse_key_values(text)) apply_key(s, k, v, base_dir);
  return s;
}

inline ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_spec(text, path.parent_path());
}

// Loaded inputs of a spec.
struct Instance {
  std::shared_ptr<const FuelCatalog> catalog;
  Landscape landscape;
  FirebreakEnv env;
};

inline Instance load_instance(const ExperimentSpec& s) {
  for (const auto* p : {&s.landscape, &s.fuels, &s.weather})
    if (p->empty() || !std::filesystem::exists(*p))
      throw ConfigError("missing input file: " + (p->empty() ? std::string("<unset>") : p->string()));
  auto catalog = load_fuel_catalog(s.fuels);
  auto landscape = load_landscape(s.landscape, catalog);
  EnvConfig cfg = s.env;
  cfg.weather = load_weather(s.weather);
  FirebreakEnv env(landscape, cfg);
  return Instance{catalog, std::move(landscape), std::move(env)};
}

}  // namespace fbrl::harness
