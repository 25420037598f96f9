#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "fbrl/errors.hpp"
#include "fbrl/harness/commands.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key=value config file")->required();
  sub->add_option("--seed", c.seed, "master seed (overrides the config)");
  sub->add_option("--out", c.out, "output directory (overrides the config)");
}

fbrl::harness::ExperimentSpec resolve(const Common& c) {
  auto spec = fbrl::harness::load_spec(c.config);
  if (c.seed) spec.seed = spec.train.seed = *c.seed;
  if (!c.out.empty()) spec.out = c.out;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  namespace h = fbrl::harness;
  CLI::App app{"Firebreak placement with deep Q-learning from demonstrations"};
  app.require_subcommand(1);
  Common common;

  auto* simulate = app.add_subcommand("simulate", "burn-probability map of the untreated landscape");
  auto* demo_gen = app.add_subcommand("demo-gen", "generate DPV demonstrations");
  auto* pretrain = app.add_subcommand("pretrain", "pretrain on demonstrations");
  auto* train = app.add_subcommand("train", "pretrain then train with the environment");
  auto* evaluate = app.add_subcommand("evaluate", "burned percentage of a policy on the evaluation fires");
  auto* gradcam = app.add_subcommand("gradcam", "attention maps along a greedy rollout");
  auto* shrink = app.add_subcommand("shrink", "nearest-neighbour downsample of a landscape");
  for (auto* s : {simulate, demo_gen, pretrain, train, evaluate, gradcam, shrink}) add_common(s, common);

  std::string algo;
  bool no_demos = false, resume = false;
  train->add_option("--algo", algo, "dqn | 2dqn | ddqn");
  train->add_flag("--no-demos", no_demos, "skip demonstrations and pretraining");
  train->add_flag("--resume", resume, "continue from the last checkpoint in --out");

  std::string policy = "trained", checkpoint;
  evaluate->add_option("--policy", policy, "trained | baseline | random");
  evaluate->add_option("--checkpoint", checkpoint, "network checkpoint (default <out>/model.ckpt)");
  gradcam->add_option("--checkpoint", checkpoint, "network checkpoint (default <out>/model.ckpt)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    auto spec = resolve(common);
    if (simulate->parsed()) {
      const auto s = h::cmd_simulate(spec);
      std::printf("mean burned %.4f cells (%.2f%%) over %zu fires\n", s.mean_burned, s.mean_burned_pct, s.sims);
    } else if (demo_gen->parsed()) {
      const auto n = h::cmd_demo_gen(spec);
      std::printf("wrote %zu transitions to %s\n", n, spec.demo_path().c_str());
    } else if (pretrain->parsed()) {
      const auto losses = h::cmd_pretrain(spec);
      if (!losses.empty()) std::printf("pretrain final loss %.6f\n", losses.back());
    } else if (train->parsed()) {
      if (!algo.empty()) spec.train.algo = fbrl::harness::detail::as_algo(algo);
      const auto curve = h::cmd_train(spec, {!no_demos, resume, 0});
      if (!curve.empty())
        std::printf("episodes %zu, final smoothed return %.6f\n", curve.size(),
                    fbrl::agent::final_smoothed_return(curve));
    } else if (evaluate->parsed()) {
      const auto r = h::cmd_evaluate(spec, h::parse_policy(policy), checkpoint);
      std::printf("%s: %.2f%% burned (sd %.2f) over %zu fires\n", r.policy.c_str(), r.mean_burned_pct,
                  r.std_burned_pct, r.burned_counts.size());
    } else if (gradcam->parsed()) {
      const auto steps = h::cmd_gradcam(spec, checkpoint);
      std::printf("wrote %zu attention maps\n", steps.size());
    } else if (shrink->parsed()) {
      const auto l = h::cmd_shrink(spec);
      std::printf("wrote %dx%d landscape\n", l.rows(), l.cols());
    }
  } catch (const fbrl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const fbrl::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}
