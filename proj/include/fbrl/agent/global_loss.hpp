#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fbrl/agent/losses.hpp"
#include "fbrl/env.hpp"
#include "fbrl/errors.hpp"
#include "fbrl/nn/qnetwork.hpp"

namespace fbrl::agent {

struct LossConfig {
  Algo algo = Algo::dqn;
  double gamma = 1.0;
  double lambda1 = 1.0;   // n-step
  double lambda2 = 1.0;   // margin
  double lambda3 = 1e-5;  // L2
  double margin = 0.8;
};

struct LossBreakdown {
  double total = 0.0;
  double dq = 0.0;
  double nstep = 0.0;
  double margin = 0.0;
  double l2 = 0.0;
};

// Bootstrap targets for J_DQ under the configured algorithm.
template <typename T>
std::vector<double> dq_targets(std::span<const Transition* const> batch, nn::QNetwork<T>& online,
                               nn::QNetwork<T>& target, const StateEncoder& enc, const LossConfig& cfg) {
  const std::size_t B = batch.size();
  const auto& nc = online.config();
  std::vector<double> rewards(B);
  std::vector<std::uint8_t> done(B);
  bool any_bootstrap = false;
  for (std::size_t b = 0; b < B; ++b) {
    rewards[b] = batch[b]->reward;
    done[b] = batch[b]->done;
    any_bootstrap = any_bootstrap || !batch[b]->done;
  }
  if (!any_bootstrap || cfg.gamma == 0.0) return rewards;

  std::vector<const Observation*> next(B);
  std::vector<std::uint8_t> mask;
  mask.reserve(B * nc.actions());
  for (std::size_t b = 0; b < B; ++b) {
    next[b] = &batch[b]->next_state;
    const auto m = next[b]->mask();
    mask.insert(mask.end(), m.begin(), m.end());
  }
  const auto x = enc.encode_batch<T>(next, nc.rows, nc.cols);
  const auto q_target = target.forward(x, mask, false);
  if (cfg.algo == Algo::dqn) return td_targets(rewards, done, q_target, cfg.gamma);
  const auto q_online = online.forward(x, mask, false);
  return double_td_targets(rewards, done, q_online, q_target, cfg.gamma);
}

// n-step targets from the cached partial returns; bootstraps use the target net.
template <typename T>
std::vector<double> nstep_targets(std::span<const Transition* const> batch, nn::QNetwork<T>& target,
                                  const StateEncoder& enc) {
  const std::size_t B = batch.size();
  const auto& nc = target.config();
  std::vector<double> out(B);
  std::vector<const Observation*> boot;
  std::vector<std::size_t> where;
  std::vector<std::uint8_t> mask;
  for (std::size_t b = 0; b < B; ++b) {
    out[b] = batch[b]->nstep_return;
    if (batch[b]->nstep_bootstrap) {
      boot.push_back(&batch[b]->nstep_state);
      where.push_back(b);
      const auto m = batch[b]->nstep_state.mask();
      mask.insert(mask.end(), m.begin(), m.end());
    }
  }
  if (boot.empty()) return out;
  const auto x = enc.encode_batch<T>(boot, nc.rows, nc.cols);
  const auto q = target.forward(x, mask, false);
  const std::size_t A = static_cast<std::size_t>(nc.actions());
  for (std::size_t i = 0; i < where.size(); ++i) {
    const T* row = q.ptr() + i * A;
    const auto a = nn::argmax_row(row, A);
    if (std::isfinite(double(row[a]))) out[where[i]] += batch[where[i]]->nstep_discount * double(row[a]);
  }
  return out;
}

// L(theta) = J_DQ + l1 J_n + l2 J_e + l3 J_L2 over one batch. Targets are
// constants; the gradient w.r.t. the online parameters is left in
// online.parameters()[i].grad. J_DQ, J_n and J_e are batch means (J_e is 0
// for non-demonstration rows); J_L2 sums squares of weight tensors.
template <typename T>
LossBreakdown global_loss(std::span<const Transition* const> batch, nn::QNetwork<T>& online,
                          nn::QNetwork<T>& target, const StateEncoder& enc, const LossConfig& cfg,
                          bool training = false, Rng* dropout_rng = nullptr) {
  if (batch.empty()) throw ArgumentError("global_loss: empty batch");
  const std::size_t B = batch.size();
  const auto& nc = online.config();
  const std::size_t A = static_cast<std::size_t>(nc.actions());

  const auto y_dq = dq_targets(batch, online, target, enc, cfg);
  std::vector<double> y_n;
  if (cfg.lambda1 != 0.0) y_n = nstep_targets(batch, target, enc);

  std::vector<const Observation*> obs(B);
  std::vector<std::uint8_t> mask;
  mask.reserve(B * A);
  for (std::size_t b = 0; b < B; ++b) {
    obs[b] = &batch[b]->state;
    const auto m = obs[b]->mask();
    mask.insert(mask.end(), m.begin(), m.end());
  }
  const auto x = enc.encode_batch<T>(obs, nc.rows, nc.cols);
  online.forward(x, mask, training, dropout_rng);
  const auto& q = online.raw_q();

  LossBreakdown out;
  nn::Tensor<T> dq({B, A});
  const double inv_b = 1.0 / double(B);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& tr = *batch[b];
    const std::size_t a = tr.action;
    if (a >= A) throw ArgumentError("global_loss: action out of range");
    const double qa = double(q[b * A + a]);
    double g = 0.0;

    const double e_dq = y_dq[b] - qa;
    out.dq += e_dq * e_dq * inv_b;
    g += -2.0 * e_dq * inv_b;

    if (cfg.lambda1 != 0.0) {
      const double e_n = y_n[b] - qa;
      out.nstep += e_n * e_n * inv_b;
      g += cfg.lambda1 * -2.0 * e_n * inv_b;
    }
    dq[b * A + a] += T(g);

    if (tr.is_demo && cfg.lambda2 != 0.0) {
      const auto [loss, arg] = margin_loss_argmax(std::span<const T>(q.ptr() + b * A, A), a, cfg.margin,
                                                  std::span<const std::uint8_t>(mask.data() + b * A, A));
      out.margin += loss * inv_b;
      if (arg != a) {
        dq[b * A + arg] += T(cfg.lambda2 * inv_b);
        dq[b * A + a] -= T(cfg.lambda2 * inv_b);
      }
    }
  }

  online.backward(dq);

  if (cfg.lambda3 != 0.0) {
    for (auto& p : online.parameters()) {
      if (!p.is_weight) continue;
      double s = 0.0;
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        s += double(p.value[i]) * double(p.value[i]);
        p.grad[i] += T(2.0 * cfg.lambda3) * p.value[i];
      }
      out.l2 += s;
    }
  }
  out.total = out.dq + cfg.lambda1 * out.nstep + cfg.lambda2 * out.margin + cfg.lambda3 * out.l2;
  return out;
}

}  // namespace fbrl::agent
