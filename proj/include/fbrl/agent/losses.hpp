#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "fbrl/env.hpp"
#include "fbrl/errors.hpp"
#include "fbrl/nn/qnetwork.hpp"

namespace fbrl::agent {

enum class Algo { dqn, double_dqn, dueling_double_dqn };

inline const char* to_string(Algo a) {
  switch (a) {
    case Algo::dqn: return "dqn";
    case Algo::double_dqn: return "2dqn";
    default: return "ddqn";
  }
}

// --- target rules on precomputed q rows ---------------------------------------
//
// next_q rows are masked (unavailable entries = -inf). A row with no
// available entry contributes no bootstrap term.

template <typename T>
std::vector<double> td_targets(std::span<const double> rewards, std::span<const std::uint8_t> done,
                               const nn::Tensor<T>& next_q_target, double gamma) {
  const std::size_t B = rewards.size();
  std::vector<double> out(B);
  const std::size_t A = B ? next_q_target.size() / B : 0;
  for (std::size_t b = 0; b < B; ++b) {
    out[b] = rewards[b];
    if (done[b] || gamma == 0.0) continue;
    const T* row = next_q_target.ptr() + b * A;
    const auto best = nn::argmax_row(row, A);
    if (std::isfinite(double(row[best]))) out[b] += gamma * double(row[best]);
  }
  return out;
}

// Select with the online network, evaluate with the target network.
template <typename T>
std::vector<double> double_td_targets(std::span<const double> rewards, std::span<const std::uint8_t> done,
                                      const nn::Tensor<T>& next_q_online,
                                      const nn::Tensor<T>& next_q_target, double gamma) {
  const std::size_t B = rewards.size();
  std::vector<double> out(B);
  const std::size_t A = B ? next_q_online.size() / B : 0;
  for (std::size_t b = 0; b < B; ++b) {
    out[b] = rewards[b];
    if (done[b] || gamma == 0.0) continue;
    const T* sel = next_q_online.ptr() + b * A;
    const auto a = nn::argmax_row(sel, A);
    if (!std::isfinite(double(sel[a]))) continue;
    out[b] += gamma * double(next_q_target[b * A + a]);
  }
  return out;
}

// --- large-margin demonstration loss -------------------------------------------

// max over unmasked a of [q(a) + margin * 1{a != a_e}] - q(a_e).
// Returns the loss and the maximizing action (smallest index on ties).
template <typename T>
std::pair<double, std::size_t> margin_loss_argmax(std::span<const T> q, std::size_t a_e, double margin,
                                                  std::span<const std::uint8_t> mask) {
  if (a_e >= q.size()) throw ArgumentError("margin_loss: expert action out of range");
  if (!mask.empty() && !mask[a_e]) throw ArgumentError("margin_loss: expert action is masked");
  double best = -std::numeric_limits<double>::infinity();
  std::size_t arg = a_e;
  for (std::size_t a = 0; a < q.size(); ++a) {
    if (!mask.empty() && !mask[a]) continue;
    const double v = double(q[a]) + (a == a_e ? 0.0 : margin);
    if (v > best) {
      best = v;
      arg = a;
    }
  }
  return {best - double(q[a_e]), arg};
}

template <typename T>
double margin_loss(std::span<const T> q, std::size_t a_e, double margin, std::span<const std::uint8_t> mask) {
  return margin_loss_argmax(q, a_e, margin, mask).first;
}

// --- n-step returns --------------------------------------------------------------

struct NStepTarget {
  double partial_return = 0.0;    // r_t + ... + gamma^{k-1} r_{t+k-1}
  bool bootstrap = false;         // false when the episode ended inside the window
  double discount = 0.0;          // gamma^n when bootstrapping
  const Observation* bootstrap_state = nullptr;
};

// window[0] is transition t; following entries are t+1, t+2, ... of the same episode.
inline NStepTarget n_step_target(std::span<const Transition> window, double gamma, std::size_t n) {
  if (window.empty()) throw ArgumentError("n-step window is empty");
  if (n < 1) throw ArgumentError("n_step must be >= 1");
  NStepTarget out;
  double g = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k >= window.size()) throw ArgumentError("n-step window shorter than n for a non-terminal episode");
    const auto& tr = window[k];
    if (tr.episode != window[0].episode || tr.is_demo != window[0].is_demo ||
        tr.step != window[0].step + k)
      throw ArgumentError("n-step window mixes transitions from different episodes");
    out.partial_return += g * tr.reward;
    g *= gamma;
    if (tr.done) return out;
  }
  out.bootstrap = true;
  out.discount = g;
  out.bootstrap_state = &window[n - 1].next_state;
  return out;
}

// Fills the n-step cache of every transition of one complete episode.
inline void annotate_n_step(std::span<Transition> episode, double gamma, std::size_t n) {
  for (std::size_t t = 0; t < episode.size(); ++t) {
    const auto tgt = n_step_target(episode.subspan(t), gamma, n);
    auto& tr = episode[t];
    tr.nstep_return = tgt.partial_return;
    tr.nstep_bootstrap = tgt.bootstrap;
    tr.nstep_discount = tgt.discount;
    tr.nstep_state = tgt.bootstrap ? *tgt.bootstrap_state : Observation{};
  }
}

}  // namespace fbrl::agent
