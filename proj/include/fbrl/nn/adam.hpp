#pragma once

#include <cmath>
#include <vector>

#include "fbrl/errors.hpp"
#include "fbrl/nn/layers.hpp"

namespace fbrl::nn {

struct AdamConfig {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  long long t = 0;
};

// One Adam update of every parameter from its .grad.
template <typename T>
void adam_step(ParamList<T>& params, const AdamConfig& cfg, AdamState<T>& state) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.value.shape);
      state.v.emplace_back(p.value.shape);
    }
  }
  if (state.m.size() != params.size()) throw ArgumentError("adam: optimizer state does not match parameters");
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, double(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(state.t));
  const T b1 = T(cfg.beta1), b2 = T(cfg.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (p.grad.size() != p.value.size() || state.m[i].size() != p.value.size())
      throw ArgumentError("adam: shape mismatch for " + p.name);
    T* w = p.value.ptr();
    const T* g = p.grad.ptr();
    T* m = state.m[i].ptr();
    T* v = state.v[i].ptr();
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      const double mhat = double(m[j]) / c1;
      const double vhat = double(v[j]) / c2;
      w[j] -= T(cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

}  // namespace fbrl::nn
