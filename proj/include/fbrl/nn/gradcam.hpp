#pragma once

#include <algorithm>
#include <vector>

#include "fbrl/errors.hpp"
#include "fbrl/nn/qnetwork.hpp"

namespace fbrl::nn {

// Attention map for one action: ReLU of the last conv activations weighted by
// the spatial mean of d q(s, action) / d activation, nearest-upscaled to the
// input grid and max-normalized. A map with no positive entry stays all zero.
template <typename T>
std::vector<double> grad_cam(QNetwork<T>& net, const Tensor<T>& state, std::size_t action) {
  const auto& cfg = net.config();
  if (action >= static_cast<std::size_t>(cfg.actions())) throw ArgumentError("grad_cam: invalid action index");
  Tensor<T> x = state;
  if (x.rank() == 3) x.reshape({1, x.dim(0), x.dim(1), x.dim(2)});
  if (x.rank() != 4 || x.dim(0) != 1) throw ArgumentError("grad_cam expects a single state");

  net.forward(x, {}, false);
  Tensor<T> dq({1, std::size_t(cfg.actions())});
  dq[action] = T(1);
  net.backward(dq);

  const auto& blk = net.last_block();
  const auto& act = blk.activations();
  const auto& grad = blk.activation_grad();
  const int K = blk.out_channels(), h = blk.conv_h(), w = blk.conv_w();
  const std::size_t hw = static_cast<std::size_t>(h) * w;

  std::vector<double> cam(hw, 0.0);
  for (int k = 0; k < K; ++k) {
    double weight = 0;
    for (std::size_t p = 0; p < hw; ++p) weight += double(grad[k * hw + p]);
    weight /= double(hw);
    if (weight == 0.0) continue;
    for (std::size_t p = 0; p < hw; ++p) cam[p] += weight * double(act[k * hw + p]);
  }
  for (auto& v : cam) v = std::max(0.0, v);

  std::vector<double> out(static_cast<std::size_t>(cfg.rows) * cfg.cols);
  for (int r = 0; r < cfg.rows; ++r) {
    const int sr = std::min(h - 1, static_cast<int>((r + 0.5) * h / cfg.rows));
    for (int c = 0; c < cfg.cols; ++c) {
      const int sc = std::min(w - 1, static_cast<int>((c + 0.5) * w / cfg.cols));
      out[static_cast<std::size_t>(r) * cfg.cols + c] = cam[static_cast<std::size_t>(sr) * w + sc];
    }
  }
  const double peak = *std::max_element(out.begin(), out.end());
  if (peak > 0)
    for (auto& v : out) v /= peak;
  return out;
}

}  // namespace fbrl::nn
