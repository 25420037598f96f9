#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "fbrl/nn/tensor.hpp"
#include "fbrl/rng.hpp"

namespace fbrl::nn {

template <typename T>
using ParamList = std::vector<Parameter<T>>;

template <typename T>
void he_uniform(Tensor<T>& w, std::size_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : w.data) v = static_cast<T>((2.0 * uniform01(rng) - 1.0) * limit);
}

// conv 3x3 (stride 1, zero "same" padding) -> ReLU -> max-pool 2x2/2 -> dropout.
// Pooling uses ceil mode: a trailing odd row/column forms a clipped window.
template <typename T>
class ConvBlock {
 public:
  ConvBlock() = default;
  ConvBlock(ParamList<T>& params, const std::string& prefix, int cin, int cout, int h, int w,
            double dropout, Rng& init_rng)
      : cin_(cin), cout_(cout), h_(h), w_(w), dropout_(dropout) {
    w_idx_ = params.size();
    Parameter<T> wp{prefix + ".weight", Tensor<T>({std::size_t(cout), std::size_t(cin), 3, 3}), {}, true};
    he_uniform(wp.value, static_cast<std::size_t>(cin) * 9, init_rng);
    wp.grad = Tensor<T>(wp.value.shape);
    params.push_back(std::move(wp));
    b_idx_ = params.size();
    Parameter<T> bp{prefix + ".bias", Tensor<T>({std::size_t(cout)}), Tensor<T>({std::size_t(cout)}), false};
    params.push_back(std::move(bp));
  }

  int out_h() const { return (h_ + 1) / 2; }
  int out_w() const { return (w_ + 1) / 2; }
  int out_channels() const { return cout_; }
  int conv_h() const { return h_; }
  int conv_w() const { return w_; }

  // Post-ReLU conv activations of the last forward, shape (B, cout, h, w).
  const Tensor<T>& activations() const { return act_; }

  Tensor<T> forward(const ParamList<T>& params, const Tensor<T>& x, bool training, Rng* rng) {
    const std::size_t B = x.dim(0);
    const std::size_t hw = static_cast<std::size_t>(h_) * w_;
    const std::size_t k = static_cast<std::size_t>(cin_) * 9;
    batch_ = B;
    cols_.setZero(k, B * hw);
    for (std::size_t b = 0; b < B; ++b) {
      const T* xb = x.ptr() + b * cin_ * hw;
      for (int ci = 0; ci < cin_; ++ci) {
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) {
            T* row = cols_.data() + (std::size_t(ci) * 9 + ky * 3 + kx) * (B * hw) + b * hw;
            for (int y = 0; y < h_; ++y) {
              const int sy = y + ky - 1;
              if (sy < 0 || sy >= h_) continue;
              for (int xx = 0; xx < w_; ++xx) {
                const int sx = xx + kx - 1;
                if (sx < 0 || sx >= w_) continue;
                row[y * w_ + xx] = xb[ci * hw + sy * w_ + sx];
              }
            }
          }
        }
      }
    }
    ConstMatMap<T> W(params[w_idx_].value.ptr(), cout_, k);
    MatRM<T> Y = W * cols_;
    act_ = Tensor<T>({B, std::size_t(cout_), std::size_t(h_), std::size_t(w_)});
    const T* bias = params[b_idx_].value.ptr();
    for (std::size_t b = 0; b < B; ++b)
      for (int co = 0; co < cout_; ++co) {
        T* dst = act_.ptr() + (b * cout_ + co) * hw;
        const T* src = Y.data() + std::size_t(co) * B * hw + b * hw;
        for (std::size_t p = 0; p < hw; ++p) dst[p] = std::max(T(0), src[p] + bias[co]);
      }

    // max-pool, first index wins ties
    const int oh = out_h(), ow = out_w();
    Tensor<T> out({B, std::size_t(cout_), std::size_t(oh), std::size_t(ow)});
    argmax_.assign(out.size(), 0);
    for (std::size_t bc = 0; bc < B * cout_; ++bc) {
      const T* a = act_.ptr() + bc * hw;
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          std::uint32_t best = static_cast<std::uint32_t>(2 * y * w_ + 2 * xx);
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const int sy = 2 * y + dy, sx = 2 * xx + dx;
              if (sy >= h_ || sx >= w_) continue;
              const auto idx = static_cast<std::uint32_t>(sy * w_ + sx);
              if (a[idx] > a[best]) best = idx;
            }
          const std::size_t o = bc * oh * ow + y * ow + xx;
          argmax_[o] = best;
          out[o] = a[best];
        }
    }

    dropout_mask_.clear();
    if (training && dropout_ > 0.0) {
      if (!rng) throw StateError("dropout in training mode requires an rng");
      const T scale = T(1.0 / (1.0 - dropout_));
      dropout_mask_.resize(out.size());
      for (std::size_t i = 0; i < out.size(); ++i) {
        dropout_mask_[i] = uniform01(*rng) >= dropout_ ? scale : T(0);
        out[i] *= dropout_mask_[i];
      }
    }
    return out;
  }

  // dout: gradient w.r.t. block output. Returns gradient w.r.t. block input
  // when want_input_grad, otherwise an empty tensor.
  Tensor<T> backward(ParamList<T>& params, const Tensor<T>& dout, bool want_input_grad) {
    const std::size_t B = batch_;
    const std::size_t hw = static_cast<std::size_t>(h_) * w_;
    const std::size_t k = static_cast<std::size_t>(cin_) * 9;
    const int oh = out_h(), ow = out_w();

    dact_ = Tensor<T>(act_.shape);
    for (std::size_t bc = 0; bc < B * cout_; ++bc)
      for (std::size_t o = 0; o < std::size_t(oh * ow); ++o) {
        const std::size_t oi = bc * oh * ow + o;
        T g = dout[oi];
        if (!dropout_mask_.empty()) g *= dropout_mask_[oi];
        dact_[bc * hw + argmax_[oi]] += g;
      }

    MatRM<T> dY(cout_, B * hw);
    T* dbias = params[b_idx_].grad.ptr();
    for (std::size_t b = 0; b < B; ++b)
      for (int co = 0; co < cout_; ++co) {
        const T* g = dact_.ptr() + (b * cout_ + co) * hw;
        const T* a = act_.ptr() + (b * cout_ + co) * hw;
        T* dst = dY.data() + std::size_t(co) * B * hw + b * hw;
        T acc = 0;
        for (std::size_t p = 0; p < hw; ++p) {
          dst[p] = a[p] > T(0) ? g[p] : T(0);
          acc += dst[p];
        }
        dbias[co] += acc;
      }

    MatMap<T> dW(params[w_idx_].grad.ptr(), cout_, k);
    dW.noalias() += dY * cols_.transpose();
    if (!want_input_grad) return {};

    ConstMatMap<T> W(params[w_idx_].value.ptr(), cout_, k);
    MatRM<T> dcols = W.transpose() * dY;
    Tensor<T> dx({B, std::size_t(cin_), std::size_t(h_), std::size_t(w_)});
    for (std::size_t b = 0; b < B; ++b) {
      T* dxb = dx.ptr() + b * cin_ * hw;
      for (int ci = 0; ci < cin_; ++ci)
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx) {
            const T* row = dcols.data() + (std::size_t(ci) * 9 + ky * 3 + kx) * (B * hw) + b * hw;
            for (int y = 0; y < h_; ++y) {
              const int sy = y + ky - 1;
              if (sy < 0 || sy >= h_) continue;
              for (int xx = 0; xx < w_; ++xx) {
                const int sx = xx + kx - 1;
                if (sx < 0 || sx >= w_) continue;
                dxb[ci * hw + sy * w_ + sx] += row[y * w_ + xx];
              }
            }
          }
    }
    return dx;
  }

  // Gradient w.r.t. post-ReLU activations from the last backward.
  const Tensor<T>& activation_grad() const { return dact_; }

 private:
  int cin_ = 0, cout_ = 0, h_ = 0, w_ = 0;
  double dropout_ = 0.0;
  std::size_t w_idx_ = 0, b_idx_ = 0;
  std::size_t batch_ = 0;
  MatRM<T> cols_;
  Tensor<T> act_;
  Tensor<T> dact_;
  std::vector<std::uint32_t> argmax_;
  std::vector<T> dropout_mask_;
};

// Fully connected layer, optional ReLU.
template <typename T>
class Dense {
 public:
  Dense() = default;
  Dense(ParamList<T>& params, const std::string& prefix, int in, int out, bool relu, Rng& init_rng)
      : in_(in), out_(out), relu_(relu) {
    w_idx_ = params.size();
    Parameter<T> wp{prefix + ".weight", Tensor<T>({std::size_t(out), std::size_t(in)}), {}, true};
    he_uniform(wp.value, static_cast<std::size_t>(in), init_rng);
    wp.grad = Tensor<T>(wp.value.shape);
    params.push_back(std::move(wp));
    b_idx_ = params.size();
    params.push_back(Parameter<T>{prefix + ".bias", Tensor<T>({std::size_t(out)}),
                                  Tensor<T>({std::size_t(out)}), false});
  }

  int in_features() const { return in_; }
  int out_features() const { return out_; }
  std::size_t weight_index() const { return w_idx_; }
  std::size_t bias_index() const { return b_idx_; }

  MatRM<T> forward(const ParamList<T>& params, const MatRM<T>& x) {
    x_ = x;
    ConstMatMap<T> W(params[w_idx_].value.ptr(), out_, in_);
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(params[b_idx_].value.ptr(), out_);
    MatRM<T> y = x * W.transpose();
    y.rowwise() += b;
    if (relu_) y = y.cwiseMax(T(0));
    y_ = y;
    return y;
  }

  MatRM<T> backward(ParamList<T>& params, MatRM<T> dy, bool want_input_grad) {
    if (relu_) dy = (y_.array() > T(0)).select(dy, T(0));
    MatMap<T> dW(params[w_idx_].grad.ptr(), out_, in_);
    dW.noalias() += dy.transpose() * x_;
    // Fixed summation order: Eigen's colwise reduction varies with alignment.
    T* db = params[b_idx_].grad.ptr();
    for (Eigen::Index r = 0; r < dy.rows(); ++r)
      for (Eigen::Index c = 0; c < dy.cols(); ++c) db[c] += dy(r, c);
    if (!want_input_grad) return {};
    ConstMatMap<T> W(params[w_idx_].value.ptr(), out_, in_);
    return dy * W;
  }

 private:
  int in_ = 0, out_ = 0;
  bool relu_ = false;
  std::size_t w_idx_ = 0, b_idx_ = 0;
  MatRM<T> x_, y_;
};

}  // namespace fbrl::nn
