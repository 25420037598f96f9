#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fbrl/errors.hpp"
#include "fbrl/nn/layers.hpp"
#include "fbrl/nn/tensor.hpp"
#include "fbrl/rng.hpp"

namespace fbrl::nn {

enum class Architecture { small_net, big_net, custom };
enum class HeadType { single, dueling };

inline const char* to_string(Architecture a) {
  switch (a) {
    case Architecture::small_net: return "small_net";
    case Architecture::big_net: return "big_net";
    default: return "custom";
  }
}
inline const char* to_string(HeadType h) { return h == HeadType::dueling ? "dueling" : "single"; }

struct NetConfig {
  Architecture arch = Architecture::small_net;
  HeadType head = HeadType::single;
  int in_channels = 1;
  int rows = 0;
  int cols = 0;
  std::vector<int> conv_channels;
  std::vector<int> fc_widths;  // hidden widths of each head stream
  double dropout = 0.1;
  std::uint64_t init_seed = 0;

  int actions() const { return rows * cols; }

  static NetConfig preset(Architecture arch, HeadType head, int in_channels, int rows, int cols,
                          std::uint64_t init_seed = 0) {
    NetConfig c;
    c.arch = arch;
    c.head = head;
    c.in_channels = in_channels;
    c.rows = rows;
    c.cols = cols;
    c.init_seed = init_seed;
    if (arch == Architecture::big_net) {
      c.conv_channels = {32, 64, 128};
      c.fc_widths = {2048, 48, 32};
    } else {
      c.conv_channels = {16, 32};
      c.fc_widths = {512, 128};
    }
    return c;
  }

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

// Convolutional Q-network with a single q head or a dueling (v, A) head.
// Value type: copying a network copies its parameters.
template <typename T>
class QNetwork {
 public:
  static constexpr T kMasked = -std::numeric_limits<T>::infinity();

  QNetwork() = default;
  explicit QNetwork(NetConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.rows < 1 || cfg_.cols < 1 || cfg_.in_channels < 1)
      throw ArgumentError("network input dimensions must be positive");
    if (cfg_.conv_channels.empty()) throw ArgumentError("network needs at least one conv block");
    Rng rng(derive_seed(cfg_.init_seed, {0x1e7}));
    int c = cfg_.in_channels, h = cfg_.rows, w = cfg_.cols;
    for (std::size_t i = 0; i < cfg_.conv_channels.size(); ++i) {
      blocks_.emplace_back(params_, "conv" + std::to_string(i), c, cfg_.conv_channels[i], h, w,
                           cfg_.dropout, rng);
      c = cfg_.conv_channels[i];
      h = blocks_.back().out_h();
      w = blocks_.back().out_w();
    }
    features_ = c * h * w;
    build_stream(q_stream_, cfg_.head == HeadType::dueling ? "adv" : "q", cfg_.actions(), rng);
    if (cfg_.head == HeadType::dueling) build_stream(v_stream_, "value", 1, rng);
  }

  const NetConfig& config() const { return cfg_; }
  int actions() const { return cfg_.actions(); }
  int feature_size() const { return features_; }
  ParamList<T>& parameters() { return params_; }
  const ParamList<T>& parameters() const { return params_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  // x: (B, C, rows, cols). mask: B*rows*cols flags (true = available), or
  // empty for "all available". Returns q with masked entries set to -inf.
  // The unmasked values are kept in raw_q() for loss computation.
  Tensor<T> forward(const Tensor<T>& x, std::span<const std::uint8_t> mask, bool training,
                    Rng* dropout_rng = nullptr) {
    if (x.rank() != 4 || int(x.dim(1)) != cfg_.in_channels || int(x.dim(2)) != cfg_.rows ||
        int(x.dim(3)) != cfg_.cols)
      throw ArgumentError("forward: input shape " + shape_str(x.shape) + " does not match network");
    const std::size_t B = x.dim(0);
    const std::size_t A = static_cast<std::size_t>(actions());
    if (!mask.empty() && mask.size() != B * A) throw ArgumentError("forward: mask size mismatch");

    Tensor<T> h = x;
    for (auto& blk : blocks_) h = blk.forward(params_, h, training, dropout_rng);
    MatRM<T> f = ConstMatMap<T>(h.ptr(), B, features_);

    MatRM<T> head = f;
    for (auto& layer : q_stream_) head = layer.forward(params_, head);

    mask_.assign(mask.begin(), mask.end());
    row_open_.assign(B, 0);
    if (!mask.empty())
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t a = 0; a < A; ++a) row_open_[b] += mask[b * A + a] != 0;
    raw_ = Tensor<T>({B, A});
    if (cfg_.head == HeadType::dueling) {
      MatRM<T> v = f;
      for (auto& layer : v_stream_) v = layer.forward(params_, v);
      value_ = Tensor<T>({B});
      adv_ = Tensor<T>({B, A});
      for (std::size_t b = 0; b < B; ++b) {
        value_[b] = v(b, 0);
        const T mean = masked_mean(head.row(b).data(), b);
        for (std::size_t a = 0; a < A; ++a) {
          adv_[b * A + a] = head(b, a);
          raw_[b * A + a] = v(b, 0) + (head(b, a) - mean);
        }
      }
    } else {
      std::copy(head.data(), head.data() + B * A, raw_.ptr());
    }
    batch_ = B;
    has_forward_ = true;

    Tensor<T> q = raw_;
    if (!mask.empty())
      for (std::size_t i = 0; i < q.size(); ++i)
        if (!mask[i]) q[i] = kMasked;
    return q;
  }

  // q before masking, from the last forward.
  const Tensor<T>& raw_q() const { return raw_; }
  // Dueling only: v(s) and A(s, .) from the last forward.
  const Tensor<T>& value() const { return value_; }
  const Tensor<T>& advantages() const { return adv_; }

  // Reverse pass for a loss whose gradient w.r.t. raw_q() is dq (B, A).
  // Parameter gradients are overwritten.
  const ParamList<T>& backward(const Tensor<T>& dq) {
    if (!has_forward_) throw StateError("backward called without a recorded forward pass");
    const std::size_t B = batch_, A = static_cast<std::size_t>(actions());
    if (dq.size() != B * A) throw ArgumentError("backward: gradient shape mismatch");
    zero_grad();

    MatRM<T> dhead(B, A);
    MatRM<T> df;
    if (cfg_.head == HeadType::dueling) {
      MatRM<T> dv(B, 1);
      for (std::size_t b = 0; b < B; ++b) {
        T total = 0;
        for (std::size_t a = 0; a < A; ++a) total += dq[b * A + a];
        dv(b, 0) = total;
        const std::size_t n = unmasked_count(b);
        for (std::size_t a = 0; a < A; ++a)
          dhead(b, a) = dq[b * A + a] - (is_unmasked(b, a) ? total / T(n) : T(0));
      }
      MatRM<T> g = dv;
      for (std::size_t i = v_stream_.size(); i-- > 0;) g = v_stream_[i].backward(params_, g, true);
      df = g;
    } else {
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t a = 0; a < A; ++a) dhead(b, a) = dq[b * A + a];
    }
    MatRM<T> g = dhead;
    for (std::size_t i = q_stream_.size(); i-- > 0;) g = q_stream_[i].backward(params_, g, true);
    if (df.size()) g += df;

    const auto& last = blocks_.back();
    Tensor<T> dh({B, std::size_t(last.out_channels()), std::size_t(last.out_h()), std::size_t(last.out_w())});
    std::copy(g.data(), g.data() + g.size(), dh.ptr());
    for (std::size_t i = blocks_.size(); i-- > 0;) dh = blocks_[i].backward(params_, dh, i > 0);
    return params_;
  }

  void zero_grad() {
    for (auto& p : params_) p.grad.fill(T(0));
  }

  const ConvBlock<T>& last_block() const { return blocks_.back(); }

  // Copies parameters from another network of identical configuration.
  void copy_parameters_from(const QNetwork& other) {
    if (!(other.cfg_ == cfg_)) throw ArgumentError("sync: network architectures differ");
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i].value = other.params_[i].value;
  }

 private:
  void build_stream(std::vector<Dense<T>>& stream, const std::string& prefix, int out, Rng& rng) {
    int in = features_;
    for (std::size_t i = 0; i < cfg_.fc_widths.size(); ++i) {
      stream.emplace_back(params_, prefix + ".fc" + std::to_string(i), in, cfg_.fc_widths[i], true, rng);
      in = cfg_.fc_widths[i];
    }
    stream.emplace_back(params_, prefix + ".out", in, out, false, rng);
  }

  bool is_unmasked(std::size_t b, std::size_t a) const {
    return mask_.empty() || row_open_[b] == 0 || mask_[b * actions() + a] != 0;
  }

  // Number of actions the dueling mean runs over for row b.
  std::size_t unmasked_count(std::size_t b) const {
    const std::size_t A = static_cast<std::size_t>(actions());
    if (mask_.empty() || row_open_[b] == 0) return A;
    return row_open_[b];
  }

  // Mean of the advantage row over unmasked actions (all actions when the
  // row has no unmasked entry).
  T masked_mean(const T* row, std::size_t b) const {
    const std::size_t A = static_cast<std::size_t>(actions());
    T total = 0;
    for (std::size_t a = 0; a < A; ++a)
      if (is_unmasked(b, a)) total += row[a];
    return total / T(unmasked_count(b));
  }

  NetConfig cfg_;
  ParamList<T> params_;
  std::vector<ConvBlock<T>> blocks_;
  std::vector<Dense<T>> q_stream_;
  std::vector<Dense<T>> v_stream_;
  int features_ = 0;

  std::vector<std::uint8_t> mask_;
  std::vector<std::size_t> row_open_;
  Tensor<T> raw_, value_, adv_;
  std::size_t batch_ = 0;
  bool has_forward_ = false;
};

// Target parameters become a bitwise copy of the online parameters.
template <typename T>
void sync_target(const QNetwork<T>& online, QNetwork<T>& target) {
  target.copy_parameters_from(online);
}

// Index of the largest entry; ties go to the smallest index. Entries equal to
// -inf are never chosen unless every entry is -inf.
template <typename T>
std::size_t argmax_row(const T* row, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

}  // namespace fbrl::nn
