#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "fbrl/errors.hpp"
#include "fbrl/io.hpp"
#include "fbrl/nn/adam.hpp"
#include "fbrl/nn/qnetwork.hpp"

// Network checkpoint layout (little-endian):
//   char[8]  "FBRLNET\0"
//   u32      version (1)
//   u8 arch, u8 head, i32 in_channels, i32 rows, i32 cols
//   u32 n, i32[n] conv channels; u32 m, i32[m] fc widths
//   f64 dropout, u64 init_seed
//   u32 tensor count, then per tensor:
//     u32 name length, name bytes, u32 rank, u64[rank] dims, f64[prod(dims)] values
// Values are always stored as f64 whatever the in-memory scalar type.

namespace fbrl::nn {

inline constexpr char kNetMagic[8] = {'F', 'B', 'R', 'L', 'N', 'E', 'T', '\0'};
inline constexpr std::uint32_t kNetVersion = 1;

template <typename T>
void write_tensor(io::ByteWriter& w, const std::string& name, const Tensor<T>& t) {
  w.put_string(name);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape) w.put<std::uint64_t>(d);
  for (auto v : t.data) w.put<double>(static_cast<double>(v));
}

template <typename T>
Tensor<T> read_tensor(io::ByteReader& r, std::string& name) {
  name = r.get_string();
  const auto rank = r.get<std::uint32_t>();
  if (rank > 8) throw ParseError("checkpoint: implausible tensor rank for " + name);
  std::vector<std::size_t> shape(rank);
  for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
  Tensor<T> t(shape);
  for (auto& v : t.data) v = static_cast<T>(r.get<double>());
  return t;
}

template <typename T>
void write_network(io::ByteWriter& w, const QNetwork<T>& net) {
  w.put_bytes(kNetMagic, sizeof kNetMagic);
  w.put<std::uint32_t>(kNetVersion);
  const auto& c = net.config();
  w.put<std::uint8_t>(static_cast<std::uint8_t>(c.arch));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(c.head));
  w.put<std::int32_t>(c.in_channels);
  w.put<std::int32_t>(c.rows);
  w.put<std::int32_t>(c.cols);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.conv_channels.size()));
  for (int v : c.conv_channels) w.put<std::int32_t>(v);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.fc_widths.size()));
  for (int v : c.fc_widths) w.put<std::int32_t>(v);
  w.put<double>(c.dropout);
  w.put<std::uint64_t>(c.init_seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.parameters().size()));
  for (const auto& p : net.parameters()) write_tensor(w, p.name, p.value);
}

template <typename T>
QNetwork<T> read_network(io::ByteReader& r) {
  char magic[8];
  r.get_bytes(magic, sizeof magic);
  if (std::string(magic, 8) != std::string(kNetMagic, 8)) throw ParseError("checkpoint: bad magic");
  if (r.get<std::uint32_t>() != kNetVersion) throw ParseError("checkpoint: unsupported version");
  NetConfig c;
  c.arch = static_cast<Architecture>(r.get<std::uint8_t>());
  c.head = static_cast<HeadType>(r.get<std::uint8_t>());
  c.in_channels = r.get<std::int32_t>();
  c.rows = r.get<std::int32_t>();
  c.cols = r.get<std::int32_t>();
  c.conv_channels.resize(r.get<std::uint32_t>());
  for (auto& v : c.conv_channels) v = r.get<std::int32_t>();
  c.fc_widths.resize(r.get<std::uint32_t>());
  for (auto& v : c.fc_widths) v = r.get<std::int32_t>();
  c.dropout = r.get<double>();
  c.init_seed = r.get<std::uint64_t>();
  QNetwork<T> net(c);
  const auto n = r.get<std::uint32_t>();
  if (n != net.parameters().size()) throw ParseError("checkpoint: tensor count mismatch");
  for (auto& p : net.parameters()) {
    std::string name;
    auto t = read_tensor<T>(r, name);
    if (name != p.name || t.shape != p.value.shape)
      throw ParseError("checkpoint: unexpected tensor " + name);
    p.value = std::move(t);
  }
  return net;
}

template <typename T>
void write_adam(io::ByteWriter& w, const AdamState<T>& s) {
  w.put<std::int64_t>(s.t);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.m.size()));
  for (std::size_t i = 0; i < s.m.size(); ++i) {
    write_tensor(w, "m", s.m[i]);
    write_tensor(w, "v", s.v[i]);
  }
}

template <typename T>
AdamState<T> read_adam(io::ByteReader& r) {
  AdamState<T> s;
  s.t = r.get<std::int64_t>();
  const auto n = r.get<std::uint32_t>();
  std::string name;
  for (std::uint32_t i = 0; i < n; ++i) {
    s.m.push_back(read_tensor<T>(r, name));
    s.v.push_back(read_tensor<T>(r, name));
  }
  return s;
}

template <typename T>
void save_network(const std::filesystem::path& path, const QNetwork<T>& net) {
  io::ByteWriter w;
  write_network(w, net);
  io::write_atomic(path, w.bytes());
}

template <typename T>
QNetwork<T> load_network(const std::filesystem::path& path) {
  const auto bytes = io::read_text(path);
  io::ByteReader r(bytes);
  return read_network<T>(r);
}

}  // namespace fbrl::nn
