#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fbrl/errors.hpp"
#include "fbrl/io.hpp"
#include "fbrl/rng.hpp"

namespace fbrl {

using FuelCode = std::uint8_t;
using CellIndex = std::uint32_t;

inline constexpr FuelCode kNonFuel = 0;

struct FuelType {
  std::string name;
  double base_spread_prob = 0.0;
};

// Fuel code -> fuel description. Code 0 is always present and never burns.
class FuelCatalog {
 public:
  FuelCatalog() { entries_[kNonFuel] = FuelType{"nonfuel", 0.0}; }

  void add(int code, std::string name, double base_spread_prob) {
    if (code < 0 || code > 255) throw ArgumentError("fuel code out of range: " + std::to_string(code));
    if (!(base_spread_prob >= 0.0 && base_spread_prob <= 1.0))
      throw ArgumentError("base_spread_prob must lie in [0,1] for code " + std::to_string(code));
    if (code == kNonFuel && base_spread_prob != 0.0)
      throw ArgumentError("fuel code 0 is reserved for non-fuel and must have base_spread_prob 0");
    entries_[static_cast<FuelCode>(code)] = FuelType{std::move(name), base_spread_prob};
  }

  bool contains(int code) const {
    return code >= 0 && code <= 255 && entries_.count(static_cast<FuelCode>(code)) != 0;
  }

  double base_prob(FuelCode code) const {
    auto it = entries_.find(code);
    if (it == entries_.end()) throw ArgumentError("unknown fuel code " + std::to_string(code));
    return it->second.base_spread_prob;
  }

  const FuelType& at(FuelCode code) const {
    auto it = entries_.find(code);
    if (it == entries_.end()) throw ArgumentError("unknown fuel code " + std::to_string(code));
    return it->second;
  }

  // Sorted ascending; always starts with 0.
  std::vector<FuelCode> codes() const {
    std::vector<FuelCode> out;
    out.reserve(entries_.size());
    for (const auto& [code, _] : entries_) out.push_back(code);
    return out;
  }

  std::size_t size() const { return entries_.size(); }

  // Dense code -> probability table, 0 for unknown codes.
  std::array<double, 256> prob_table() const {
    std::array<double, 256> t{};
    for (const auto& [code, f] : entries_) t[code] = f.base_spread_prob;
    return t;
  }

  friend bool operator==(const FuelCatalog& a, const FuelCatalog& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    auto ib = b.entries_.begin();
    for (const auto& [code, f] : a.entries_) {
      if (code != ib->first || f.name != ib->second.name ||
          f.base_spread_prob != ib->second.base_spread_prob)
        return false;
      ++ib;
    }
    return true;
  }

 private:
  std::map<FuelCode, FuelType> entries_;
};

struct GridPos {
  int row = 0;
  int col = 0;
  friend bool operator==(const GridPos&, const GridPos&) = default;
};

// Rectangular fuel grid, row-major. The catalog is shared and immutable.
class Landscape {
 public:
  Landscape(int rows, int cols, std::vector<FuelCode> cells,
            std::shared_ptr<const FuelCatalog> catalog)
      : rows_(rows), cols_(cols), cells_(std::move(cells)), catalog_(std::move(catalog)) {
    if (!catalog_) throw ArgumentError("landscape requires a fuel catalog");
    if (rows_ < 2 || cols_ < 2) throw ArgumentError("landscape must be at least 2x2");
    if (cells_.size() != static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_))
      throw ArgumentError("cell count does not match rows*cols");
    for (auto c : cells_)
      if (!catalog_->contains(c)) throw ArgumentError("unknown fuel code " + std::to_string(c));
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return cells_.size(); }
  std::span<const FuelCode> cells() const { return cells_; }
  const FuelCatalog& catalog() const { return *catalog_; }
  const std::shared_ptr<const FuelCatalog>& catalog_ptr() const { return catalog_; }

  FuelCode at(CellIndex i) const { return cells_.at(i); }
  FuelCode at(int row, int col) const { return cells_.at(index(row, col)); }
  bool flammable(CellIndex i) const { return cells_[i] != kNonFuel; }

  CellIndex index(int row, int col) const {
    return static_cast<CellIndex>(row * cols_ + col);
  }
  GridPos pos(CellIndex i) const {
    return GridPos{static_cast<int>(i) / cols_, static_cast<int>(i) % cols_};
  }
  bool in_bounds(int row, int col) const {
    return row >= 0 && row < rows_ && col >= 0 && col < cols_;
  }

  // Turns a cell into non-fuel (firebreak).
  void clear_fuel(CellIndex i) { cells_.at(i) = kNonFuel; }

  friend bool operator==(const Landscape& a, const Landscape& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.cells_ == b.cells_ &&
           *a.catalog_ == *b.catalog_;
  }

 private:
  int rows_;
  int cols_;
  std::vector<FuelCode> cells_;
  std::shared_ptr<const FuelCatalog> catalog_;
};

struct WeatherScenario {
  // Direction the wind blows toward, degrees clockwise from north.
  double wind_dir_deg = 0.0;
  double wind_speed = 0.0;

  WeatherScenario() = default;
  WeatherScenario(double dir_deg, double speed) : wind_dir_deg(normalize(dir_deg)), wind_speed(speed) {
    if (!(speed >= 0.0)) throw ArgumentError("wind_speed must be nonnegative");
  }

  static double normalize(double deg) {
    double d = std::fmod(deg, 360.0);
    if (d < 0) d += 360.0;
    if (d >= 360.0) d = 0.0;
    return d;
  }
  friend bool operator==(const WeatherScenario&, const WeatherScenario&) = default;
};

enum class IgnitionShape { disc, ring };

struct IgnitionZone {
  GridPos center;
  int radius = 0;
  IgnitionShape shape = IgnitionShape::disc;

  bool contains(int row, int col) const {
    const double d = std::hypot(double(row - center.row), double(col - center.col));
    if (d > radius + 1e-9) return false;
    if (shape == IgnitionShape::ring && radius > 0) return d > radius - 1 + 1e-9;
    return true;
  }

  // Throws unless every cell within the radius lies inside the grid.
  void validate(int rows, int cols) const {
    if (radius < 0) throw ArgumentError("ignition radius must be nonnegative");
    if (center.row - radius < 0 || center.col - radius < 0 || center.row + radius >= rows ||
        center.col + radius >= cols)
      throw ArgumentError("ignition zone extends outside the grid");
  }

  // Zone cells in ascending index order.
  std::vector<CellIndex> cells(const Landscape& l) const {
    validate(l.rows(), l.cols());
    std::vector<CellIndex> out;
    for (int r = center.row - radius; r <= center.row + radius; ++r)
      for (int c = center.col - radius; c <= center.col + radius; ++c)
        if (contains(r, c)) out.push_back(l.index(r, c));
    return out;
  }
};

// --- file formats -----------------------------------------------------------

inline FuelCatalog parse_fuel_catalog(const std::string& text) {
  FuelCatalog cat;
  const auto lines = io::lines_of(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto toks = io::split_ws(lines[n]);
    if (toks.empty() || toks[0][0] == '#') continue;
    const std::string where = "line " + std::to_string(n + 1) + ": ";
    if (toks.size() != 3) throw ParseError(where + "expected 'code name base_spread_prob'");
    long long code = 0;
    double p = 0;
    if (!io::parse_int(toks[0], code)) throw ParseError(where + "non-integer fuel code");
    if (!io::parse_double(toks[2], p)) throw ParseError(where + "non-numeric base_spread_prob");
    try {
      cat.add(static_cast<int>(code), toks[1], p);
    } catch (const ArgumentError& e) {
      throw ParseError(where + e.what());
    }
  }
  return cat;
}

inline std::shared_ptr<const FuelCatalog> load_fuel_catalog(const std::filesystem::path& path) {
  return std::make_shared<const FuelCatalog>(parse_fuel_catalog(io::read_text(path)));
}

inline std::string format_fuel_catalog(const FuelCatalog& cat) {
  std::string out;
  for (auto code : cat.codes()) {
    const auto& f = cat.at(code);
    out += std::to_string(code) + " " + f.name + " " + io::fmt_double(f.base_spread_prob) + "\n";
  }
  return out;
}

namespace detail {

inline int parse_header_line(const std::vector<std::string>& lines, std::size_t n,
                             const char* key) {
  const std::string where = "line " + std::to_string(n + 1) + ": ";
  if (n >= lines.size()) throw ParseError(where + "missing '" + key + "' header");
  const auto toks = io::split_ws(lines[n]);
  long long v = 0;
  if (toks.size() != 2 || toks[0] != key || !io::parse_int(toks[1], v) || v <= 0)
    throw ParseError(where + "malformed header, expected '" + key + " <positive int>'");
  return static_cast<int>(v);
}

}  // namespace detail

inline Landscape parse_landscape(const std::string& text,
                                 std::shared_ptr<const FuelCatalog> catalog) {
  const auto lines = io::lines_of(text);
  const int rows = detail::parse_header_line(lines, 0, "rows");
  const int cols = detail::parse_header_line(lines, 1, "cols");
  std::vector<FuelCode> cells;
  cells.reserve(static_cast<std::size_t>(rows) * cols);
  int body_rows = 0;
  for (std::size_t n = 2; n < lines.size(); ++n) {
    const auto toks = io::split_ws(lines[n]);
    if (toks.empty()) continue;
    const std::string where = "line " + std::to_string(n + 1) + ": ";
    if (body_rows == rows) throw ParseError(where + "row count mismatch");
    if (static_cast<int>(toks.size()) != cols) throw ParseError(where + "row length mismatch");
    for (const auto& t : toks) {
      long long v = 0;
      if (!io::parse_int(t, v) || v < 0) throw ParseError(where + "non-integer cell '" + t + "'");
      if (!catalog->contains(static_cast<int>(v)) || v > 255)
        throw ParseError(where + "unknown fuel code " + t);
      cells.push_back(static_cast<FuelCode>(v));
    }
    ++body_rows;
  }
  if (body_rows != rows)
    throw ParseError("line " + std::to_string(lines.size()) + ": row count mismatch");
  return Landscape(rows, cols, std::move(cells), std::move(catalog));
}

inline Landscape load_landscape(const std::filesystem::path& path,
                                std::shared_ptr<const FuelCatalog> catalog) {
  return parse_landscape(io::read_text(path), std::move(catalog));
}

inline std::string format_landscape(const Landscape& l) {
  std::string out = "rows " + std::to_string(l.rows()) + "\ncols " + std::to_string(l.cols()) + "\n";
  for (int r = 0; r < l.rows(); ++r) {
    for (int c = 0; c < l.cols(); ++c) {
      if (c) out += ' ';
      out += std::to_string(l.at(r, c));
    }
    out += '\n';
  }
  return out;
}

inline void save_landscape(const std::filesystem::path& path, const Landscape& l) {
  io::write_atomic(path, format_landscape(l));
}

inline std::vector<WeatherScenario> parse_weather(const std::string& text) {
  const auto lines = io::lines_of(text);
  if (lines.empty() || io::split(lines[0], ',') != std::vector<std::string>{"id", "wind_dir_deg", "wind_speed"})
    throw ParseError("line 1: expected header 'id,wind_dir_deg,wind_speed'");
  std::vector<WeatherScenario> out;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (io::split_ws(lines[n]).empty()) continue;
    const std::string where = "line " + std::to_string(n + 1) + ": ";
    const auto f = io::split(lines[n], ',');
    double dir = 0, speed = 0;
    if (f.size() != 3 || !io::parse_double(f[1], dir) || !io::parse_double(f[2], speed))
      throw ParseError(where + "expected 'id,wind_dir_deg,wind_speed'");
    if (speed < 0) throw ParseError(where + "negative wind_speed");
    out.emplace_back(dir, speed);
  }
  return out;
}

inline std::vector<WeatherScenario> load_weather(const std::filesystem::path& path) {
  return parse_weather(io::read_text(path));
}

// Plain-text grid of decimals, same header as the landscape format.
inline std::string format_value_grid(int rows, int cols, std::span<const double> values) {
  std::string out = "rows " + std::to_string(rows) + "\ncols " + std::to_string(cols) + "\n";
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c) out += ' ';
      out += io::fmt_fixed(values[static_cast<std::size_t>(r) * cols + c], 6);
    }
    out += '\n';
  }
  return out;
}

// Binary PGM (P5), value = round(255 * p) with p clamped to [0,1].
inline std::string format_pgm(int rows, int cols, std::span<const double> values) {
  std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  for (double v : values) {
    const double p = std::clamp(v, 0.0, 1.0);
    out += static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * p)));
  }
  return out;
}

// --- operations -------------------------------------------------------------

// Nearest-neighbour downsampling with the pixel-center rule
// src = floor((dst + 0.5) * src_dim / dst_dim).
inline Landscape shrink_nearest(const Landscape& l, int new_rows, int new_cols) {
  if (new_rows < 1 || new_cols < 1) throw ArgumentError("shrink target dimensions must be positive");
  if (new_rows > l.rows() || new_cols > l.cols())
    throw ArgumentError("shrink target larger than source");
  std::vector<FuelCode> cells;
  cells.reserve(static_cast<std::size_t>(new_rows) * new_cols);
  for (int i = 0; i < new_rows; ++i) {
    const int si = static_cast<int>(std::floor((i + 0.5) * l.rows() / new_rows));
    for (int j = 0; j < new_cols; ++j) {
      const int sj = static_cast<int>(std::floor((j + 0.5) * l.cols() / new_cols));
      cells.push_back(l.at(si, sj));
    }
  }
  return Landscape(new_rows, new_cols, std::move(cells), l.catalog_ptr());
}

inline constexpr int kIgnitionResampleLimit = 10000;

// Uniform over zone cells, resampling non-fuel draws.
inline CellIndex sample_ignition(const Landscape& l, const IgnitionZone& zone, Rng& rng) {
  const auto cells = zone.cells(l);
  bool any = false;
  for (auto c : cells) any = any || l.flammable(c);
  if (!any) throw ArgumentError("ignition zone fully non-flammable");
  for (int attempt = 0; attempt < kIgnitionResampleLimit; ++attempt) {
    const auto c = cells[uniform_index(rng, cells.size())];
    if (l.flammable(c)) return c;
  }
  throw StateError("ignition resampling limit reached");
}

inline const WeatherScenario& sample_weather(std::span<const WeatherScenario> scenarios, Rng& rng) {
  if (scenarios.empty()) throw ArgumentError("weather scenario list is empty");
  return scenarios[uniform_index(rng, scenarios.size())];
}

}  // namespace fbrl
