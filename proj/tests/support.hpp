#pragma once

#include <algorithm>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "fbrl/env.hpp"
#include "fbrl/landscape.hpp"

namespace fbrl::test {

inline std::filesystem::path data_dir() { return FBRL_DATA_DIR; }

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("fbrl_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::shared_ptr<const FuelCatalog> catalog(std::vector<double> probs) {
  auto cat = std::make_shared<FuelCatalog>();
  for (std::size_t i = 0; i < probs.size(); ++i) cat->add(int(i + 1), "f" + std::to_string(i + 1), probs[i]);
  return cat;
}

inline Landscape uniform(int rows, int cols, FuelCode code, std::shared_ptr<const FuelCatalog> cat) {
  return Landscape(rows, cols, std::vector<FuelCode>(std::size_t(rows) * cols, code), std::move(cat));
}

// Random mix of codes 0..max_code.
inline Landscape random_landscape(int rows, int cols, std::shared_ptr<const FuelCatalog> cat, std::mt19937_64& g,
                                  double nonfuel_share = 0.1) {
  const auto codes = cat->codes();
  std::vector<FuelCode> cells(std::size_t(rows) * cols);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& c : cells) c = u(g) < nonfuel_share ? kNonFuel : codes[1 + g() % (codes.size() - 1)];
  return Landscape(rows, cols, std::move(cells), std::move(cat));
}

inline EnvConfig small_env_config(int rows, int cols) {
  EnvConfig c;
  c.zone.center = {rows / 2, cols / 2};
  c.zone.radius = std::min({2, rows / 2, cols / 2, rows - 1 - rows / 2, cols - 1 - cols / 2});
  c.weather = {WeatherScenario(45, 10), WeatherScenario(200, 5)};
  c.sims_per_eval = 8;
  return c;
}

}  // namespace fbrl::test
