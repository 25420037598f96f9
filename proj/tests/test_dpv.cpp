#include <gtest/gtest.h>

#include <numeric>

#include "fbrl/dpv.hpp"
#include "support.hpp"

using namespace fbrl;

namespace {

FireOutcome tree_outcome(int rows, int cols, CellIndex root, std::vector<std::pair<CellIndex, CellIndex>> edges) {
  FireOutcome o;
  o.rows = rows;
  o.cols = cols;
  o.ignition = root;
  o.burned.push_back(root);
  for (auto [a, b] : edges) o.burned.push_back(b);
  std::sort(o.burned.begin(), o.burned.end());
  o.edges = std::move(edges);
  return o;
}

// Sum of values over descendants, by walking every node up to the root.
std::vector<double> brute_subtree(const FireOutcome& o, std::span<const double> v) {
  std::vector<long> parent(o.n_cells(), -1);
  for (auto [a, b] : o.edges) parent[b] = long(a);
  std::vector<double> out(o.n_cells(), 0.0);
  for (auto c : o.burned)
    for (long x = long(c); x != -1; x = parent[x]) out[x] += v[c];
  return out;
}

}  // namespace

TEST(SubtreeValues, Chain) {
  const auto o = tree_outcome(1 * 2, 2, 0, {{0, 1}, {1, 2}});
  const auto s = subtree_values(o, unit_values(4));
  EXPECT_EQ(s, (std::vector<double>{3, 2, 1, 0}));
}

TEST(SubtreeValues, Star) {
  const auto o = tree_outcome(2, 3, 4, {{4, 0}, {4, 2}, {4, 5}});
  const auto s = subtree_values(o, unit_values(6));
  EXPECT_EQ(s[4], 4.0);
  for (CellIndex leaf : {0u, 2u, 5u}) EXPECT_EQ(s[leaf], 1.0);
  EXPECT_EQ(s[1], 0.0);
  EXPECT_EQ(s[3], 0.0);
}

TEST(SubtreeValues, LengthMismatch) {
  const auto o = tree_outcome(2, 2, 0, {});
  EXPECT_THROW(subtree_values(o, unit_values(3)), ArgumentError);
}

TEST(SubtreeValues, RandomTreesMatchBruteForce) {
  std::mt19937_64 g(7);
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + int(g() % 50);
    const int cells = 64;
    std::vector<CellIndex> ids(cells);
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), g);
    std::vector<std::pair<CellIndex, CellIndex>> edges;
    for (int k = 1; k < n; ++k) {
      // chains, stars and mixed shapes
      const int mode = t % 3;
      const int p = mode == 0 ? k - 1 : mode == 1 ? 0 : int(g() % k);
      edges.emplace_back(ids[p], ids[k]);
    }
    const auto o = tree_outcome(8, 8, ids[0], edges);
    std::vector<double> v(cells);
    for (auto& x : v) x = double(g() % 5);
    EXPECT_EQ(subtree_values(o, v), brute_subtree(o, v));
  }
}

TEST(DpvScores, SingletonEqualsSubtree) {
  const auto o = tree_outcome(2, 2, 0, {{0, 1}, {0, 3}});
  const auto v = unit_values(4);
  EXPECT_EQ(dpv_scores(std::vector<FireOutcome>{o}, v), subtree_values(o, v));
}

TEST(DpvScores, MeanOverOutcomes) {
  const auto a = tree_outcome(2, 2, 0, {{0, 1}, {1, 2}});
  const auto b = tree_outcome(2, 2, 3, {});
  const auto s = dpv_scores(std::vector<FireOutcome>{a, b}, unit_values(4));
  EXPECT_EQ(s[0], 1.5);
  EXPECT_THROW(dpv_scores(std::vector<FireOutcome>{}, unit_values(4)), ArgumentError);
  const auto z = dpv_scores(std::vector<FireOutcome>{a, b}, std::vector<double>(4, 0.0));
  EXPECT_EQ(z, std::vector<double>(4, 0.0));
}

TEST(DpvScores, ChainStrictlyDecreasing) {
  const auto o = tree_outcome(3, 3, 0, {{0, 1}, {1, 2}, {2, 5}, {5, 8}});
  const auto s = dpv_scores(std::vector<FireOutcome>{o}, unit_values(9));
  const std::vector<CellIndex> chain{0, 1, 2, 5, 8};
  for (std::size_t i = 1; i < chain.size(); ++i) EXPECT_GT(s[chain[i - 1]], s[chain[i]]);
}

namespace {

// Ignition chamber on the left; one corridor cell (2,2) is the only way out.
FirebreakEnv corridor_env() {
  const auto cat = test::catalog({0.9});
  std::vector<FuelCode> cells(5 * 8, 1);
  for (int r = 0; r < 5; ++r) cells[r * 8 + 2] = 0;
  cells[2 * 8 + 2] = 1;
  EnvConfig cfg;
  cfg.alpha = 0.05;
  cfg.zone = IgnitionZone{{2, 1}, 0};
  cfg.weather = {WeatherScenario(90, 5)};
  cfg.initial_forbidden = {2 * 8 + 1};
  return FirebreakEnv(Landscape(5, 8, cells, cat), cfg);
}

}  // namespace

TEST(BaselineStep, CorridorCellDominates) {
  const auto env = corridor_env();
  const auto s = env.reset();
  const auto a = baseline_step(env, s, 32, unit_values(env.n_cells()), 1);
  // brute force: the cell whose removal minimizes the mean burned count on the same fires
  const auto base = env.simulate(s.grid, 32, 1);
  double best = 1e9;
  CellIndex arg = 0;
  for (auto c : s.available_cells()) {
    auto g = s.grid;
    g.clear_fuel(c);
    const double m = average_burned(env.simulate(g, 32, 1));
    if (m < best) best = m, arg = c;
  }
  EXPECT_EQ(a, arg);
  EXPECT_EQ(a, CellIndex(2 * 8 + 2));
  EXPECT_LT(best, average_burned(base));
}

TEST(BaselineStep, TiesPickSmallestAvailable) {
  const auto env = corridor_env();
  auto s = env.reset();
  const std::vector<double> flat(env.n_cells(), 1.0);
  EXPECT_EQ(argmax_available(s, flat), 0u);
  s.forbidden[0] = 1;
  EXPECT_EQ(argmax_available(s, flat), 1u);
  const std::vector<double> zeros(env.n_cells(), 0.0);
  EXPECT_EQ(baseline_step(env, s, 4, zeros, 3), 1u);
}

TEST(BaselineStep, ForbiddenTopCellSkipped) {
  const auto env = corridor_env();
  auto s = env.reset();
  const auto v = unit_values(env.n_cells());
  const auto scores = dpv_scores(env.simulate(s.grid, 32, 5), v);
  s.forbidden[2 * 8 + 2] = 1;
  CellIndex want = 0;
  double best = -1;
  for (auto c : s.available_cells())
    if (scores[c] > best) best = scores[c], want = c;
  EXPECT_EQ(baseline_step(env, s, 32, v, 5), want);
}

TEST(BaselineStep, ValueScalingInvariant) {
  std::mt19937_64 g(3);
  const auto cat = test::catalog({0.5, 0.3});
  for (int t = 0; t < 20; ++t) {
    const auto l = test::random_landscape(8, 8, cat, g, 0.1);
    auto cfg = test::small_env_config(8, 8);
    std::size_t flammable = 0;
    for (auto c : cfg.zone.cells(l)) flammable += l.flammable(c);
    if (flammable <= 3) continue;
    FirebreakEnv env(l, cfg);
    const auto s = env.reset();
    std::vector<double> v(env.n_cells());
    for (auto& x : v) x = 1.0 + double(g() % 4);
    std::vector<double> v3 = v;
    for (auto& x : v3) x *= 3.0;
    EXPECT_EQ(baseline_step(env, s, 16, v, t), baseline_step(env, s, 16, v3, t));
  }
}

TEST(BaselineStep, NoAvailableCell) {
  const auto env = corridor_env();
  auto s = env.reset();
  std::fill(s.forbidden.begin(), s.forbidden.end(), 1);
  EXPECT_THROW(baseline_step(env, s, 4, unit_values(env.n_cells()), 1), StateError);
}

TEST(Demonstrations, OneEpisodeOnTenByTen) {
  const auto env = FirebreakEnv(test::uniform(10, 10, 1, test::catalog({0.4})), test::small_env_config(10, 10));
  const auto d = generate_demonstrations(env, 1, 8, 42);
  ASSERT_EQ(d.size(), 5u);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_TRUE(d[i].is_demo);
    EXPECT_EQ(d[i].done, i == 4);
    EXPECT_EQ(d[i].step, i);
  }
  EXPECT_EQ(d, generate_demonstrations(env, 1, 8, 42));
  EXPECT_THROW(generate_demonstrations(env, 0, 8, 42), ArgumentError);
}

TEST(Demonstrations, FileRoundTrip) {
  const auto env = FirebreakEnv(test::uniform(10, 10, 1, test::catalog({0.4})), test::small_env_config(10, 10));
  const auto d = generate_demonstrations(env, 6, 4, 9);
  const auto dir = test::scratch_dir("demo_rt");
  save_demonstrations(dir / "d.bin", 10, 10, d);
  const auto back = load_demonstrations(dir / "d.bin");
  EXPECT_EQ(back.rows, 10);
  EXPECT_EQ(back.cols, 10);
  EXPECT_EQ(back.transitions, d);
}

TEST(Demonstrations, CorruptFileRejected) {
  const auto env = FirebreakEnv(test::uniform(10, 10, 1, test::catalog({0.4})), test::small_env_config(10, 10));
  auto bytes = encode_demonstrations(10, 10, generate_demonstrations(env, 1, 4, 9));
  EXPECT_THROW(decode_demonstrations(std::string_view(bytes).substr(0, bytes.size() - 3)), ParseError);
  bytes[0] = 'X';
  EXPECT_THROW(decode_demonstrations(bytes), ParseError);
}
