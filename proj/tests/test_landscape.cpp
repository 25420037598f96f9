#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "fbrl/landscape.hpp"
#include "support.hpp"

using namespace fbrl;

namespace {

std::shared_ptr<const FuelCatalog> cat3() { return test::catalog({0.5, 0.3, 0.2}); }

}  // namespace

TEST(FuelCatalog, NonFuelAlwaysPresent) {
  FuelCatalog c;
  EXPECT_TRUE(c.contains(0));
  EXPECT_EQ(c.base_prob(0), 0.0);
  EXPECT_THROW(c.add(0, "x", 0.5), ArgumentError);
  EXPECT_THROW(c.add(1, "x", 1.5), ArgumentError);
  EXPECT_THROW(c.add(-1, "x", 0.5), ArgumentError);
}

TEST(FuelCatalog, ParseAndFormatRoundTrip) {
  const auto c = parse_fuel_catalog("# comment\n0 nonfuel 0\n1 grass 0.25\n7 timber 0.125\n");
  EXPECT_EQ(c.codes(), (std::vector<FuelCode>{0, 1, 7}));
  EXPECT_EQ(c.base_prob(7), 0.125);
  EXPECT_EQ(parse_fuel_catalog(format_fuel_catalog(c)), c);
  EXPECT_THROW(parse_fuel_catalog("1 grass\n"), ParseError);
  EXPECT_THROW(parse_fuel_catalog("x grass 0.1\n"), ParseError);
}

TEST(LoadLandscape, TwoByTwo) {
  const auto l = parse_landscape("rows 2\ncols 2\n1 1\n1 0\n", cat3());
  EXPECT_EQ(l.rows(), 2);
  EXPECT_EQ(l.cols(), 2);
  EXPECT_EQ(std::vector<FuelCode>(l.cells().begin(), l.cells().end()), (std::vector<FuelCode>{1, 1, 1, 0}));
}

TEST(LoadLandscape, RowCountMismatch) {
  try {
    parse_landscape("rows 3\ncols 2\n1 1\n1 0\n", cat3());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("row count mismatch"), std::string::npos);
  }
}

TEST(LoadLandscape, ErrorsNameTheLine) {
  auto message = [](const std::string& text) {
    try {
      parse_landscape(text, cat3());
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("rows 2\ncols 2\n1 1\n1 1 1\n").find("line 4"), std::string::npos);
  EXPECT_NE(message("rows 2\ncols 2\n1 1\n1 1 1\n").find("row length mismatch"), std::string::npos);
  EXPECT_NE(message("rows 2\ncols 2\n1 a\n1 1\n").find("non-integer cell"), std::string::npos);
  EXPECT_NE(message("rows 2\ncols 2\n1 9\n1 1\n").find("unknown fuel code"), std::string::npos);
  EXPECT_NE(message("rows x\ncols 2\n1 1\n1 1\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("cols 2\nrows 2\n1 1\n1 1\n").find("malformed header"), std::string::npos);
}

TEST(LoadLandscape, Fixture20HasFourHundredCells) {
  const auto cat = load_fuel_catalog(test::data_dir() / "fixture20.fuels");
  const auto l = load_landscape(test::data_dir() / "fixture20.grid", cat);
  EXPECT_EQ(l.rows(), 20);
  EXPECT_EQ(l.size(), 400u);
}

TEST(LoadLandscape, SaveLoadRoundTrip) {
  std::mt19937_64 g(3);
  const auto cat = cat3();
  const auto dir = test::scratch_dir("landscape_rt");
  for (int i = 0; i < 20; ++i) {
    const auto l = test::random_landscape(2 + int(g() % 9), 2 + int(g() % 9), cat, g);
    save_landscape(dir / "l.grid", l);
    EXPECT_EQ(load_landscape(dir / "l.grid", cat), l);
  }
}

TEST(Landscape, RejectsBadShapes) {
  EXPECT_THROW(Landscape(1, 3, {1, 1, 1}, cat3()), ArgumentError);
  EXPECT_THROW(Landscape(2, 2, {1, 1, 1}, cat3()), ArgumentError);
  EXPECT_THROW(Landscape(2, 2, {1, 1, 1, 9}, cat3()), ArgumentError);
}

TEST(ShrinkNearest, Identity) {
  std::mt19937_64 g(1);
  const auto l = test::random_landscape(7, 5, cat3(), g);
  EXPECT_EQ(shrink_nearest(l, 7, 5), l);
}

TEST(ShrinkNearest, ConstantGridStaysConstant) {
  const auto l = test::uniform(9, 13, 3, cat3());
  EXPECT_EQ(shrink_nearest(l, 4, 6), test::uniform(4, 6, 3, cat3()));
}

TEST(ShrinkNearest, FourByFourToTwoByTwo) {
  FuelCatalog c;
  for (int i = 1; i < 16; ++i) c.add(i, "c" + std::to_string(i), 0.1);
  auto cat = std::make_shared<const FuelCatalog>(c);
  std::vector<FuelCode> cells(16);
  for (int i = 0; i < 16; ++i) cells[i] = FuelCode(i);
  const auto s = shrink_nearest(Landscape(4, 4, cells, cat), 2, 2);
  // source cells (1,1),(1,3),(3,1),(3,3) by the center rule
  const std::vector<FuelCode> expect{FuelCode(1 * 4 + 1), FuelCode(1 * 4 + 3), FuelCode(3 * 4 + 1),
                                     FuelCode(3 * 4 + 3)};
  EXPECT_EQ(std::vector<FuelCode>(s.cells().begin(), s.cells().end()), expect);
}

TEST(ShrinkNearest, OutputCodesAreInputCodes) {
  std::mt19937_64 g(5);
  for (int t = 0; t < 50; ++t) {
    const auto l = test::random_landscape(10 + int(g() % 20), 10 + int(g() % 20), cat3(), g, 0.3);
    const auto s = shrink_nearest(l, 2 + int(g() % 9), 2 + int(g() % 9));
    for (auto c : s.cells()) EXPECT_NE(std::find(l.cells().begin(), l.cells().end(), c), l.cells().end());
  }
}

TEST(ShrinkNearest, RejectsZeroTarget) {
  const auto l = test::uniform(4, 4, 1, cat3());
  EXPECT_THROW(shrink_nearest(l, 0, 2), ArgumentError);
  EXPECT_THROW(shrink_nearest(l, 5, 2), ArgumentError);
}

TEST(SampleIgnition, RadiusZeroIsCenter) {
  const auto l = test::uniform(5, 5, 1, cat3());
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_ignition(l, IgnitionZone{{2, 3}, 0}, rng), l.index(2, 3));
}

TEST(SampleIgnition, StaysInsideDisc) {
  for (auto [n, rad] : {std::pair{20, 4}, std::pair{40, 9}}) {
    const auto l = test::uniform(n, n, 1, cat3());
    const IgnitionZone z{{n / 2, n / 2}, rad};
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
      const auto p = l.pos(sample_ignition(l, z, rng));
      EXPECT_LE(std::hypot(p.row - n / 2, p.col - n / 2), rad + 1e-12);
    }
  }
}

TEST(SampleIgnition, RingExcludesInterior) {
  const auto l = test::uniform(20, 20, 1, cat3());
  const IgnitionZone z{{10, 10}, 4, IgnitionShape::ring};
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const auto p = l.pos(sample_ignition(l, z, rng));
    const double d = std::hypot(p.row - 10, p.col - 10);
    EXPECT_GT(d, 3.0);
    EXPECT_LE(d, 4.0 + 1e-12);
  }
}

TEST(SampleIgnition, NeverReturnsNonFuel) {
  std::mt19937_64 g(9);
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto l = test::random_landscape(12, 12, cat3(), g, 0.6);
    const IgnitionZone z{{6, 6}, 3};
    bool any = false;
    for (auto c : z.cells(l)) any = any || l.flammable(c);
    if (!any) continue;
    for (int i = 0; i < 50; ++i) EXPECT_TRUE(l.flammable(sample_ignition(l, z, rng)));
  }
}

TEST(SampleIgnition, Errors) {
  Rng rng(1);
  const auto l = test::uniform(6, 6, 0, cat3());
  try {
    sample_ignition(l, IgnitionZone{{3, 3}, 1}, rng);
    FAIL();
  } catch (const ArgumentError& e) {
    EXPECT_STREQ(e.what(), "ignition zone fully non-flammable");
  }
  EXPECT_THROW(sample_ignition(test::uniform(6, 6, 1, cat3()), IgnitionZone{{1, 1}, 2}, rng), ArgumentError);
}

TEST(SampleWeather, Singleton) {
  const std::vector<WeatherScenario> w{WeatherScenario(30, 4)};
  Rng rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_weather(w, rng), w[0]);
}

TEST(SampleWeather, TwoScenariosBalanced) {
  const std::vector<WeatherScenario> w{WeatherScenario(0, 1), WeatherScenario(180, 2)};
  Rng rng(123);
  int first = 0;
  for (int i = 0; i < 10000; ++i) first += sample_weather(w, rng) == w[0];
  EXPECT_GE(first, 4500);
  EXPECT_LE(first, 5500);
}

TEST(SampleWeather, EmptyThrows) {
  Rng rng(1);
  EXPECT_THROW(sample_weather({}, rng), ArgumentError);
}

TEST(Weather, DirectionNormalized) {
  EXPECT_EQ(WeatherScenario(-90, 1).wind_dir_deg, 270.0);
  EXPECT_EQ(WeatherScenario(720, 1).wind_dir_deg, 0.0);
  const auto w = parse_weather("id,wind_dir_deg,wind_speed\n0,370,2\n1,90,0\n");
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].wind_dir_deg, 10.0);
  EXPECT_THROW(parse_weather("a,b,c\n"), ParseError);
  EXPECT_THROW(parse_weather("id,wind_dir_deg,wind_speed\n0,10,-1\n"), ParseError);
}

TEST(ValueGrid, PgmEncoding) {
  const std::vector<double> v{0.0, 0.5, 1.0, 2.0};
  const auto pgm = format_pgm(2, 2, v);
  EXPECT_EQ(pgm.substr(0, 11), "P5\n2 2\n255\n");
  EXPECT_EQ(static_cast<unsigned char>(pgm[11 + 1]), 128);
  EXPECT_EQ(static_cast<unsigned char>(pgm[11 + 3]), 255);
  EXPECT_EQ(format_value_grid(2, 2, v), "rows 2\ncols 2\n0.000000 0.500000\n1.000000 2.000000\n");
}
