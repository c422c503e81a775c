#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "lrq/io.hpp"
#include "lrq/util.hpp"

using namespace lrq;

TEST_CASE("config parsing", "[io]") {
  std::istringstream in(
      "L = 64\n"
      "alpha = 0.5   # strong long range\n"
      "kac = true\n"
      "\n"
      "L_sweep = 8, 64, 512\n"
      "U_list = 0.5,1.0,1.5\n");
  auto cfg = RunConfig::parse(in);
  CHECK(cfg.get_int("L", 0) == 64);
  CHECK(cfg.get_double("alpha", 0.0) == 0.5);
  CHECK(cfg.get_bool("kac", false));
  CHECK(cfg.get_ints("L_sweep", {}) == std::vector<long long>{8, 64, 512});
  CHECK(cfg.get_doubles("U_list", {}) == std::vector<double>{0.5, 1.0, 1.5});
  CHECK(cfg.get_string("missing", "fallback") == "fallback");
}

TEST_CASE("config errors name every offending line", "[io]") {
  std::istringstream in(
      "L = 64\n"
      "not a pair\n"
      "also wrong\n");
  try {
    RunConfig::parse(in);
    FAIL("expected parse failure");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("line 3") != std::string::npos);
  }
  std::istringstream bad_num("x = 1.5.2\n");
  auto cfg = RunConfig::parse(bad_num);
  CHECK_THROWS_AS(cfg.get_double("x", 0.0), std::invalid_argument);
}

TEST_CASE("g17 formatting round-trips doubles", "[io]") {
  for (double v : {1.0 / 3.0, 2.718281828459045, -1.2345678901234567e-12, 0.0}) {
    const std::string s = format_g17(v);
    CHECK(std::stod(s) == v);
  }
}

TEST_CASE("csv writer", "[io]") {
  CsvWriter w({"t", "d"});
  w.add_row({0.0, 1.5});
  w.add_row({0.5, 2.5});
  CHECK(w.str() == "t,d\n0,1.5\n0.5,2.5\n");
  CHECK_THROWS_AS(w.add_row({1.0}), std::invalid_argument);
}

TEST_CASE("svg plot renders polylines", "[io]") {
  SvgPlot plot(200, 100);
  plot.add_series({0, 1, 2}, {0, 1, 0}, "steelblue");
  plot.add_vertical_marks({1.5}, "crimson");
  const std::string svg = plot.render();
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
}

TEST_CASE("utility fits and correlations", "[io]") {
  std::vector<double> x = {1, 2, 3, 4}, y = {3, 5, 7, 9};
  auto f = fit_line(x, y);
  CHECK(f.slope == Catch::Approx(2.0));
  CHECK(f.intercept == Catch::Approx(1.0));
  CHECK(pearson_correlation(x, y) == Catch::Approx(1.0));
  std::vector<double> z = {9, 7, 5, 3};
  CHECK(pearson_correlation(x, z) == Catch::Approx(-1.0));
  auto n = affine_normalize(std::vector<double>{2.0, 4.0, 3.0});
  CHECK(n == std::vector<double>{0.0, 1.0, 0.5});
}
