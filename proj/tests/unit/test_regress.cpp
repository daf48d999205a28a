#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sosest/error.hpp"
#include "sosest/regress.hpp"
#include "support.hpp"

using namespace sosest;

namespace {

// Delay map on a fine node grid with delays given by f(theta) relative to roi.reference_x.
template <typename F>
DelayMap polar_map(const PolarROI& roi, F f) {
  DelayMap m;
  m.grid = ImagingGrid::spanning(-8e-3, 8e-3, 4e-3, 16e-3, 1.0e-4, 1.0e-4);
  m.delays = ImageD::Zero(m.grid.nz, m.grid.nx);
  m.ncc = ImageD::Constant(m.grid.nz, m.grid.nx, 0.9);
  m.valid = Mask::Constant(m.grid.nz, m.grid.nx, true);
  for (int iz = 0; iz < m.grid.nz; ++iz)
    for (int ix = 0; ix < m.grid.nx; ++ix) m.delays(iz, ix) = f(pixel_to_polar(m.grid.pixel(ix, iz), roi).theta);
  return m;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_SUITE("regress") {

TEST_CASE("pattern of a constant map is constant") {
  PolarROI roi;
  const DelayMap m = polar_map(roi, [](double) { return 4.2e-9; });
  const DelayPattern p = extract_pattern(m, roi);
  CHECK(p.size() == static_cast<std::size_t>(roi.num_bins));
  for (double d : p.median_delays) CHECK(d == 4.2e-9);
  for (std::size_t i = 1; i < p.size(); ++i) CHECK(p.thetas[i] > p.thetas[i - 1]);
  for (double w : p.weights) CHECK(w == doctest::Approx(0.9));
}

TEST_CASE("pattern of a linear map follows the line within half a bin") {
  PolarROI roi;
  roi.reference_x = 1e-3;
  const double alpha = 3e-8;
  const DelayMap m = polar_map(roi, [&](double t) { return alpha * t; });
  const DelayPattern p = extract_pattern(m, roi);
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(std::abs(p.median_delays[i] - alpha * p.thetas[i]) <= alpha * roi.bin_width() / 2 + 1e-20);
  }
}

TEST_CASE("empty bins are dropped and an empty ROI is an error") {
  PolarROI roi;
  DelayMap m = polar_map(roi, [](double t) { return t; });
  for (int iz = 0; iz < m.grid.nz; ++iz)
    for (int ix = 0; ix < m.grid.nx; ++ix)
      if (pixel_to_polar(m.grid.pixel(ix, iz), roi).theta > 0.1) m.valid(iz, ix) = false;
  const DelayPattern p = extract_pattern(m, roi);
  CHECK(p.size() < static_cast<std::size_t>(roi.num_bins));
  for (int c : p.bin_counts) CHECK(c > 0);
  m.valid.setConstant(false);
  CHECK_THROWS_AS(extract_pattern(m, roi), EmptyPatternError);
}

TEST_CASE("OLS examples") {
  auto r = fit_ols(DelayPattern::from_points({0, 1}, {0, 2}));
  CHECK(r.slope == doctest::Approx(2.0));
  CHECK(r.intercept == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r.r_squared == doctest::Approx(1.0));

  r = fit_ols(DelayPattern::from_points({0, 1, 2}, {0, 1, 0}));
  CHECK(std::abs(r.slope) < 1e-15);
  CHECK(r.intercept == doctest::Approx(1.0 / 3.0));
  CHECK(std::abs(r.r_squared) < 1e-15);

  r = fit_ols(DelayPattern::from_points({0, 1, 2, 3}, {5, 5, 5, 5}));
  CHECK(r.slope == 0.0);
  CHECK(r.r_squared == 0.0);
  CHECK_THROWS_AS(fit_ols(DelayPattern::from_points({1}, {1})), InsufficientDataError);
}

TEST_CASE("weighted fit with unit weights equals OLS") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1e-9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> t, y;
    for (int i = 0; i < 40; ++i) {
      t.push_back(-0.4 + 0.02 * i);
      y.push_back(2e-8 * t.back() + 1e-9 + n(rng));
    }
    const auto p = DelayPattern::from_points(t, y);
    const auto a = fit_ols(p), b = fit_weighted(p);
    CHECK(rel(b.slope, a.slope) <= 1e-12);
    CHECK(rel(b.intercept, a.intercept) <= 1e-12);
  }
}

TEST_CASE("weighted fit examples") {
  auto r = fit_weighted(DelayPattern::from_points({0, 1, 2}, {0, 1, 10}, {1, 1, 0}));
  CHECK(r.slope == doctest::Approx(1.0));
  CHECK(std::abs(r.intercept) < 1e-12);

  // Normal equations: [4 3; 3 3] b = [6 6] -> slope 2, intercept 0.
  r = fit_weighted(DelayPattern::from_points({0, 1, 1}, {0, 0, 3}, {1, 1, 2}));
  CHECK(r.slope == doctest::Approx(2.0));
  CHECK(std::abs(r.intercept) < 1e-12);

  CHECK_THROWS_AS(fit_weighted(DelayPattern::from_points({1, 1, 1}, {0, 1, 2})), RankDeficiencyError);
}

TEST_CASE("robust fit on a clean line equals OLS") {
  std::vector<double> t, y;
  for (int i = 0; i < 20; ++i) {
    t.push_back(-0.4 + 0.04 * i);
    y.push_back(3.0 * t.back());
  }
  const auto p = DelayPattern::from_points(t, y);
  const auto r = fit_robust(p);
  CHECK(std::abs(r.slope - 3.0) < 1e-9);
  CHECK(std::abs(r.slope - fit_ols(p).slope) < 1e-9);
  CHECK(r.method == RegressionMethod::robust);
}

TEST_CASE("robust fit resists a single gross outlier") {
  std::vector<double> t, y;
  for (int i = 0; i < 20; ++i) {
    t.push_back(-0.4 + 0.04 * i);
    y.push_back(3.0 * t.back());
  }
  const double range = 3.0 * (t.back() - t.front());
  t.push_back(0.38);
  y.push_back(10.0 * range);
  const auto p = DelayPattern::from_points(t, y);
  const auto robust = fit_robust(p), ols = fit_ols(p);
  CHECK(std::abs(robust.slope - 3.0) < 0.02 * 3.0);
  CHECK(std::abs(robust.slope - 3.0) < std::abs(ols.slope - 3.0));
  CHECK(robust.iterations >= 1);
  CHECK_THROWS_AS(fit_robust(DelayPattern::from_points({0.1, 0.1, 0.1}, {1, 2, 3})), RankDeficiencyError);
}

TEST_CASE("r_squared examples") {
  const std::vector<double> y{0, 1, 2};
  CHECK(r_squared(y, y) == 1.0);
  CHECK(r_squared(y, std::vector<double>{1, 1, 1}) == 0.0);
  CHECK(r_squared(y, std::vector<double>{0.5, 1, 1.5}) == 0.75);
  CHECK(r_squared(std::vector<double>{2, 2}, std::vector<double>{1, 3}) == 0.0);
}

TEST_CASE("OLS r_squared beats every constant predictor") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> t, y;
    for (int i = 0; i < 15; ++i) {
      t.push_back(i);
      y.push_back(0.3 * i + n(rng));
    }
    const auto fit = fit_ols(DelayPattern::from_points(t, y));
    CHECK(fit.r_squared <= 1.0);
    for (double c : {-1.0, 0.0, 2.0, 4.0}) {
      CHECK(fit.r_squared >= r_squared(y, std::vector<double>(y.size(), c)) - 1e-12);
    }
  }
}

TEST_CASE("method names") {
  for (auto m : {RegressionMethod::ols, RegressionMethod::robust, RegressionMethod::weighted})
    CHECK(parse_regression_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_regression_method("lasso"), ConfigError);
}

}  // TEST_SUITE
