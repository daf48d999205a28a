#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sosest/error.hpp"
#include "sosest/geometry.hpp"

using namespace sosest;

TEST_SUITE("geometry") {

TEST_CASE("element positions of the default 128-element array") {
  const TransducerArray array;
  CHECK(element_position(array, 63).x == doctest::Approx(-1.5e-4).epsilon(1e-12));
  CHECK(element_position(array, 64).x == doctest::Approx(1.5e-4).epsilon(1e-12));
  CHECK(element_position(array, 0).x == doctest::Approx(-0.019050).epsilon(1e-12));
  CHECK(element_position(array, 0).z == 0.0);
  CHECK(element_position(array, 127).x == doctest::Approx(0.019050).epsilon(1e-12));
}

TEST_CASE("element index out of range is an argument error") {
  const TransducerArray array;
  CHECK_THROWS_AS(element_position(array, -1), ArgumentError);
  CHECK_THROWS_AS(element_position(array, 128), ArgumentError);
  TransducerArray bad;
  bad.num_elements = 1;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad.num_elements = 8;
  bad.pitch = 0.0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("element positions are mirrored about the array center") {
  for (int n : {2, 7, 128}) {
    TransducerArray array;
    array.num_elements = n;
    for (int i = 0; i < n; ++i) {
      CHECK(element_position(array, i).x == -element_position(array, n - 1 - i).x);
    }
  }
}

TEST_CASE("pixel_to_polar examples") {
  PolarROI roi;
  roi.reference_x = 2.0e-3;
  auto q = pixel_to_polar({roi.reference_x, 0.01}, roi);
  CHECK(q.r == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(q.theta == 0.0);

  q = pixel_to_polar({roi.reference_x + 0.01, 0.01}, roi);
  CHECK(q.r == doctest::Approx(0.01 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(q.theta == doctest::Approx(std::numbers::pi / 4).epsilon(1e-12));

  q = pixel_to_polar({roi.reference_x - 0.005, 0.012}, roi);
  CHECK(q.r == doctest::Approx(0.013).epsilon(1e-12));
  CHECK(q.theta == doctest::Approx(-0.39479).epsilon(1e-5));
}

TEST_CASE("pixel_to_polar rejects points at or above the face") {
  const PolarROI roi;
  CHECK_THROWS_AS(pixel_to_polar({0.0, 0.0}, roi), ArgumentError);
  CHECK_THROWS_AS(pixel_to_polar({0.001, -0.001}, roi), ArgumentError);
}

TEST_CASE("polar conversion round-trips and theta follows the lateral side") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(-0.02, 0.02), uz(1e-4, 0.04);
  PolarROI roi;
  roi.reference_x = 1.5e-4;
  for (int i = 0; i < 1000; ++i) {
    const Point p{ux(rng), uz(rng)};
    const Point back = polar_to_pixel(pixel_to_polar(p, roi), roi);
    CHECK(std::abs(back.x - p.x) < 1e-12);
    CHECK(std::abs(back.z - p.z) < 1e-12);
    if (p.x > roi.reference_x) CHECK(pixel_to_polar(p, roi).theta > 0.0);
    if (p.x < roi.reference_x) CHECK(pixel_to_polar(p, roi).theta < 0.0);
  }
}

TEST_CASE("grid constructors cover the requested extent") {
  const ImagingGrid g = ImagingGrid::spanning(-1e-3, 1e-3, 5e-3, 6e-3, 2.5e-4, 1e-4);
  CHECK(g.nx == 9);
  CHECK(g.nz == 11);
  CHECK(g.pixel(0, 0).x == doctest::Approx(-1e-3));
  CHECK(g.pixel(g.nx - 1, g.nz - 1).z == doctest::Approx(6e-3));

  const ImagingGrid c = ImagingGrid::cells(-2e-3, 2e-3, 0.0, 8e-3, 4, 8);
  CHECK(c.x_min() == doctest::Approx(-2e-3));
  CHECK(c.x_max() == doctest::Approx(2e-3));
  CHECK(c.z_min() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(c.z_max() == doctest::Approx(8e-3));
  CHECK(c.dx == doctest::Approx(1e-3));
}

TEST_CASE("ROI validation") {
  PolarROI roi;
  CHECK(roi.depth_min == 7.5e-3);
  CHECK(roi.depth_max == 15.0e-3);
  CHECK(roi.num_bins == 40);
  CHECK(roi.bin_width() == doctest::Approx(0.02));
  roi.num_bins = 1;
  CHECK_THROWS_AS(roi.validate(), ArgumentError);
  roi = PolarROI{};
  roi.depth_max = roi.depth_min;
  CHECK_THROWS_AS(roi.validate(), ArgumentError);
}

}  // TEST_SUITE
