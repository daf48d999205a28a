#include <doctest.h>

#include <cmath>
#include <random>

#include "sosest/channel_io.hpp"
#include "sosest/error.hpp"
#include "sosest/synthsim.hpp"
#include "support.hpp"

using namespace sosest;
using sosest::test::homogeneous_medium;

namespace {

ImagingGrid medium_grid() { return ImagingGrid::spanning(-0.02, 0.02, 0.0, 0.04, 1e-4, 1e-4); }

MediumSpec layered_medium() {
  MediumSpec m = homogeneous_medium(1500.0, medium_grid());
  Inclusion layer;
  layer.shape = InclusionShape::rectangle;
  layer.center = {0.0, 0.0075};
  layer.half_x = 0.01;
  layer.half_z = 0.0025;
  layer.sos = 1550.0;
  m.inclusions = {layer};
  return m;
}

ScattererField single(Point p, double amplitude = 1.0) {
  ScattererField f;
  f.positions = {p};
  f.amplitudes = {amplitude};
  return f;
}

}  // namespace

TEST_SUITE("synthsim") {

TEST_CASE("travel_time examples") {
  const MediumSpec m1500 = homogeneous_medium(1500.0, medium_grid());
  CHECK(travel_time({0, 0}, {0, 0.015}, m1500) == doctest::Approx(1.0e-5).epsilon(1e-12));
  const MediumSpec m1540 = homogeneous_medium(1540.0, medium_grid());
  CHECK(travel_time({0, 0}, {0.003, 0.004}, m1540) == doctest::Approx(0.005 / 1540.0).epsilon(1e-12));
  CHECK(travel_time({0.001, 0.002}, {0.001, 0.002}, m1540) == 0.0);

  const double layered = travel_time({0, 0.005}, {0, 0.015}, layered_medium());
  const double analytic = 0.005 / 1550.0 + 0.005 / 1500.0;
  CHECK(analytic == doctest::Approx(6.5591e-6).epsilon(1e-4));
  CHECK(std::abs(layered - analytic) / analytic < 1e-3);
}

TEST_CASE("travel_time is reciprocal and accurate across axis-aligned interfaces") {
  const MediumSpec m = layered_medium();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(-0.009, 0.009), uz(0.0, 0.03);
  for (int i = 0; i < 200; ++i) {
    const Point a{ux(rng), uz(rng)}, b{ux(rng), uz(rng)};
    const double ab = travel_time(a, b, m), ba = travel_time(b, a, m);
    CHECK(std::abs(ab - ba) <= 1e-12 * std::abs(ab));

    // Piecewise-analytic oracle: the layer occupies z in [5, 10] mm for |x| < 10 mm.
    const double len = distance(a, b);
    double inside = 0.0;
    if (std::abs(b.z - a.z) > 1e-15) {
      const double z_lo = std::max(std::min(a.z, b.z), 0.005);
      const double z_hi = std::min(std::max(a.z, b.z), 0.010);
      if (z_hi > z_lo) inside = len * (z_hi - z_lo) / std::abs(b.z - a.z);
    }
    const double analytic = inside / 1550.0 + (len - inside) / 1500.0;
    if (len > 1e-3) CHECK(std::abs(ab - analytic) / analytic < 1e-3);
  }
}

TEST_CASE("gen_scatterers count and determinism") {
  const ImagingGrid g = ImagingGrid::cells(0.0, 0.01, 0.0, 0.01, 10, 10);
  const ScattererField a = gen_scatterers(g, 2.0, 42);
  CHECK(a.size() == 200);
  const ScattererField b = gen_scatterers(g, 2.0, 42);
  bool identical = a.size() == b.size();
  for (std::size_t i = 0; identical && i < a.size(); ++i) {
    identical = a.positions[i].x == b.positions[i].x && a.positions[i].z == b.positions[i].z &&
                a.amplitudes[i] == b.amplitudes[i];
  }
  CHECK(identical);
  const ScattererField c = gen_scatterers(g, 2.0, 43);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    differs = differs || a.positions[i].x != c.positions[i].x || a.positions[i].z != c.positions[i].z;
  CHECK(differs);
  for (const Point& p : a.positions) CHECK(g.contains(p));
  CHECK_THROWS_AS(gen_scatterers(g, 0.0, 1), ArgumentError);
}

TEST_CASE("single scatterer echo arrives at the analytic two-way time") {
  const TransducerArray array;
  const PulseSpec pulse;
  const MediumSpec m = homogeneous_medium(1500.0, medium_grid());
  const Point s{0.0, 0.02};
  const ChannelFrame f = simulate_frame(63, single(s), m, pulse, array, 6000);
  const double expected = 2.0 * distance(s, element_position(array, 63)) / 1500.0;
  Eigen::Index k_max = 0;
  f.samples.row(63).abs().maxCoeff(&k_max);
  const double t_peak = f.t0 + k_max / f.fs;
  const double half_cycle = 1.0 / (2.0 * pulse.center_frequency);
  CHECK(std::abs(t_peak - expected) <= half_cycle);
  CHECK(f.num_rx() == array.num_elements);
  CHECK(f.samples.allFinite());
}

TEST_CASE("simulate_frame is linear in the scatterer field") {
  const TransducerArray array;
  const PulseSpec pulse;
  const MediumSpec m = layered_medium();
  const ImagingGrid extent = ImagingGrid::cells(-0.005, 0.005, 0.004, 0.012, 1, 1);
  const ScattererField a = gen_scatterers(extent, 0.5, 1);
  const ScattererField b = gen_scatterers(extent, 0.5, 2);
  ScattererField both = a;
  both.positions.insert(both.positions.end(), b.positions.begin(), b.positions.end());
  both.amplitudes.insert(both.amplitudes.end(), b.amplitudes.begin(), b.amplitudes.end());

  const int n = TravelTimeTable(array, both, m).required_samples(40, pulse);
  const ChannelFrame fa = simulate_frame(40, a, m, pulse, array, n);
  const ChannelFrame fb = simulate_frame(40, b, m, pulse, array, n);
  const ChannelFrame fab = simulate_frame(40, both, m, pulse, array, n);
  const double scale = fab.samples.abs().maxCoeff();
  CHECK(((fa.samples + fb.samples) - fab.samples).abs().maxCoeff() <= 1e-6 * scale);

  ScattererField doubled = a;
  for (double& v : doubled.amplitudes) v *= 2.0;
  const ChannelFrame f2 = simulate_frame(40, doubled, m, pulse, array, n);
  CHECK((f2.samples - 2.0f * fa.samples).abs().maxCoeff() == 0.0f);
}

TEST_CASE("empty field gives an all-zero frame") {
  const TransducerArray array;
  const ChannelFrame f =
      simulate_frame(10, ScattererField{}, homogeneous_medium(1500.0, medium_grid()), PulseSpec{}, array, 100);
  CHECK(f.samples.abs().maxCoeff() == 0.0f);
}

TEST_CASE("too few samples is a configuration error naming the minimum") {
  const TransducerArray array;
  const MediumSpec m = homogeneous_medium(1500.0, medium_grid());
  const ScattererField f = single({0.0, 0.03});
  const TravelTimeTable table(array, f, m);
  const int need = table.required_samples(63, PulseSpec{});
  CHECK_NOTHROW(simulate_frame(63, f, table, PulseSpec{}, need));
  try {
    simulate_frame(63, f, table, PulseSpec{}, need - 1);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(std::to_string(need)) != std::string::npos);
  }
}

TEST_CASE("pulse invariants") {
  PulseSpec p;
  CHECK(p.duration() == doctest::Approx(4.0e-7));
  CHECK(p.sampling_frequency == 1.6e8);
  CHECK(std::abs(p.value(0.0)) > 0.99);
  CHECK(std::abs(p.value(p.half_support() * 1.5)) == 0.0);
  p.sampling_frequency = 4e7;
  CHECK_THROWS_AS(p.validate(), ArgumentError);
}

TEST_CASE("medium overlap rule and SoS band") {
  MediumSpec m = homogeneous_medium(1500.0, medium_grid());
  Inclusion a, b;
  a.center = b.center = {0.0, 0.02};
  a.half_x = a.half_z = 0.004;
  b.half_x = b.half_z = 0.002;
  a.sos = 1450.0;
  b.sos = 1560.0;
  m.inclusions = {a, b};
  CHECK(m.sos_at({0.0, 0.02}) == 1560.0);
  CHECK(m.sos_at({0.003, 0.02}) == 1450.0);
  CHECK(m.sos_at({0.01, 0.02}) == 1500.0);
  m.inclusions[1].sos = 1800.0;
  CHECK_THROWS_AS(m.validate(), ArgumentError);

  Inclusion r;
  r.shape = InclusionShape::rectangle;
  r.center = {0.0, 0.01};
  r.half_x = 0.002;
  r.half_z = 0.001;
  CHECK(r.contains({0.0019, 0.0109}));
  CHECK_FALSE(r.contains({0.0021, 0.01}));
  Inclusion e = r;
  e.shape = InclusionShape::ellipse;
  CHECK_FALSE(e.contains({0.0019, 0.0109}));
}

TEST_CASE("channel frames round-trip through the SOSC format") {
  sosest::test::TempDir dir("sosc");
  ChannelFrame f;
  f.tx_element = 77;
  f.fs = 1.6e8;
  f.t0 = 1.25e-7;
  f.samples = ImageF::Random(4, 33);
  write_channel_frame(dir.path / frame_file_name(77), f);
  const ChannelFrame g = read_channel_frame(dir.path / frame_file_name(77));
  CHECK(g.tx_element == 77);
  CHECK(g.fs == f.fs);
  CHECK(g.t0 == f.t0);
  CHECK((g.samples == f.samples).all());
  CHECK(std::filesystem::file_size(dir.path / frame_file_name(77)) == 32 + 4 * 33 * 4);
  CHECK_THROWS_AS(read_channel_frame(dir.path / "missing.sosc"), MissingInputError);
}

}  // TEST_SUITE
