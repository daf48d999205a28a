#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "sosest/error.hpp"
#include "sosest/tomo.hpp"

using namespace sosest;

namespace {

double row_sum(const SparseRow& row) {
  double s = 0.0;
  for (const auto& [cell, w] : row) s += w;
  return s;
}

// Brute-force oracle: accumulate segment length per cell by sampling at 1/100 of a cell.
std::map<int, double> sampled_weights(const Point& a, const Point& b, const ImagingGrid& g) {
  const double len = distance(a, b);
  const long n = static_cast<long>(std::ceil(len / (std::min(g.dx, g.dz) / 100.0)));
  std::map<int, double> out;
  for (long i = 0; i < n; ++i) {
    const double t = (i + 0.5) / n;
    const Point p{a.x + t * (b.x - a.x), a.z + t * (b.z - a.z)};
    if (!g.contains(p)) continue;
    const int ix = std::min(g.nx - 1, static_cast<int>(std::floor((p.x - g.x_min()) / g.dx)));
    const int iz = std::min(g.nz - 1, static_cast<int>(std::floor((p.z - g.z_min()) / g.dz)));
    out[iz * g.nx + ix] += len / n;
  }
  return out;
}

struct Problem {
  ImagingGrid slow;
  ImagingGrid meas;
  std::vector<TxPair> pairs;
  PathMatrix L;
};

Problem coverage_problem(int n_cells) {
  Problem p;
  p.slow = ImagingGrid::cells(-10e-3, 10e-3, 0.0, 20e-3, n_cells, n_cells);
  p.meas = ImagingGrid::spanning(-9.75e-3, 9.75e-3, 1.25e-3, 19.75e-3, 0.5e-3, 0.5e-3);
  const std::vector<int> tx{0, 16, 32, 48, 64, 80, 96, 112, 127};
  for (std::size_t i = 0; i + 1 < tx.size(); ++i) p.pairs.emplace_back(tx[i], tx[i + 1]);
  for (std::size_t i = 0; i + 2 < tx.size(); ++i) p.pairs.emplace_back(tx[i], tx[i + 2]);
  std::vector<Mask> masks(p.pairs.size(), Mask::Constant(p.meas.nz, p.meas.nx, true));
  p.L = build_path_matrix(p.pairs, p.meas, p.slow, masks, TransducerArray{});
  return p;
}

Eigen::VectorXd smooth_map(const ImagingGrid& g) {
  Eigen::VectorXd s(g.num_pixels());
  for (int iz = 0; iz < g.nz; ++iz)
    for (int ix = 0; ix < g.nx; ++ix) {
      const Point c = g.pixel(ix, iz);
      const double r2 = std::pow(c.x - 2e-3, 2) + std::pow(c.z - 11e-3, 2);
      s(iz * g.nx + ix) = 9e-6 * std::exp(-r2 / (2.0 * 3e-3 * 3e-3)) + 1e-4 * c.x;
    }
  return s;
}

}  // namespace

TEST_SUITE("tomo") {

TEST_CASE("axis-aligned and diagonal rays") {
  const ImagingGrid g = ImagingGrid::cells(0.0, 4e-3, 0.0, 4e-3, 4, 4);
  const SparseRow v = ray_weights({1.5e-3, 0.0}, {1.5e-3, 3e-3}, g);
  REQUIRE(v.size() == 3);
  for (const auto& [cell, w] : v) {
    CHECK(cell % 4 == 1);
    CHECK(w == doctest::Approx(1e-3).epsilon(1e-12));
  }
  const SparseRow d = ray_weights({1e-3, 1e-3}, {2e-3, 2e-3}, g);
  REQUIRE(d.size() == 1);
  CHECK(d[0].first == 1 * 4 + 1);
  CHECK(d[0].second == doctest::Approx(1e-3 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(ray_weights({1e-3, 1e-3}, {1e-3, 1e-3}, g).empty());
  CHECK_THROWS_AS(ray_weights({0.0, 0.0}, {0.0, 0.02}, g), ArgumentError);
}

TEST_CASE("ray sums equal Euclidean lengths for 1000 random rays") {
  const ImagingGrid g = ImagingGrid::cells(-10e-3, 10e-3, 0.0, 20e-3, 32, 32);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ux(-10e-3, 10e-3), uz(0.0, 20e-3);
  for (int i = 0; i < 1000; ++i) {
    const Point a{ux(rng), uz(rng)}, b{ux(rng), uz(rng)};
    const SparseRow row = ray_weights(a, b, g);
    CHECK(std::abs(row_sum(row) - distance(a, b)) <= 1e-9 * distance(a, b));
    CHECK(row.size() <= static_cast<std::size_t>(g.nx + g.nz));
    for (const auto& [cell, w] : row) {
      CHECK(w > 0.0);
      CHECK(w <= std::hypot(g.dx, g.dz) * (1 + 1e-12));
    }
  }
}

TEST_CASE("ray weights match a brute-force sampling oracle") {
  const ImagingGrid g = ImagingGrid::cells(-2e-3, 2e-3, 0.0, 4e-3, 8, 8);
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> ux(-4e-3, 4e-3), uz(-2e-3, 6e-3);
  for (int i = 0; i < 50; ++i) {
    const Point a{ux(rng), uz(rng)}, b{ux(rng), uz(rng)};
    const SparseRow row = ray_weights(a, b, g);
    const auto oracle = sampled_weights(a, b, g);
    const double tol = 3.0 * distance(a, b) / std::ceil(distance(a, b) / (g.dx / 100.0));
    std::map<int, double> exact;
    for (const auto& [cell, w] : row) exact[cell] += w;
    for (const auto& [cell, w] : oracle) CHECK(std::abs(exact[cell] - w) <= tol);
    for (const auto& [cell, w] : exact) CHECK(std::abs(oracle.count(cell) ? oracle.at(cell) - w : w) <= tol);
  }
}

TEST_CASE("path matrix rows: identical pair, constant deviation, antisymmetry") {
  const TransducerArray array;
  const ImagingGrid slow = ImagingGrid::cells(-19.2e-3, 19.2e-3, 0.0, 30e-3, 24, 20);
  const ImagingGrid meas = ImagingGrid::spanning(-15e-3, 15e-3, 5e-3, 28e-3, 1e-3, 1e-3);
  const Mask all = Mask::Constant(meas.nz, meas.nx, true);

  const PathMatrix same = build_path_matrix({{40, 40}}, meas, slow, {all}, array);
  CHECK(same.L.rows() == meas.num_pixels());
  CHECK(same.L.nonZeros() == 0);

  const PathMatrix ab = build_path_matrix({{24, 88}}, meas, slow, {all}, array);
  const PathMatrix ba = build_path_matrix({{88, 24}}, meas, slow, {all}, array);
  CHECK(Eigen::MatrixXd(ab.L + ba.L).cwiseAbs().maxCoeff() == 0.0);

  const double k = 3e-6;
  const Eigen::VectorXd pred = ab.L * Eigen::VectorXd::Constant(slow.num_pixels(), k);
  const Point pa = element_position(array, 24), pb = element_position(array, 88);
  for (long r = 0; r < pred.size(); ++r) {
    const Point p = meas.pixel(ab.rows[r].node_index % meas.nx, ab.rows[r].node_index / meas.nx);
    const double expected = k * (distance(p, pb) - distance(p, pa));
    CHECK(std::abs(pred(r) - expected) <= 1e-9 * k * std::max(distance(p, pa), distance(p, pb)));
  }

  for (long r = 0; r < ab.L.rows(); ++r) {
    const Point p = meas.pixel(ab.rows[r].node_index % meas.nx, ab.rows[r].node_index / meas.nx);
    const double bound = std::max(distance(p, pa), distance(p, pb));
    long nnz = 0;
    for (SparseMatrix::InnerIterator it(ab.L, r); it; ++it) {
      CHECK(std::abs(it.value()) <= bound);
      ++nnz;
    }
    CHECK(nnz <= 2 * (slow.nx + slow.nz));
  }
}

TEST_CASE("masked nodes are dropped and delays stack in row order") {
  const TransducerArray array;
  const ImagingGrid slow = ImagingGrid::cells(-10e-3, 10e-3, 0.0, 20e-3, 8, 8);
  DelayMap m1, m2;
  for (DelayMap* m : {&m1, &m2}) {
    m->grid = ImagingGrid::spanning(-5e-3, 5e-3, 5e-3, 15e-3, 2.5e-3, 2.5e-3);
    m->delays = ImageD::Random(m->grid.nz, m->grid.nx);
    m->valid = Mask::Constant(m->grid.nz, m->grid.nx, true);
  }
  m1.valid(1, 2) = false;
  m2.valid(0, 0) = false;
  m2.valid(4, 4) = false;
  const PathMatrix pm = build_path_matrix({{40, 56}, {56, 72}}, m1.grid, slow, {m1.valid, m2.valid}, array);
  const Eigen::VectorXd d = stack_delays({m1, m2});
  CHECK(pm.L.rows() == 2 * 25 - 3);
  CHECK(d.size() == pm.L.rows());
  CHECK(pm.rows[0].pair_index == 0);
  CHECK(pm.rows.back().pair_index == 1);
  CHECK(d(0) == m1.delays(0, 0));
  CHECK(d(d.size() - 1) == m2.delays(4, 3));
  CHECK(default_recon_pairs().size() == 6);
}

TEST_CASE("TV operator stencil") {
  const ImagingGrid g = ImagingGrid::cells(0.0, 1.0, 0.0, 1.0, 6, 5);
  const SparseMatrix D = tv_operator(g, 1.0, 0.5);
  CHECK(D.rows() == (g.nz - 1) * g.nx + g.nz * (g.nx - 1));
  CHECK((D * Eigen::VectorXd::Constant(g.num_pixels(), 7.0)).cwiseAbs().maxCoeff() == 0.0);
  Eigen::VectorXd impulse = Eigen::VectorXd::Zero(g.num_pixels());
  impulse(2 * g.nx + 3) = 1.0;
  const Eigen::VectorXd r = D * impulse;
  CHECK((r.array() != 0.0).count() == 4);
  CHECK(r.cwiseAbs().maxCoeff() == 1.0);
  CHECK(r.cwiseAbs().minCoeff() == 0.0);

  const SparseMatrix D0 = tv_operator(g, 1.0, 0.0);
  const Eigen::VectorXd lateral_only = Eigen::VectorXd::LinSpaced(g.num_pixels(), 0.0, 1.0);
  Eigen::VectorXd cols(g.num_pixels());
  for (int iz = 0; iz < g.nz; ++iz)
    for (int ix = 0; ix < g.nx; ++ix) cols(iz * g.nx + ix) = ix * ix;
  CHECK((D0 * cols).cwiseAbs().sum() == 0.0);
  CHECK((D0 * lateral_only).cwiseAbs().sum() > 0.0);
  CHECK_THROWS_AS(tv_operator(g, -1.0, 0.0), ArgumentError);
}

TEST_CASE("smoothed absolute value approaches |t|") {
  const double eps = 1e-10;
  for (double t : {1.01e-8, -3e-8, 1e-6, -1e-4}) CHECK(std::abs(smooth_abs(t, eps) - std::abs(t)) < eps);
  CHECK(smooth_abs(0.0, eps) == 0.0);
  CHECK(smooth_abs(1e-12, eps) > 0.0);
}

TEST_CASE("objective gradient matches central finite differences") {
  const Problem p = coverage_problem(8);
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd delays(p.L.L.rows());
  for (long i = 0; i < delays.size(); ++i) delays(i) = 2e-8 * n(rng);
  const SparseMatrix D = tv_operator(p.slow, 1.0, 0.5);
  const SmoothedObjective f(p.L.L, delays, D, 3.0, 1e-10);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x(f.num_unknowns());
    for (long i = 0; i < x.size(); ++i) x(i) = 5.0 * n(rng);
    Eigen::VectorXd g, scratch;
    f(x, g);
    Eigen::VectorXd fd(x.size());
    const double h = 1e-7;
    for (long i = 0; i < x.size(); ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      fd(i) = (f(xp, scratch) - f(xm, scratch)) / (2 * h);
    }
    CHECK((fd - g).norm() / g.norm() < 1e-5);
  }
}

TEST_CASE("data term scales with the delays") {
  const Problem p = coverage_problem(8);
  const Eigen::VectorXd sigma = smooth_map(p.slow) / SmoothedObjective::kSlownessUnit;
  Eigen::VectorXd delays = Eigen::VectorXd::Constant(p.L.L.rows(), 5e-6);
  const SparseMatrix D = tv_operator(p.slow, 1.0, 0.5);
  const double base = SmoothedObjective(p.L.L, delays, D, 0.0, 1e-10).data_term(sigma);
  for (double s : {2.0, 10.0}) {
    const double scaled = SmoothedObjective(p.L.L, s * delays, D, 0.0, 1e-10).data_term(s * sigma);
    CHECK(scaled == doctest::Approx(s * base).epsilon(1e-3));
  }
}

TEST_CASE("zero delays reconstruct to zero deviation") {
  const Problem p = coverage_problem(10);
  const ReconResult r = reconstruct(p.L, Eigen::VectorXd::Zero(p.L.L.rows()), tv_operator(p.slow, 1.0, 0.5),
                                    p.slow, 1500.0, ReconConfig{});
  CHECK(r.map.deviation.abs().maxCoeff() == 0.0);
  CHECK(r.converged);
  CHECK((r.map.sos() == 1500.0).all());
}

TEST_CASE("noiseless inversion on a 20x20 grid recovers the slowness map") {
  const Problem p = coverage_problem(20);
  const Eigen::VectorXd truth = smooth_map(p.slow);
  const Eigen::VectorXd delays = p.L.L * truth;
  ReconConfig cfg;
  cfg.lambda = 1e-8;
  cfg.lbfgs.max_iterations = 5000;
  const ReconResult r = reconstruct(p.L, delays, tv_operator(p.slow, 1.0, 0.5), p.slow, 1500.0, cfg);
  const Eigen::VectorXd est = Eigen::Map<const Eigen::VectorXd>(r.map.deviation.data(), truth.size());
  const double err = (est - truth).norm() / truth.norm();
  MESSAGE("relative L2 error " << err << " after " << r.iterations << " iterations");
  CHECK(err < 0.05);

  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i].objective <= r.trace[i - 1].objective);
}

TEST_CASE("very large lambda gives a near-constant map") {
  const Problem p = coverage_problem(12);
  const Eigen::VectorXd truth = smooth_map(p.slow);
  const Eigen::VectorXd delays = p.L.L * truth;
  const SparseMatrix D = tv_operator(p.slow, 1.0, 0.5);
  ReconConfig cfg;
  cfg.lambda = 1e6;
  const ReconResult r = reconstruct(p.L, delays, D, p.slow, 1500.0, cfg);
  const double spread = r.map.deviation.maxCoeff() - r.map.deviation.minCoeff();
  const double truth_spread = truth.maxCoeff() - truth.minCoeff();
  CHECK(spread < 0.05 * truth_spread);
}

TEST_CASE("SoS conversion clamps to the sanity band") {
  SlownessMap m;
  m.c_bf = 1500.0;
  m.deviation = ImageD::Zero(1, 3);
  m.deviation(0, 1) = 1.0 / 1200.0 - 1.0 / 1500.0;
  m.deviation(0, 2) = 1.0 / 1550.0 - 1.0 / 1500.0;
  long clamped = 0;
  const ImageD sos = m.sos(&clamped);
  CHECK(clamped == 1);
  CHECK(sos(0, 0) == doctest::Approx(1500.0));
  CHECK(sos(0, 1) == 1300.0);
  CHECK(sos(0, 2) == doctest::Approx(1550.0));
}

TEST_CASE("reconstruction config validation") {
  ReconConfig cfg;
  CHECK(cfg.lambda == 0.05);
  CHECK(cfg.tv_axial_weight == 1.0);
  CHECK(cfg.tv_lateral_weight == 0.5);
  CHECK(cfg.l1_epsilon == 1e-10);
  CHECK(cfg.lbfgs.memory == 10);
  CHECK(cfg.lbfgs.max_iterations == 500);
  cfg.lambda = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}

}  // TEST_SUITE
