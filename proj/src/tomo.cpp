#include "sosest/tomo.hpp"

#include <algorithm>
#include <cmath>

#include "sosest/error.hpp"
#include "sosest/synthsim.hpp"
#include "sosest/textio.hpp"

namespace sosest {

SparseRow ray_weights(const Point& from, const Point& to, const ImagingGrid& grid) {
  const double xmin = grid.x_min(), xmax = grid.x_max();
  const double zmin = grid.z_min(), zmax = grid.z_max();
  {
    const double wx = xmax - xmin, wz = zmax - zmin;
    auto inside2x = [&](const Point& p) {
      return p.x >= xmin - 0.5 * wx && p.x <= xmax + 0.5 * wx && p.z >= zmin - 0.5 * wz &&
             p.z <= zmax + 0.5 * wz;
    };
    if (!inside2x(from) || !inside2x(to)) {
      throw ArgumentError("ray endpoint outside twice the slowness grid extent");
    }
  }
  SparseRow row;
  const double ddx = to.x - from.x;
  const double ddz = to.z - from.z;
  const double len = std::hypot(ddx, ddz);
  if (len == 0.0) return row;

  // Liang-Barsky clip of t in [0, 1] against the grid box.
  double t0 = 0.0, t1 = 1.0;
  auto clip = [&](double p, double q) {
    if (p == 0.0) return q >= 0.0;
    const double r = q / p;
    if (p < 0.0) {
      if (r > t1) return false;
      t0 = std::max(t0, r);
    } else {
      if (r < t0) return false;
      t1 = std::min(t1, r);
    }
    return true;
  };
  if (!clip(-ddx, from.x - xmin) || !clip(ddx, xmax - from.x) || !clip(-ddz, from.z - zmin) ||
      !clip(ddz, zmax - from.z) || !(t1 > t0)) {
    return row;
  }

  std::vector<double> ts{t0, t1};
  if (ddx != 0.0) {
    for (int k = 1; k < grid.nx; ++k) {
      const double t = (xmin + k * grid.dx - from.x) / ddx;
      if (t > t0 && t < t1) ts.push_back(t);
    }
  }
  if (ddz != 0.0) {
    for (int k = 1; k < grid.nz; ++k) {
      const double t = (zmin + k * grid.dz - from.z) / ddz;
      if (t > t0 && t < t1) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());

  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double seg = ts[i + 1] - ts[i];
    if (!(seg > 0.0)) continue;
    const double tm = 0.5 * (ts[i] + ts[i + 1]);
    const int ix = std::clamp(static_cast<int>(std::floor((from.x + tm * ddx - xmin) / grid.dx)), 0,
                              grid.nx - 1);
    const int iz = std::clamp(static_cast<int>(std::floor((from.z + tm * ddz - zmin) / grid.dz)), 0,
                              grid.nz - 1);
    const int cell = iz * grid.nx + ix;
    if (!row.empty() && row.back().first == cell) {
      row.back().second += seg * len;
    } else {
      row.emplace_back(cell, seg * len);
    }
  }
  return row;
}

PathMatrix build_path_matrix(const std::vector<TxPair>& pairs, const ImagingGrid& meas_grid,
                             const ImagingGrid& slow_grid, const std::vector<Mask>& masks,
                             const TransducerArray& array) {
  if (masks.size() != pairs.size()) throw ArgumentError("one validity mask per pair is required");
  meas_grid.validate();
  slow_grid.validate();
  std::vector<Eigen::Triplet<double>> triplets;
  PathMatrix pm;
  int row = 0;
  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    const auto& mask = masks[pi];
    if (mask.rows() != meas_grid.nz || mask.cols() != meas_grid.nx) {
      throw ArgumentError("mask shape does not match the measurement grid");
    }
    const Point pa = element_position(array, pairs[pi].first);
    const Point pb = element_position(array, pairs[pi].second);
    for (int jz = 0; jz < meas_grid.nz; ++jz) {
      for (int jx = 0; jx < meas_grid.nx; ++jx) {
        if (!mask(jz, jx)) continue;
        const Point p = meas_grid.pixel(jx, jz);
        for (const auto& [cell, w] : ray_weights(pb, p, slow_grid)) triplets.emplace_back(row, cell, w);
        for (const auto& [cell, w] : ray_weights(pa, p, slow_grid)) triplets.emplace_back(row, cell, -w);
        pm.rows.push_back({static_cast<int>(pi), jz * meas_grid.nx + jx});
        ++row;
      }
    }
  }
  pm.L.resize(row, static_cast<long>(slow_grid.num_pixels()));
  pm.L.setFromTriplets(triplets.begin(), triplets.end());
  pm.L.prune(0.0);
  return pm;
}

Eigen::VectorXd stack_delays(const std::vector<DelayMap>& maps) {
  long n = 0;
  for (const auto& m : maps) n += m.num_valid();
  Eigen::VectorXd out(n);
  long k = 0;
  for (const auto& m : maps)
    for (int jz = 0; jz < m.grid.nz; ++jz)
      for (int jx = 0; jx < m.grid.nx; ++jx)
        if (m.valid(jz, jx)) out(k++) = m.delays(jz, jx);
  return out;
}

SparseMatrix tv_operator(const ImagingGrid& grid, double w_axial, double w_lateral) {
  if (w_axial < 0.0 || w_lateral < 0.0) throw ArgumentError("TV weights must be non-negative");
  const int nx = grid.nx, nz = grid.nz;
  std::vector<Eigen::Triplet<double>> t;
  int row = 0;
  for (int iz = 0; iz + 1 < nz; ++iz)
    for (int ix = 0; ix < nx; ++ix, ++row) {
      t.emplace_back(row, iz * nx + ix, -w_axial);
      t.emplace_back(row, (iz + 1) * nx + ix, w_axial);
    }
  for (int iz = 0; iz < nz; ++iz)
    for (int ix = 0; ix + 1 < nx; ++ix, ++row) {
      t.emplace_back(row, iz * nx + ix, -w_lateral);
      t.emplace_back(row, iz * nx + ix + 1, w_lateral);
    }
  SparseMatrix d(row, static_cast<long>(grid.num_pixels()));
  d.setFromTriplets(t.begin(), t.end());
  return d;
}

std::vector<TxPair> default_recon_pairs() {
  return {{24, 40}, {40, 56}, {56, 72}, {72, 88}, {88, 104}, {104, 120}};
}

void ReconConfig::validate() const {
  if (lambda < 0.0) throw ArgumentError("lambda must be non-negative");
  if (!(l1_epsilon > 0.0)) throw ArgumentError("l1 smoothing epsilon must be positive");
  if (tv_axial_weight < 0.0 || tv_lateral_weight < 0.0) {
    throw ArgumentError("TV weights must be non-negative");
  }
  if (lbfgs.memory < 1 || lbfgs.max_iterations < 1) throw ArgumentError("invalid L-BFGS settings");
}

double smooth_abs(double t, double eps) {
  // sqrt(t^2 + eps^2) - eps, written to avoid cancellation for |t| << eps.
  return t * t / (std::sqrt(t * t + eps * eps) + eps);
}

SmoothedObjective::SmoothedObjective(const SparseMatrix& L_m, const Eigen::VectorXd& delays_s,
                                     SparseMatrix D, double lambda_effective, double epsilon_s)
    : L_(L_m * 1e3),
      b_(delays_s * 1e9),
      D_(std::move(D)),
      lambda_(lambda_effective),
      eps_(epsilon_s * 1e9) {
  if (L_.rows() != b_.size()) throw ArgumentError("delay vector does not match path matrix rows");
  if (D_.cols() != L_.cols()) throw ArgumentError("regularizer does not match path matrix columns");
  Lt_ = L_.transpose();
  Dt_ = D_.transpose();
}

double SmoothedObjective::data_term(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd r = L_ * x - b_;
  double f = 0.0;
  for (long i = 0; i < r.size(); ++i) f += smooth_abs(r(i), eps_);
  return f;
}

double SmoothedObjective::regularization_term(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd d = D_ * x;
  double f = 0.0;
  for (long i = 0; i < d.size(); ++i) f += smooth_abs(d(i), eps_);
  return lambda_ * f;
}

double SmoothedObjective::operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
  Eigen::VectorXd r = L_ * x - b_;
  double f = 0.0;
  for (long i = 0; i < r.size(); ++i) {
    const double t = r(i);
    const double s = std::sqrt(t * t + eps_ * eps_);
    f += t * t / (s + eps_);
    r(i) = t / s;
  }
  grad = Lt_ * r;
  if (lambda_ > 0.0) {
    Eigen::VectorXd d = D_ * x;
    double reg = 0.0;
    for (long i = 0; i < d.size(); ++i) {
      const double t = d(i);
      const double s = std::sqrt(t * t + eps_ * eps_);
      reg += t * t / (s + eps_);
      d(i) = t / s;
    }
    f += lambda_ * reg;
    grad += lambda_ * (Dt_ * d);
  }
  return f;
}

ImageD SlownessMap::sos(long* clamped) const {
  ImageD out(deviation.rows(), deviation.cols());
  long n = 0;
  for (long r = 0; r < out.rows(); ++r)
    for (long c = 0; c < out.cols(); ++c) {
      const double s = 1.0 / c_bf + deviation(r, c);
      double v = s > 0.0 ? 1.0 / s : kMaxSos;
      if (v < kMinSos || v > kMaxSos) {
        v = std::clamp(v, kMinSos, kMaxSos);
        ++n;
      }
      out(r, c) = v;
    }
  if (clamped) *clamped = n;
  return out;
}

ReconResult reconstruct(const PathMatrix& L, const Eigen::VectorXd& delays_s, const SparseMatrix& D,
                        const ImagingGrid& slow_grid, double c_bf, const ReconConfig& cfg) {
  cfg.validate();
  if (L.L.cols() != slow_grid.num_pixels()) {
    throw ArgumentError("path matrix columns do not match the slowness grid");
  }
  if (L.L.rows() == 0) throw InsufficientDataError("no valid delay measurements to reconstruct from");
  const double lambda_eff =
      D.rows() > 0 ? cfg.lambda * static_cast<double>(L.L.rows()) / static_cast<double>(D.rows())
                   : 0.0;
  const SmoothedObjective objective(L.L, delays_s, D, lambda_eff, cfg.l1_epsilon);
  const LbfgsResult sol = minimize_lbfgs(
      [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return objective(x, g); },
      Eigen::VectorXd::Zero(L.L.cols()), cfg.lbfgs);

  ReconResult res;
  res.map.grid = slow_grid;
  res.map.c_bf = c_bf;
  res.map.deviation.resize(slow_grid.nz, slow_grid.nx);
  for (int iz = 0; iz < slow_grid.nz; ++iz)
    for (int ix = 0; ix < slow_grid.nx; ++ix)
      res.map.deviation(iz, ix) =
          sol.x(iz * slow_grid.nx + ix) * SmoothedObjective::kSlownessUnit;
  res.trace = sol.trace;
  res.converged = sol.converged;
  res.iterations = sol.iterations;
  res.lambda_effective = lambda_eff;
  res.map.sos(&res.clamped_pixels);
  return res;
}

void export_trace_csv(const std::filesystem::path& path, const std::vector<TraceEntry>& trace) {
  auto os = open_output(path);
  os << "iteration,objective,grad_norm\n";
  for (const auto& e : trace) {
    os << e.iteration << ',' << fmt_double(e.objective) << ',' << fmt_double(e.grad_norm) << '\n';
  }
}

}  // namespace sosest
