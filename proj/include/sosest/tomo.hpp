#pragma once

// Differential-path slowness tomography: delays between frames of two transmits
// are modeled as L * dsigma, with dsigma the slowness deviation from 1/c_bf, and
// recovered by minimizing a smoothed L1 data misfit plus anisotropic TV.

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <filesystem>
#include <utility>
#include <vector>

#include "sosest/delaytrack.hpp"
#include "sosest/lbfgs.hpp"

namespace sosest {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using TxPair = std::pair<int, int>;

/// (cell index, intersection length in meters); cells are row-major iz * nx + ix.
using SparseRow = std::vector<std::pair<int, double>>;

/// Exact intersection lengths of the segment with the grid cells (Siddon traversal).
SparseRow ray_weights(const Point& from, const Point& to, const ImagingGrid& grid);

struct PathRowInfo {
  int pair_index = 0;
  int node_index = 0;  // jz * nx + jx on the measurement grid
};

struct PathMatrix {
  SparseMatrix L;  // meters per entry
  std::vector<PathRowInfo> rows;
};

/// One row per valid node per pair: ray_weights(tx_b, p) - ray_weights(tx_a, p), so that
/// L * dsigma predicts the tracked delay of frame b relative to frame a.
PathMatrix build_path_matrix(const std::vector<TxPair>& pairs, const ImagingGrid& meas_grid,
                             const ImagingGrid& slow_grid, const std::vector<Mask>& masks,
                             const TransducerArray& array);

/// Valid delays of every map, stacked in the row order of build_path_matrix.
Eigen::VectorXd stack_delays(const std::vector<DelayMap>& maps);

/// Forward differences: axial rows (scaled by w_axial) then lateral rows (w_lateral).
SparseMatrix tv_operator(const ImagingGrid& grid, double w_axial, double w_lateral);

std::vector<TxPair> default_recon_pairs();

struct ReconConfig {
  double lambda = 0.05;
  double tv_axial_weight = 1.0;
  double tv_lateral_weight = 0.5;
  double l1_epsilon = 1e-10;  // seconds
  LbfgsOptions lbfgs;

  void validate() const;
};

/// phi(t) = sqrt(t^2 + eps^2) - eps.
double smooth_abs(double t, double eps);

/// Smoothed objective in solver units: delays in ns, path lengths in mm, slowness
/// deviation in ns/mm (1 ns/mm = 1e-6 s/m).
class SmoothedObjective {
 public:
  static constexpr double kSlownessUnit = 1e-6;  // s/m per solver unit

  SmoothedObjective(const SparseMatrix& L_m, const Eigen::VectorXd& delays_s, SparseMatrix D,
                    double lambda_effective, double epsilon_s);

  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;
  double data_term(const Eigen::VectorXd& x) const;
  double regularization_term(const Eigen::VectorXd& x) const;
  long num_unknowns() const { return L_.cols(); }

 private:
  SparseMatrix L_;
  SparseMatrix Lt_;
  Eigen::VectorXd b_;
  SparseMatrix D_;
  SparseMatrix Dt_;
  double lambda_;
  double eps_;
};

struct SlownessMap {
  ImageD deviation;  // s/m, relative to 1/c_bf
  ImagingGrid grid;
  double c_bf = 1540.0;

  /// Total SoS 1/(1/c_bf + deviation), clamped to [1300, 1700].
  ImageD sos(long* clamped = nullptr) const;
};

struct ReconResult {
  SlownessMap map;
  std::vector<TraceEntry> trace;
  bool converged = false;
  int iterations = 0;
  long clamped_pixels = 0;
  double lambda_effective = 0.0;
};

ReconResult reconstruct(const PathMatrix& L, const Eigen::VectorXd& delays_s, const SparseMatrix& D,
                        const ImagingGrid& slow_grid, double c_bf, const ReconConfig& cfg);

void export_trace_csv(const std::filesystem::path& path, const std::vector<TraceEntry>& trace);

}  // namespace sosest
