#pragma once

// Calibration between the beamforming SoS offset and the observed delay-pattern slope.
// Convention everywhere: delta_c = c_bf - c (positive = BF-SoS overestimated).

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "sosest/delaytrack.hpp"
#include "sosest/regress.hpp"

namespace sosest {

inline constexpr const char* kDeltaConvention = "delta_c=c_bf-c";

struct CalibrationEntry {
  double delta_c = 0.0;  // m/s
  double slope = 0.0;    // s/rad
  double r_squared = 0.0;
};

struct SweepMetadata {
  double c_true = 1500.0;
  int tx_a = 55;
  int tx_b = 65;
  PolarROI roi;
  TrackConfig track;
  RegressionMethod method = RegressionMethod::robust;

  std::uint64_t hash() const;
};

struct CalibrationDataset {
  std::vector<CalibrationEntry> entries;
  SweepMetadata meta;

  void validate() const;
};

struct EveryK {
  std::size_t k = 4;
};
using TrainSelector = std::variant<EveryK, std::vector<std::size_t>>;

/// Polynomial slope(delta_c), coefficients in ascending powers of delta_c.
struct CalibrationModel {
  int degree = 1;
  std::vector<double> coefficients;
  double domain_min = -40.0;
  double domain_max = 40.0;
  std::vector<std::size_t> training_indices;
  double c_true = 1500.0;
  int tx_a = 55;
  int tx_b = 65;
  std::uint64_t metadata_hash = 0;

  double evaluate(double delta_c) const;
  double derivative(double delta_c) const;
};

CalibrationModel build_calibration(const CalibrationDataset& dataset, int degree,
                                   const TrainSelector& selector = EveryK{4});

struct OffsetOptions {
  /// Extrapolation allowance for degree 1, as a fraction of the slope range.
  double linear_extension = 0.1;
  double bisection_tolerance = 1e-9;  // m/s
};

/// Inverse lookup: delta_c whose modeled slope equals the observation.
double estimate_offset(const CalibrationModel& model, double observed_slope,
                       const OffsetOptions& options = {});

/// Undo the overestimate: c_bf - delta_c_hat.
double corrected_sos(double c_bf_assumed, double delta_c_hat);

struct CalibrationReport {
  std::vector<std::size_t> test_indices;
  std::vector<double> test_estimates;  // delta_c_hat per test entry
  double test_rmse = 0.0;              // m/s, delta_c_hat vs delta_c
  double test_r_squared = 0.0;         // delta_c_hat vs delta_c
  double train_rmse = 0.0;
  double slope_r_squared = 0.0;        // model slope vs observed slope on test points
};

/// Evaluates the model on the sweep entries not used for training.
CalibrationReport evaluate_calibration(const CalibrationModel& model,
                                       const CalibrationDataset& dataset);

void save_model(const std::filesystem::path& path, const CalibrationModel& model);
CalibrationModel load_model(const std::filesystem::path& path);

/// CSV: delta_c,slope,r_squared,split
void export_calibration_csv(const std::filesystem::path& path, const CalibrationDataset& dataset,
                            const CalibrationModel& model);

}  // namespace sosest
