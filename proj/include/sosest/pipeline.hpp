#pragma once

// End-to-end stages shared by the CLI, the acceptance suite and the Python module:
// simulate channel data, measure the delay-pattern slope of the estimation pair,
// calibrate slope against the BF-SoS offset, and reconstruct local SoS maps.

#include <map>
#include <string>
#include <vector>

#include "sosest/calibrate.hpp"
#include "sosest/channel_io.hpp"
#include "sosest/config.hpp"
#include "sosest/metrics.hpp"
#include "sosest/tomo.hpp"

namespace sosest {

MediumSpec make_medium(const PipelineConfig& cfg);

/// Beamforming grid for reconstruction frames.
ImagingGrid imaging_grid(const PipelineConfig& cfg);
/// Slowness cells covering the imaging extent laterally and [0, z_max] axially.
ImagingGrid slowness_grid(const PipelineConfig& cfg);
/// ROI with its apex resolved (explicit reference_x or the estimation-pair midpoint).
PolarROI estimation_roi(const PipelineConfig& cfg);
/// Small beamforming grid enclosing the estimation ROI plus the tracking margins.
ImagingGrid estimation_grid(const PipelineConfig& cfg);

/// Sorted union of the estimation pair and every reconstruction pair element.
std::vector<int> required_tx(const PipelineConfig& cfg);

/// Simulates the frames for `txs` over a scatterer field covering `extent`.
/// num_samples = 0 sizes every frame for its deepest echo.
ChannelSet simulate_channels(const PipelineConfig& cfg, const MediumSpec& medium,
                             const ImagingGrid& extent, const std::vector<int>& txs);

/// simulate_channels over the imaging extent for required_tx(cfg).
ChannelSet simulate_dataset(const PipelineConfig& cfg, const MediumSpec& medium);

struct SlopeMeasurement {
  DelayMap map;
  DelayPattern pattern;
  RegressionResult fit;
};

/// Beamforms the estimation pair at c_bf, tracks, extracts the pattern and fits it.
SlopeMeasurement measure_slope(ChannelSet& channels, const PipelineConfig& cfg, double c_bf);

/// Offsets c_bf - c_true of the calibration sweep, from delta_min to delta_max.
std::vector<double> sweep_offsets(const PipelineConfig& cfg);

/// Homogeneous c_true phantom measured at every sweep offset. Optionally returns the
/// delay pattern of every sweep point.
CalibrationDataset run_calibration_sweep(const PipelineConfig& cfg,
                                         std::vector<DelayPattern>* patterns = nullptr);

struct SosEstimate {
  double c_bf_assumed = 0.0;
  double slope = 0.0;
  double delta_c = 0.0;
  double corrected_sos = 0.0;
  SlopeMeasurement measurement;
};

SosEstimate estimate_sos(ChannelSet& channels, const CalibrationModel& model,
                         const PipelineConfig& cfg, double c_bf_assumed);

struct ReconRun {
  std::vector<DelayMap> maps;
  PathMatrix paths;
  ReconResult result;
  ImageD sos;  // m/s on the slowness grid
};

/// Beamforms every reconstruction pair at c_bf, tracks, and solves for local SoS.
ReconRun reconstruct_sos(ChannelSet& channels, const PipelineConfig& cfg, double c_bf);

/// Desk-scale phantom set: alternating elliptical / rectangular inclusions with
/// +-20 and +-40 m/s contrast at 18-28 mm depth.
std::vector<PipelineConfig> desk_phantoms(const PipelineConfig& base);

struct CorrectionCase {
  std::string case_id;
  double c_background = 0.0;
  double c_bf_assumed = 0.0;
  SosEstimate estimate;
  ReconRun before;
  ReconRun after;
  CaseMetrics metrics;
};

/// One phantom at one assumed c_bf: estimate, correct, reconstruct before and after.
CorrectionCase run_correction_case(ChannelSet& channels, const PipelineConfig& cfg,
                                   const CalibrationModel& model, double c_bf_assumed,
                                   const std::string& case_id);

}  // namespace sosest
