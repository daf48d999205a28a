#pragma once

// Pipeline configuration: INI-style `[section]` / `key = value` text. Unknown
// sections or keys are rejected. See docs/config.md for the schema.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sosest/beamform.hpp"
#include "sosest/delaytrack.hpp"
#include "sosest/regress.hpp"
#include "sosest/synthsim.hpp"
#include "sosest/tomo.hpp"

namespace sosest {

/// Reconstruction defaults used by the pipeline (stronger TV weight than ReconConfig{}).
inline ReconConfig default_recon() {
  ReconConfig r;
  r.lambda = 2.0;
  return r;
}

struct PipelineConfig {
  TransducerArray array;
  PulseSpec pulse;

  // [medium]
  double background_sos = 1500.0;
  std::vector<Inclusion> inclusions;
  double raster_dx = 1.0e-4;
  double raster_dz = 1.0e-4;

  // [simulation]
  double scatterer_density = 4.0;  // per mm^2
  std::uint64_t seed = 1;
  std::optional<double> snr_db;
  int num_samples = 0;  // 0 = just enough for the deepest echo

  // [imaging] reconstruction beamforming grid; x limits default to the aperture.
  std::optional<double> x_min;
  std::optional<double> x_max;
  double z_min = 5.0e-3;
  double z_max = 40.0e-3;
  double dx = 3.0e-4;
  double dz = 1.875e-5;
  Apodization apodization = Apodization::none;
  double f_number = 1.0;  // receive aperture z / f_number centered above each pixel

  TrackConfig track;  // [track]

  // [roi]; reference_x defaults to the midpoint of the estimation pair.
  PolarROI roi;
  std::optional<double> roi_reference_x;

  // [estimation]
  int tx_a = 55;
  int tx_b = 65;
  RegressionMethod method = RegressionMethod::robust;
  double estimation_dx = 1.5e-4;
  double assumed_c_bf = 1540.0;

  // [calibration]
  double c_true = 1500.0;
  double delta_min = -40.0;
  double delta_max = 40.0;
  double delta_step = 1.0;
  int degree = 1;
  int train_every = 4;
  std::string model_path;

  // [recon]
  std::vector<TxPair> recon_pairs = default_recon_pairs();
  ReconConfig recon = default_recon();
  int slow_nx = 32;
  int slow_nz = 32;
  int node_axial_step = 32;
  int node_lateral_step = 2;

  // [study]
  int num_phantoms = 8;
  double offset_fraction = 0.015;

  // [output]
  std::string output_dir = "sosest_out";
  int threads = 0;  // 0 = library default

  void validate() const;
};

PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& text);
/// Every key with its resolved value.
std::string format_config(const PipelineConfig& cfg);
void save_config(const std::filesystem::path& path, const PipelineConfig& cfg);

/// Coarser settings for fast CI runs.
void apply_quick_mode(PipelineConfig& cfg);

std::string format_pairs(const std::vector<TxPair>& pairs);
std::vector<TxPair> parse_pairs(const std::string& text);
std::string format_inclusions(const std::vector<Inclusion>& incs);
std::vector<Inclusion> parse_inclusions(const std::string& text);

}  // namespace sosest
