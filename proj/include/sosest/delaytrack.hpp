#pragma once

#include <filesystem>
#include <span>
#include <utility>

#include "sosest/beamform.hpp"

namespace sosest {

struct TrackConfig {
  int window_len = 96;     // axial pixels
  int search_radius = 16;  // axial pixels
  int axial_step = 8;      // pixels between measurement nodes
  int lateral_step = 1;
  double min_ncc = 0.2;
  Apodization taper = Apodization::hann;  // weighting of the correlation window

  void validate() const;
};

struct NccPeak {
  double lag = 0.0;       // fractional samples; positive = content of b is later
  double peak_ncc = 0.0;  // NCC at the best integer lag
  bool valid = false;
};

/// Normalized cross-correlation of `window` against every placement inside `search`
/// (len(search) = len(window) + 2R, lags -R..R), refined by a 3-point parabola.
/// A Hann taper weights the products inside the window; it suppresses the edge terms that
/// make NCC(+1) and NCC(-1) unequal at an exact match and would bias the parabola vertex.
NccPeak ncc_delay_1d(std::span<const float> window, std::span<const float> search,
                     Apodization taper = Apodization::hann);

/// Relative axial delays between two beamformed frames on a decimated node grid.
/// delays(jz, jx) is in seconds (two-way time), positive when frame b's echo is later.
struct DelayMap {
  ImageD delays;
  ImageD ncc;
  Mask valid;
  ImagingGrid grid;  // measurement grid (node centers)
  int tx_a = 0;
  int tx_b = 0;
  double c_bf = 0.0;

  long num_valid() const { return valid.count(); }
};

DelayMap track_delays(const BeamformedFrame& a, const BeamformedFrame& b, const TrackConfig& cfg);

/// CSV with columns x,z,delay_s,ncc,valid.
void export_delay_map_csv(const std::filesystem::path& path, const DelayMap& map);
DelayMap read_delay_map_csv(const std::filesystem::path& path);

}  // namespace sosest
