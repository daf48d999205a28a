#pragma once

#include <filesystem>

#include "sosest/geometry.hpp"
#include "sosest/synthsim.hpp"

namespace sosest {

enum class Apodization { none, hann };

struct BFConfig {
  double c_bf = 1540.0;
  ImagingGrid grid;
  Apodization apodization = Apodization::none;
  /// 0 selects the full receive aperture for every pixel.
  double f_number = 0.0;

  void validate() const;
};

/// Delay-and-sum RF image of one transmit on BFConfig::grid, rf(iz, ix).
struct BeamformedFrame {
  int tx_element = 0;
  ImageF rf;
  double c_bf_used = 0.0;
  ImagingGrid grid;
};

/// Dynamic-receive-focused DAS for a single-element diverging-wave transmit.
/// Two-way delay (|p - tx| + |p - rx|) / c_bf, linear interpolation, samples outside
/// the recorded range contribute zero.
BeamformedFrame das_beamform(const ChannelFrame& frame, const TransducerArray& array,
                             const BFConfig& cfg);

/// Echo shift (1/c - 1/c_bf) * d for a path of length d.
double echo_shift_model(double c, double c_bf, double d);

/// Flat f32 dump plus text sidecar (grid, c_bf, tx element).
void export_beamformed(const std::filesystem::path& path, const BeamformedFrame& frame);

Apodization parse_apodization(const std::string& text);
std::string to_string(Apodization a);

}  // namespace sosest
