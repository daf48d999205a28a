#pragma once

// Straight-ray pulse-echo simulator for single-element (diverging wave)
// transmits. Produces RF channel data for point-scatterer speckle in a
// piecewise-constant speed-of-sound medium.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sosest/geometry.hpp"

namespace sosest {

inline constexpr double kMinSos = 1300.0;
inline constexpr double kMaxSos = 1700.0;

enum class InclusionShape { ellipse, rectangle };

struct Inclusion {
  InclusionShape shape = InclusionShape::ellipse;
  Point center;
  double half_x = 1e-3;  // semi-axis / half-width along x
  double half_z = 1e-3;  // semi-axis / half-height along z
  double sos = 1540.0;

  bool contains(const Point& p) const;
};

struct MediumSpec {
  double background_sos = 1540.0;
  std::vector<Inclusion> inclusions;
  /// Raster grid for exported SoS maps; its spacing also sets the travel-time quadrature step.
  ImagingGrid grid;

  void validate() const;
  bool homogeneous() const { return inclusions.empty(); }
  /// Last inclusion containing p wins; background otherwise.
  double sos_at(const Point& p) const;
  double mean_sos() const;
};

/// Ground-truth SoS sampled at pixel centers of `grid`.
ImageD rasterize_sos(const MediumSpec& medium, const ImagingGrid& grid);

struct ScattererField {
  std::vector<Point> positions;
  std::vector<double> amplitudes;
  std::uint64_t rng_seed = 0;

  std::size_t size() const { return positions.size(); }
};

/// Uniform positions over the grid's cell-edge extent, standard-normal amplitudes.
/// Count is round(density_per_mm2 * area_mm2).
ScattererField gen_scatterers(const ImagingGrid& grid, double density_per_mm2, std::uint64_t seed);

/// Gaussian-windowed sinusoid, t = 0 at the pulse center.
struct PulseSpec {
  double center_frequency = 5.0e6;
  int half_cycles = 4;
  double sampling_frequency = 1.6e8;

  void validate() const;
  double duration() const { return half_cycles / (2.0 * center_frequency); }
  double envelope_sigma() const { return duration() / 4.0; }
  /// Support half-width beyond which the pulse is treated as zero.
  double half_support() const { return 5.0 * envelope_sigma(); }
  double value(double t) const;
};

/// RF samples for one transmit, received on every element. samples(rx, k) is
/// the sample at time t0 + k / fs after the transmit pulse center.
struct ChannelFrame {
  int tx_element = 0;
  ImageF samples;
  double t0 = 0.0;
  double fs = 1.6e8;

  int num_rx() const { return static_cast<int>(samples.rows()); }
  int num_samples() const { return static_cast<int>(samples.cols()); }
};

/// Slowness line integral along the straight segment (trapezoidal, step <= min(dx,dz)/2
/// of the medium grid). Exact distance/c for homogeneous media.
double travel_time(const Point& from, const Point& to, const MediumSpec& medium);

struct SimulationOptions {
  /// Additive white Gaussian noise relative to the frame's mean signal power.
  std::optional<double> snr_db;
  std::uint64_t noise_seed = 1;
  /// Spreading floor r_min in 1 / max(r_tx * r_rx, r_min^2).
  double min_spreading_distance = 1.0e-3;
};

/// One-way travel times from every element to every scatterer, [element x scatterer].
class TravelTimeTable {
 public:
  TravelTimeTable(const TransducerArray& array, const ScattererField& field,
                  const MediumSpec& medium);

  double time(int element, std::size_t scatterer) const { return times_(element, scatterer); }
  double distance(int element, std::size_t scatterer) const {
    return distances_(element, scatterer);
  }
  /// Minimum sample count needed to hold every echo of transmit `tx`.
  int required_samples(int tx, const PulseSpec& pulse) const;
  int num_elements() const { return static_cast<int>(times_.rows()); }
  std::size_t num_scatterers() const { return static_cast<std::size_t>(times_.cols()); }

 private:
  ImageD times_;
  ImageD distances_;
};

ChannelFrame simulate_frame(int tx, const ScattererField& field, const MediumSpec& medium,
                            const PulseSpec& pulse, const TransducerArray& array, int num_samples,
                            const SimulationOptions& options = {});

/// Same as simulate_frame but reuses a precomputed travel-time table.
ChannelFrame simulate_frame(int tx, const ScattererField& field, const TravelTimeTable& table,
                            const PulseSpec& pulse, int num_samples,
                            const SimulationOptions& options = {});

std::string to_string(InclusionShape shape);
InclusionShape parse_inclusion_shape(const std::string& text);

}  // namespace sosest
