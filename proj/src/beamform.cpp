#include "sosest/beamform.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "sosest/error.hpp"
#include "sosest/textio.hpp"

namespace sosest {

void BFConfig::validate() const {
  if (!(c_bf >= kMinSos && c_bf <= kMaxSos)) {
    throw ArgumentError("beamforming SoS " + std::to_string(c_bf) + " m/s outside [1300, 1700]");
  }
  if (f_number < 0.0) throw ArgumentError("f-number must be non-negative");
  grid.validate();
}

namespace {

double hann(double u) {
  // u in [-1, 1] across the active aperture.
  if (std::abs(u) > 1.0) return 0.0;
  return 0.5 + 0.5 * std::cos(std::numbers::pi * u);
}

}  // namespace

BeamformedFrame das_beamform(const ChannelFrame& frame, const TransducerArray& array,
                             const BFConfig& cfg) {
  cfg.validate();
  array.validate();
  if (frame.num_rx() != array.num_elements) {
    throw ArgumentError("channel frame has " + std::to_string(frame.num_rx()) +
                        " receive channels but the array has " +
                        std::to_string(array.num_elements) + " elements");
  }
  if (!(frame.fs > 0.0)) throw ArgumentError("sampling frequency must be positive");

  const ImagingGrid& g = cfg.grid;
  const int num_rx = frame.num_rx();
  const long ns = frame.num_samples();
  const double inv_c = 1.0 / cfg.c_bf;
  const double fs = frame.fs;
  const Point tx = element_position(array, frame.tx_element);

  std::vector<double> rx_x(num_rx);
  for (int r = 0; r < num_rx; ++r) rx_x[r] = element_position(array, r).x;
  const double half_aperture = 0.5 * array.aperture_width();

  BeamformedFrame out;
  out.tx_element = frame.tx_element;
  out.c_bf_used = cfg.c_bf;
  out.grid = g;
  out.rf = ImageF::Zero(g.nz, g.nx);

#pragma omp parallel
  {
    std::vector<double> acc(g.nx);
    std::vector<double> tx_delay(g.nx);
#pragma omp for schedule(dynamic)
    for (int iz = 0; iz < g.nz; ++iz) {
      const double z = g.z0 + iz * g.dz;
      const double z2 = z * z;
      for (int ix = 0; ix < g.nx; ++ix) {
        const double dxt = g.x0 + ix * g.dx - tx.x;
        tx_delay[ix] = std::sqrt(dxt * dxt + z2) * inv_c - frame.t0;
        acc[ix] = 0.0;
      }
      const double aperture = cfg.f_number > 0.0 ? z / (2.0 * cfg.f_number) : half_aperture;
      for (int r = 0; r < num_rx; ++r) {
        const float* trace = frame.samples.row(r).data();
        const double xr = rx_x[r];
        for (int ix = 0; ix < g.nx; ++ix) {
          const double px = g.x0 + ix * g.dx;
          const double dxr = px - xr;
          double w = 1.0;
          if (cfg.f_number > 0.0 || cfg.apodization == Apodization::hann) {
            const double center = cfg.f_number > 0.0 ? px : 0.0;
            const double u = (xr - center) / aperture;
            if (std::abs(u) > 1.0) continue;
            if (cfg.apodization == Apodization::hann) w = hann(u);
          }
          const double t = tx_delay[ix] + std::sqrt(dxr * dxr + z2) * inv_c;
          const double u = t * fs;
          if (u < 0.0) continue;
          const auto i = static_cast<long>(u);
          if (i >= ns - 1) {
            if (i == ns - 1 && u == static_cast<double>(i)) acc[ix] += w * trace[i];
            continue;
          }
          const double f = u - static_cast<double>(i);
          acc[ix] += w * (trace[i] + f * (trace[i + 1] - trace[i]));
        }
      }
      for (int ix = 0; ix < g.nx; ++ix) out.rf(iz, ix) = static_cast<float>(acc[ix]);
    }
  }
  return out;
}

double echo_shift_model(double c, double c_bf, double d) {
  if (!(c > 0.0) || !(c_bf > 0.0)) throw ArgumentError("speeds of sound must be positive");
  return (1.0 / c - 1.0 / c_bf) * d;
}

void export_beamformed(const std::filesystem::path& path, const BeamformedFrame& frame) {
  write_grid_binary(path, frame.rf.cast<double>(), frame.grid,
                    {"c_bf " + fmt_double(frame.c_bf_used),
                     "tx_element " + std::to_string(frame.tx_element)});
}

Apodization parse_apodization(const std::string& text) {
  if (text == "none") return Apodization::none;
  if (text == "hann") return Apodization::hann;
  throw ConfigError("unknown apodization '" + text + "' (expected none or hann)");
}

std::string to_string(Apodization a) { return a == Apodization::none ? "none" : "hann"; }

}  // namespace sosest
