#include "sosest/synthsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sosest/error.hpp"

namespace sosest {

bool Inclusion::contains(const Point& p) const {
  const double ux = (p.x - center.x) / half_x;
  const double uz = (p.z - center.z) / half_z;
  if (shape == InclusionShape::ellipse) return ux * ux + uz * uz <= 1.0;
  return std::abs(ux) <= 1.0 && std::abs(uz) <= 1.0;
}

void MediumSpec::validate() const {
  auto check = [](double c) {
    if (!(c >= kMinSos && c <= kMaxSos)) {
      throw ArgumentError("speed of sound " + std::to_string(c) + " m/s outside [1300, 1700]");
    }
  };
  check(background_sos);
  for (const auto& inc : inclusions) {
    check(inc.sos);
    if (!(inc.half_x > 0.0) || !(inc.half_z > 0.0)) {
      throw ArgumentError("inclusion half sizes must be positive");
    }
  }
  grid.validate();
}

double MediumSpec::sos_at(const Point& p) const {
  for (auto it = inclusions.rbegin(); it != inclusions.rend(); ++it) {
    if (it->contains(p)) return it->sos;
  }
  return background_sos;
}

double MediumSpec::mean_sos() const { return rasterize_sos(*this, grid).mean(); }

ImageD rasterize_sos(const MediumSpec& medium, const ImagingGrid& grid) {
  ImageD out(grid.nz, grid.nx);
  for (int iz = 0; iz < grid.nz; ++iz)
    for (int ix = 0; ix < grid.nx; ++ix) out(iz, ix) = medium.sos_at(grid.pixel(ix, iz));
  return out;
}

ScattererField gen_scatterers(const ImagingGrid& grid, double density_per_mm2, std::uint64_t seed) {
  if (!(density_per_mm2 > 0.0)) throw ArgumentError("scatterer density must be positive");
  const double width = grid.x_max() - grid.x_min();
  const double height = grid.z_max() - grid.z_min();
  const double area_mm2 = width * height * 1e6;
  const auto count = static_cast<std::size_t>(std::llround(density_per_mm2 * area_mm2));

  ScattererField field;
  field.rng_seed = seed;
  field.positions.reserve(count);
  field.amplitudes.reserve(count);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(grid.x_min(), grid.x_max());
  std::uniform_real_distribution<double> uz(grid.z_min(), grid.z_max());
  std::normal_distribution<double> amp(0.0, 1.0);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = ux(rng);
    const double z = uz(rng);
    field.positions.push_back({x, z});
    field.amplitudes.push_back(amp(rng));
  }
  return field;
}

void PulseSpec::validate() const {
  if (!(center_frequency > 0.0)) throw ArgumentError("center frequency must be positive");
  if (half_cycles < 1) throw ArgumentError("pulse needs at least one half cycle");
  if (!(sampling_frequency >= 10.0 * center_frequency)) {
    throw ArgumentError("sampling frequency must be at least 10x the center frequency");
  }
}

double PulseSpec::value(double t) const {
  if (std::abs(t) > half_support()) return 0.0;
  const double s = envelope_sigma();
  return std::exp(-0.5 * t * t / (s * s)) * std::cos(2.0 * std::numbers::pi * center_frequency * t);
}

double travel_time(const Point& from, const Point& to, const MediumSpec& medium) {
  const double len = distance(from, to);
  if (len == 0.0) return 0.0;
  if (medium.homogeneous()) return len / medium.background_sos;

  const double max_step = 0.5 * std::min(medium.grid.dx, medium.grid.dz);
  const auto n = static_cast<long>(std::ceil(len / max_step));
  const double ddx = (to.x - from.x) / n;
  const double ddz = (to.z - from.z) / n;
  double sum = 0.5 / medium.sos_at(from) + 0.5 / medium.sos_at(to);
  for (long k = 1; k < n; ++k) {
    sum += 1.0 / medium.sos_at({from.x + k * ddx, from.z + k * ddz});
  }
  return sum * (len / n);
}

TravelTimeTable::TravelTimeTable(const TransducerArray& array, const ScattererField& field,
                                 const MediumSpec& medium)
    : times_(array.num_elements, static_cast<long>(field.size())),
      distances_(array.num_elements, static_cast<long>(field.size())) {
  array.validate();
  const long ns = static_cast<long>(field.size());
#pragma omp parallel for schedule(dynamic)
  for (int e = 0; e < array.num_elements; ++e) {
    const Point pe = element_position(array, e);
    for (long s = 0; s < ns; ++s) {
      times_(e, s) = travel_time(pe, field.positions[s], medium);
      distances_(e, s) = sosest::distance(pe, field.positions[s]);
    }
  }
}

int TravelTimeTable::required_samples(int tx, const PulseSpec& pulse) const {
  if (tx < 0 || tx >= num_elements()) throw ArgumentError("transmit element out of range");
  double latest = 0.0;
  for (long s = 0; s < times_.cols(); ++s) {
    latest = std::max(latest, times_(tx, s) + times_.col(s).maxCoeff());
  }
  return static_cast<int>(std::ceil((latest + pulse.half_support()) * pulse.sampling_frequency)) +
         1;
}

namespace {

// Oversampled pulse lookup with linear interpolation.
class PulseTable {
 public:
  explicit PulseTable(const PulseSpec& pulse)
      : half_support_(pulse.half_support()),
        step_(1.0 / (pulse.sampling_frequency * kOversample)) {
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * half_support_ / step_)) + 2;
    values_.resize(n);
    for (std::size_t i = 0; i < n; ++i) values_[i] = pulse.value(-half_support_ + i * step_);
  }

  double operator()(double t) const {
    const double u = (t + half_support_) / step_;
    if (u < 0.0) return 0.0;
    const auto i = static_cast<std::size_t>(u);
    if (i + 1 >= values_.size()) return 0.0;
    const double f = u - static_cast<double>(i);
    return values_[i] + f * (values_[i + 1] - values_[i]);
  }

  double half_support() const { return half_support_; }

 private:
  static constexpr int kOversample = 64;
  double half_support_;
  double step_;
  std::vector<double> values_;
};

}  // namespace

ChannelFrame simulate_frame(int tx, const ScattererField& field, const TravelTimeTable& table,
                            const PulseSpec& pulse, int num_samples,
                            const SimulationOptions& options) {
  pulse.validate();
  if (field.size() != table.num_scatterers()) {
    throw ArgumentError("travel-time table does not match the scatterer field");
  }
  if (tx < 0 || tx >= table.num_elements()) throw ArgumentError("transmit element out of range");
  if (!field.positions.empty()) {
    const int needed = table.required_samples(tx, pulse);
    if (num_samples < needed) {
      throw ConfigError("num_samples = " + std::to_string(num_samples) +
                        " too small for the deepest echo; need at least " +
                        std::to_string(needed));
    }
  }
  if (num_samples < 1) throw ConfigError("num_samples must be positive");

  const int num_rx = table.num_elements();
  const double fs = pulse.sampling_frequency;
  const PulseTable shape(pulse);
  const double r_min_sq = options.min_spreading_distance * options.min_spreading_distance;
  const long ns = static_cast<long>(field.size());

  ChannelFrame frame;
  frame.tx_element = tx;
  frame.fs = fs;
  frame.t0 = 0.0;
  frame.samples = ImageF::Zero(num_rx, num_samples);

#pragma omp parallel
  {
    std::vector<double> trace(num_samples);
#pragma omp for schedule(static)
    for (int rx = 0; rx < num_rx; ++rx) {
      std::fill(trace.begin(), trace.end(), 0.0);
      for (long s = 0; s < ns; ++s) {
        const double arrival = table.time(tx, s) + table.time(rx, s);
        const double spread =
            1.0 / std::max(table.distance(tx, s) * table.distance(rx, s), r_min_sq);
        const double gain = field.amplitudes[s] * spread;
        const long k_lo = std::max(0L, static_cast<long>(std::ceil((arrival - shape.half_support()) * fs)));
        const long k_hi = std::min(static_cast<long>(num_samples) - 1,
                                   static_cast<long>(std::floor((arrival + shape.half_support()) * fs)));
        for (long k = k_lo; k <= k_hi; ++k) trace[k] += gain * shape(k / fs - arrival);
      }
      for (int k = 0; k < num_samples; ++k) frame.samples(rx, k) = static_cast<float>(trace[k]);
    }
  }

  if (options.snr_db) {
    const double power = frame.samples.cast<double>().square().mean();
    const double noise_sigma = std::sqrt(power / std::pow(10.0, *options.snr_db / 10.0));
    std::mt19937_64 rng(options.noise_seed * 1000003ULL + static_cast<std::uint64_t>(tx));
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (int rx = 0; rx < num_rx; ++rx)
      for (int k = 0; k < num_samples; ++k)
        frame.samples(rx, k) += static_cast<float>(noise(rng));
  }
  return frame;
}

ChannelFrame simulate_frame(int tx, const ScattererField& field, const MediumSpec& medium,
                            const PulseSpec& pulse, const TransducerArray& array, int num_samples,
                            const SimulationOptions& options) {
  medium.validate();
  const TravelTimeTable table(array, field, medium);
  return simulate_frame(tx, field, table, pulse, num_samples, options);
}

std::string to_string(InclusionShape shape) {
  return shape == InclusionShape::ellipse ? "ellipse" : "rectangle";
}

InclusionShape parse_inclusion_shape(const std::string& text) {
  if (text == "ellipse") return InclusionShape::ellipse;
  if (text == "rectangle" || text == "rect") return InclusionShape::rectangle;
  throw ConfigError("unknown inclusion shape '" + text + "' (expected ellipse or rectangle)");
}

}  // namespace sosest
