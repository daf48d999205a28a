#include "sosest/geometry.hpp"

#include <cmath>
#include <string>

#include "sosest/error.hpp"

namespace sosest {

void TransducerArray::validate() const {
  if (num_elements < 2) throw ArgumentError("transducer array needs at least 2 elements");
  if (!(pitch > 0.0)) throw ArgumentError("transducer pitch must be positive");
}

Point element_position(const TransducerArray& array, int i) {
  if (i < 0 || i >= array.num_elements) {
    throw ArgumentError("element index " + std::to_string(i) + " out of range [0, " +
                        std::to_string(array.num_elements) + ")");
  }
  return {(i - 0.5 * (array.num_elements - 1)) * array.pitch, 0.0};
}

void ImagingGrid::validate() const {
  if (!(dx > 0.0) || !(dz > 0.0)) throw ArgumentError("grid spacing must be positive");
  if (nx < 1 || nz < 1) throw ArgumentError("grid must have at least one pixel per axis");
  if (z0 < 0.0) throw ArgumentError("grid must start at or below the transducer face");
}

ImagingGrid ImagingGrid::spanning(double x_lo, double x_hi, double z_lo, double z_hi, double dx,
                                  double dz) {
  ImagingGrid g;
  g.x0 = x_lo;
  g.z0 = z_lo;
  g.dx = dx;
  g.dz = dz;
  // Small slack so that spans which are exact multiples of the spacing keep their last pixel.
  g.nx = static_cast<int>(std::floor((x_hi - x_lo) / dx + 1e-9)) + 1;
  g.nz = static_cast<int>(std::floor((z_hi - z_lo) / dz + 1e-9)) + 1;
  g.validate();
  return g;
}

ImagingGrid ImagingGrid::cells(double x_lo, double x_hi, double z_lo, double z_hi, int nx, int nz) {
  if (nx < 1 || nz < 1 || !(x_hi > x_lo) || !(z_hi > z_lo)) {
    throw ArgumentError("invalid cell grid extent");
  }
  ImagingGrid g;
  g.nx = nx;
  g.nz = nz;
  g.dx = (x_hi - x_lo) / nx;
  g.dz = (z_hi - z_lo) / nz;
  g.x0 = x_lo + 0.5 * g.dx;
  g.z0 = z_lo + 0.5 * g.dz;
  g.validate();
  return g;
}

void PolarROI::validate() const {
  if (!(depth_min < depth_max)) throw ArgumentError("ROI depth_min must be below depth_max");
  if (!(theta_min < theta_max)) throw ArgumentError("ROI theta_min must be below theta_max");
  if (num_bins < 2) throw ArgumentError("ROI needs at least 2 angular bins");
}

PolarCoord pixel_to_polar(const Point& p, const PolarROI& roi) {
  if (!(p.z > 0.0)) throw ArgumentError("polar conversion requires a point below the face (z > 0)");
  const double dx = p.x - roi.reference_x;
  return {std::hypot(dx, p.z), std::atan2(dx, p.z)};
}

Point polar_to_pixel(const PolarCoord& q, const PolarROI& roi) {
  return {roi.reference_x + q.r * std::sin(q.theta), q.r * std::cos(q.theta)};
}

double distance(const Point& a, const Point& b) { return std::hypot(b.x - a.x, b.z - a.z); }

}  // namespace sosest
