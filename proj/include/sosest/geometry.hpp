#pragma once

#include <Eigen/Core>

namespace sosest {

template <typename T>
using Image = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ImageF = Image<float>;
using ImageD = Image<double>;
using Mask = Image<bool>;

/// Position in the imaging plane, meters. z is depth below the transducer face.
struct Point {
  double x = 0.0;
  double z = 0.0;
};

/// Linear array centered on x = 0 at the transducer face z = 0.
struct TransducerArray {
  int num_elements = 128;
  double pitch = 3.0e-4;

  void validate() const;
  double aperture_width() const { return (num_elements - 1) * pitch; }
};

Point element_position(const TransducerArray& array, int i);

/// Regular pixel grid. Pixel (ix, iz) is centered at (x0 + ix*dx, z0 + iz*dz).
struct ImagingGrid {
  double x0 = 0.0;
  double z0 = 0.0;
  double dx = 1.0e-4;
  double dz = 1.0e-4;
  int nx = 1;
  int nz = 1;

  void validate() const;
  Point pixel(int ix, int iz) const { return {x0 + ix * dx, z0 + iz * dz}; }
  long num_pixels() const { return static_cast<long>(nx) * nz; }

  // Cell-edge extent.
  double x_min() const { return x0 - 0.5 * dx; }
  double x_max() const { return x0 + (nx - 0.5) * dx; }
  double z_min() const { return z0 - 0.5 * dz; }
  double z_max() const { return z0 + (nz - 0.5) * dz; }

  bool contains(const Point& p) const {
    return p.x >= x_min() && p.x <= x_max() && p.z >= z_min() && p.z <= z_max();
  }

  /// Grid of pixel centers covering [x_lo, x_hi] x [z_lo, z_hi] inclusive.
  static ImagingGrid spanning(double x_lo, double x_hi, double z_lo, double z_hi, double dx,
                              double dz);
  /// Grid of nx x nz cells whose edges exactly cover the given box.
  static ImagingGrid cells(double x_lo, double x_hi, double z_lo, double z_hi, int nx, int nz);

  bool operator==(const ImagingGrid&) const = default;
};

/// Annular sector used to extract the angular delay pattern.
struct PolarROI {
  double depth_min = 7.5e-3;
  double depth_max = 15.0e-3;
  double theta_min = -0.4;
  double theta_max = 0.4;
  int num_bins = 40;
  double reference_x = 0.0;

  void validate() const;
  double bin_width() const { return (theta_max - theta_min) / num_bins; }
};

struct PolarCoord {
  double r = 0.0;
  double theta = 0.0;
};

/// theta is measured from the depth axis, positive toward +x.
PolarCoord pixel_to_polar(const Point& p, const PolarROI& roi);
Point polar_to_pixel(const PolarCoord& q, const PolarROI& roi);

double distance(const Point& a, const Point& b);

}  // namespace sosest
