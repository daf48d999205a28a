#pragma once

// Shared fixtures for the unit tests.

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sosest/synthsim.hpp"

namespace sosest::test {

/// Band-limited speckle line: random Gaussian-windowed sinusoids evaluated analytically at
/// k - shift, so fractional shifts are exact. Period 8 samples and envelope sigma 4 samples
/// match the default pulse on the default beamforming grid (25 ns two-way time per pixel).
inline std::vector<float> speckle_line(int n, double shift, unsigned seed, int num_scatterers = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-10.0, n + 10.0);
  std::normal_distribution<double> amp(0.0, 1.0);
  if (num_scatterers == 0) num_scatterers = n / 3;
  std::vector<double> centers(num_scatterers), amps(num_scatterers);
  for (int i = 0; i < num_scatterers; ++i) {
    centers[i] = pos(rng);
    amps[i] = amp(rng);
  }
  constexpr double kPi = 3.14159265358979323846;
  constexpr double kFreq = 0.125;  // cycles per sample
  constexpr double kSigma = 4.0;
  std::vector<float> out(n);
  for (int k = 0; k < n; ++k) {
    double v = 0.0;
    for (int i = 0; i < num_scatterers; ++i) {
      const double t = k - shift - centers[i];
      v += amps[i] * std::cos(2.0 * kPi * kFreq * t) * std::exp(-t * t / (2.0 * kSigma * kSigma));
    }
    out[k] = static_cast<float>(v);
  }
  return out;
}

/// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() /
           ("sosest_test_" + name + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

inline MediumSpec homogeneous_medium(double c, const ImagingGrid& grid) {
  MediumSpec m;
  m.background_sos = c;
  m.grid = grid;
  return m;
}

}  // namespace sosest::test
