#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sosest/delaytrack.hpp"

namespace sosest {

/// Median delay per angular bin over the ROI depth range. Empty bins are dropped,
/// so thetas are strictly increasing bin centers.
struct DelayPattern {
  std::vector<double> thetas;
  std::vector<double> median_delays;
  std::vector<double> weights;  // mean NCC per bin
  std::vector<int> bin_counts;
  PolarROI roi;

  std::size_t size() const { return thetas.size(); }

  /// Pattern from explicit points (unit weights when none given).
  static DelayPattern from_points(std::vector<double> thetas, std::vector<double> delays,
                                  std::vector<double> weights = {});
};

enum class RegressionMethod { ols, robust, weighted };

struct RegressionResult {
  double slope = 0.0;      // s/rad
  double intercept = 0.0;  // s
  double r_squared = 0.0;
  double rmse = 0.0;  // s
  RegressionMethod method = RegressionMethod::ols;
  int iterations = 0;  // IRLS only
  bool converged = true;

  double predict(double theta) const { return intercept + slope * theta; }
};

DelayPattern extract_pattern(const DelayMap& map, const PolarROI& roi);

RegressionResult fit_ols(const DelayPattern& pattern);
RegressionResult fit_weighted(const DelayPattern& pattern);

struct RobustOptions {
  double tuning = 4.685;
  int max_iterations = 50;
  /// Convergence threshold on coefficient change, measured after normalizing
  /// delays by their standard deviation.
  double tolerance = 1e-10;
};

/// IRLS with Tukey bisquare weights and MAD scale, started from OLS.
RegressionResult fit_robust(const DelayPattern& pattern, const RobustOptions& options = {});

RegressionResult fit_pattern(const DelayPattern& pattern, RegressionMethod method);

/// Coefficient of determination; 0 when the observations have zero variance.
double r_squared(std::span<const double> y, std::span<const double> y_hat);

RegressionMethod parse_regression_method(const std::string& text);
std::string to_string(RegressionMethod m);

/// CSV with columns theta,median_delay_s,weight,count,fitted_s.
void export_pattern_csv(const std::filesystem::path& path, const DelayPattern& pattern,
                        const RegressionResult& fit);

}  // namespace sosest
