#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sosest/synthsim.hpp"

namespace sosest {

struct RegionLabels {
  Mask inclusion;
  Mask background;

  void validate() const;
};

/// Inclusion = pixel centers inside any inclusion; background = everything else.
RegionLabels label_regions(const MediumSpec& medium, const ImagingGrid& grid);

double rmse_map(const ImageD& a, const ImageD& b);

struct Cnr {
  double linear = 0.0;
  /// 10 log10(linear). -inf for zero contrast, +inf for zero variance with contrast.
  double db = 0.0;
};

/// CNR = 2 (mu_inc - mu_bkg)^2 / (var_inc + var_bkg), population variances.
Cnr cnr(const ImageD& map, const RegionLabels& labels);
double cnr_db(const ImageD& map, const RegionLabels& labels);

struct CaseMetrics {
  std::string case_id;
  double rmse_before = 0.0;
  double rmse_after = 0.0;
  Cnr cnr_before;
  Cnr cnr_after;
  bool converged_before = true;
  bool converged_after = true;
};

/// Table with one row per case: rmse before/after, CNR (dB and linear) before/after.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<CaseMetrics>& rows,
                       bool with_mean_row = false);
std::vector<CaseMetrics> read_metrics_csv(const std::filesystem::path& path);

/// Formats a dB value, writing the infinite sentinels as "-inf" / "inf".
std::string format_db(double db);

}  // namespace sosest
