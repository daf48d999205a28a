#include "sosest/metrics.hpp"

#include <cmath>
#include <limits>

#include "sosest/error.hpp"
#include "sosest/textio.hpp"

namespace sosest {

void RegionLabels::validate() const {
  if (inclusion.rows() != background.rows() || inclusion.cols() != background.cols()) {
    throw ArgumentError("region masks differ in shape");
  }
  if ((inclusion && background).any()) throw ArgumentError("region masks overlap");
}

RegionLabels label_regions(const MediumSpec& medium, const ImagingGrid& grid) {
  RegionLabels labels;
  labels.inclusion = Mask::Constant(grid.nz, grid.nx, false);
  for (int iz = 0; iz < grid.nz; ++iz)
    for (int ix = 0; ix < grid.nx; ++ix) {
      const Point p = grid.pixel(ix, iz);
      for (const auto& inc : medium.inclusions)
        if (inc.contains(p)) labels.inclusion(iz, ix) = true;
    }
  labels.background = !labels.inclusion;
  return labels;
}

double rmse_map(const ImageD& a, const ImageD& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ArgumentError("SoS maps differ in shape");
  if (a.size() == 0) throw ArgumentError("empty SoS map");
  return std::sqrt((a - b).square().mean());
}

namespace {

struct Stats {
  double mean = 0.0;
  double var = 0.0;
};

Stats region_stats(const ImageD& map, const Mask& mask) {
  const long n = mask.count();
  if (n < 2) throw ArgumentError("CNR region needs at least 2 pixels");
  double sum = 0.0;
  for (long i = 0; i < map.size(); ++i)
    if (mask.data()[i]) sum += map.data()[i];
  const double mean = sum / n;
  double ss = 0.0;
  for (long i = 0; i < map.size(); ++i)
    if (mask.data()[i]) ss += (map.data()[i] - mean) * (map.data()[i] - mean);
  return {mean, ss / n};
}

}  // namespace

Cnr cnr(const ImageD& map, const RegionLabels& labels) {
  labels.validate();
  if (map.rows() != labels.inclusion.rows() || map.cols() != labels.inclusion.cols()) {
    throw ArgumentError("map and region labels differ in shape");
  }
  const Stats inc = region_stats(map, labels.inclusion);
  const Stats bkg = region_stats(map, labels.background);
  const double contrast = (inc.mean - bkg.mean) * (inc.mean - bkg.mean);
  const double denom = inc.var + bkg.var;
  constexpr double inf = std::numeric_limits<double>::infinity();
  Cnr out;
  if (contrast == 0.0) {
    out.linear = 0.0;
    out.db = -inf;
  } else if (denom == 0.0) {
    out.linear = inf;
    out.db = inf;
  } else {
    out.linear = 2.0 * contrast / denom;
    out.db = 10.0 * std::log10(out.linear);
  }
  return out;
}

double cnr_db(const ImageD& map, const RegionLabels& labels) { return cnr(map, labels).db; }

std::string format_db(double db) {
  if (std::isinf(db)) return db < 0 ? "-inf" : "inf";
  return fmt_double(db);
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<CaseMetrics>& rows,
                       bool with_mean_row) {
  auto os = open_output(path);
  os << "case_id,rmse_before,rmse_after,cnr_before_db,cnr_after_db,cnr_before_linear,"
        "cnr_after_linear,converged_before,converged_after\n";
  auto line = [&](const CaseMetrics& m) {
    os << m.case_id << ',' << fmt_double(m.rmse_before) << ',' << fmt_double(m.rmse_after) << ','
       << format_db(m.cnr_before.db) << ',' << format_db(m.cnr_after.db) << ','
       << fmt_double(m.cnr_before.linear) << ',' << fmt_double(m.cnr_after.linear) << ','
       << (m.converged_before ? 1 : 0) << ',' << (m.converged_after ? 1 : 0) << '\n';
  };
  for (const auto& m : rows) line(m);
  if (with_mean_row && !rows.empty()) {
    CaseMetrics mean;
    mean.case_id = "mean";
    double cb = 0.0, ca = 0.0;
    for (const auto& m : rows) {
      mean.rmse_before += m.rmse_before / rows.size();
      mean.rmse_after += m.rmse_after / rows.size();
      cb += m.cnr_before.linear / rows.size();
      ca += m.cnr_after.linear / rows.size();
      mean.converged_before = mean.converged_before && m.converged_before;
      mean.converged_after = mean.converged_after && m.converged_after;
    }
    // Mean row averages linear CNR, then converts.
    mean.cnr_before = {cb, cb > 0 ? 10.0 * std::log10(cb) : -std::numeric_limits<double>::infinity()};
    mean.cnr_after = {ca, ca > 0 ? 10.0 * std::log10(ca) : -std::numeric_limits<double>::infinity()};
    line(mean);
  }
}

std::vector<CaseMetrics> read_metrics_csv(const std::filesystem::path& path) {
  auto is = open_input(path);
  std::vector<CaseMetrics> rows;
  std::string line;
  auto num = [](const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return parse_double(s);
  };
  while (std::getline(is, line)) {
    if (line.empty() || line.starts_with("case_id") || line.starts_with('#')) continue;
    const auto tok = split(line, ',');
    if (tok.size() != 9) throw ConfigError(path.string() + ": malformed metrics row");
    if (tok[0] == "mean") continue;
    CaseMetrics m;
    m.case_id = tok[0];
    m.rmse_before = num(tok[1]);
    m.rmse_after = num(tok[2]);
    m.cnr_before = {num(tok[5]), num(tok[3])};
    m.cnr_after = {num(tok[6]), num(tok[4])};
    m.converged_before = tok[7] == "1";
    m.converged_after = tok[8] == "1";
    rows.push_back(m);
  }
  return rows;
}

}  // namespace sosest
