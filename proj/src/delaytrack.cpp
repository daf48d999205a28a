#include "sosest/delaytrack.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "sosest/error.hpp"
#include "sosest/textio.hpp"

namespace sosest {

void TrackConfig::validate() const {
  if (window_len < 8) throw ArgumentError("tracking window must be at least 8 samples");
  if (search_radius < 1) throw ArgumentError("search radius must be at least 1 sample");
  if (axial_step < 1 || lateral_step < 1) throw ArgumentError("node steps must be positive");
  if (!(min_ncc >= 0.0 && min_ncc <= 1.0)) throw ArgumentError("min_ncc must lie in [0, 1]");
}

NccPeak ncc_delay_1d(std::span<const float> window, std::span<const float> search, Apodization taper) {
  const auto w = static_cast<long>(window.size());
  const auto n = static_cast<long>(search.size());
  if (w < 2 || n < w + 2) {
    throw ArgumentError("search region must be at least two samples longer than the window");
  }
  const long span = n - w;  // number of placements minus one
  const long radius = span / 2;

  std::vector<double> weight(w, 1.0);
  if (taper == Apodization::hann) {
    for (long i = 0; i < w; ++i) weight[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 0.5) / static_cast<double>(w));
  }
  double sum_w = 0.0;
  double mean_a = 0.0;
  for (long i = 0; i < w; ++i) {
    sum_w += weight[i];
    mean_a += weight[i] * window[i];
  }
  mean_a /= sum_w;
  std::vector<double> wa(w);
  double var_a = 0.0;
  for (long i = 0; i < w; ++i) {
    wa[i] = weight[i] * (window[i] - mean_a);
    var_a += wa[i] * (window[i] - mean_a);
  }

  NccPeak peak;
  if (!(var_a > 0.0)) return peak;

  std::vector<double> ncc(span + 1, 0.0);
  for (long p = 0; p <= span; ++p) {
    double sum_b = 0.0, sum_b2 = 0.0, cross = 0.0;
    for (long i = 0; i < w; ++i) {
      const double v = search[p + i];
      sum_b += weight[i] * v;
      sum_b2 += weight[i] * v * v;
      cross += wa[i] * v;
    }
    const double var_b = sum_b2 - sum_b * sum_b / sum_w;
    if (var_b > 1e-12 * var_a) {
      ncc[p] = std::clamp(cross / std::sqrt(var_a * var_b), -1.0, 1.0);
    }
  }

  long best = 0;
  for (long p = 1; p <= span; ++p)
    if (ncc[p] > ncc[best]) best = p;

  peak.peak_ncc = ncc[best];
  double frac = 0.0;
  const bool interior = best > 0 && best < span;
  if (interior) {
    const double ym = ncc[best - 1];
    const double y0 = ncc[best];
    const double yp = ncc[best + 1];
    const double denom = ym - 2.0 * y0 + yp;
    if (denom < 0.0) frac = std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
  }
  peak.lag = static_cast<double>(best - radius) + frac;
  peak.valid = interior && peak.peak_ncc > 0.0;
  return peak;
}

DelayMap track_delays(const BeamformedFrame& a, const BeamformedFrame& b, const TrackConfig& cfg) {
  cfg.validate();
  if (!(a.grid == b.grid) || a.rf.rows() != b.rf.rows() || a.rf.cols() != b.rf.cols()) {
    throw ArgumentError("frames to track must share the same grid");
  }
  if (a.c_bf_used != b.c_bf_used) {
    throw ArgumentError("frames to track were beamformed with different SoS");
  }
  const ImagingGrid& g = a.grid;
  const int half = cfg.window_len / 2;
  const int first = half + cfg.search_radius;
  const int last = g.nz - (cfg.window_len - half) - cfg.search_radius;
  if (last < first) throw ArgumentError("image too shallow for the tracking window");

  const int nzm = (last - first) / cfg.axial_step + 1;
  const int nxm = (g.nx - 1) / cfg.lateral_step + 1;

  DelayMap map;
  map.tx_a = a.tx_element;
  map.tx_b = b.tx_element;
  map.c_bf = a.c_bf_used;
  map.grid.x0 = g.x0;
  map.grid.dx = g.dx * cfg.lateral_step;
  map.grid.nx = nxm;
  map.grid.z0 = g.z0 + first * g.dz;
  map.grid.dz = g.dz * cfg.axial_step;
  map.grid.nz = nzm;
  map.delays = ImageD::Zero(nzm, nxm);
  map.ncc = ImageD::Zero(nzm, nxm);
  map.valid = Mask::Constant(nzm, nxm, false);

  const double seconds_per_pixel = 2.0 * g.dz / a.c_bf_used;

#pragma omp parallel
  {
    std::vector<float> col_a(g.nz), col_b(g.nz);
#pragma omp for schedule(dynamic)
    for (int jx = 0; jx < nxm; ++jx) {
      const int ix = jx * cfg.lateral_step;
      for (int iz = 0; iz < g.nz; ++iz) {
        col_a[iz] = a.rf(iz, ix);
        col_b[iz] = b.rf(iz, ix);
      }
      for (int jz = 0; jz < nzm; ++jz) {
        const int iz = first + jz * cfg.axial_step;
        const std::span<const float> win(col_a.data() + iz - half, cfg.window_len);
        const std::span<const float> srch(col_b.data() + iz - half - cfg.search_radius,
                                          cfg.window_len + 2 * cfg.search_radius);
        const NccPeak pk = ncc_delay_1d(win, srch, cfg.taper);
        map.ncc(jz, jx) = pk.peak_ncc;
        if (pk.valid && pk.peak_ncc >= cfg.min_ncc) {
          map.valid(jz, jx) = true;
          map.delays(jz, jx) = pk.lag * seconds_per_pixel;
        }
      }
    }
  }
  return map;
}

void export_delay_map_csv(const std::filesystem::path& path, const DelayMap& map) {
  auto os = open_output(path);
  os << "# grid " << grid_to_string(map.grid) << '\n';
  os << "# pair " << map.tx_a << ' ' << map.tx_b << " c_bf " << fmt_double(map.c_bf) << '\n';
  os << "x,z,delay_s,ncc,valid\n";
  for (int jz = 0; jz < map.grid.nz; ++jz)
    for (int jx = 0; jx < map.grid.nx; ++jx) {
      const Point p = map.grid.pixel(jx, jz);
      os << fmt_double(p.x) << ',' << fmt_double(p.z) << ',' << fmt_double(map.delays(jz, jx))
         << ',' << fmt_double(map.ncc(jz, jx)) << ',' << (map.valid(jz, jx) ? 1 : 0) << '\n';
    }
}

DelayMap read_delay_map_csv(const std::filesystem::path& path) {
  auto is = open_input(path);
  DelayMap map;
  std::string line;
  bool have_grid = false;
  long idx = 0;
  while (std::getline(is, line)) {
    if (line.starts_with("# grid")) {
      map.grid = grid_from_tokens(split_ws(line), 2);
      map.delays = ImageD::Zero(map.grid.nz, map.grid.nx);
      map.ncc = ImageD::Zero(map.grid.nz, map.grid.nx);
      map.valid = Mask::Constant(map.grid.nz, map.grid.nx, false);
      have_grid = true;
    } else if (line.starts_with("# pair")) {
      const auto tok = split_ws(line);
      if (tok.size() >= 6) {
        map.tx_a = static_cast<int>(parse_long(tok[2]));
        map.tx_b = static_cast<int>(parse_long(tok[3]));
        map.c_bf = parse_double(tok[5]);
      }
    } else if (line.starts_with('#') || line.starts_with("x,") || trim(line).empty()) {
      continue;
    } else {
      if (!have_grid) throw ConfigError(path.string() + ": delay map CSV lacks a grid header");
      const auto tok = split(line, ',');
      if (tok.size() != 5 || idx >= map.grid.num_pixels()) {
        throw ConfigError(path.string() + ": malformed delay map row");
      }
      const long jz = idx / map.grid.nx;
      const long jx = idx % map.grid.nx;
      map.delays(jz, jx) = parse_double(tok[2]);
      map.ncc(jz, jx) = parse_double(tok[3]);
      map.valid(jz, jx) = parse_long(tok[4]) != 0;
      ++idx;
    }
  }
  if (!have_grid || idx != map.grid.num_pixels()) {
    throw ConfigError(path.string() + ": incomplete delay map");
  }
  return map;
}

}  // namespace sosest
