#include "sosest/regress.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "sosest/error.hpp"
#include "sosest/textio.hpp"

namespace sosest {

namespace {

double median_of(std::vector<double> v) {
  const auto n = v.size();
  const auto mid = v.begin() + static_cast<long>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

struct Line {
  double intercept = 0.0;
  double slope = 0.0;
};

// Weighted least squares by centered closed form. Throws on a degenerate design.
Line weighted_line(std::span<const double> x, std::span<const double> y,
                   std::span<const double> w) {
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  if (!(sw > 0.0)) throw RankDeficiencyError("all regression weights are zero");
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0.0, sxy = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    sxx += w[i] * dx * dx;
    sxy += w[i] * dx * (y[i] - my);
    scale += w[i] * x[i] * x[i];
  }
  if (!(sxx > 1e-14 * std::max(scale, 1e-300))) {
    throw RankDeficiencyError("regression design is rank deficient (no spread in theta)");
  }
  const double slope = sxy / sxx;
  return {my - slope * mx, slope};
}

RegressionResult finish(const DelayPattern& p, Line line, RegressionMethod method) {
  RegressionResult res;
  res.slope = line.slope;
  res.intercept = line.intercept;
  res.method = method;
  std::vector<double> fitted(p.size());
  double sse = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    fitted[i] = res.predict(p.thetas[i]);
    sse += (p.median_delays[i] - fitted[i]) * (p.median_delays[i] - fitted[i]);
  }
  res.r_squared = r_squared(p.median_delays, fitted);
  res.rmse = std::sqrt(sse / static_cast<double>(p.size()));
  return res;
}

}  // namespace

DelayPattern DelayPattern::from_points(std::vector<double> thetas, std::vector<double> delays,
                                       std::vector<double> weights) {
  if (thetas.size() != delays.size()) throw ArgumentError("theta/delay length mismatch");
  if (weights.empty()) weights.assign(thetas.size(), 1.0);
  if (weights.size() != thetas.size()) throw ArgumentError("weight length mismatch");
  DelayPattern p;
  p.bin_counts.assign(thetas.size(), 1);
  p.thetas = std::move(thetas);
  p.median_delays = std::move(delays);
  p.weights = std::move(weights);
  return p;
}

DelayPattern extract_pattern(const DelayMap& map, const PolarROI& roi) {
  roi.validate();
  const int nb = roi.num_bins;
  const double width = roi.bin_width();
  std::vector<std::vector<double>> delays(nb);
  std::vector<double> ncc_sum(nb, 0.0);

  for (int jz = 0; jz < map.grid.nz; ++jz) {
    for (int jx = 0; jx < map.grid.nx; ++jx) {
      if (!map.valid(jz, jx)) continue;
      const Point p = map.grid.pixel(jx, jz);
      if (!(p.z > 0.0)) continue;
      const PolarCoord q = pixel_to_polar(p, roi);
      if (q.r < roi.depth_min || q.r > roi.depth_max) continue;
      if (q.theta < roi.theta_min || q.theta > roi.theta_max) continue;
      const int b = std::min(nb - 1, static_cast<int>(std::floor((q.theta - roi.theta_min) / width)));
      delays[b].push_back(map.delays(jz, jx));
      ncc_sum[b] += map.ncc(jz, jx);
    }
  }

  DelayPattern pat;
  pat.roi = roi;
  for (int b = 0; b < nb; ++b) {
    if (delays[b].empty()) continue;
    const auto n = static_cast<int>(delays[b].size());
    pat.thetas.push_back(roi.theta_min + (b + 0.5) * width);
    pat.weights.push_back(ncc_sum[b] / n);
    pat.bin_counts.push_back(n);
    pat.median_delays.push_back(median_of(std::move(delays[b])));
  }
  if (pat.thetas.empty()) {
    throw EmptyPatternError("no valid delay nodes inside the polar ROI; widen the ROI or lower min_ncc");
  }
  return pat;
}

RegressionResult fit_ols(const DelayPattern& pattern) {
  if (pattern.size() < 2) throw InsufficientDataError("least squares needs at least 2 points");
  const std::vector<double> ones(pattern.size(), 1.0);
  return finish(pattern, weighted_line(pattern.thetas, pattern.median_delays, ones),
                RegressionMethod::ols);
}

RegressionResult fit_weighted(const DelayPattern& pattern) {
  const auto n = static_cast<long>(pattern.size());
  long positive = 0;
  for (double w : pattern.weights) {
    if (w < 0.0 || !std::isfinite(w)) throw ArgumentError("regression weights must be finite and >= 0");
    if (w > 0.0) ++positive;
  }
  if (positive < 2) throw InsufficientDataError("weighted fit needs at least 2 points with weight > 0");

  // Solved as an ordinary least-squares problem on sqrt(W)-scaled rows:
  // b = (X^T W X)^-1 X^T W y.
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd rhs(n);
  for (long i = 0; i < n; ++i) {
    const double s = std::sqrt(pattern.weights[i]);
    a(i, 0) = s;
    a(i, 1) = s * pattern.thetas[i];
    rhs(i) = s * pattern.median_delays[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < 2) throw RankDeficiencyError("weighted normal equations are singular");
  const Eigen::VectorXd b = qr.solve(rhs);
  return finish(pattern, {b(0), b(1)}, RegressionMethod::weighted);
}

RegressionResult fit_robust(const DelayPattern& pattern, const RobustOptions& options) {
  const auto n = pattern.size();
  if (n < 3) throw InsufficientDataError("robust fit needs at least 3 points");

  // Work on delays normalized to unit spread so the tolerance is scale-free.
  double mean = 0.0;
  for (double v : pattern.median_delays) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : pattern.median_delays) var += (v - mean) * (v - mean);
  const double scale_y = var > 0.0 ? std::sqrt(var / static_cast<double>(n)) : 1.0;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = pattern.median_delays[i] / scale_y;

  std::vector<double> w(n, 1.0);
  Line line = weighted_line(pattern.thetas, y, w);
  int iterations = 0;
  bool converged = false;
  std::vector<double> resid(n), abs_dev(n);

  while (iterations < options.max_iterations) {
    for (std::size_t i = 0; i < n; ++i) {
      resid[i] = y[i] - (line.intercept + line.slope * pattern.thetas[i]);
    }
    const double med = median_of(resid);
    for (std::size_t i = 0; i < n; ++i) abs_dev[i] = std::abs(resid[i] - med);
    const double sigma = 1.4826 * median_of(abs_dev);
    if (!(sigma > 1e-14)) {  // exact fit of the majority; weights are all 1 already
      converged = true;
      break;
    }
    const double c = options.tuning * sigma;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = resid[i] / c;
      w[i] = std::abs(u) < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
    }
    ++iterations;
    Line next;
    try {
      next = weighted_line(pattern.thetas, y, w);
    } catch (const RankDeficiencyError&) {
      break;  // bisquare rejected too many points; keep the last iterate
    }
    const double change =
        std::max(std::abs(next.intercept - line.intercept), std::abs(next.slope - line.slope));
    line = next;
    if (change < options.tolerance) {
      converged = true;
      break;
    }
  }

  auto res = finish(pattern, {line.intercept * scale_y, line.slope * scale_y},
                    RegressionMethod::robust);
  res.iterations = iterations;
  res.converged = converged;
  return res;
}

RegressionResult fit_pattern(const DelayPattern& pattern, RegressionMethod method) {
  switch (method) {
    case RegressionMethod::ols: return fit_ols(pattern);
    case RegressionMethod::weighted: return fit_weighted(pattern);
    case RegressionMethod::robust: return fit_robust(pattern);
  }
  throw ArgumentError("unknown regression method");
}

double r_squared(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw ArgumentError("r_squared: length mismatch");
  if (y.size() < 2) throw InsufficientDataError("r_squared needs at least 2 observations");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (ss_tot == 0.0) return 0.0;
  return 1.0 - ss_res / ss_tot;
}

RegressionMethod parse_regression_method(const std::string& text) {
  if (text == "ols") return RegressionMethod::ols;
  if (text == "robust") return RegressionMethod::robust;
  if (text == "weighted") return RegressionMethod::weighted;
  throw ConfigError("unknown regression method '" + text + "' (expected ols, robust, weighted)");
}

std::string to_string(RegressionMethod m) {
  switch (m) {
    case RegressionMethod::ols: return "ols";
    case RegressionMethod::robust: return "robust";
    case RegressionMethod::weighted: return "weighted";
  }
  return "?";
}

void export_pattern_csv(const std::filesystem::path& path, const DelayPattern& pattern,
                        const RegressionResult& fit) {
  auto os = open_output(path);
  os << "# method " << to_string(fit.method) << " slope_s_per_rad " << fmt_double(fit.slope)
     << " intercept_s " << fmt_double(fit.intercept) << " r2 " << fmt_double(fit.r_squared) << '\n';
  os << "theta,median_delay_s,weight,count,fitted_s\n";
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    os << fmt_double(pattern.thetas[i]) << ',' << fmt_double(pattern.median_delays[i]) << ','
       << fmt_double(pattern.weights[i]) << ',' << pattern.bin_counts[i] << ','
       << fmt_double(fit.predict(pattern.thetas[i])) << '\n';
  }
}

}  // namespace sosest
