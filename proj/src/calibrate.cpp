#include "sosest/calibrate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "sosest/error.hpp"
#include "sosest/textio.hpp"

namespace sosest {

std::uint64_t SweepMetadata::hash() const {
  std::ostringstream os;
  os << fmt_double(c_true) << '|' << tx_a << '|' << tx_b << '|' << fmt_double(roi.depth_min)
     << '|' << fmt_double(roi.depth_max) << '|' << fmt_double(roi.theta_min) << '|'
     << fmt_double(roi.theta_max) << '|' << roi.num_bins << '|' << fmt_double(roi.reference_x)
     << '|' << track.window_len << '|' << track.search_radius << '|' << track.axial_step << '|'
     << track.lateral_step << '|' << fmt_double(track.min_ncc) << '|' << to_string(track.taper) << '|'
     << to_string(method);
  return fnv1a(os.str());
}

void CalibrationDataset::validate() const {
  std::set<double> seen;
  for (const auto& e : entries) {
    if (!std::isfinite(e.slope)) throw ArgumentError("calibration slopes must be finite");
    if (!seen.insert(e.delta_c).second) throw ArgumentError("calibration delta_c values must be distinct");
  }
}

double CalibrationModel::evaluate(double delta_c) const {
  double v = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) v = v * delta_c + *it;
  return v;
}

double CalibrationModel::derivative(double delta_c) const {
  double v = 0.0;
  for (std::size_t k = coefficients.size(); k-- > 1;) v = v * delta_c + k * coefficients[k];
  return v;
}

CalibrationModel build_calibration(const CalibrationDataset& dataset, int degree,
                                   const TrainSelector& selector) {
  dataset.validate();
  if (degree < 1) throw ArgumentError("calibration degree must be at least 1");
  const auto& entries = dataset.entries;

  std::vector<std::size_t> train;
  if (const auto* every = std::get_if<EveryK>(&selector)) {
    if (every->k == 0) throw ArgumentError("training stride must be positive");
    for (std::size_t i = 0; i < entries.size(); i += every->k) train.push_back(i);
  } else {
    train = std::get<std::vector<std::size_t>>(selector);
    for (auto i : train)
      if (i >= entries.size()) throw ArgumentError("training index out of range");
  }
  if (static_cast<int>(train.size()) < degree + 1) {
    throw InsufficientDataError("calibration of degree " + std::to_string(degree) + " needs at least " +
                                std::to_string(degree + 1) + " training points, got " +
                                std::to_string(train.size()));
  }

  // Fit in normalized variables for conditioning, then map back to raw powers.
  double h = 0.0, s = 0.0;
  for (auto i : train) {
    h = std::max(h, std::abs(entries[i].delta_c));
    s = std::max(s, std::abs(entries[i].slope));
  }
  if (h == 0.0) h = 1.0;
  if (s == 0.0) s = 1.0;
  const auto n = static_cast<long>(train.size());
  Eigen::MatrixXd v(n, degree + 1);
  Eigen::VectorXd rhs(n);
  for (long r = 0; r < n; ++r) {
    const double u = entries[train[r]].delta_c / h;
    double p = 1.0;
    for (int k = 0; k <= degree; ++k, p *= u) v(r, k) = p;
    rhs(r) = entries[train[r]].slope / s;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
  if (qr.rank() < degree + 1) throw RankDeficiencyError("calibration design is rank deficient");
  const Eigen::VectorXd c = qr.solve(rhs);

  CalibrationModel model;
  model.degree = degree;
  model.training_indices = train;
  model.c_true = dataset.meta.c_true;
  model.tx_a = dataset.meta.tx_a;
  model.tx_b = dataset.meta.tx_b;
  model.metadata_hash = dataset.meta.hash();
  model.coefficients.resize(degree + 1);
  for (int k = 0; k <= degree; ++k) model.coefficients[k] = c(k) * s / std::pow(h, k);

  model.domain_min = entries.front().delta_c;
  model.domain_max = entries.front().delta_c;
  for (const auto& e : entries) {
    model.domain_min = std::min(model.domain_min, e.delta_c);
    model.domain_max = std::max(model.domain_max, e.delta_c);
  }

  // Strict monotonicity on a 0.1 m/s grid.
  const double step = 0.1;
  const auto steps = static_cast<long>(std::ceil((model.domain_max - model.domain_min) / step));
  int sign = 0;
  double prev_x = model.domain_min;
  double prev = model.evaluate(prev_x);
  for (long i = 1; i <= steps; ++i) {
    const double x = std::min(model.domain_max, model.domain_min + i * step);
    const double val = model.evaluate(x);
    const int d = (val > prev) - (val < prev);
    if (d == 0 || (sign != 0 && d != sign)) {
      throw CalibrationError("calibration polynomial of degree " + std::to_string(degree) +
                                 " is not monotonic on [" + fmt_double(prev_x) + ", " +
                                 fmt_double(x) + "] m/s",
                             prev_x, x);
    }
    sign = d;
    prev = val;
    prev_x = x;
  }
  return model;
}

double estimate_offset(const CalibrationModel& model, double observed_slope,
                       const OffsetOptions& options) {
  if (!std::isfinite(observed_slope)) throw ArgumentError("observed slope must be finite");
  const double s_lo = model.evaluate(model.domain_min);
  const double s_hi = model.evaluate(model.domain_max);
  const bool increasing = s_hi > s_lo;
  const double smin = std::min(s_lo, s_hi);
  const double smax = std::max(s_lo, s_hi);
  const double ext = model.degree == 1 ? options.linear_extension * (smax - smin) : 0.0;

  if (observed_slope < smin - ext || observed_slope > smax + ext) {
    const bool below = observed_slope < smin;
    const double nearest = (below == increasing) ? model.domain_min : model.domain_max;
    throw OutOfRangeError("observed slope " + fmt_double(observed_slope) +
                              " s/rad is outside the calibrated range [" + fmt_double(smin) + ", " +
                              fmt_double(smax) + "]; nearest calibrated offset is " +
                              fmt_double(nearest) + " m/s",
                          nearest);
  }

  if (model.degree == 1) {
    return (observed_slope - model.coefficients[0]) / model.coefficients[1];
  }

  double lo = model.domain_min;
  double hi = model.domain_max;
  double f_lo = model.evaluate(lo) - observed_slope;
  while (hi - lo > options.bisection_tolerance) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = model.evaluate(mid) - observed_slope;
    if (f_mid == 0.0) return mid;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double corrected_sos(double c_bf_assumed, double delta_c_hat) { return c_bf_assumed - delta_c_hat; }

CalibrationReport evaluate_calibration(const CalibrationModel& model,
                                       const CalibrationDataset& dataset) {
  CalibrationReport rep;
  std::set<std::size_t> train(model.training_indices.begin(), model.training_indices.end());
  auto lookup = [&](double slope) {
    try {
      return estimate_offset(model, slope);
    } catch (const OutOfRangeError& e) {
      return e.nearest_delta_c;
    }
  };
  std::vector<double> truth, model_slopes, obs_slopes;
  double sse = 0.0, sse_train = 0.0;
  for (std::size_t i = 0; i < dataset.entries.size(); ++i) {
    const auto& e = dataset.entries[i];
    const double est = lookup(e.slope);
    if (train.count(i)) {
      sse_train += (est - e.delta_c) * (est - e.delta_c);
      continue;
    }
    rep.test_indices.push_back(i);
    rep.test_estimates.push_back(est);
    truth.push_back(e.delta_c);
    obs_slopes.push_back(e.slope);
    model_slopes.push_back(model.evaluate(e.delta_c));
    sse += (est - e.delta_c) * (est - e.delta_c);
  }
  if (!truth.empty()) rep.test_rmse = std::sqrt(sse / static_cast<double>(truth.size()));
  if (!train.empty()) rep.train_rmse = std::sqrt(sse_train / static_cast<double>(train.size()));
  if (truth.size() >= 2) {
    rep.test_r_squared = r_squared(truth, rep.test_estimates);
    rep.slope_r_squared = r_squared(obs_slopes, model_slopes);
  }
  return rep;
}

void save_model(const std::filesystem::path& path, const CalibrationModel& m) {
  auto os = open_output(path);
  os << "# sosest calibration model\n";
  os << "convention " << kDeltaConvention << '\n';
  os << "c_true " << fmt_double(m.c_true) << '\n';
  os << "tx_pair " << m.tx_a << ' ' << m.tx_b << '\n';
  os << "degree " << m.degree << '\n';
  os << "domain " << fmt_double(m.domain_min) << ' ' << fmt_double(m.domain_max) << '\n';
  os << "coefficients";
  for (double c : m.coefficients) os << ' ' << fmt_double(c);
  os << '\n';
  os << "training_indices";
  for (auto i : m.training_indices) os << ' ' << i;
  os << '\n';
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(m.metadata_hash));
  os << "metadata_hash " << hash << '\n';
}

CalibrationModel load_model(const std::filesystem::path& path) {
  auto is = open_input(path);
  CalibrationModel m;
  m.coefficients.clear();
  std::string line;
  bool have_convention = false;
  while (std::getline(is, line)) {
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].starts_with('#')) continue;
    const auto& key = tok[0];
    if (key == "convention") {
      if (tok.size() != 2 || tok[1] != kDeltaConvention) {
        throw ConfigError(path.string() + ": unsupported delta_c convention");
      }
      have_convention = true;
    } else if (key == "c_true" && tok.size() == 2) {
      m.c_true = parse_double(tok[1]);
    } else if (key == "tx_pair" && tok.size() == 3) {
      m.tx_a = static_cast<int>(parse_long(tok[1]));
      m.tx_b = static_cast<int>(parse_long(tok[2]));
    } else if (key == "degree" && tok.size() == 2) {
      m.degree = static_cast<int>(parse_long(tok[1]));
    } else if (key == "domain" && tok.size() == 3) {
      m.domain_min = parse_double(tok[1]);
      m.domain_max = parse_double(tok[2]);
    } else if (key == "coefficients") {
      for (std::size_t i = 1; i < tok.size(); ++i) m.coefficients.push_back(parse_double(tok[i]));
    } else if (key == "training_indices") {
      for (std::size_t i = 1; i < tok.size(); ++i)
        m.training_indices.push_back(static_cast<std::size_t>(parse_long(tok[i])));
    } else if (key == "metadata_hash" && tok.size() == 2) {
      m.metadata_hash = std::stoull(tok[1], nullptr, 16);
    } else {
      throw ConfigError(path.string() + ": unrecognized line '" + line + "'");
    }
  }
  if (!have_convention) throw ConfigError(path.string() + ": missing convention tag");
  if (static_cast<int>(m.coefficients.size()) != m.degree + 1) {
    throw ConfigError(path.string() + ": coefficient count does not match degree");
  }
  return m;
}

void export_calibration_csv(const std::filesystem::path& path, const CalibrationDataset& dataset,
                            const CalibrationModel& model) {
  std::set<std::size_t> train(model.training_indices.begin(), model.training_indices.end());
  auto os = open_output(path);
  os << "# convention " << kDeltaConvention << " c_true " << fmt_double(dataset.meta.c_true) << '\n';
  os << "delta_c,slope,r_squared,model_slope,split\n";
  for (std::size_t i = 0; i < dataset.entries.size(); ++i) {
    const auto& e = dataset.entries[i];
    os << fmt_double(e.delta_c) << ',' << fmt_double(e.slope) << ',' << fmt_double(e.r_squared)
       << ',' << fmt_double(model.evaluate(e.delta_c)) << ',' << (train.count(i) ? "train" : "test")
       << '\n';
  }
}

}  // namespace sosest
