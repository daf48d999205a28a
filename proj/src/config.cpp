#include "sosest/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <functional>
#include <sstream>

#include "sosest/error.hpp"
#include "sosest/textio.hpp"

namespace sosest {

namespace {

struct Field {
  const char* section;
  const char* key;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
Field num(const char* s, const char* k, T PipelineConfig::*member) {
  return {s, k,
          [member](PipelineConfig& c, const std::string& v) {
            if constexpr (std::is_floating_point_v<T>) {
              c.*member = parse_double(v);
            } else {
              c.*member = static_cast<T>(parse_long(v));
            }
          },
          [member](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return fmt_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

template <typename Get, typename Set>
Field custom(const char* s, const char* k, Get get, Set set) {
  return {s, k, set, get};
}

std::string opt_to_string(const std::optional<double>& v, const char* none) {
  return v ? fmt_double(*v) : std::string(none);
}

std::optional<double> opt_from_string(const std::string& v, const char* none) {
  if (trim(v) == none) return std::nullopt;
  return parse_double(v);
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(custom(
        "array", "num_elements", [](const PipelineConfig& c) { return std::to_string(c.array.num_elements); },
        [](PipelineConfig& c, const std::string& v) { c.array.num_elements = static_cast<int>(parse_long(v)); }));
    f.push_back(custom(
        "array", "pitch", [](const PipelineConfig& c) { return fmt_double(c.array.pitch); },
        [](PipelineConfig& c, const std::string& v) { c.array.pitch = parse_double(v); }));
    f.push_back(custom(
        "pulse", "center_frequency", [](const PipelineConfig& c) { return fmt_double(c.pulse.center_frequency); },
        [](PipelineConfig& c, const std::string& v) { c.pulse.center_frequency = parse_double(v); }));
    f.push_back(custom(
        "pulse", "half_cycles", [](const PipelineConfig& c) { return std::to_string(c.pulse.half_cycles); },
        [](PipelineConfig& c, const std::string& v) { c.pulse.half_cycles = static_cast<int>(parse_long(v)); }));
    f.push_back(custom(
        "pulse", "sampling_frequency", [](const PipelineConfig& c) { return fmt_double(c.pulse.sampling_frequency); },
        [](PipelineConfig& c, const std::string& v) { c.pulse.sampling_frequency = parse_double(v); }));

    f.push_back(num("medium", "background_sos", &PipelineConfig::background_sos));
    f.push_back(custom(
        "medium", "inclusions", [](const PipelineConfig& c) { return format_inclusions(c.inclusions); },
        [](PipelineConfig& c, const std::string& v) { c.inclusions = parse_inclusions(v); }));
    f.push_back(num("medium", "raster_dx", &PipelineConfig::raster_dx));
    f.push_back(num("medium", "raster_dz", &PipelineConfig::raster_dz));

    f.push_back(num("simulation", "scatterer_density", &PipelineConfig::scatterer_density));
    f.push_back(custom(
        "simulation", "seed", [](const PipelineConfig& c) { return std::to_string(c.seed); },
        [](PipelineConfig& c, const std::string& v) { c.seed = std::stoull(trim(v)); }));
    f.push_back(custom(
        "simulation", "snr_db", [](const PipelineConfig& c) { return opt_to_string(c.snr_db, "none"); },
        [](PipelineConfig& c, const std::string& v) { c.snr_db = opt_from_string(v, "none"); }));
    f.push_back(num("simulation", "num_samples", &PipelineConfig::num_samples));

    f.push_back(custom(
        "imaging", "x_min", [](const PipelineConfig& c) { return opt_to_string(c.x_min, "auto"); },
        [](PipelineConfig& c, const std::string& v) { c.x_min = opt_from_string(v, "auto"); }));
    f.push_back(custom(
        "imaging", "x_max", [](const PipelineConfig& c) { return opt_to_string(c.x_max, "auto"); },
        [](PipelineConfig& c, const std::string& v) { c.x_max = opt_from_string(v, "auto"); }));
    f.push_back(num("imaging", "z_min", &PipelineConfig::z_min));
    f.push_back(num("imaging", "z_max", &PipelineConfig::z_max));
    f.push_back(num("imaging", "dx", &PipelineConfig::dx));
    f.push_back(num("imaging", "dz", &PipelineConfig::dz));
    f.push_back(custom(
        "imaging", "apodization", [](const PipelineConfig& c) { return to_string(c.apodization); },
        [](PipelineConfig& c, const std::string& v) { c.apodization = parse_apodization(trim(v)); }));
    f.push_back(num("imaging", "f_number", &PipelineConfig::f_number));

    f.push_back(custom(
        "track", "window_len", [](const PipelineConfig& c) { return std::to_string(c.track.window_len); },
        [](PipelineConfig& c, const std::string& v) { c.track.window_len = static_cast<int>(parse_long(v)); }));
    f.push_back(custom(
        "track", "search_radius", [](const PipelineConfig& c) { return std::to_string(c.track.search_radius); },
        [](PipelineConfig& c, const std::string& v) { c.track.search_radius = static_cast<int>(parse_long(v)); }));
    f.push_back(custom(
        "track", "axial_step", [](const PipelineConfig& c) { return std::to_string(c.track.axial_step); },
        [](PipelineConfig& c, const std::string& v) { c.track.axial_step = static_cast<int>(parse_long(v)); }));
    f.push_back(custom(
        "track", "lateral_step", [](const PipelineConfig& c) { return std::to_string(c.track.lateral_step); },
        [](PipelineConfig& c, const std::string& v) { c.track.lateral_step = static_cast<int>(parse_long(v)); }));
    f.push_back(custom(
        "track", "min_ncc", [](const PipelineConfig& c) { return fmt_double(c.track.min_ncc); },
        [](PipelineConfig& c, const std::string& v) { c.track.min_ncc = parse_double(v); }));
    f.push_back(custom(
        "track", "taper", [](const PipelineConfig& c) { return to_string(c.track.taper); },
        [](PipelineConfig& c, const std::string& v) { c.track.taper = parse_apodization(trim(v)); }));

    f.push_back(custom(
        "roi", "depth_min", [](const PipelineConfig& c) { return fmt_double(c.roi.depth_min); },
        [](PipelineConfig& c, const std::string& v) { c.roi.depth_min = parse_double(v); }));
    f.push_back(custom(
        "roi", "depth_max", [](const PipelineConfig& c) { return fmt_double(c.roi.depth_max); },
        [](PipelineConfig& c, const std::string& v) { c.roi.depth_max = parse_double(v); }));
    f.push_back(custom(
        "roi", "theta_min", [](const PipelineConfig& c) { return fmt_double(c.roi.theta_min); },
        [](PipelineConfig& c, const std::string& v) { c.roi.theta_min = parse_double(v); }));
    f.push_back(custom(
        "roi", "theta_max", [](const PipelineConfig& c) { return fmt_double(c.roi.theta_max); },
        [](PipelineConfig& c, const std::string& v) { c.roi.theta_max = parse_double(v); }));
    f.push_back(custom(
        "roi", "num_bins", [](const PipelineConfig& c) { return std::to_string(c.roi.num_bins); },
        [](PipelineConfig& c, const std::string& v) { c.roi.num_bins = static_cast<int>(parse_long(v)); }));
    f.push_back(custom(
        "roi", "reference_x", [](const PipelineConfig& c) { return opt_to_string(c.roi_reference_x, "auto"); },
        [](PipelineConfig& c, const std::string& v) { c.roi_reference_x = opt_from_string(v, "auto"); }));

    f.push_back(num("estimation", "tx_a", &PipelineConfig::tx_a));
    f.push_back(num("estimation", "tx_b", &PipelineConfig::tx_b));
    f.push_back(custom(
        "estimation", "method", [](const PipelineConfig& c) { return to_string(c.method); },
        [](PipelineConfig& c, const std::string& v) { c.method = parse_regression_method(trim(v)); }));
    f.push_back(num("estimation", "dx", &PipelineConfig::estimation_dx));
    f.push_back(num("estimation", "assumed_c_bf", &PipelineConfig::assumed_c_bf));

    f.push_back(num("calibration", "c_true", &PipelineConfig::c_true));
    f.push_back(num("calibration", "delta_min", &PipelineConfig::delta_min));
    f.push_back(num("calibration", "delta_max", &PipelineConfig::delta_max));
    f.push_back(num("calibration", "delta_step", &PipelineConfig::delta_step));
    f.push_back(num("calibration", "degree", &PipelineConfig::degree));
    f.push_back(num("calibration", "train_every", &PipelineConfig::train_every));
    f.push_back(custom(
        "calibration", "model", [](const PipelineConfig& c) { return c.model_path.empty() ? std::string("none") : c.model_path; },
        [](PipelineConfig& c, const std::string& v) { c.model_path = trim(v) == "none" ? "" : trim(v); }));

    f.push_back(custom(
        "recon", "pairs", [](const PipelineConfig& c) { return format_pairs(c.recon_pairs); },
        [](PipelineConfig& c, const std::string& v) { c.recon_pairs = parse_pairs(v); }));
    f.push_back(custom(
        "recon", "lambda", [](const PipelineConfig& c) { return fmt_double(c.recon.lambda); },
        [](PipelineConfig& c, const std::string& v) { c.recon.lambda = parse_double(v); }));
    f.push_back(custom(
        "recon", "tv_axial_weight", [](const PipelineConfig& c) { return fmt_double(c.recon.tv_axial_weight); },
        [](PipelineConfig& c, const std::string& v) { c.recon.tv_axial_weight = parse_double(v); }));
    f.push_back(custom(
        "recon", "tv_lateral_weight", [](const PipelineConfig& c) { return fmt_double(c.recon.tv_lateral_weight); },
        [](PipelineConfig& c, const std::string& v) { c.recon.tv_lateral_weight = parse_double(v); }));
    f.push_back(custom(
        "recon", "l1_epsilon", [](const PipelineConfig& c) { return fmt_double(c.recon.l1_epsilon); },
        [](PipelineConfig& c, const std::string& v) { c.recon.l1_epsilon = parse_double(v); }));
    f.push_back(custom(
        "recon", "lbfgs_memory", [](const PipelineConfig& c) { return std::to_string(c.recon.lbfgs.memory); },
        [](PipelineConfig& c, const std::string& v) { c.recon.lbfgs.memory = static_cast<int>(parse_long(v)); }));
    f.push_back(custom(
        "recon", "lbfgs_max_iter", [](const PipelineConfig& c) { return std::to_string(c.recon.lbfgs.max_iterations); },
        [](PipelineConfig& c, const std::string& v) { c.recon.lbfgs.max_iterations = static_cast<int>(parse_long(v)); }));
    f.push_back(custom(
        "recon", "lbfgs_grad_tol", [](const PipelineConfig& c) { return fmt_double(c.recon.lbfgs.grad_tol); },
        [](PipelineConfig& c, const std::string& v) { c.recon.lbfgs.grad_tol = parse_double(v); }));
    f.push_back(num("recon", "slow_nx", &PipelineConfig::slow_nx));
    f.push_back(num("recon", "slow_nz", &PipelineConfig::slow_nz));
    f.push_back(num("recon", "node_axial_step", &PipelineConfig::node_axial_step));
    f.push_back(num("recon", "node_lateral_step", &PipelineConfig::node_lateral_step));

    f.push_back(num("study", "num_phantoms", &PipelineConfig::num_phantoms));
    f.push_back(num("study", "offset_fraction", &PipelineConfig::offset_fraction));

    f.push_back(custom(
        "output", "directory", [](const PipelineConfig& c) { return c.output_dir; },
        [](PipelineConfig& c, const std::string& v) { c.output_dir = trim(v); }));
    f.push_back(num("output", "threads", &PipelineConfig::threads));
    return f;
  }();
  return table;
}

}  // namespace

void PipelineConfig::validate() const {
  try {
    array.validate();
    pulse.validate();
    track.validate();
    roi.validate();
    recon.validate();
    for (int tx : {tx_a, tx_b}) element_position(array, tx);
    for (const auto& [a, b] : recon_pairs) {
      element_position(array, a);
      element_position(array, b);
    }
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  auto in_band = [](double c) { return c >= kMinSos && c <= kMaxSos; };
  if (!in_band(background_sos) || !in_band(c_true) || !in_band(assumed_c_bf)) {
    throw ConfigError("speeds of sound must lie in [1300, 1700] m/s");
  }
  for (const auto& inc : inclusions)
    if (!in_band(inc.sos)) throw ConfigError("inclusion SoS outside [1300, 1700] m/s");
  if (!(scatterer_density > 0.0)) throw ConfigError("scatterer_density must be positive");
  if (!(z_max > z_min) || z_min < 0.0) throw ConfigError("imaging depth range is invalid");
  if (!(dx > 0.0) || !(dz > 0.0) || !(estimation_dx > 0.0)) throw ConfigError("grid spacing must be positive");
  if (!(raster_dx > 0.0) || !(raster_dz > 0.0)) throw ConfigError("raster spacing must be positive");
  if (!(delta_step > 0.0) || !(delta_max > delta_min)) throw ConfigError("calibration sweep is invalid");
  if (degree < 1) throw ConfigError("calibration degree must be at least 1");
  if (train_every < 1) throw ConfigError("train_every must be positive");
  if (slow_nx < 2 || slow_nz < 2) throw ConfigError("slowness grid needs at least 2x2 cells");
  if (node_axial_step < 1 || node_lateral_step < 1) throw ConfigError("node steps must be positive");
  if (recon_pairs.empty()) throw ConfigError("at least one reconstruction pair is required");
  if (num_phantoms < 1) throw ConfigError("num_phantoms must be positive");
  if (!(offset_fraction > 0.0 && offset_fraction < 0.1)) throw ConfigError("offset_fraction must be in (0, 0.1)");
  if (num_samples < 0) throw ConfigError("num_samples must be non-negative");
}

PipelineConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  PipelineConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' must appear inside a [section]");
    }
    for (const auto& [key, value] : body) {
      const auto& table = fields();
      auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) {
        return section == f.section && key == f.key;
      });
      if (it == table.end()) throw ConfigError("unknown config key [" + section + "] " + key);
      try {
        it->set(cfg, value.data());
      } catch (const ConfigError& e) {
        throw ConfigError("[" + section + "] " + key + ": " + e.what());
      } catch (const std::exception& e) {
        throw ConfigError("[" + section + "] " + key + ": invalid value '" + value.data() + "'");
      }
    }
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  auto is = open_input(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const PipelineConfig& cfg) {
  std::ostringstream os;
  os << "# sosest resolved configuration\n";
  std::string current;
  for (const auto& f : fields()) {
    if (current != f.section) {
      if (!current.empty()) os << '\n';
      current = f.section;
      os << '[' << current << "]\n";
    }
    os << f.key << " = " << f.get(cfg) << '\n';
  }
  return os.str();
}

void save_config(const std::filesystem::path& path, const PipelineConfig& cfg) {
  auto os = open_output(path);
  os << format_config(cfg);
}

void apply_quick_mode(PipelineConfig& cfg) {
  cfg.delta_step = 10.0;
  cfg.degree = 1;
  cfg.train_every = 2;
  cfg.z_max = std::min(cfg.z_max, 30.0e-3);
  cfg.slow_nx = std::min(cfg.slow_nx, 24);
  cfg.slow_nz = std::min(cfg.slow_nz, 24);
  cfg.recon.lbfgs.max_iterations = std::min(cfg.recon.lbfgs.max_iterations, 200);
  cfg.num_phantoms = std::min(cfg.num_phantoms, 2);
}

std::string format_pairs(const std::vector<TxPair>& pairs) {
  std::string out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(pairs[i].first) + ':' + std::to_string(pairs[i].second);
  }
  return out;
}

std::vector<TxPair> parse_pairs(const std::string& text) {
  std::vector<TxPair> pairs;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) continue;
    const auto ab = split(item, ':');
    if (ab.size() != 2) throw ConfigError("pair '" + item + "' must look like a:b");
    pairs.emplace_back(static_cast<int>(parse_long(ab[0])), static_cast<int>(parse_long(ab[1])));
  }
  return pairs;
}

std::string format_inclusions(const std::vector<Inclusion>& incs) {
  if (incs.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < incs.size(); ++i) {
    const auto& c = incs[i];
    if (i) out += "; ";
    out += to_string(c.shape) + ' ' + fmt_double(c.center.x) + ' ' + fmt_double(c.center.z) + ' ' +
           fmt_double(c.half_x) + ' ' + fmt_double(c.half_z) + ' ' + fmt_double(c.sos);
  }
  return out;
}

std::vector<Inclusion> parse_inclusions(const std::string& text) {
  std::vector<Inclusion> out;
  if (trim(text) == "none" || trim(text).empty()) return out;
  for (const auto& item : split(text, ';')) {
    if (item.empty()) continue;
    const auto tok = split_ws(item);
    if (tok.size() != 6) {
      throw ConfigError("inclusion '" + item + "' must be: shape cx cz half_x half_z sos");
    }
    Inclusion inc;
    inc.shape = parse_inclusion_shape(tok[0]);
    inc.center = {parse_double(tok[1]), parse_double(tok[2])};
    inc.half_x = parse_double(tok[3]);
    inc.half_z = parse_double(tok[4]);
    inc.sos = parse_double(tok[5]);
    out.push_back(inc);
  }
  return out;
}

}  // namespace sosest
