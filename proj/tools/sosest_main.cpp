// sosest command-line tool: simulate, calibrate, estimate, reconstruct, study, report.
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical error, 4 missing input.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sosest/calibrate.hpp"
#include "sosest/channel_io.hpp"
#include "sosest/config.hpp"
#include "sosest/error.hpp"
#include "sosest/metrics.hpp"
#include "sosest/pipeline.hpp"
#include "sosest/textio.hpp"

namespace fs = std::filesystem;
using namespace sosest;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitMissing = 4;

constexpr const char* kResolvedConfig = "config.resolved.ini";

struct Globals {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool quick = false;
};

PipelineConfig resolve_config(const Globals& g) {
  PipelineConfig cfg = g.config.empty() ? PipelineConfig{} : load_config(g.config);
  if (g.quick) apply_quick_mode(cfg);
  if (g.seed) cfg.seed = *g.seed;
  if (g.threads > 0) cfg.threads = g.threads;
  if (!g.out.empty()) cfg.output_dir = g.out;
  cfg.validate();
#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif
  return cfg;
}

fs::path stage_dir(const PipelineConfig& cfg, const std::string& stage) {
  const fs::path dir = fs::path(cfg.output_dir) / stage;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  save_config(dir / kResolvedConfig, cfg);
  return dir;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const PipelineConfig& cfg) {
  const fs::path dir = stage_dir(cfg, "channels");
  const MediumSpec medium = make_medium(cfg);
  ChannelSet set = simulate_dataset(cfg, medium);
  std::vector<ChannelFrame> frames;
  for (int tx : required_tx(cfg)) frames.push_back(set.frame(tx));
  write_channel_set(dir, set.manifest(), frames);
  std::cout << "simulated " << frames.size() << " frames (" << set.manifest().num_scatterers
            << " scatterers, " << (medium.homogeneous() ? "homogeneous" : "inhomogeneous")
            << " medium) -> " << dir.string() << '\n';
  return kExitOk;
}

// --------------------------------------------------------------- calibrate

void write_table1(const fs::path& path, const std::vector<DelayPattern>& patterns) {
  auto os = open_output(path);
  os << "method,mean_r_squared,mean_rmse_s,num_patterns\n";
  for (auto method : {RegressionMethod::ols, RegressionMethod::robust, RegressionMethod::weighted}) {
    double r2 = 0.0, rmse = 0.0;
    for (const auto& p : patterns) {
      const RegressionResult fit = fit_pattern(p, method);
      r2 += fit.r_squared / patterns.size();
      rmse += fit.rmse / patterns.size();
    }
    os << to_string(method) << ',' << fmt_double(r2) << ',' << fmt_double(rmse) << ','
       << patterns.size() << '\n';
  }
}

void write_table2(const fs::path& path, const CalibrationDataset& ds, std::size_t every) {
  auto os = open_output(path);
  os << "degree,train_points,test_points,test_r_squared,test_rmse_m_s,train_rmse_m_s,"
        "slope_r_squared,status\n";
  for (int degree : {1, 3, 5}) {
    try {
      const CalibrationModel m = build_calibration(ds, degree, EveryK{every});
      const CalibrationReport r = evaluate_calibration(m, ds);
      os << degree << ',' << m.training_indices.size() << ',' << r.test_indices.size() << ','
         << fmt_double(r.test_r_squared) << ',' << fmt_double(r.test_rmse) << ','
         << fmt_double(r.train_rmse) << ',' << fmt_double(r.slope_r_squared) << ",ok\n";
    } catch (const NumericalError& e) {
      os << degree << ",,,,,,,failed: " << e.what() << '\n';
    }
  }
}

int cmd_calibrate(const PipelineConfig& cfg) {
  const fs::path dir = stage_dir(cfg, "calibration");
  std::vector<DelayPattern> patterns;
  const CalibrationDataset ds = run_calibration_sweep(cfg, &patterns);
  const auto every = static_cast<std::size_t>(cfg.train_every);
  const CalibrationModel model = build_calibration(ds, cfg.degree, EveryK{every});
  const CalibrationReport report = evaluate_calibration(model, ds);

  save_model(dir / "model.txt", model);
  export_calibration_csv(dir / "calibration.csv", ds, model);
  write_table1(dir / "table1_regression.csv", patterns);
  write_table2(dir / "table2_calibration.csv", ds, every);
  const std::size_t last = patterns.size() - 1;
  export_pattern_csv(dir / "pattern_delta_min.csv", patterns.front(),
                     fit_pattern(patterns.front(), cfg.method));
  export_pattern_csv(dir / "pattern_delta_max.csv", patterns[last],
                     fit_pattern(patterns[last], cfg.method));

  std::cout << "calibration: " << ds.entries.size() << " sweep points, "
            << model.training_indices.size() << " train / " << report.test_indices.size()
            << " test, degree " << model.degree << '\n'
            << "  test R^2 " << fixed(report.test_r_squared, 4) << ", test RMSE "
            << fixed(report.test_rmse, 3) << " m/s (" << kDeltaConvention << ")\n"
            << "  model -> " << (dir / "model.txt").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- estimate

fs::path default_channels(const PipelineConfig& cfg) { return fs::path(cfg.output_dir) / "channels"; }

fs::path default_model(const PipelineConfig& cfg) {
  return cfg.model_path.empty() ? fs::path(cfg.output_dir) / "calibration" / "model.txt"
                                : fs::path(cfg.model_path);
}

void write_estimate(const fs::path& path, const SosEstimate& est, const PipelineConfig& cfg) {
  auto os = open_output(path);
  os << "convention " << kDeltaConvention << '\n'
     << "tx_pair " << cfg.tx_a << ' ' << cfg.tx_b << '\n'
     << "method " << to_string(cfg.method) << '\n'
     << "c_bf_assumed " << fmt_double(est.c_bf_assumed) << '\n'
     << "slope_s_per_rad " << fmt_double(est.slope) << '\n'
     << "r_squared " << fmt_double(est.measurement.fit.r_squared) << '\n'
     << "delta_c " << fmt_double(est.delta_c) << '\n'
     << "corrected_sos " << fmt_double(est.corrected_sos) << '\n';
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  auto is = open_input(path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto tok = split_ws(line);
    if (tok.size() >= 2) kv[tok[0]] = tok[1];
  }
  return kv;
}

int cmd_estimate(const PipelineConfig& cfg, const std::string& channels_dir,
                 const std::string& model_file, std::optional<double> c_bf) {
  const fs::path channels_path = channels_dir.empty() ? default_channels(cfg) : fs::path(channels_dir);
  const fs::path model_path = model_file.empty() ? default_model(cfg) : fs::path(model_file);
  if (!fs::exists(model_path)) {
    throw MissingInputError("calibration model " + model_path.string() +
                            " not found; run `sosest calibrate` first or pass --model");
  }
  ChannelSet channels(channels_path);
  const CalibrationModel model = load_model(model_path);
  const double assumed = c_bf.value_or(cfg.assumed_c_bf);

  SosEstimate est;
  try {
    est = estimate_sos(channels, model, cfg, assumed);
  } catch (const OutOfRangeError& e) {
    throw OutOfRangeError(std::string(e.what()) + "; the assumed BF-SoS " + fmt_double(assumed) +
                              " m/s is too far from the medium. Retry with --c-bf near " +
                              fmt_double(corrected_sos(assumed, e.nearest_delta_c)) + " m/s",
                          e.nearest_delta_c);
  }
  const fs::path dir = stage_dir(cfg, "estimate");
  write_estimate(dir / "estimate.txt", est, cfg);
  export_pattern_csv(dir / "pattern.csv", est.measurement.pattern, est.measurement.fit);
  export_delay_map_csv(dir / "delay_map.csv", est.measurement.map);
  std::cout << "slope " << est.slope << " s/rad, delta_c " << fixed(est.delta_c, 2)
            << " m/s (" << kDeltaConvention << "), corrected SoS " << fixed(est.corrected_sos, 2)
            << " m/s\n";
  return kExitOk;
}

// ------------------------------------------------------------- reconstruct

void write_sos_outputs(const fs::path& dir, const std::string& stem, const ReconRun& run,
                       const ImagingGrid& grid) {
  write_grid_csv(dir / (stem + ".csv"), run.sos);
  write_grid_binary(dir / (stem + ".f32"), run.sos, grid,
                    {"c_bf " + fmt_double(run.result.map.c_bf), "unit m/s"});
  write_pgm(dir / (stem + ".pgm"), run.sos, 1400.0, 1600.0);
  export_trace_csv(dir / (stem + "_trace.csv"), run.result.trace);
}

int cmd_reconstruct(PipelineConfig cfg, const std::string& channels_dir, std::optional<double> c_bf,
                    bool use_estimate, const std::string& tag) {
  const fs::path channels_path = channels_dir.empty() ? default_channels(cfg) : fs::path(channels_dir);
  ChannelSet channels(channels_path);
  double c = cfg.assumed_c_bf;
  if (c_bf) {
    c = *c_bf;
  } else if (use_estimate) {
    const fs::path est = fs::path(cfg.output_dir) / "estimate" / "estimate.txt";
    if (!fs::exists(est)) throw MissingInputError(est.string() + " not found; run `sosest estimate` first");
    c = parse_double(read_key_values(est).at("corrected_sos"));
  }
  const ReconRun run = reconstruct_sos(channels, cfg, c);
  const fs::path dir = stage_dir(cfg, tag);
  const ImagingGrid sg = slowness_grid(cfg);
  write_sos_outputs(dir, "sos_map", run, sg);

  // Ground truth from the medium recorded with the channel data.
  const MediumSpec& medium = channels.manifest().medium;
  const ImageD truth = rasterize_sos(medium, sg);
  const double rmse = rmse_map(run.sos, truth);
  Cnr c_nr{0.0, std::numeric_limits<double>::quiet_NaN()};
  const RegionLabels labels = label_regions(medium, sg);
  if (labels.inclusion.count() >= 2 && labels.background.count() >= 2) c_nr = cnr(run.sos, labels);
  write_grid_csv(dir / "ground_truth_sos.csv", truth);
  {
    auto os = open_output(dir / "recon_metrics.csv");
    os << "case_id,c_bf,rmse,cnr_db,cnr_linear,converged,iterations,clamped_pixels\n"
       << tag << ',' << fmt_double(c) << ',' << fmt_double(rmse) << ','
       << (std::isnan(c_nr.db) ? std::string("nan") : format_db(c_nr.db)) << ','
       << fmt_double(c_nr.linear) << ',' << (run.result.converged ? 1 : 0) << ','
       << run.result.iterations << ',' << run.result.clamped_pixels << '\n';
  }
  std::cout << "reconstructed at c_bf " << fixed(c, 2) << " m/s: RMSE " << fixed(rmse, 2)
            << " m/s vs ground truth, " << run.paths.L.rows() << " delay measurements, "
            << (run.result.converged ? "converged" : "NOT converged") << " after "
            << run.result.iterations << " iterations\n";
  if (run.result.clamped_pixels > 0) {
    std::cerr << "warning: " << run.result.clamped_pixels
              << " pixels clamped to the [1300, 1700] m/s band\n";
  }
  return kExitOk;
}

// ------------------------------------------------------------------- study

int cmd_study(const PipelineConfig& cfg) {
  const fs::path dir = stage_dir(cfg, "study");
  CalibrationModel model;
  if (!cfg.model_path.empty()) {
    model = load_model(cfg.model_path);
  } else {
    model = build_calibration(run_calibration_sweep(cfg), cfg.degree,
                              EveryK{static_cast<std::size_t>(cfg.train_every)});
    save_model(dir / "model.txt", model);
  }

  std::vector<CaseMetrics> rows;
  auto cases = open_output(dir / "cases.csv");
  cases << "case_id,c_background,c_bf_assumed,delta_c_hat,c_bf_corrected\n";
  int index = 0;
  for (const PipelineConfig& phantom : desk_phantoms(cfg)) {
    ChannelSet channels = simulate_dataset(phantom, make_medium(phantom));
    for (double sign : {+1.0, -1.0}) {
      const std::string id = "phantom" + std::to_string(index) + (sign > 0 ? "_over" : "_under");
      const double assumed = phantom.background_sos * (1.0 + sign * cfg.offset_fraction);
      const CorrectionCase cc = run_correction_case(channels, phantom, model, assumed, id);
      const fs::path case_dir = dir / id;
      write_sos_outputs(case_dir, "sos_before", cc.before, slowness_grid(phantom));
      write_sos_outputs(case_dir, "sos_after", cc.after, slowness_grid(phantom));
      write_grid_csv(case_dir / "ground_truth_sos.csv",
                     rasterize_sos(make_medium(phantom), slowness_grid(phantom)));
      write_estimate(case_dir / "estimate.txt", cc.estimate, phantom);
      cases << id << ',' << fmt_double(phantom.background_sos) << ',' << fmt_double(assumed) << ','
            << fmt_double(cc.estimate.delta_c) << ',' << fmt_double(cc.estimate.corrected_sos)
            << '\n';
      rows.push_back(cc.metrics);
      std::cout << id << ": c_bf " << fixed(assumed, 1) << " -> " << fixed(cc.estimate.corrected_sos, 1)
                << " m/s (true " << fixed(phantom.background_sos, 1) << "), RMSE "
                << fixed(cc.metrics.rmse_before, 2) << " -> " << fixed(cc.metrics.rmse_after, 2)
                << " m/s, CNR " << fixed(cc.metrics.cnr_before.db, 2) << " -> "
                << fixed(cc.metrics.cnr_after.db, 2) << " dB\n";
    }
    ++index;
  }
  write_metrics_csv(dir / "metrics.csv", rows, true);
  std::cout << "metrics -> " << (dir / "metrics.csv").string() << '\n';
  return kExitOk;
}

// ------------------------------------------------------------------ report

struct ReportInput {
  std::string name;
  fs::path path;
};

int cmd_report(const std::string& run_dir_arg, const PipelineConfig& cfg) {
  const fs::path run_dir = run_dir_arg.empty() ? fs::path(cfg.output_dir) : fs::path(run_dir_arg);
  if (!fs::is_directory(run_dir)) throw MissingInputError("run directory " + run_dir.string() + " does not exist");

  const std::vector<ReportInput> expected = {
      {"table1", run_dir / "calibration" / "table1_regression.csv"},
      {"table2", run_dir / "calibration" / "table2_calibration.csv"},
      {"calibration_curve", run_dir / "calibration" / "calibration.csv"},
      {"estimate", run_dir / "estimate" / "estimate.txt"},
      {"pattern", run_dir / "estimate" / "pattern.csv"},
      {"table3", run_dir / "study" / "metrics.csv"},
  };
  std::vector<fs::path> recon_metrics;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "recon_metrics.csv")) {
      recon_metrics.push_back(entry.path() / "recon_metrics.csv");
    }
  }
  std::sort(recon_metrics.begin(), recon_metrics.end());

  std::vector<std::string> missing;
  for (const auto& e : expected)
    if (!fs::exists(e.path)) missing.push_back(e.path.string());
  if (missing.size() == expected.size() && recon_metrics.empty()) {
    std::string msg = "no run artifacts in " + run_dir.string() + "; expected any of:";
    for (const auto& e : expected) msg += "\n  " + e.path.string();
    msg += "\n  " + (run_dir / "<stage>" / "recon_metrics.csv").string();
    throw MissingInputError(msg);
  }

  const fs::path out = run_dir / "report";
  fs::create_directories(out);
  for (const auto& e : expected) {
    if (!fs::exists(e.path)) continue;
    if (e.name == "table3") {
      write_metrics_csv(out / "table3_correction.csv", read_metrics_csv(e.path), true);
    } else {
      fs::copy_file(e.path, out / (e.name + e.path.extension().string()),
                    fs::copy_options::overwrite_existing);
    }
  }
  if (!recon_metrics.empty()) {
    auto os = open_output(out / "reconstructions.csv");
    bool header = false;
    for (const auto& p : recon_metrics) {
      auto is = open_input(p);
      std::string line;
      bool first = true;
      while (std::getline(is, line)) {
        if (first) {
          first = false;
          if (header) continue;
          header = true;
        }
        os << line << '\n';
      }
    }
  }
  {
    auto os = open_output(out / "missing.txt");
    for (const auto& m : missing) os << m << '\n';
  }
  for (const auto& m : missing) std::cerr << "missing: " << m << '\n';
  std::cout << "report -> " << out.string() << " (" << (expected.size() - missing.size()) << " of "
            << expected.size() << " tables, " << recon_metrics.size() << " reconstructions)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean speed-of-sound estimation from diverging-wave echo shifts, with "
               "tomographic local SoS reconstruction."};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "Configuration file (INI sections, key = value)");
  app.add_option("--out", g.out, "Output directory (overrides [output] directory)");
  app.add_option("--seed", g.seed, "Scatterer / noise seed (overrides [simulation] seed)");
  app.add_option("--threads", g.threads, "Worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--quick", g.quick, "Coarse sweep, smaller grids and fewer phantoms for fast runs");

  auto* simulate = app.add_subcommand("simulate", "Simulate channel data for the configured phantom");

  auto* calibrate = app.add_subcommand("calibrate", "Run the BF-SoS sweep and build the calibration model");
  std::optional<int> degree;
  calibrate->add_option("--degree", degree, "Polynomial degree (1, 3 or 5)");

  auto* estimate = app.add_subcommand("estimate", "Estimate the BF-SoS offset and corrected SoS");
  std::string est_channels, est_model;
  std::optional<double> est_cbf;
  estimate->add_option("--channels", est_channels, "Channel-data directory (default <out>/channels)");
  estimate->add_option("--model", est_model, "Calibration model file (default <out>/calibration/model.txt)");
  estimate->add_option("--c-bf", est_cbf, "Assumed beamforming SoS in m/s");

  auto* reconstruct = app.add_subcommand("reconstruct", "Reconstruct the local SoS map");
  std::string rec_channels, rec_tag = "reconstruct";
  std::optional<double> rec_cbf;
  bool rec_use_estimate = false;
  reconstruct->add_option("--channels", rec_channels, "Channel-data directory (default <out>/channels)");
  reconstruct->add_option("--c-bf", rec_cbf, "Beamforming SoS in m/s");
  reconstruct->add_flag("--use-estimate", rec_use_estimate, "Use the corrected SoS from <out>/estimate");
  reconstruct->add_option("--tag", rec_tag, "Output subdirectory name");

  auto* study = app.add_subcommand("study", "Desk phantom study: estimate, correct and reconstruct");

  auto* report = app.add_subcommand("report", "Aggregate the tables of a run directory");
  std::string run_dir;
  report->add_option("run_dir", run_dir, "Run directory (default: the output directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    PipelineConfig cfg = resolve_config(g);
    if (*simulate) return cmd_simulate(cfg);
    if (*calibrate) {
      if (degree) {
        cfg.degree = *degree;
        cfg.validate();
      }
      return cmd_calibrate(cfg);
    }
    if (*estimate) return cmd_estimate(cfg, est_channels, est_model, est_cbf);
    if (*reconstruct) return cmd_reconstruct(cfg, rec_channels, rec_cbf, rec_use_estimate, rec_tag);
    if (*study) return cmd_study(cfg);
    if (*report) return cmd_report(run_dir, cfg);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ArgumentError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const MissingInputError& e) {
    std::cerr << "missing input: " << e.what() << '\n';
    return kExitMissing;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}
