#include "sosest/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sosest/error.hpp"

namespace sosest {

namespace {

double lateral_lo(const PipelineConfig& cfg) {
  return cfg.x_min.value_or(-0.5 * cfg.array.aperture_width());
}

double lateral_hi(const PipelineConfig& cfg) {
  return cfg.x_max.value_or(0.5 * cfg.array.aperture_width());
}

BFConfig bf_config(const PipelineConfig& cfg, const ImagingGrid& grid, double c_bf) {
  BFConfig bf;
  bf.c_bf = c_bf;
  bf.grid = grid;
  bf.apodization = cfg.apodization;
  bf.f_number = cfg.f_number;
  return bf;
}

}  // namespace

MediumSpec make_medium(const PipelineConfig& cfg) {
  MediumSpec m;
  m.background_sos = cfg.background_sos;
  m.inclusions = cfg.inclusions;
  m.grid = ImagingGrid::spanning(lateral_lo(cfg), lateral_hi(cfg), 0.0, cfg.z_max, cfg.raster_dx,
                                 cfg.raster_dz);
  m.validate();
  return m;
}

ImagingGrid imaging_grid(const PipelineConfig& cfg) {
  return ImagingGrid::spanning(lateral_lo(cfg), lateral_hi(cfg), cfg.z_min, cfg.z_max, cfg.dx,
                               cfg.dz);
}

ImagingGrid slowness_grid(const PipelineConfig& cfg) {
  const ImagingGrid img = imaging_grid(cfg);
  return ImagingGrid::cells(img.x_min(), img.x_max(), 0.0, img.z_max(), cfg.slow_nx, cfg.slow_nz);
}

PolarROI estimation_roi(const PipelineConfig& cfg) {
  PolarROI roi = cfg.roi;
  roi.reference_x = cfg.roi_reference_x.value_or(
      0.5 * (element_position(cfg.array, cfg.tx_a).x + element_position(cfg.array, cfg.tx_b).x));
  return roi;
}

ImagingGrid estimation_grid(const PipelineConfig& cfg) {
  const PolarROI roi = estimation_roi(cfg);
  const double max_theta = std::max(std::abs(roi.theta_min), std::abs(roi.theta_max));
  const double x_lo = roi.reference_x + roi.depth_max * std::sin(std::min(roi.theta_min, 0.0));
  const double x_hi = roi.reference_x + roi.depth_max * std::sin(std::max(roi.theta_max, 0.0));
  const double margin_x = 2.0 * cfg.estimation_dx;
  // Nodes sit window/2 + search_radius pixels inside the grid edges.
  const double margin_z = (cfg.track.window_len / 2 + cfg.track.search_radius + 2) * cfg.dz;
  const double z_lo = std::max(cfg.dz, roi.depth_min * std::cos(std::min(max_theta, 1.5)) - margin_z);
  const double z_hi = roi.depth_max + margin_z;
  return ImagingGrid::spanning(x_lo - margin_x, x_hi + margin_x, z_lo, z_hi, cfg.estimation_dx,
                               cfg.dz);
}

std::vector<int> required_tx(const PipelineConfig& cfg) {
  std::set<int> txs{cfg.tx_a, cfg.tx_b};
  for (const auto& [a, b] : cfg.recon_pairs) {
    txs.insert(a);
    txs.insert(b);
  }
  return {txs.begin(), txs.end()};
}

ChannelSet simulate_channels(const PipelineConfig& cfg, const MediumSpec& medium,
                             const ImagingGrid& extent, const std::vector<int>& txs) {
  const ScattererField field = gen_scatterers(extent, cfg.scatterer_density, cfg.seed);
  const TravelTimeTable table(cfg.array, field, medium);
  SimulationOptions opt;
  opt.snr_db = cfg.snr_db;
  opt.noise_seed = cfg.seed;

  int num_samples = cfg.num_samples;
  if (num_samples == 0) {
    for (int tx : txs) num_samples = std::max(num_samples, table.required_samples(tx, cfg.pulse));
  }

  ChannelManifest manifest;
  manifest.medium = medium;
  manifest.scatterer_seed = cfg.seed;
  manifest.scatterer_density = cfg.scatterer_density;
  manifest.num_scatterers = field.size();

  ChannelSet set;
  for (int tx : txs) set.insert(simulate_frame(tx, field, table, cfg.pulse, num_samples, opt));
  set.set_manifest(manifest);
  return set;
}

ChannelSet simulate_dataset(const PipelineConfig& cfg, const MediumSpec& medium) {
  return simulate_channels(cfg, medium, imaging_grid(cfg), required_tx(cfg));
}

SlopeMeasurement measure_slope(ChannelSet& channels, const PipelineConfig& cfg, double c_bf) {
  const BFConfig bf = bf_config(cfg, estimation_grid(cfg), c_bf);
  const BeamformedFrame a = das_beamform(channels.frame(cfg.tx_a), cfg.array, bf);
  const BeamformedFrame b = das_beamform(channels.frame(cfg.tx_b), cfg.array, bf);
  SlopeMeasurement m;
  m.map = track_delays(a, b, cfg.track);
  m.pattern = extract_pattern(m.map, estimation_roi(cfg));
  m.fit = fit_pattern(m.pattern, cfg.method);
  return m;
}

std::vector<double> sweep_offsets(const PipelineConfig& cfg) {
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((cfg.delta_max - cfg.delta_min) / cfg.delta_step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(cfg.delta_min + i * cfg.delta_step);
  return out;
}

CalibrationDataset run_calibration_sweep(const PipelineConfig& cfg,
                                         std::vector<DelayPattern>* patterns) {
  PipelineConfig hom = cfg;
  hom.background_sos = cfg.c_true;
  hom.inclusions.clear();
  const MediumSpec medium = make_medium(hom);

  // Scatterers only where the estimation pair is imaged, with a margin for sidelobes.
  const ImagingGrid eg = estimation_grid(hom);
  constexpr double margin = 3.0e-3;
  const ImagingGrid extent = ImagingGrid::cells(eg.x_min() - margin, eg.x_max() + margin,
                                                std::max(0.5e-3, eg.z_min() - margin),
                                                eg.z_max() + margin, 1, 1);
  ChannelSet channels = simulate_channels(hom, medium, extent, {hom.tx_a, hom.tx_b});

  CalibrationDataset ds;
  ds.meta.c_true = cfg.c_true;
  ds.meta.tx_a = cfg.tx_a;
  ds.meta.tx_b = cfg.tx_b;
  ds.meta.roi = estimation_roi(cfg);
  ds.meta.track = cfg.track;
  ds.meta.method = cfg.method;
  for (double dc : sweep_offsets(cfg)) {
    const SlopeMeasurement m = measure_slope(channels, hom, cfg.c_true + dc);
    ds.entries.push_back({dc, m.fit.slope, m.fit.r_squared});
    if (patterns) patterns->push_back(m.pattern);
  }
  ds.validate();
  return ds;
}

SosEstimate estimate_sos(ChannelSet& channels, const CalibrationModel& model,
                         const PipelineConfig& cfg, double c_bf_assumed) {
  SosEstimate est;
  est.c_bf_assumed = c_bf_assumed;
  est.measurement = measure_slope(channels, cfg, c_bf_assumed);
  est.slope = est.measurement.fit.slope;
  est.delta_c = estimate_offset(model, est.slope);
  est.corrected_sos = corrected_sos(c_bf_assumed, est.delta_c);
  return est;
}

ReconRun reconstruct_sos(ChannelSet& channels, const PipelineConfig& cfg, double c_bf) {
  const BFConfig bf = bf_config(cfg, imaging_grid(cfg), c_bf);
  TrackConfig track = cfg.track;
  track.axial_step = cfg.node_axial_step;
  track.lateral_step = cfg.node_lateral_step;

  std::map<int, BeamformedFrame> frames;
  auto beamformed = [&](int tx) -> const BeamformedFrame& {
    auto it = frames.find(tx);
    if (it == frames.end()) it = frames.emplace(tx, das_beamform(channels.frame(tx), cfg.array, bf)).first;
    return it->second;
  };

  ReconRun run;
  std::vector<Mask> masks;
  for (const auto& [a, b] : cfg.recon_pairs) {
    run.maps.push_back(track_delays(beamformed(a), beamformed(b), track));
    masks.push_back(run.maps.back().valid);
  }
  const ImagingGrid sg = slowness_grid(cfg);
  run.paths = build_path_matrix(cfg.recon_pairs, run.maps.front().grid, sg, masks, cfg.array);
  const SparseMatrix D = tv_operator(sg, cfg.recon.tv_axial_weight, cfg.recon.tv_lateral_weight);
  run.result = reconstruct(run.paths, stack_delays(run.maps), D, sg, c_bf, cfg.recon);
  run.sos = run.result.map.sos();
  return run;
}

std::vector<PipelineConfig> desk_phantoms(const PipelineConfig& base) {
  struct Layout {
    InclusionShape shape;
    double cx, cz, hx, hz;  // mm
    double background;
    double contrast;
  };
  static const Layout layouts[] = {
      {InclusionShape::ellipse, -5.0, 22.0, 5.0, 4.0, 1500.0, 40.0},
      {InclusionShape::rectangle, 4.0, 21.0, 4.0, 3.5, 1490.0, -40.0},
      {InclusionShape::ellipse, 2.0, 23.0, 4.5, 4.5, 1510.0, 20.0},
      {InclusionShape::rectangle, -3.0, 22.0, 5.0, 4.0, 1520.0, -20.0},
      {InclusionShape::ellipse, 6.0, 21.0, 4.0, 3.0, 1495.0, -40.0},
      {InclusionShape::rectangle, -6.0, 23.0, 4.5, 3.5, 1505.0, 40.0},
      {InclusionShape::ellipse, -1.0, 20.0, 6.0, 4.0, 1515.0, -20.0},
      {InclusionShape::rectangle, 5.0, 22.0, 3.5, 4.5, 1485.0, 20.0},
  };
  constexpr int kLayouts = static_cast<int>(std::size(layouts));
  std::vector<PipelineConfig> out;
  for (int i = 0; i < base.num_phantoms; ++i) {
    const Layout& l = layouts[i % kLayouts];
    PipelineConfig c = base;
    c.background_sos = l.background;
    Inclusion inc;
    inc.shape = l.shape;
    inc.center = {l.cx * 1e-3, l.cz * 1e-3};
    inc.half_x = l.hx * 1e-3;
    inc.half_z = l.hz * 1e-3;
    inc.sos = l.background + l.contrast;
    c.inclusions = {inc};
    c.seed = base.seed + static_cast<std::uint64_t>(i);
    out.push_back(c);
  }
  return out;
}

CorrectionCase run_correction_case(ChannelSet& channels, const PipelineConfig& cfg,
                                   const CalibrationModel& model, double c_bf_assumed,
                                   const std::string& case_id) {
  CorrectionCase cc;
  cc.case_id = case_id;
  cc.c_background = cfg.background_sos;
  cc.c_bf_assumed = c_bf_assumed;
  cc.estimate = estimate_sos(channels, model, cfg, c_bf_assumed);
  cc.before = reconstruct_sos(channels, cfg, c_bf_assumed);
  cc.after = reconstruct_sos(channels, cfg, cc.estimate.corrected_sos);

  const MediumSpec medium = make_medium(cfg);
  const ImagingGrid sg = slowness_grid(cfg);
  const ImageD truth = rasterize_sos(medium, sg);
  const RegionLabels labels = label_regions(medium, sg);
  cc.metrics.case_id = case_id;
  cc.metrics.rmse_before = rmse_map(cc.before.sos, truth);
  cc.metrics.rmse_after = rmse_map(cc.after.sos, truth);
  cc.metrics.cnr_before = cnr(cc.before.sos, labels);
  cc.metrics.cnr_after = cnr(cc.after.sos, labels);
  cc.metrics.converged_before = cc.before.result.converged;
  cc.metrics.converged_after = cc.after.result.converged;
  return cc;
}

}  // namespace sosest
