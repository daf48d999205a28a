// Python bindings for the sosest core: config, tracking, regression, calibration and the
// end-to-end stages. Arrays cross the boundary as NumPy float64.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sosest/beamform.hpp"
#include "sosest/calibrate.hpp"
#include "sosest/config.hpp"
#include "sosest/delaytrack.hpp"
#include "sosest/error.hpp"
#include "sosest/pipeline.hpp"
#include "sosest/regress.hpp"

namespace py = pybind11;
using namespace sosest;

namespace {

std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

py::dict fit_to_dict(const RegressionResult& r) {
  py::dict d;
  d["slope"] = r.slope;
  d["intercept"] = r.intercept;
  d["r_squared"] = r.r_squared;
  d["rmse"] = r.rmse;
  d["method"] = to_string(r.method);
  d["iterations"] = r.iterations;
  return d;
}

CalibrationDataset dataset_from(const std::vector<double>& delta_c, const std::vector<double>& slopes) {
  if (delta_c.size() != slopes.size()) throw ArgumentError("delta_c and slopes differ in length");
  CalibrationDataset ds;
  for (std::size_t i = 0; i < delta_c.size(); ++i) ds.entries.push_back({delta_c[i], slopes[i], 0.0});
  return ds;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mean and local speed-of-sound estimation from diverging-wave echo delays";
  m.attr("DELTA_CONVENTION") = kDeltaConvention;

  auto base = py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<MissingInputError>(m, "MissingInputError", PyExc_FileNotFoundError);
  py::register_exception<OutOfRangeError>(m, "OutOfRangeError", base.ptr());

  py::class_<PipelineConfig>(m, "Config")
      .def(py::init<>())
      .def_static("from_text", &parse_config, py::arg("text"))
      .def_static("from_file", [](const std::filesystem::path& p) { return load_config(p); }, py::arg("path"))
      .def("text", &format_config)
      .def("save", [](const PipelineConfig& c, const std::filesystem::path& p) { save_config(p, c); })
      .def("validate", &PipelineConfig::validate)
      .def("quick", [](PipelineConfig c) {
        apply_quick_mode(c);
        return c;
      })
      .def_readwrite("seed", &PipelineConfig::seed)
      .def_readwrite("background_sos", &PipelineConfig::background_sos)
      .def_readwrite("c_true", &PipelineConfig::c_true)
      .def_readwrite("tx_a", &PipelineConfig::tx_a)
      .def_readwrite("tx_b", &PipelineConfig::tx_b)
      .def_readwrite("degree", &PipelineConfig::degree)
      .def_readwrite("delta_min", &PipelineConfig::delta_min)
      .def_readwrite("delta_max", &PipelineConfig::delta_max)
      .def_readwrite("delta_step", &PipelineConfig::delta_step)
      .def("clear_inclusions", [](PipelineConfig& c) { c.inclusions.clear(); })
      .def_property_readonly("num_inclusions", [](const PipelineConfig& c) { return c.inclusions.size(); })
      .def("required_tx", &required_tx)
      .def("__repr__", [](const PipelineConfig& c) {
        return "<sosest.Config seed=" + std::to_string(c.seed) + " background_sos=" +
               std::to_string(c.background_sos) + ">";
      });

  m.def(
      "ncc_delay_1d",
      [](const std::vector<double>& window, const std::vector<double>& search, bool hann) {
        const auto a = to_float(window), b = to_float(search);
        const NccPeak p = ncc_delay_1d(a, b, hann ? Apodization::hann : Apodization::none);
        return py::make_tuple(p.lag, p.peak_ncc, p.valid);
      },
      py::arg("window"), py::arg("search"), py::arg("hann") = true,
      "Fractional lag (samples), peak NCC and validity of `window` inside `search`.");

  m.def(
      "fit_pattern",
      [](const std::vector<double>& thetas, const std::vector<double>& delays, std::vector<double> weights,
         const std::string& method) {
        const DelayPattern p = DelayPattern::from_points(thetas, delays, std::move(weights));
        return fit_to_dict(fit_pattern(p, parse_regression_method(method)));
      },
      py::arg("thetas"), py::arg("delays"), py::arg("weights") = std::vector<double>{},
      py::arg("method") = "robust", "Line fit of a delay pattern: ols, robust or weighted.");

  m.def("echo_shift_model", &echo_shift_model, py::arg("c"), py::arg("c_bf"), py::arg("d"));
  m.def("corrected_sos", &corrected_sos, py::arg("c_bf_assumed"), py::arg("delta_c_hat"));

  py::class_<CalibrationModel>(m, "CalibrationModel")
      .def_readonly("degree", &CalibrationModel::degree)
      .def_readonly("coefficients", &CalibrationModel::coefficients)
      .def_readonly("domain_min", &CalibrationModel::domain_min)
      .def_readonly("domain_max", &CalibrationModel::domain_max)
      .def("evaluate", &CalibrationModel::evaluate, py::arg("delta_c"))
      .def("estimate_offset", [](const CalibrationModel& mdl, double s) { return estimate_offset(mdl, s); },
           py::arg("slope"))
      .def("save", [](const CalibrationModel& mdl, const std::filesystem::path& p) { save_model(p, mdl); })
      .def_static("load", [](const std::filesystem::path& p) { return load_model(p); });

  m.def(
      "build_calibration",
      [](const std::vector<double>& delta_c, const std::vector<double>& slopes, int degree, std::size_t every) {
        return build_calibration(dataset_from(delta_c, slopes), degree, EveryK{every});
      },
      py::arg("delta_c"), py::arg("slopes"), py::arg("degree") = 1, py::arg("train_every") = 4);

  m.def(
      "evaluate_calibration",
      [](const CalibrationModel& mdl, const std::vector<double>& delta_c, const std::vector<double>& slopes) {
        const CalibrationReport r = evaluate_calibration(mdl, dataset_from(delta_c, slopes));
        py::dict d;
        d["test_rmse"] = r.test_rmse;
        d["test_r_squared"] = r.test_r_squared;
        d["train_rmse"] = r.train_rmse;
        d["num_test"] = r.test_indices.size();
        return d;
      },
      py::arg("model"), py::arg("delta_c"), py::arg("slopes"));

  m.def(
      "calibration_sweep",
      [](const PipelineConfig& cfg) {
        py::gil_scoped_release release;
        const CalibrationDataset ds = run_calibration_sweep(cfg);
        std::vector<double> dc, s, r2;
        for (const auto& e : ds.entries) {
          dc.push_back(e.delta_c);
          s.push_back(e.slope);
          r2.push_back(e.r_squared);
        }
        py::gil_scoped_acquire acquire;
        py::dict d;
        d["delta_c"] = dc;
        d["slope"] = s;
        d["r_squared"] = r2;
        return d;
      },
      py::arg("config"), "Homogeneous sweep: delta_c (m/s), slope (s/rad), pattern R^2 per offset.");

  py::class_<ChannelSet>(m, "ChannelSet")
      .def(py::init<std::filesystem::path>(), py::arg("directory"))
      .def("has", &ChannelSet::has, py::arg("tx"))
      .def("samples", [](ChannelSet& s, int tx) -> Eigen::MatrixXf { return s.frame(tx).samples.matrix(); },
           py::arg("tx"), "Channel data of transmit `tx`, [receiver x sample].");

  m.def(
      "simulate",
      [](const PipelineConfig& cfg) {
        py::gil_scoped_release release;
        return simulate_dataset(cfg, make_medium(cfg));
      },
      py::arg("config"), "Simulates every transmit the config needs over the imaging extent.");

  m.def(
      "estimate_sos",
      [](ChannelSet& channels, const CalibrationModel& model, const PipelineConfig& cfg, double c_bf) {
        SosEstimate e;
        {
          py::gil_scoped_release release;
          e = estimate_sos(channels, model, cfg, c_bf);
        }
        py::dict d;
        d["c_bf_assumed"] = e.c_bf_assumed;
        d["slope"] = e.slope;
        d["delta_c"] = e.delta_c;
        d["corrected_sos"] = e.corrected_sos;
        d["fit"] = fit_to_dict(e.measurement.fit);
        return d;
      },
      py::arg("channels"), py::arg("model"), py::arg("config"), py::arg("c_bf"));

  m.def(
      "reconstruct",
      [](ChannelSet& channels, const PipelineConfig& cfg, double c_bf) -> Eigen::MatrixXd {
        py::gil_scoped_release release;
        return reconstruct_sos(channels, cfg, c_bf).sos.matrix();
      },
      py::arg("channels"), py::arg("config"), py::arg("c_bf"), "Local SoS map (m/s) on the slowness grid.");

  m.def(
      "ground_truth",
      [](const PipelineConfig& cfg) -> Eigen::MatrixXd {
        return rasterize_sos(make_medium(cfg), slowness_grid(cfg)).matrix();
      },
      py::arg("config"), "True SoS of the configured medium on the slowness grid.");
}
