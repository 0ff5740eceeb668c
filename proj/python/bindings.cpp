#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dip/config.hpp"
#include "dip/dsp.hpp"
#include "dip/error.hpp"
#include "dip/eval.hpp"
#include "dip/io.hpp"
#include "dip/pipeline.hpp"
#include "dip/stransform.hpp"
#include "dip/synth.hpp"

namespace py = pybind11;
using namespace dip;

namespace {

synth::Dataset dataset_from(const std::string& bytes) {
  return io::to_dataset(io::decode_dipd(bytes));
}

py::dict dataset_dict(const synth::Dataset& d) {
  py::list data, labels, states, ids;
  for (const auto& r : d.records) {
    data.append(r.data);
    labels.append(r.label);
    states.append(r.state);
    ids.append(r.record_id);
  }
  py::dict out;
  out["class_names"] = d.class_names;
  out["sampling_rate_hz"] = d.sampling_rate_hz;
  out["data"] = data;
  out["labels"] = labels;
  out["states"] = states;
  out["record_ids"] = ids;
  return out;
}

}  // namespace

PYBIND11_MODULE(_dip, m) {
  m.doc() = "Deterioration and damage identification: simulator, ST spectrograms, CNN evaluation";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);
  py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);

  m.def("stockwell", [](const std::vector<double>& x, double fs) { return st::stockwell(x, fs).values; },
        py::arg("signal"), py::arg("sampling_rate_hz"), "Complex ST, (N/2+1) x N.");
  m.def("cropped_magnitude",
        [](const std::vector<double>& x, double fs) { return st::crop_and_magnitude(st::stockwell(x, fs)); },
        py::arg("signal"), py::arg("sampling_rate_hz"), "|ST| rows 1..N/4.");

  m.def("standardize", [](const std::vector<double>& x) { return dsp::standardize(x); }, py::arg("signal"));
  m.def(
      "lowpass",
      [](const std::vector<double>& x, double fs, double cutoff, int order, double ripple) {
        dsp::FilterSpec spec;
        spec.order = order;
        spec.cutoff_hz = cutoff;
        spec.passband_ripple_db = ripple;
        return dsp::apply_zero_phase(dsp::design_lowpass(spec, fs), x);
      },
      py::arg("signal"), py::arg("sampling_rate_hz"), py::arg("cutoff_hz"), py::arg("order") = 12,
      py::arg("ripple_db") = 1.0, "Zero-phase Chebyshev I low-pass.");
  m.def(
      "fit_zca",
      [](const std::vector<Matrix>& records, double eps) { return dsp::fit_zca(records, eps).matrix; },
      py::arg("records"), py::arg("epsilon") = 1e-8, "Whitening matrix from channels x samples records.");

  m.def("class_metrics", [](const std::vector<std::vector<long>>& counts) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < counts.size(); ++i) names.push_back(std::to_string(i));
    eval::ConfusionMatrix cm(names);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i].size() != counts.size()) throw InvalidArgument("confusion matrix must be square");
      for (std::size_t j = 0; j < counts.size(); ++j) cm.add(i, j, counts[i][j]);
    }
    py::list rows;
    for (std::size_t c = 0; c < cm.size(); ++c) {
      const auto r = eval::class_metrics(cm, c);
      py::dict d;
      d["sensitivity"] = r.sensitivity;
      d["precision"] = r.precision;
      d["specificity"] = r.specificity;
      d["f1"] = r.f1;
      rows.append(d);
    }
    const auto o = eval::overall_metrics(cm);
    py::dict out;
    out["classes"] = rows;
    out["accuracy"] = o.accuracy;
    return out;
  });
  m.def("average_index", &eval::average_index, py::arg("localization_accuracy"), py::arg("severity_accuracy"));

  m.def("default_config", []() { return dump_config(RunConfig{}); });
  m.def(
      "generate",
      [](const std::string& config_text) {
        const RunConfig cfg = parse_config(config_text);
        cfg.validate();
        return dataset_dict(pipeline::generate(cfg.synth));
      },
      py::arg("config") = "", "Simulate the dataset described by a config text.");
  m.def(
      "generate_dipd",
      [](const std::string& config_text) {
        const RunConfig cfg = parse_config(config_text);
        cfg.validate();
        return py::bytes(io::encode_dipd(io::from_dataset(pipeline::generate(cfg.synth))));
      },
      py::arg("config") = "", "Simulate and return DIPD bytes.");
  m.def("read_dipd", [](const py::bytes& b) { return dataset_dict(dataset_from(b)); }, py::arg("data"));
  m.def(
      "run_pipeline",
      [](const py::bytes& dipd, const std::string& config_text, const std::string& stage, int threads,
         const std::string& out_dir) {
        pipeline::Options options;
        options.config = parse_config(config_text);
        options.stage = pipeline::parse_stage(stage);
        options.threads = threads;
        options.out_dir = out_dir;
        const auto data = dataset_from(dipd);
        pipeline::Result result;
        {
          py::gil_scoped_release release;
          result = pipeline::run(data, options);
        }
        py::dict accuracies;
        for (const auto& t : result.tasks) accuracies[py::str(t.name)] = t.accuracy();
        py::dict out;
        out["report"] = result.report_text;
        out["csv"] = result.report_csv;
        out["accuracy"] = accuracies;
        return out;
      },
      py::arg("dataset"), py::arg("config") = "", py::arg("stage") = "full", py::arg("threads") = 1,
      py::arg("out_dir") = "");
}
