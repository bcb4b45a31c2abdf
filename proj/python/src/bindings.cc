/* Copyright 2026 The fhat Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Python bindings for the core library (module fhat._fhat).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "fhat/acceptance.h"
#include "fhat/checkpoint.h"
#include "fhat/costmodel.h"
#include "fhat/decoder.h"
#include "fhat/encoder.h"
#include "fhat/encoder_config.h"
#include "fhat/errors.h"
#include "fhat/evaluator.h"
#include "fhat/hat_model.h"
#include "fhat/run_config.h"
#include "fhat/synthetic.h"
#include "fhat/trainer.h"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

fhat::Tensor ToTensor(const Array& a) {
  if (a.ndim() != 2) throw fhat::DimensionError("expected a 2-D array");
  fhat::Tensor t({static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1))});
  std::memcpy(t.ptr(), a.data(), t.size() * sizeof(double));
  return t;
}

Array ToArray(const fhat::Tensor& t) {
  Array a({t.rows(), t.cols()});
  std::memcpy(a.mutable_data(), t.ptr(), t.size() * sizeof(double));
  return a;
}

py::dict MetricsDict(const fhat::EvalResult& r) {
  const auto& m = r.metrics;
  py::dict d;
  d["utterances"] = m.utterances;
  d["reference_tokens"] = m.reference_tokens;
  d["token_errors"] = m.token_errors;
  d["exact_matches"] = m.exact_matches;
  d["token_error_rate"] = m.TokenErrorRate();
  d["exact_match"] = m.ExactMatchRate();
  d["mean_steps"] = m.MeanSteps();
  d["max_steps"] = m.max_steps;
  d["step_bound"] = r.step_bound;
  d["invariant_violations"] = m.invariant_violations;
  d["hypotheses"] = r.hypotheses;
  return d;
}

// A trained (or freshly initialized) model: its RunConfig plus parameters.
struct Model {
  fhat::RunConfig config;
  fhat::ParamSet params;
  std::vector<std::pair<std::size_t, double>> loss_curve;

  fhat::HatConfig hat() const { return config.ToHatConfig(); }

  Array Encode(const Array& features) const {
    return ToArray(fhat::Encode(ToTensor(features), hat().encoder, params).frames);
  }

  double Loss(const Array& features, const std::vector<int>& labels) const {
    const fhat::HatConfig hc = hat();
    return fhat::HatLoss(fhat::Encode(ToTensor(features), hc.encoder, params).frames, labels, params, hc);
  }

  py::dict Decode(const Array& features, std::size_t beam, std::size_t max_labels,
                  const std::string& algorithm) const {
    const fhat::HatConfig hc = hat();
    const fhat::EncodedSequence enc = fhat::Encode(ToTensor(features), hc.encoder, params);
    fhat::HatScorer scorer(hc, params, enc.frames);
    fhat::DecodeResult r;
    if (algorithm == "alsync") {
      r = fhat::DecodeAlignmentSync(scorer, {beam, max_labels, 1});
    } else if (algorithm == "framesync") {
      fhat::FrameSyncOptions o;
      o.beam = beam;
      o.max_labels = max_labels;
      r = fhat::DecodeFrameSync(scorer, o);
    } else {
      throw fhat::ConfigError("algorithm must be 'alsync' or 'framesync'");
    }
    py::list nbest;
    for (const auto& h : r.nbest) nbest.append(py::make_tuple(h.labels, h.score));
    py::dict d;
    d["nbest"] = nbest;
    d["steps"] = r.steps;
    d["frames"] = enc.frames.rows();
    d["invariant_violations"] = r.invariant_violations;
    return d;
  }
};

}  // namespace

PYBIND11_MODULE(_fhat, m) {
  m.doc() = "Funnel-encoder HAT transducer core";

  py::register_exception<fhat::DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<fhat::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<fhat::ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<fhat::NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<fhat::IoError>(m, "IoError", PyExc_OSError);

  // Encoder arithmetic.
  m.def(
      "parse_funnel",
      [](const std::string& text, std::size_t num_blocks) {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (const auto& p : fhat::ParseFunnelShorthand(text, num_blocks)) out.emplace_back(p.layer, p.stride);
        return out;
      },
      py::arg("text"), py::arg("num_blocks") = 16, "funnel shorthand -> [(layer, stride)]");
  m.def(
      "format_funnel",
      [](const std::vector<std::pair<std::size_t, std::size_t>>& placements) {
        std::vector<fhat::FunnelPlacement> p;
        for (const auto& [layer, stride] : placements) p.push_back({layer, stride});
        return fhat::FormatFunnelShorthand(p);
      },
      py::arg("placements"));
  m.def(
      "frame_duration_ms",
      [](const std::string& shorthand) {
        return fhat::WithFunnel(fhat::EncoderConfig::FullScale(), shorthand).FrameDurationMs();
      },
      py::arg("shorthand"), "f_enc of a full-scale encoder with the given funnel layers");
  m.def("decoder_steps", &fhat::DecoderSteps, py::arg("max_audio_ms"), py::arg("f_enc_ms"),
        py::arg("max_labels"));
  m.def(
      "fit_latency",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        const fhat::LinearFit f = fhat::FitLatency(x, y);
        return py::make_tuple(f.slope, f.intercept, f.r_squared);
      },
      py::arg("x"), py::arg("y"), "least squares -> (slope, intercept, r_squared)");
  m.def(
      "cost_table",
      [](const std::vector<std::pair<std::string, std::string>>& configs) {
        return fhat::CostTableJson(fhat::BuildCostTable(configs));
      },
      py::arg("configs"), "[(id, shorthand)] -> JSON text; reductions are against the first entry");
  m.def("published_sweep_table", [] { return fhat::CostTableJson(fhat::PublishedSweepTable()); },
        "cost table of the published frame-rate sweep with latency fits, as JSON text");
  m.def(
      "count_params",
      [](const std::string& config_json) { return fhat::CountParams(fhat::RunConfig::FromJson(config_json).ToHatConfig()); },
      py::arg("config_json"));

  // Data.
  py::class_<fhat::SyntheticTask>(m, "SyntheticTask")
      .def(py::init<>())
      .def_readwrite("vocab_size", &fhat::SyntheticTask::vocab_size)
      .def_readwrite("feature_dim", &fhat::SyntheticTask::feature_dim)
      .def_readwrite("frames_per_token", &fhat::SyntheticTask::frames_per_token)
      .def_readwrite("noise", &fhat::SyntheticTask::noise)
      .def_readwrite("min_labels", &fhat::SyntheticTask::min_labels)
      .def_readwrite("max_labels", &fhat::SyntheticTask::max_labels)
      .def_readwrite("seed", &fhat::SyntheticTask::seed);

  py::class_<fhat::Dataset>(m, "Dataset")
      .def_readonly("task", &fhat::Dataset::task)
      .def_readonly("stream", &fhat::Dataset::stream)
      .def("__len__", [](const fhat::Dataset& d) { return d.examples.size(); })
      .def("__getitem__",
           [](const fhat::Dataset& d, std::size_t i) {
             if (i >= d.examples.size()) throw py::index_error();
             return py::make_tuple(ToArray(d.examples[i].features), d.examples[i].labels);
           })
      .def("write", [](const fhat::Dataset& d, const std::filesystem::path& stem) { return fhat::WriteDataset(d, stem); },
           py::arg("stem"));
  m.def("generate_dataset", &fhat::GenerateDataset, py::arg("task"), py::arg("count"), py::arg("stream") = 0);
  m.def("read_dataset", &fhat::ReadDataset, py::arg("path"));

  // Models.
  m.def("default_config", [] { return fhat::RunConfig{}.ToJson(); }, "RunConfig defaults as JSON text");
  m.def(
      "normalize_config", [](const std::string& json) { return fhat::RunConfig::FromJson(json).ToJson(); },
      py::arg("config_json"), "validates a RunConfig JSON and fills in defaults");

  py::class_<Model>(m, "Model")
      .def_property_readonly("config", [](const Model& x) { return x.config.ToJson(); })
      .def_property_readonly("loss_curve", [](const Model& x) { return x.loss_curve; })
      .def_property_readonly("num_params", [](const Model& x) { return x.params.NumScalars(); })
      .def("encode", &Model::Encode, py::arg("features"))
      .def("loss", &Model::Loss, py::arg("features"), py::arg("labels"))
      .def("decode", &Model::Decode, py::arg("features"), py::arg("beam") = 4, py::arg("max_labels") = 30,
           py::arg("algorithm") = "alsync")
      .def(
          "evaluate",
          [](const Model& x, const fhat::Dataset& d, std::size_t beam, std::size_t max_labels, std::size_t workers) {
            fhat::EvalOptions o{beam, max_labels, workers};
            py::gil_scoped_release release;
            fhat::EvalResult r = fhat::Evaluate(x.hat(), x.params, d, o);
            py::gil_scoped_acquire acquire;
            return MetricsDict(r);
          },
          py::arg("dataset"), py::arg("beam") = 4, py::arg("max_labels") = 30, py::arg("workers") = 1)
      .def("save", [](const Model& x, const std::filesystem::path& p) { fhat::SaveCheckpoint(p, x.config, x.params); },
           py::arg("path"));

  m.def(
      "init_model",
      [](const std::string& config_json) {
        Model x;
        x.config = fhat::RunConfig::FromJson(config_json);
        x.params = fhat::InitHatParams(x.config.ToHatConfig(), x.config.seed);
        return x;
      },
      py::arg("config_json"));
  m.def(
      "train",
      [](const std::string& config_json, const fhat::Dataset& data) {
        Model x;
        x.config = fhat::RunConfig::FromJson(config_json);
        fhat::TrainResult r;
        {
          py::gil_scoped_release release;
          r = fhat::Train(x.config, data);
        }
        x.params = std::move(r.params);
        for (const auto& p : r.curve) x.loss_curve.emplace_back(p.step, p.loss);
        return x;
      },
      py::arg("config_json"), py::arg("dataset"));
  m.def(
      "load_checkpoint",
      [](const std::filesystem::path& p) {
        fhat::Checkpoint ck = fhat::LoadCheckpoint(p);
        return Model{std::move(ck.config), std::move(ck.params), {}};
      },
      py::arg("path"));

  // Acceptance suite.
  m.def(
      "run_acceptance",
      [](bool run_training) {
        fhat::AcceptanceOptions o;
        o.run_training = run_training;
        fhat::AcceptanceReport r;
        {
          py::gil_scoped_release release;
          r = fhat::RunAcceptance(o);
        }
        return r.ToJson();
      },
      py::arg("run_training") = false, "acceptance report as JSON text");
}
