/*
 * Copyright 2026 The attrcam Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "attrcam/balancing.hpp"
#include "attrcam/cam.hpp"
#include "attrcam/commands.hpp"
#include "attrcam/data.hpp"
#include "attrcam/errors.hpp"
#include "attrcam/evaluation.hpp"
#include "attrcam/network.hpp"
#include "attrcam/ops.hpp"

namespace py = pybind11;
using namespace attrcam;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  if (shape.empty()) shape = {1};
  return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  Array out(t.shape());
  std::copy(t.data(), t.data() + t.size(), out.mutable_data());
  return out;
}

Landmarks to_landmarks(const Array& a) {
  if (a.ndim() != 2 || a.shape(0) != 5 || a.shape(1) != 2) throw DimensionError("landmarks must have shape (5, 2)");
  auto p = [&](py::ssize_t i) { return Point{a.at(i, 0), a.at(i, 1)}; };
  return Landmarks{p(0), p(1), p(2), p(3), p(4)};
}

}  // namespace

PYBIND11_MODULE(_attrcam, m) {
  m.doc() = "Gradient-based class activation maps for single-output binary attribute classifiers";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto config_error = py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", config_error.ptr());
  py::register_exception<UsageError>(m, "UsageError", error.ptr());
  auto data_error = py::register_exception<DataError>(m, "DataError", error.ptr());
  py::register_exception<DegenerateAttributeError>(m, "DegenerateAttributeError", data_error.ptr());
  py::register_exception<IoError>(m, "IoError", data_error.ptr());
  py::register_exception<NumericError>(m, "NumericError", error.ptr());

  m.def(
      "moon_weights",
      [](const std::vector<double>& priors) {
        const BalanceWeights w = moon_weights(ClassPriors{priors});
        return py::make_tuple(w.positive, w.negative);
      },
      py::arg("priors"), "Per-attribute (positive, negative) loss weights for positive-class priors.");

  m.def(
      "proportional_energy",
      [](const Array& map, const Array& mask) { return proportional_energy(to_tensor(map), to_tensor(mask)); },
      py::arg("map"), py::arg("mask"));

  m.def(
      "frontal_score", [](const Array& landmarks) { return frontal_score(to_landmarks(landmarks)); },
      py::arg("landmarks"), "Landmark rows: left eye, right eye, nose, left mouth, right mouth.");

  m.def(
      "combine_map",
      [](const std::string& method, const Array& features, const Array& gradients) {
        return to_array(combine_map(parse_cam_method(method), to_tensor(features), to_tensor(gradients)));
      },
      py::arg("method"), py::arg("features"), py::arg("gradients"));

  m.def(
      "upsample_bilinear",
      [](const Array& map, std::size_t height, std::size_t width) {
        return to_array(ops::upsample_bilinear(to_tensor(map), height, width));
      },
      py::arg("map"), py::arg("height"), py::arg("width"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line interface in-process; returns (exit code, stdout, stderr).");

  py::class_<AttributeModel>(m, "Model")
      .def_static(
          "load", [](const std::string& path) { return load_checkpoint(std::filesystem::path(path)); },
          py::arg("path"))
      .def_static(
          "initialize",
          [](std::vector<std::string> attributes, std::size_t image_size, std::vector<std::size_t> channels,
             std::uint64_t seed) {
            Architecture arch;
            arch.image_size = image_size;
            arch.channels = std::move(channels);
            return AttributeModel::initialize(arch, std::move(attributes), seed);
          },
          py::arg("attributes"), py::arg("image_size") = 32, py::arg("channels") = std::vector<std::size_t>{8, 16},
          py::arg("seed") = 1)
      .def_property_readonly("attributes", &AttributeModel::attributes)
      .def_property_readonly("feature_grid", [](const AttributeModel& a) { return a.architecture().feature_grid(); })
      .def("save", [](const AttributeModel& a, const std::string& path) { save_checkpoint(a, std::filesystem::path(path)); })
      .def(
          "logits", [](const AttributeModel& a, const Array& images) { return to_array(predict_logits(a, to_tensor(images))); },
          py::arg("images"), "Logits [N, M] for images [N, C, H, W].")
      .def(
          "cam",
          [](const AttributeModel& a, const Array& image, std::size_t attribute, const std::string& method,
             const std::string& target) {
            ForwardTrace trace = forward(a, to_tensor(image));
            const CamMap map = compute_cam(trace, attribute, parse_cam_method(method), parse_target_mode(target));
            py::dict d;
            d["activation"] = to_array(map.activation);
            d["upscaled"] = to_array(map.upscaled);
            d["predicted_sign"] = map.predicted_sign;
            d["logit"] = trace.logit(attribute);
            return d;
          },
          py::arg("image"), py::arg("attribute"), py::arg("method") = "gradcam", py::arg("target") = "predicted");
}
