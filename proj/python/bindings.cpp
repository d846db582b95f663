/* Copyright 2026 The camrefine Authors. All Rights Reserved.

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

// numpy-facing bindings. Images are float32 HxWx3 in [0,1], maps float32 HxW,
// labels uint8 HxW, loss logits float64 (C+1)xHxW.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

#include "camrefine/backend.hpp"
#include "camrefine/condinfer.hpp"
#include "camrefine/dataio.hpp"
#include "camrefine/errors.hpp"
#include "camrefine/metrics.hpp"
#include "camrefine/pseudo.hpp"
#include "camrefine/refine_loss.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace camrefine;

namespace {

template <typename T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

void RequireDims(const py::array& a, int ndim, const char* what) {
  if (a.ndim() != ndim) {
    throw Error(ErrorCode::kDimension, std::string(what) + " must have " +
                                           std::to_string(ndim) + " dimensions");
  }
}

template <typename T>
std::vector<T> Flat(const Array<T>& a) {
  return std::vector<T>(a.data(), a.data() + a.size());
}

template <typename T>
Array<T> ToArray(std::span<const T> data, std::vector<py::ssize_t> shape) {
  Array<T> out(shape);
  std::copy(data.begin(), data.end(), out.mutable_data());
  return out;
}

ImageTensor ToImage(const Array<float>& a) {
  RequireDims(a, 3, "image");
  if (a.shape(2) != 3) throw Error(ErrorCode::kDimension, "image must be HxWx3");
  return ImageTensor(a.shape(0), a.shape(1), Flat(a));
}

Array<float> FromImage(const ImageTensor& image) {
  return ToArray(image.data(), {image.height(), image.width(), 3});
}

ResponseMap ToMap(const Array<float>& a, int class_id) {
  RequireDims(a, 2, "map");
  return ResponseMap(class_id, a.shape(0), a.shape(1), Flat(a));
}

Array<float> FromMap(const ResponseMap& m) { return ToArray(m.data(), {m.height(), m.width()}); }

LabelMap ToLabels(const Array<std::uint8_t>& a) {
  RequireDims(a, 2, "labels");
  return LabelMap(a.shape(0), a.shape(1), Flat(a));
}

Array<std::uint8_t> FromLabels(const LabelMap& l) {
  return ToArray<std::uint8_t>(l.data, {l.height, l.width});
}

SaliencyMap ToSaliency(const Array<float>& a) {
  RequireDims(a, 2, "saliency");
  return SaliencyMap(a.shape(0), a.shape(1), Flat(a));
}

// {class_id: map} in ascending class order.
std::vector<ResponseMap> ToMaps(const std::map<int, Array<float>>& maps) {
  std::vector<ResponseMap> out;
  for (const auto& [cls, a] : maps) out.push_back(ToMap(a, cls));
  return out;
}

py::tuple RectTuple(const Rect& r) { return py::make_tuple(r.top, r.left, r.height, r.width); }

py::dict SpecDict(const condinfer::SplitSpec& spec) {
  py::dict d;
  py::list patches;
  for (const Rect& r : spec.patches) patches.append(RectTuple(r));
  d["mode"] = condinfer::SplitModeName(spec.mode);
  d["patches"] = patches;
  d["overlap"] = spec.overlap ? py::object(RectTuple(*spec.overlap)) : py::none();
  return d;
}

py::list TraceList(const condinfer::IterationTrace& trace) {
  py::list out;
  for (const auto& r : trace.records) {
    out.append(py::make_tuple(r.iteration, r.erased_pixels, r.newly_activated));
  }
  return out;
}

condinfer::RefinementConfig Refinement(float erase_threshold, float stop_fraction,
                                       int max_iterations) {
  condinfer::RefinementConfig c;
  c.erase_threshold = erase_threshold;
  c.stop_fraction = stop_fraction;
  c.max_iterations = max_iterations;
  return c;
}

ClassifierHandle Load(const fs::path& model, std::optional<fs::path> manifest) {
  fs::path m = manifest ? *manifest : fs::path(model).replace_extension(".manifest");
  return LoadModel(model, ModelManifest::FromFile(m));
}

loss::PredictionTensor ToPrediction(const Array<double>& a) {
  RequireDims(a, 3, "logits");
  return loss::PredictionTensor(a.shape(0), a.shape(1), a.shape(2), Flat(a));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Class activation maps with split-and-erase refinement.";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::object(error)(e.what());
      exc.attr("code") = ErrorCodeName(e.code());
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  py::class_<ClassifierHandle>(m, "Classifier")
      .def_property_readonly("class_count", &ClassifierHandle::class_count)
      .def_property_readonly("feature_unit_count", &ClassifierHandle::feature_unit_count)
      .def_property_readonly("classification_threshold",
                             &ClassifierHandle::classification_threshold)
      .def_property_readonly("class_weights",
                             [](const ClassifierHandle& h) {
                               const ClassWeights& w = h.class_weights();
                               return ToArray<float>(w.data, {w.classes, w.units});
                             })
      .def(
          "forward",
          [](const ClassifierHandle& h, const Array<float>& image) {
            ForwardResult r = Forward(h, ToImage(image));
            const FeatureStack& f = r.features;
            return py::make_tuple(ToArray<float>(r.scores.probabilities,
                                                 {py::ssize_t(r.scores.probabilities.size())}),
                                  ToArray<float>(f.data, {f.units, f.height, f.width}));
          },
          py::arg("image"), "Returns (class probabilities, K x h x w features).")
      .def(
          "present_classes",
          [](const ClassifierHandle& h, const Array<float>& image) {
            return ClassesAboveThreshold(h, Forward(h, ToImage(image)).scores);
          },
          py::arg("image"));

  m.def("load_model", &Load, py::arg("model"), py::arg("manifest") = py::none(),
        "Manifest defaults to the model path with a .manifest extension.");

  m.def(
      "compute_cam",
      [](const Array<float>& features, const Array<float>& weights, int class_id) {
        RequireDims(features, 3, "features");
        RequireDims(weights, 2, "weights");
        FeatureStack f(features.shape(0), features.shape(1), features.shape(2), Flat(features));
        ClassWeights w(weights.shape(0), weights.shape(1), Flat(weights));
        return FromMap(ComputeCam(f, w, class_id));
      },
      py::arg("features"), py::arg("weights"), py::arg("class_id"));

  m.def(
      "class_map",
      [](const ClassifierHandle& h, const Array<float>& image, int class_id) {
        return FromMap(ClassConditionalMap(h, ToImage(image), class_id));
      },
      py::arg("model"), py::arg("image"), py::arg("class_id"),
      "Normalised CAM at image resolution.");

  m.def("split_single", [](int h, int w, double row, double col) {
    return SpecDict(condinfer::SplitSingleClass(h, w, {row, col}));
  });
  m.def("split_two", [](int h, int w, std::pair<double, double> a, std::pair<double, double> b) {
    return SpecDict(condinfer::SplitTwoClass(h, w, {a.first, a.second}, {b.first, b.second}));
  });
  m.def("split_multi", [](int h, int w, const std::map<int, std::pair<double, double>>& centers) {
    std::vector<std::pair<int, Point>> c;
    for (const auto& [cls, p] : centers) c.push_back({cls, {p.first, p.second}});
    py::dict out;
    for (const auto& [cls, spec] : condinfer::SplitMultiClass(h, w, c)) out[py::int_(cls)] = SpecDict(spec);
    return out;
  });

  m.def(
      "iterative_infer",
      [](const ClassifierHandle& h, const Array<float>& image, int class_id,
         float erase_threshold, float stop_fraction, int max_iterations) {
        condinfer::IterativeResult r = condinfer::IterativeInfer(
            h, ToImage(image), class_id,
            Refinement(erase_threshold, stop_fraction, max_iterations));
        return py::make_tuple(FromMap(r.map), TraceList(r.trace), r.trace.stopped_by_rule);
      },
      py::arg("model"), py::arg("image"), py::arg("class_id"), py::arg("erase_threshold") = 0.7f,
      py::arg("stop_fraction") = 0.01f, py::arg("max_iterations") = 8,
      "Returns (map, [(iteration, erased, newly_activated)], stopped_by_rule).");

  m.def(
      "refine",
      [](const ClassifierHandle& h, const Array<float>& image, std::vector<int> classes,
         bool split, float erase_threshold, float stop_fraction, int max_iterations, int workers) {
        condinfer::PipelineOptions o;
        o.refinement = Refinement(erase_threshold, stop_fraction, max_iterations);
        o.split = split;
        o.workers = workers;
        condinfer::PipelineResult r;
        {
          py::gil_scoped_release release;
          r = condinfer::RunPipeline(h, ToImage(image), classes, o);
        }
        py::dict out;
        for (const auto& c : r.classes) out[py::int_(c.class_id)] = FromMap(c.map);
        return out;
      },
      py::arg("model"), py::arg("image"), py::arg("classes"), py::arg("split") = true,
      py::arg("erase_threshold") = 0.7f, py::arg("stop_fraction") = 0.01f,
      py::arg("max_iterations") = 8, py::arg("workers") = 1,
      "Split, erase and merge for every present class. Returns {class_id: map}.");

  m.def(
      "pseudo_labels",
      [](const std::map<int, Array<float>>& maps, float bg_threshold) {
        return FromLabels(pseudo::GeneratePseudoLabels(ToMaps(maps), bg_threshold));
      },
      py::arg("maps"), py::arg("bg_threshold"), "Label is class id + 1; 0 is background.");

  m.def("default_thresholds", &pseudo::DefaultThresholdGrid);

  m.def(
      "sweep_best_miou",
      [](const std::vector<std::pair<std::map<int, Array<float>>, Array<std::uint8_t>>>& samples,
         std::optional<std::vector<float>> thresholds, int classes, int workers) {
        std::vector<std::vector<ResponseMap>> maps;
        std::vector<LabelMap> gts;
        for (const auto& [m, gt] : samples) {
          maps.push_back(ToMaps(m));
          gts.push_back(ToLabels(gt));
        }
        std::vector<pseudo::SweepSample> s;
        for (std::size_t i = 0; i < maps.size(); ++i) s.push_back({maps[i], &gts[i]});
        const std::vector<float> grid = thresholds ? *thresholds : pseudo::DefaultThresholdGrid();
        pseudo::ThresholdSweepResult r = pseudo::SweepBestMiou(s, grid, classes, workers);
        py::dict out;
        out["thresholds"] = r.thresholds;
        out["miou"] = r.miou_per_threshold;
        out["best_threshold"] = r.best_threshold;
        out["best_miou"] = r.best_miou;
        return out;
      },
      py::arg("samples"), py::arg("thresholds") = py::none(), py::arg("classes") = 20,
      py::arg("workers") = 1, "samples: [({class_id: map}, ground truth labels)].");

  m.def(
      "mean_iou",
      [](const std::vector<std::pair<Array<std::uint8_t>, Array<std::uint8_t>>>& pairs,
         int size) {
        metrics::ConfusionMatrix cm(size);
        for (const auto& [pred, gt] : pairs) {
          cm = metrics::Accumulate(std::move(cm), ToLabels(pred), ToLabels(gt));
        }
        return metrics::MeanIou(cm);
      },
      py::arg("pairs"), py::arg("size") = 21, "pairs: [(prediction, ground truth)].");

  m.def(
      "activated_recall",
      [](const std::map<int, Array<float>>& maps, const Array<std::uint8_t>& gt) {
        return metrics::ActivatedRecall(ToMaps(maps), ToLabels(gt));
      },
      py::arg("maps"), py::arg("ground_truth"));

  m.def(
      "conflict_temperature",
      [](const Array<std::uint8_t>& pseudo, const Array<float>& saliency) {
        return metrics::ConflictTemperature(ToLabels(pseudo), ToSaliency(saliency));
      },
      py::arg("pseudo"), py::arg("saliency"));

  m.def(
      "total_loss",
      [](const Array<double>& logits, const Array<std::uint8_t>& pseudo,
         const Array<float>& saliency, double alpha, std::optional<double> tau) {
        const loss::PredictionTensor pred = ToPrediction(logits);
        loss::TotalLossResult r =
            tau ? loss::TotalLossWithTau(pred, ToLabels(pseudo), ToSaliency(saliency), alpha, *tau)
                : loss::TotalLoss(pred, ToLabels(pseudo), ToSaliency(saliency), alpha);
        py::dict out;
        out["l_seg"] = r.breakdown.l_seg;
        out["l_sal"] = r.breakdown.l_sal;
        out["tau"] = r.breakdown.tau;
        out["total"] = r.breakdown.total;
        out["gradient"] = ToArray<double>(r.gradient, {pred.channels, pred.height, pred.width});
        return out;
      },
      py::arg("logits"), py::arg("pseudo"), py::arg("saliency"), py::arg("alpha") = 0.08,
      py::arg("tau") = py::none(), "tau is measured from pseudo and saliency unless given.");

  m.def("read_image", [](const fs::path& p) { return FromImage(dataio::ReadImage(p)); });
  m.def(
      "read_labels",
      [](const fs::path& p, int max_class) { return FromLabels(dataio::ReadLabelPng(p, max_class)); },
      py::arg("path"), py::arg("max_class") = 20);
  m.def("write_labels", [](const Array<std::uint8_t>& labels, const fs::path& p) {
    dataio::WriteLabelPng(ToLabels(labels), p);
  });
  m.def("read_saliency", [](const fs::path& p) {
    SaliencyMap s = dataio::ReadSaliencyPng(p);
    return ToArray<float>(s.data, {s.height, s.width});
  });
  m.def("load_map", [](const fs::path& p) {
    ResponseMap r = dataio::LoadResponseMap(p);
    return py::make_tuple(r.class_id(), FromMap(r));
  }, "Returns (class_id, map) from a .npy with its sidecar.");
}
