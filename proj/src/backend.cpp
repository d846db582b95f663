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

#include "camrefine/backend.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "camrefine/errors.hpp"
#include "camrefine/kv.hpp"
#include "camrefine/onnx_executor.hpp"

namespace camrefine {

namespace {

Rgb ParseTriple(const std::string& value, const std::string& key) {
  const auto parts = kv::SplitWhitespace(value);
  if (parts.size() != 3) {
    throw Error(ErrorCode::kConfig, key + " needs three values, got: " + value);
  }
  Rgb out{};
  for (int i = 0; i < 3; ++i) {
    out[i] = static_cast<float>(kv::ParseDouble(parts[i], key));
  }
  return out;
}

std::string FormatTriple(const Rgb& v) {
  return kv::FormatFloat(v[0]) + " " + kv::FormatFloat(v[1]) + " " +
         kv::FormatFloat(v[2]);
}

}  // namespace

ModelManifest ModelManifest::Parse(const std::string& text) {
  std::map<std::string, std::string> entries;
  try {
    entries = kv::Parse(text, "manifest");
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  ModelManifest m;
  auto take = [&](const std::string& key) -> std::string* {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };
  auto require = [&](const std::string& key) -> const std::string& {
    const std::string* v = take(key);
    if (v == nullptr || v->empty()) {
      throw Error(ErrorCode::kConfig, "manifest is missing " + key);
    }
    return *v;
  };
  try {
    if (auto* v = take("input")) m.input_name = *v;
    m.feature_output = require("feature_output");
    m.score_output = require("score_output");
    m.weight_tensor = require("weight_tensor");
    m.classes = static_cast<int>(kv::ParseInt(require("classes"), "classes"));
    m.units = static_cast<int>(kv::ParseInt(require("units"), "units"));
    if (auto* v = take("score_activation")) {
      if (*v == "sigmoid") {
        m.score_activation = ScoreActivation::kSigmoid;
      } else if (*v == "none") {
        m.score_activation = ScoreActivation::kNone;
      } else {
        throw Error(ErrorCode::kConfig, "unknown score_activation " + *v);
      }
    }
    if (auto* v = take("weight_layout")) {
      if (*v == "class_by_unit") {
        m.weight_layout = WeightLayout::kClassByUnit;
      } else if (*v == "unit_by_class") {
        m.weight_layout = WeightLayout::kUnitByClass;
      } else {
        throw Error(ErrorCode::kConfig, "unknown weight_layout " + *v);
      }
    }
    if (auto* v = take("mean")) m.mean = ParseTriple(*v, "mean");
    if (auto* v = take("std")) m.stddev = ParseTriple(*v, "std");
    if (auto* v = take("classification_threshold")) {
      m.classification_threshold =
          static_cast<float>(kv::ParseDouble(*v, "classification_threshold"));
    }
    if (auto* v = take("input_height")) {
      m.input_height = static_cast<int>(kv::ParseInt(*v, "input_height"));
    }
    if (auto* v = take("input_width")) {
      m.input_width = static_cast<int>(kv::ParseInt(*v, "input_width"));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    throw Error(ErrorCode::kConfig, e.what());
  }
  if (m.classes < 1 || m.units < 1) {
    throw Error(ErrorCode::kConfig, "manifest classes and units must be positive");
  }
  if (!(m.classification_threshold > 0.0f && m.classification_threshold < 1.0f)) {
    throw Error(ErrorCode::kConfig, "classification_threshold must lie in (0,1)");
  }
  for (float s : m.stddev) {
    if (!(s > 0.0f)) throw Error(ErrorCode::kConfig, "std entries must be positive");
  }
  if (m.input_height < 0 || m.input_width < 0 ||
      (m.input_height == 0) != (m.input_width == 0)) {
    throw Error(ErrorCode::kConfig,
                "input_height and input_width must both be zero or both positive");
  }
  return m;
}

ModelManifest ModelManifest::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot read manifest " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return Parse(buffer.str());
}

std::string ModelManifest::ToText() const {
  return kv::Format({
      {"input", input_name},
      {"feature_output", feature_output},
      {"score_output", score_output},
      {"score_activation",
       score_activation == ScoreActivation::kSigmoid ? "sigmoid" : "none"},
      {"weight_tensor", weight_tensor},
      {"weight_layout",
       weight_layout == WeightLayout::kClassByUnit ? "class_by_unit" : "unit_by_class"},
      {"classes", std::to_string(classes)},
      {"units", std::to_string(units)},
      {"mean", FormatTriple(mean)},
      {"std", FormatTriple(stddev)},
      {"classification_threshold", kv::FormatFloat(classification_threshold)},
      {"input_height", std::to_string(input_height)},
      {"input_width", std::to_string(input_width)},
  });
}

ClassifierHandle::ClassifierHandle(std::shared_ptr<const onnx::Executor> executor,
                                   std::filesystem::path model_path,
                                   ModelManifest manifest, ClassWeights weights)
    : executor_(std::move(executor)), model_path_(std::move(model_path)),
      manifest_(std::move(manifest)), weights_(std::move(weights)) {
  if (weights_.classes != manifest_.classes || weights_.units != manifest_.units) {
    throw Error(ErrorCode::kMalformedModel, "class weights do not match manifest C/K");
  }
}

ClassifierHandle LoadModel(const std::filesystem::path& model_path,
                           const ModelManifest& manifest) {
  auto executor = std::make_shared<const onnx::Executor>(
      onnx::Executor::FromFile(model_path));
  const std::string where = " in " + model_path.string();
  for (const auto* name : {&manifest.input_name, &manifest.feature_output,
                           &manifest.score_output, &manifest.weight_tensor}) {
    if (!executor->HasValue(*name)) {
      throw Error(ErrorCode::kMalformedModel,
                  "manifest names tensor '" + *name + "' absent from graph" + where);
    }
  }
  const onnx::Tensor* w = executor->Initializer(manifest.weight_tensor);
  if (w == nullptr || w->is_int) {
    throw Error(ErrorCode::kMalformedModel,
                "weight tensor '" + manifest.weight_tensor +
                    "' is not a float initializer" + where);
  }
  // Accept C x K, K x C, or a 1x1 convolution kernel C x K x 1 x 1.
  std::vector<std::int64_t> dims;
  for (std::size_t i = 0; i < w->shape.size(); ++i) {
    if (i >= 2 && w->shape[i] == 1) continue;
    dims.push_back(w->shape[i]);
  }
  const bool class_major =
      manifest.weight_layout == ModelManifest::WeightLayout::kClassByUnit;
  const std::int64_t rows = class_major ? manifest.classes : manifest.units;
  const std::int64_t cols = class_major ? manifest.units : manifest.classes;
  if (dims.size() != 2 || dims[0] != rows || dims[1] != cols) {
    std::string shape;
    for (auto d : w->shape) shape += (shape.empty() ? "" : "x") + std::to_string(d);
    throw Error(ErrorCode::kMalformedModel,
                "weight tensor shape " + shape + " does not match C=" +
                    std::to_string(manifest.classes) + ", K=" +
                    std::to_string(manifest.units) + where);
  }
  std::vector<float> data(static_cast<std::size_t>(manifest.classes) * manifest.units);
  for (int c = 0; c < manifest.classes; ++c) {
    for (int k = 0; k < manifest.units; ++k) {
      data[static_cast<std::size_t>(c) * manifest.units + k] =
          class_major ? w->data[static_cast<std::size_t>(c) * manifest.units + k]
                      : w->data[static_cast<std::size_t>(k) * manifest.classes + c];
    }
  }
  return ClassifierHandle(std::move(executor), model_path, manifest,
                          ClassWeights(manifest.classes, manifest.units, std::move(data)));
}

ForwardResult Forward(const ClassifierHandle& handle, const ImageTensor& image) {
  const ModelManifest& m = handle.manifest();
  const int height = m.input_height > 0 ? m.input_height : image.height();
  const int width = m.input_width > 0 ? m.input_width : image.width();
  const std::size_t plane = static_cast<std::size_t>(height) * width;

  onnx::Tensor input;
  input.shape = {1, 3, height, width};
  input.data.resize(plane * 3);
  for (int c = 0; c < 3; ++c) {
    std::vector<float> channel(static_cast<std::size_t>(image.height()) * image.width());
    for (int r = 0; r < image.height(); ++r) {
      for (int col = 0; col < image.width(); ++col) {
        channel[static_cast<std::size_t>(r) * image.width() + col] = image.at(r, col, c);
      }
    }
    if (height != image.height() || width != image.width()) {
      channel = ResizeBilinear(channel, image.height(), image.width(), height, width);
    }
    for (std::size_t i = 0; i < plane; ++i) {
      input.data[c * plane + i] = (channel[i] - m.mean[c]) / m.stddev[c];
    }
  }

  std::map<std::string, onnx::Tensor> outputs;
  try {
    outputs = handle.executor().Run({{m.input_name, std::move(input)}},
                                    {m.feature_output, m.score_output});
  } catch (const Error& e) {
    throw Error(ErrorCode::kBackend,
                std::string(e.what()) + " (model " + handle.model_path().string() + ")");
  }

  const onnx::Tensor& feat = outputs.at(m.feature_output);
  const onnx::Tensor& score = outputs.at(m.score_output);
  const std::string where = " (model " + handle.model_path().string() + ")";
  if (feat.shape.size() != 4 || feat.shape[0] != 1 || feat.shape[1] != m.units) {
    throw Error(ErrorCode::kBackend,
                "feature output must be 1 x K x h x w with K=" +
                    std::to_string(m.units) + where);
  }
  if (score.NumElements() != m.classes) {
    throw Error(ErrorCode::kBackend,
                "score output must hold C=" + std::to_string(m.classes) + " values" + where);
  }
  std::vector<float> probabilities(score.data.begin(), score.data.end());
  for (float& p : probabilities) {
    if (m.score_activation == ModelManifest::ScoreActivation::kSigmoid) {
      p = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(p))));
    }
    if (!std::isfinite(p)) throw Error(ErrorCode::kBackend, "non-finite score" + where);
  }
  try {
    return ForwardResult{
        ClassScores(std::move(probabilities)),
        FeatureStack(m.units, static_cast<int>(feat.shape[2]),
                     static_cast<int>(feat.shape[3]), feat.data)};
  } catch (const Error& e) {
    throw Error(ErrorCode::kBackend, std::string(e.what()) + where);
  }
}

std::vector<float> ComputeCamUnclamped(const FeatureStack& features,
                                       std::span<const float> class_weight_row) {
  if (static_cast<int>(class_weight_row.size()) != features.units) {
    throw Error(ErrorCode::kDimension,
                "unit count mismatch: features have " + std::to_string(features.units) +
                    ", weights have " + std::to_string(class_weight_row.size()));
  }
  const std::size_t plane = static_cast<std::size_t>(features.height) * features.width;
  std::vector<double> acc(plane, 0.0);
  for (int k = 0; k < features.units; ++k) {
    const double w = class_weight_row[k];
    if (w == 0.0) continue;
    const float* f = features.data.data() + k * plane;
    for (std::size_t i = 0; i < plane; ++i) acc[i] += w * f[i];
  }
  return std::vector<float>(acc.begin(), acc.end());
}

ResponseMap ComputeCam(const FeatureStack& features, const ClassWeights& weights,
                       int class_id) {
  if (class_id < 0 || class_id >= weights.classes) {
    throw Error(ErrorCode::kContract, "class id " + std::to_string(class_id) +
                                          " out of range for " +
                                          std::to_string(weights.classes) + " classes");
  }
  if (features.units != weights.units) {
    throw Error(ErrorCode::kDimension,
                "unit count mismatch: features have " + std::to_string(features.units) +
                    ", weights have " + std::to_string(weights.units));
  }
  std::span<const float> row(weights.data.data() +
                                 static_cast<std::size_t>(class_id) * weights.units,
                             static_cast<std::size_t>(weights.units));
  std::vector<float> cam = ComputeCamUnclamped(features, row);
  for (float& v : cam) v = v > 0.0f ? v : 0.0f;
  return ResponseMap(class_id, features.height, features.width, std::move(cam));
}

ResponseMap ClassConditionalMap(const ClassifierHandle& handle,
                                const ImageTensor& image, int class_id) {
  const ForwardResult result = Forward(handle, image);
  const ResponseMap cam = ComputeCam(result.features, handle.class_weights(), class_id);
  return Normalize(ResizeBilinear(cam, image.height(), image.width()));
}

std::vector<int> ClassesAboveThreshold(const ClassifierHandle& handle,
                                       const ClassScores& scores) {
  std::vector<int> out;
  for (std::size_t c = 0; c < scores.probabilities.size(); ++c) {
    if (scores.probabilities[c] > handle.classification_threshold()) {
      out.push_back(static_cast<int>(c));
    }
  }
  return out;
}

}  // namespace camrefine
