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

#ifndef CAMREFINE_BACKEND_HPP_
#define CAMREFINE_BACKEND_HPP_

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "camrefine/core.hpp"

namespace camrefine {

namespace onnx {
class Executor;
}

// Describes how to talk to a GAP+FC classifier stored as ONNX.
//
// Text format, one `key = value` per line, `#` starts a comment:
//
//   input                    = input          # graph input name
//   feature_output           = features       # 1 x K x h x w tensor
//   score_output             = scores         # 1 x C tensor
//   score_activation         = sigmoid        # sigmoid | none
//   weight_tensor            = fc.weight      # initializer holding w[c][k]
//   weight_layout            = class_by_unit  # class_by_unit | unit_by_class
//   classes                  = 20
//   units                    = 4096
//   mean                     = 0.485 0.456 0.406
//   std                      = 0.229 0.224 0.225
//   classification_threshold = 0.5
//   input_height             = 0              # 0 keeps the image size
//   input_width              = 0
struct ModelManifest {
  enum class WeightLayout { kClassByUnit, kUnitByClass };
  enum class ScoreActivation { kNone, kSigmoid };

  std::string input_name = "input";
  std::string feature_output;
  std::string score_output;
  ScoreActivation score_activation = ScoreActivation::kSigmoid;
  std::string weight_tensor;
  WeightLayout weight_layout = WeightLayout::kClassByUnit;
  int classes = 0;
  int units = 0;
  Rgb mean{0.0f, 0.0f, 0.0f};
  Rgb stddev{1.0f, 1.0f, 1.0f};
  float classification_threshold = 0.5f;
  int input_height = 0;
  int input_width = 0;

  static ModelManifest Parse(const std::string& text);
  static ModelManifest FromFile(const std::filesystem::path& path);
  std::string ToText() const;
};

// A loaded, never-modified classifier. Copies share the underlying graph.
class ClassifierHandle {
 public:
  ClassifierHandle(std::shared_ptr<const onnx::Executor> executor,
                   std::filesystem::path model_path, ModelManifest manifest,
                   ClassWeights weights);

  int class_count() const { return manifest_.classes; }
  int feature_unit_count() const { return manifest_.units; }
  const ClassWeights& class_weights() const { return weights_; }
  const ModelManifest& manifest() const { return manifest_; }
  const std::filesystem::path& model_path() const { return model_path_; }
  float classification_threshold() const {
    return manifest_.classification_threshold;
  }
  const onnx::Executor& executor() const { return *executor_; }

 private:
  std::shared_ptr<const onnx::Executor> executor_;
  std::filesystem::path model_path_;
  ModelManifest manifest_;
  ClassWeights weights_;
};

struct ForwardResult {
  ClassScores scores;
  FeatureStack features;
};

ClassifierHandle LoadModel(const std::filesystem::path& model_path,
                           const ModelManifest& manifest);

ForwardResult Forward(const ClassifierHandle& handle, const ImageTensor& image);

// Raw class activation map at feature resolution, clamped at zero.
ResponseMap ComputeCam(const FeatureStack& features, const ClassWeights& weights,
                       int class_id);

// Signed weighted sum before clamping. Only meant for tests of linearity.
std::vector<float> ComputeCamUnclamped(const FeatureStack& features,
                                       std::span<const float> class_weight_row);

// CAM lifted to image resolution and normalised: clamp, resize, normalise.
ResponseMap ClassConditionalMap(const ClassifierHandle& handle,
                                const ImageTensor& image, int class_id);

// Classes whose probability exceeds the handle's classification threshold.
std::vector<int> ClassesAboveThreshold(const ClassifierHandle& handle,
                                       const ClassScores& scores);

}  // namespace camrefine

#endif  // CAMREFINE_BACKEND_HPP_
