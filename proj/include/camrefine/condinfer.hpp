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

#ifndef CAMREFINE_CONDINFER_HPP_
#define CAMREFINE_CONDINFER_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "camrefine/backend.hpp"
#include "camrefine/core.hpp"
#include "camrefine/errors.hpp"

// Class-conditional inference: split & unite augmentation and iterative
// erase-and-reinfer, run against a fixed classifier.
namespace camrefine::condinfer {

enum class SplitMode { kSingleClass, kTwoClass, kMultiClass };

const char* SplitModeName(SplitMode mode);

struct SplitSpec {
  std::vector<Rect> patches;
  SplitMode mode = SplitMode::kSingleClass;
  // Central rectangle shared by every patch (two-class mode only).
  std::optional<Rect> overlap;
};

struct RefinementConfig {
  float erase_threshold = 0.7f;
  float stop_fraction = 0.01f;
  int max_iterations = 8;
  // A pixel counts as activated once the accumulated map exceeds this.
  float activation_floor = 0.0f;

  void Validate() const;
};

struct IterationRecord {
  int iteration = 0;
  // Pixels erased after this pass; 0 when the loop stopped here.
  int erased_pixels = 0;
  int newly_activated = 0;
  std::vector<std::uint8_t> erased_mask;
  std::shared_ptr<const ResponseMap> accumulated;
};

struct IterationTrace {
  std::vector<IterationRecord> records;
  bool stopped_by_rule = false;
};

// Raised when a backend call fails mid-loop; carries the completed passes.
class IterationError : public Error {
 public:
  IterationError(const Error& cause, IterationTrace partial)
      : Error(cause.code(), cause.what()), partial_(std::move(partial)) {}
  const IterationTrace& partial_trace() const { return partial_; }

 private:
  IterationTrace partial_;
};

// Activation-weighted centroid; the geometric centre for an all-zero map.
Point CenterOfMass(const ResponseMap& map);

SplitSpec SplitSingleClass(int image_height, int image_width, Point center);
SplitSpec SplitTwoClass(int image_height, int image_width, Point center_a,
                        Point center_b);
std::vector<std::pair<int, SplitSpec>> SplitMultiClass(
    int image_height, int image_width,
    const std::vector<std::pair<int, Point>>& centers);

struct PatchMap {
  ResponseMap map;
  Rect rect;
};

// Max over every patch covering a pixel, then normalised. The output extent
// is the bounding box of the rectangles, anchored at the origin.
ResponseMap MergeSplits(std::span<const PatchMap> patches);

struct EraseResult {
  ImageTensor image;
  std::vector<std::uint8_t> mask;
  int erased = 0;
};

// Replaces every pixel whose normalised activation is >= threshold by `fill`.
EraseResult EraseHighActivation(const ImageTensor& image, const ResponseMap& map,
                                float threshold, const Rgb& fill);
EraseResult EraseHighActivation(const ImageTensor& image, const ResponseMap& map,
                                float threshold);

struct IterativeResult {
  ResponseMap map;
  IterationTrace trace;
};

// Erasure fills with `fill` when given, otherwise with the image's own mean.
IterativeResult IterativeInfer(const ClassifierHandle& handle,
                               const ImageTensor& image, int class_id,
                               const RefinementConfig& config,
                               std::optional<Rgb> fill = std::nullopt);

struct PipelineOptions {
  RefinementConfig refinement;
  bool split = true;
  int workers = 1;
};

struct PatchTrace {
  Rect rect;
  IterationTrace trace;
};

struct ClassResult {
  int class_id = 0;
  ResponseMap map;
  ResponseMap baseline;
  std::optional<SplitSpec> split;
  std::vector<PatchTrace> patches;
  // Set when splitting was impossible and the whole image was used instead.
  std::string fallback_reason;
};

struct PipelineResult {
  std::vector<ClassResult> classes;
};

PipelineResult RunPipeline(const ClassifierHandle& handle, const ImageTensor& image,
                           const std::vector<int>& present_classes,
                           const PipelineOptions& options);

}  // namespace camrefine::condinfer

#endif  // CAMREFINE_CONDINFER_HPP_
