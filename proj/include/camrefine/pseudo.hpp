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

#ifndef CAMREFINE_PSEUDO_HPP_
#define CAMREFINE_PSEUDO_HPP_

#include <span>
#include <vector>

#include "camrefine/core.hpp"

namespace camrefine::pseudo {

// Per-pixel argmax over a constant background score and the class maps.
// Label for class id c is c + 1. Foreground wins ties against background;
// among classes the lowest id wins.
LabelMap GeneratePseudoLabels(std::span<const ResponseMap> maps, float bg_threshold);

struct ThresholdSweepResult {
  std::vector<float> thresholds;
  std::vector<double> miou_per_threshold;
  float best_threshold = 0.0f;
  double best_miou = 0.0;
};

// 0.05, 0.10, ..., 0.95.
std::vector<float> DefaultThresholdGrid();

struct SweepSample {
  std::span<const ResponseMap> maps;
  const LabelMap* ground_truth = nullptr;
};

// One confusion matrix per threshold accumulated over every sample, of size
// classes + 1. The earliest threshold wins ties for the best score. A sample
// without maps predicts background everywhere.
ThresholdSweepResult SweepBestMiou(std::span<const SweepSample> samples,
                                   std::span<const float> thresholds, int classes,
                                   int workers = 1);

// Single-image form; the class count is taken from the maps and labels.
ThresholdSweepResult SweepBestMiou(std::span<const ResponseMap> maps,
                                   const LabelMap& ground_truth,
                                   std::span<const float> thresholds);

}  // namespace camrefine::pseudo

#endif  // CAMREFINE_PSEUDO_HPP_
