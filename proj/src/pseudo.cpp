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

#include "camrefine/pseudo.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "camrefine/errors.hpp"
#include "camrefine/metrics.hpp"
#include "camrefine/parallel.hpp"

namespace camrefine::pseudo {

LabelMap GeneratePseudoLabels(std::span<const ResponseMap> maps, float bg_threshold) {
  if (maps.empty()) throw Error(ErrorCode::kContract, "no response maps given");
  if (!(bg_threshold >= 0.0f && bg_threshold <= 1.0f)) {
    throw Error(ErrorCode::kContract, "background threshold must lie in [0,1]");
  }
  const int height = maps.front().height();
  const int width = maps.front().width();
  std::vector<std::size_t> order(maps.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return maps[a].class_id() < maps[b].class_id();
  });
  for (std::size_t i = 0; i < order.size(); ++i) {
    const ResponseMap& m = maps[order[i]];
    if (m.height() != height || m.width() != width) {
      throw Error(ErrorCode::kDimension, "response maps differ in size");
    }
    if (m.class_id() < 0 || m.class_id() > 253) {
      throw Error(ErrorCode::kContract,
                  "class id " + std::to_string(m.class_id()) + " cannot be labelled");
    }
    if (i > 0 && maps[order[i - 1]].class_id() == m.class_id()) {
      throw Error(ErrorCode::kContract, "duplicate class id in response maps");
    }
  }

  LabelMap labels(height, width, std::uint8_t{0});
  for (std::size_t p = 0; p < labels.data.size(); ++p) {
    float best = bg_threshold;
    int label = 0;
    for (std::size_t idx : order) {
      const float v = maps[idx].data()[p];
      if (v > best || (label == 0 && v == best)) {
        best = v;
        label = maps[idx].class_id() + 1;
      }
    }
    labels.data[p] = static_cast<std::uint8_t>(label);
  }
  return labels;
}

std::vector<float> DefaultThresholdGrid() {
  std::vector<float> grid;
  for (int k = 1; k <= 19; ++k) grid.push_back(static_cast<float>(k / 20.0));
  return grid;
}

ThresholdSweepResult SweepBestMiou(std::span<const SweepSample> samples,
                                   std::span<const float> thresholds, int classes,
                                   int workers) {
  if (thresholds.empty()) throw Error(ErrorCode::kContract, "threshold list is empty");
  for (float t : thresholds) {
    if (!(t >= 0.0f && t <= 1.0f)) {
      throw Error(ErrorCode::kContract, "thresholds must lie in [0,1]");
    }
  }
  for (const SweepSample& s : samples) {
    if (s.ground_truth == nullptr) {
      throw Error(ErrorCode::kContract, "sweep sample without ground truth");
    }
  }
  ThresholdSweepResult result;
  result.thresholds.assign(thresholds.begin(), thresholds.end());
  result.miou_per_threshold.resize(thresholds.size());
  ParallelFor(thresholds.size(), workers, [&](std::size_t t) {
    metrics::ConfusionMatrix cm(classes + 1);
    for (const SweepSample& s : samples) {
      const LabelMap& gt = *s.ground_truth;
      if (s.maps.empty()) {
        cm.Add(LabelMap(gt.height, gt.width, std::uint8_t{0}), gt);
      } else {
        cm.Add(GeneratePseudoLabels(s.maps, thresholds[t]), gt);
      }
    }
    result.miou_per_threshold[t] = metrics::MeanIou(cm);
  });
  std::size_t best = 0;
  for (std::size_t t = 1; t < thresholds.size(); ++t) {
    if (result.miou_per_threshold[t] > result.miou_per_threshold[best]) best = t;
  }
  result.best_threshold = result.thresholds[best];
  result.best_miou = result.miou_per_threshold[best];
  return result;
}

ThresholdSweepResult SweepBestMiou(std::span<const ResponseMap> maps,
                                   const LabelMap& ground_truth,
                                   std::span<const float> thresholds) {
  int classes = 1;
  for (const ResponseMap& m : maps) classes = std::max(classes, m.class_id() + 1);
  for (std::uint8_t g : ground_truth.data) {
    if (g != kIgnoreLabel) classes = std::max(classes, static_cast<int>(g));
  }
  const SweepSample sample{maps, &ground_truth};
  return SweepBestMiou(std::span<const SweepSample>(&sample, 1), thresholds, classes);
}

}  // namespace camrefine::pseudo
