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

#ifndef CAMREFINE_REFINE_LOSS_HPP_
#define CAMREFINE_REFINE_LOSS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "camrefine/core.hpp"

// Activation-aware mask refinement loss: pseudo-label cross entropy plus a
// background-vs-saliency BCE term weighted by alpha * (exp(tau) - 1), where
// tau is the conflict temperature between pseudo background and saliency.
namespace camrefine::loss {

// Segmentation logits, channel-major (C+1) x H x W; channel 0 is background.
struct PredictionTensor {
  PredictionTensor(int channels, int height, int width, std::vector<double> data);

  int channels;
  int height;
  int width;
  std::vector<double> data;

  double at(int channel, int row, int col) const {
    return data[(static_cast<std::size_t>(channel) * height + row) * width + col];
  }
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // same layout as the prediction
};

// Mean over non-ignored pixels of -log softmax(pred)[label].
LossAndGradient SegCrossEntropy(const PredictionTensor& pred, const LabelMap& pseudo);

// Mean BCE between softmax background probability and 1 - saliency.
LossAndGradient SaliencyBce(const PredictionTensor& pred, const SaliencyMap& saliency);

struct LossBreakdown {
  double l_seg = 0.0;
  double l_sal = 0.0;
  double tau = 0.0;
  double alpha = 0.0;
  double total = 0.0;
};

struct TotalLossResult {
  LossBreakdown breakdown;
  std::vector<double> gradient;
};

// alpha * (e^tau - 1).
double SaliencyWeight(double alpha, double tau);

// tau is measured from `pseudo` and `saliency` and held constant.
TotalLossResult TotalLoss(const PredictionTensor& pred, const LabelMap& pseudo,
                          const SaliencyMap& saliency, double alpha);

// Same, with tau supplied by the caller (e.g. measured over a whole batch).
TotalLossResult TotalLossWithTau(const PredictionTensor& pred, const LabelMap& pseudo,
                                 const SaliencyMap& saliency, double alpha, double tau);

struct LossInstance {
  PredictionTensor pred;
  LabelMap pseudo;
  SaliencyMap saliency;
};

// Gaussian logits, uniform labels with a few ignored pixels, uniform saliency.
// With `zero_tau` the pseudo background is made to equal the salient region
// exactly, which drives tau to 0.
LossInstance RandomInstance(std::uint64_t seed, int classes, int height, int width,
                            bool zero_tau = false);

struct GradientCheck {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
};

// Central differences on every logit of TotalLoss with tau held fixed.
// Relative error per entry is |a - n| / max(|a|, |n|, 1e-6).
GradientCheck CheckTotalLossGradient(const LossInstance& instance, double alpha,
                                     double step);

}  // namespace camrefine::loss

#endif  // CAMREFINE_REFINE_LOSS_HPP_
