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

#include "camrefine/refine_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "camrefine/errors.hpp"
#include "camrefine/metrics.hpp"

namespace camrefine::loss {

namespace {

// log(sum_{j in [first, channels)} exp(z_j)) at one pixel.
double LogSumExp(const PredictionTensor& pred, std::size_t pixel, int first) {
  const std::size_t plane = static_cast<std::size_t>(pred.height) * pred.width;
  double peak = -std::numeric_limits<double>::infinity();
  for (int j = first; j < pred.channels; ++j) {
    peak = std::max(peak, pred.data[j * plane + pixel]);
  }
  double sum = 0.0;
  for (int j = first; j < pred.channels; ++j) {
    sum += std::exp(pred.data[j * plane + pixel] - peak);
  }
  return peak + std::log(sum);
}

void CheckSize(const PredictionTensor& pred, int height, int width, const char* what) {
  if (pred.height != height || pred.width != width) {
    throw Error(ErrorCode::kDimension,
                std::string("prediction and ") + what + " sizes differ");
  }
}

}  // namespace

PredictionTensor::PredictionTensor(int channels_in, int height_in, int width_in,
                                   std::vector<double> data_in)
    : channels(channels_in), height(height_in), width(width_in),
      data(std::move(data_in)) {
  if (channels < 2 || height < 1 || width < 1) {
    throw Error(ErrorCode::kDimension,
                "prediction needs at least 2 channels and 1x1 pixels");
  }
  if (data.size() != static_cast<std::size_t>(channels) * height * width) {
    throw Error(ErrorCode::kDimension, "prediction data length mismatch");
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kContract, "non-finite logit");
  }
}

LossAndGradient SegCrossEntropy(const PredictionTensor& pred, const LabelMap& pseudo) {
  CheckSize(pred, pseudo.height, pseudo.width, "pseudo label");
  const std::size_t plane = static_cast<std::size_t>(pred.height) * pred.width;
  std::size_t valid = 0;
  for (std::uint8_t l : pseudo.data) {
    if (l == kIgnoreLabel) continue;
    if (l >= pred.channels) {
      throw Error(ErrorCode::kContract, "pseudo label " + std::to_string(l) +
                                            " exceeds prediction channels");
    }
    ++valid;
  }
  if (valid == 0) {
    throw Error(ErrorCode::kUndefinedLoss, "every pixel is ignored");
  }
  const double scale = 1.0 / static_cast<double>(valid);
  LossAndGradient out;
  out.gradient.assign(pred.data.size(), 0.0);
  double total = 0.0;
  for (std::size_t p = 0; p < plane; ++p) {
    const int label = pseudo.data[p];
    if (label == kIgnoreLabel) continue;
    const double lse = LogSumExp(pred, p, 0);
    total += lse - pred.data[label * plane + p];
    for (int j = 0; j < pred.channels; ++j) {
      const double softmax = std::exp(pred.data[j * plane + p] - lse);
      out.gradient[j * plane + p] = scale * (softmax - (j == label ? 1.0 : 0.0));
    }
  }
  out.loss = total * scale;
  return out;
}

LossAndGradient SaliencyBce(const PredictionTensor& pred, const SaliencyMap& saliency) {
  CheckSize(pred, saliency.height, saliency.width, "saliency");
  const std::size_t plane = static_cast<std::size_t>(pred.height) * pred.width;
  const double scale = 1.0 / static_cast<double>(plane);
  LossAndGradient out;
  out.gradient.assign(pred.data.size(), 0.0);
  double total = 0.0;
  for (std::size_t p = 0; p < plane; ++p) {
    const double target = 1.0 - static_cast<double>(saliency.data[p]);
    const double lse_all = LogSumExp(pred, p, 0);
    const double lse_fg = LogSumExp(pred, p, 1);
    const double log_p = pred.data[p] - lse_all;
    const double log_not_p = lse_fg - lse_all;
    const double prob = std::exp(log_p);
    total -= target * log_p + (1.0 - target) * log_not_p;
    // d/dz_0 = p - t; d/dz_j = -(p - t) * softmax_j / (1 - p) for j >= 1.
    const double residual = prob - target;
    out.gradient[p] = scale * residual;
    for (int j = 1; j < pred.channels; ++j) {
      const double share = std::exp(pred.data[j * plane + p] - lse_fg);
      out.gradient[j * plane + p] = -scale * residual * share;
    }
  }
  out.loss = total * scale;
  return out;
}

double SaliencyWeight(double alpha, double tau) { return alpha * std::expm1(tau); }

TotalLossResult TotalLossWithTau(const PredictionTensor& pred, const LabelMap& pseudo,
                                 const SaliencyMap& saliency, double alpha, double tau) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kContract, "alpha must be positive");
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw Error(ErrorCode::kContract, "tau must lie in [0,1]");
  }
  const LossAndGradient seg = SegCrossEntropy(pred, pseudo);
  const LossAndGradient sal = SaliencyBce(pred, saliency);
  const double weight = SaliencyWeight(alpha, tau);
  TotalLossResult out;
  out.breakdown = {seg.loss, sal.loss, tau, alpha, seg.loss + weight * sal.loss};
  out.gradient.resize(seg.gradient.size());
  for (std::size_t i = 0; i < out.gradient.size(); ++i) {
    out.gradient[i] = seg.gradient[i] + weight * sal.gradient[i];
  }
  return out;
}

TotalLossResult TotalLoss(const PredictionTensor& pred, const LabelMap& pseudo,
                          const SaliencyMap& saliency, double alpha) {
  return TotalLossWithTau(pred, pseudo, saliency, alpha,
                          metrics::ConflictTemperature(pseudo, saliency));
}

LossInstance RandomInstance(std::uint64_t seed, int classes, int height, int width,
                            bool zero_tau) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> logit(0.0, 1.5);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::uniform_int_distribution<int> label(0, classes);
  const std::size_t plane = static_cast<std::size_t>(height) * width;

  std::vector<double> logits(plane * (classes + 1));
  for (double& v : logits) v = logit(rng);
  std::vector<float> sal(plane);
  for (float& v : sal) v = unit(rng);
  std::vector<std::uint8_t> labels(plane);
  for (std::size_t p = 0; p < plane; ++p) {
    if (zero_tau) {
      labels[p] = sal[p] >= 0.5f
                      ? 0
                      : static_cast<std::uint8_t>(1 + label(rng) % classes);
    } else {
      labels[p] = unit(rng) < 0.1f ? kIgnoreLabel : static_cast<std::uint8_t>(label(rng));
    }
  }
  if (!zero_tau && std::all_of(labels.begin(), labels.end(),
                               [](std::uint8_t l) { return l == kIgnoreLabel; })) {
    labels[0] = 0;
  }
  return {PredictionTensor(classes + 1, height, width, std::move(logits)),
          LabelMap(height, width, std::move(labels)),
          SaliencyMap(height, width, std::move(sal))};
}

GradientCheck CheckTotalLossGradient(const LossInstance& instance, double alpha,
                                     double step) {
  const double tau = metrics::ConflictTemperature(instance.pseudo, instance.saliency);
  const TotalLossResult analytic =
      TotalLossWithTau(instance.pred, instance.pseudo, instance.saliency, alpha, tau);
  GradientCheck result;
  PredictionTensor probe = instance.pred;
  for (std::size_t i = 0; i < probe.data.size(); ++i) {
    const double original = probe.data[i];
    probe.data[i] = original + step;
    const double up =
        TotalLossWithTau(probe, instance.pseudo, instance.saliency, alpha, tau)
            .breakdown.total;
    probe.data[i] = original - step;
    const double down =
        TotalLossWithTau(probe, instance.pseudo, instance.saliency, alpha, tau)
            .breakdown.total;
    probe.data[i] = original;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic.gradient[i];
    const double abs_err = std::abs(a - numeric);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
    result.max_relative_error = std::max(result.max_relative_error, abs_err / denom);
  }
  return result;
}

}  // namespace camrefine::loss
