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

#include "camrefine/metrics.hpp"

#include <string>

#include "camrefine/errors.hpp"

namespace camrefine::metrics {

ConfusionMatrix::ConfusionMatrix(int size)
    : size_(size), counts_(static_cast<std::size_t>(size > 0 ? size : 0) * size, 0) {
  if (size < 2) {
    throw Error(ErrorCode::kContract, "confusion matrix needs background plus a class");
  }
}

std::uint64_t ConfusionMatrix::Total() const {
  std::uint64_t total = 0;
  for (auto c : counts_) total += c;
  return total;
}

void ConfusionMatrix::Add(const LabelMap& pred, const LabelMap& gt) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw Error(ErrorCode::kDimension,
                "prediction " + std::to_string(pred.height) + "x" +
                    std::to_string(pred.width) + " vs ground truth " +
                    std::to_string(gt.height) + "x" + std::to_string(gt.width));
  }
  for (std::size_t i = 0; i < gt.data.size(); ++i) {
    const int g = gt.data[i];
    if (g == kIgnoreLabel) continue;
    const int p = pred.data[i];
    if (g >= size_ || p >= size_) {
      throw Error(ErrorCode::kContract,
                  "label " + std::to_string(g >= size_ ? g : p) +
                      " out of range for " + std::to_string(size_) + " classes");
    }
  }
  for (std::size_t i = 0; i < gt.data.size(); ++i) {
    const int g = gt.data[i];
    if (g == kIgnoreLabel) continue;
    ++counts_[static_cast<std::size_t>(g) * size_ + pred.data[i]];
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.size_ != size_) {
    throw Error(ErrorCode::kDimension, "confusion matrix sizes differ");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix ConfusionMatrix::Transposed() const {
  ConfusionMatrix t(size_);
  for (int r = 0; r < size_; ++r) {
    for (int c = 0; c < size_; ++c) {
      t.counts_[static_cast<std::size_t>(c) * size_ + r] = at(r, c);
    }
  }
  return t;
}

std::vector<std::optional<double>> ConfusionMatrix::PerClassIou() const {
  std::vector<std::optional<double>> iou(size_);
  for (int k = 0; k < size_; ++k) {
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    for (int j = 0; j < size_; ++j) {
      row += at(k, j);
      col += at(j, k);
    }
    const std::uint64_t diag = at(k, k);
    const std::uint64_t uni = row + col - diag;
    if (uni > 0) iou[k] = static_cast<double>(diag) / static_cast<double>(uni);
  }
  return iou;
}

ConfusionMatrix Accumulate(ConfusionMatrix cm, const LabelMap& pred, const LabelMap& gt) {
  cm.Add(pred, gt);
  return cm;
}

double MeanIou(const ConfusionMatrix& cm) {
  double sum = 0.0;
  int included = 0;
  for (const auto& v : cm.PerClassIou()) {
    if (v) {
      sum += *v;
      ++included;
    }
  }
  if (included == 0) {
    throw Error(ErrorCode::kUndefinedMetric, "mIoU undefined: no class observed");
  }
  return sum / included;
}

void RecallCounts::Add(std::span<const ResponseMap> maps, const LabelMap& gt) {
  for (const ResponseMap& m : maps) {
    if (m.height() != gt.height || m.width() != gt.width) {
      throw Error(ErrorCode::kDimension, "response map and ground truth sizes differ");
    }
  }
  for (std::size_t i = 0; i < gt.data.size(); ++i) {
    const int g = gt.data[i];
    if (g == 0 || g == kIgnoreLabel) continue;
    ++foreground;
    for (const ResponseMap& m : maps) {
      if (m.class_id() == g - 1) {
        if (m.data()[i] > 0.0f) ++hits;
        break;
      }
    }
  }
}

double RecallCounts::Recall() const {
  if (foreground == 0) {
    throw Error(ErrorCode::kUndefinedMetric, "recall undefined: no foreground pixels");
  }
  return static_cast<double>(hits) / static_cast<double>(foreground);
}

double ActivatedRecall(std::span<const ResponseMap> maps, const LabelMap& gt) {
  RecallCounts counts;
  counts.Add(maps, gt);
  return counts.Recall();
}

std::optional<double> ClassCountBreakdown::BucketMiou(int bucket) const {
  if (images.at(bucket) == 0 || buckets.at(bucket).Total() == 0) return std::nullopt;
  return MeanIou(buckets[bucket]);
}

ClassCountBreakdown BreakdownByClassCount(std::span<const ImageEvaluation> images,
                                          int matrix_size) {
  ClassCountBreakdown out{
      {ConfusionMatrix(matrix_size), ConfusionMatrix(matrix_size),
       ConfusionMatrix(matrix_size)},
      {0, 0, 0},
      ConfusionMatrix(matrix_size)};
  for (const ImageEvaluation& image : images) {
    const int bucket = image.class_count <= 1 ? 0 : (image.class_count == 2 ? 1 : 2);
    out.buckets[bucket] += image.cm;
    ++out.images[bucket];
    out.overall += image.cm;
  }
  return out;
}

double ConflictTemperature(const LabelMap& pseudo, const SaliencyMap& saliency) {
  if (pseudo.height != saliency.height || pseudo.width != saliency.width) {
    throw Error(ErrorCode::kDimension, "pseudo label and saliency sizes differ");
  }
  // counts[b][n]: b = pseudo background, n = non-salient.
  std::uint64_t counts[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < pseudo.data.size(); ++i) {
    if (pseudo.data[i] == kIgnoreLabel) continue;
    const int background = pseudo.data[i] == 0 ? 1 : 0;
    const int non_salient = saliency.data[i] < 0.5f ? 1 : 0;
    ++counts[background][non_salient];
  }
  double sum = 0.0;
  int included = 0;
  for (int side = 0; side < 2; ++side) {
    const std::uint64_t inter = counts[side][side];
    const std::uint64_t uni = inter + counts[side][1 - side] + counts[1 - side][side];
    if (uni == 0) continue;
    sum += static_cast<double>(inter) / static_cast<double>(uni);
    ++included;
  }
  return included == 0 ? 0.0 : sum / included;
}

}  // namespace camrefine::metrics
