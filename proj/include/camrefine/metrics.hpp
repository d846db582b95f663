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

#ifndef CAMREFINE_METRICS_HPP_
#define CAMREFINE_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "camrefine/core.hpp"

namespace camrefine::metrics {

// Rows are ground truth, columns prediction; index 0 is background.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int size);

  int size() const { return size_; }
  std::uint64_t at(int gt, int pred) const {
    return counts_[static_cast<std::size_t>(gt) * size_ + pred];
  }
  std::uint64_t Total() const;

  // Adds one count per non-ignored pixel. Labels outside [0, size) other
  // than the ignore index are rejected before anything is counted.
  void Add(const LabelMap& pred, const LabelMap& gt);

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  ConfusionMatrix Transposed() const;

  // IoU per class; nullopt when the class is absent from both axes.
  std::vector<std::optional<double>> PerClassIou() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  int size_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix Accumulate(ConfusionMatrix cm, const LabelMap& pred, const LabelMap& gt);

// Mean over classes present in prediction or ground truth.
double MeanIou(const ConfusionMatrix& cm);

// Fraction of foreground ground-truth pixels whose class map is positive.
struct RecallCounts {
  std::uint64_t hits = 0;
  std::uint64_t foreground = 0;

  // `maps` are looked up by class id; label l corresponds to class l - 1.
  void Add(std::span<const ResponseMap> maps, const LabelMap& gt);
  double Recall() const;
};

double ActivatedRecall(std::span<const ResponseMap> maps, const LabelMap& gt);

struct ImageEvaluation {
  ConfusionMatrix cm;
  int class_count = 0;
};

// Buckets: index 0 holds images with at most one class, 1 two classes,
// 2 three or more.
struct ClassCountBreakdown {
  std::vector<ConfusionMatrix> buckets;
  std::vector<std::size_t> images;
  ConfusionMatrix overall;

  std::optional<double> BucketMiou(int bucket) const;
  double OverallMiou() const { return MeanIou(overall); }
};

ClassCountBreakdown BreakdownByClassCount(std::span<const ImageEvaluation> images,
                                          int matrix_size);

// Mean of the two binary IoUs between the pseudo-label background and the
// non-salient region (saliency < 0.5). Ignored pseudo pixels are skipped;
// a side that is empty in both masks is left out of the mean.
double ConflictTemperature(const LabelMap& pseudo, const SaliencyMap& saliency);

}  // namespace camrefine::metrics

#endif  // CAMREFINE_METRICS_HPP_
