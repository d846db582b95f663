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

#ifndef CAMREFINE_CORE_HPP_
#define CAMREFINE_CORE_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace camrefine {

// Smallest side length, in pixels, of any split patch.
inline constexpr int kMinPatch = 32;

// Label value excluded from evaluation and losses.
inline constexpr std::uint8_t kIgnoreLabel = 255;

using Rgb = std::array<float, 3>;

struct Point {
  double row = 0.0;
  double col = 0.0;
};

// Axis-aligned rectangle; rows [top, top + height), cols [left, left + width).
struct Rect {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  int bottom() const { return top + height; }
  int right() const { return left + width; }
  bool Contains(int row, int col) const {
    return row >= top && row < bottom() && col >= left && col < right();
  }
  bool ContainsRect(const Rect& other) const {
    return other.top >= top && other.left >= left &&
           other.bottom() <= bottom() && other.right() <= right();
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

// RGB image in [0,1], row-major HWC. The per-channel mean is cached at
// construction and never changes, since the type is immutable.
class ImageTensor {
 public:
  ImageTensor(int height, int width, std::vector<float> data);

  static ImageTensor Filled(int height, int width, const Rgb& color);

  int height() const { return height_; }
  int width() const { return width_; }
  std::span<const float> data() const { return data_; }
  float at(int row, int col, int channel) const {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * 3 + channel];
  }
  const Rgb& mean_color() const { return mean_color_; }

  ImageTensor Crop(const Rect& rect) const;

 private:
  int height_;
  int width_;
  std::vector<float> data_;
  Rgb mean_color_{};
};

// Penultimate-layer activations, K x h x w.
struct FeatureStack {
  FeatureStack(int units, int height, int width, std::vector<float> data);

  int units;
  int height;
  int width;
  std::vector<float> data;

  float at(int unit, int row, int col) const {
    return data[(static_cast<std::size_t>(unit) * height + row) * width + col];
  }
};

// Final fully-connected weights, C x K, row-major by class.
struct ClassWeights {
  ClassWeights(int classes, int units, std::vector<float> data);

  int classes;
  int units;
  std::vector<float> data;

  float at(int class_id, int unit) const {
    return data[static_cast<std::size_t>(class_id) * units + unit];
  }
};

// Independent per-class probabilities.
struct ClassScores {
  explicit ClassScores(std::vector<float> probabilities);

  std::vector<float> probabilities;
};

// Non-negative per-class activation grid.
class ResponseMap {
 public:
  ResponseMap(int class_id, int height, int width, std::vector<float> data,
              bool normalized = false);

  static ResponseMap Zeros(int class_id, int height, int width);

  int class_id() const { return class_id_; }
  int height() const { return height_; }
  int width() const { return width_; }
  bool normalized() const { return normalized_; }
  std::span<const float> data() const { return data_; }
  float at(int row, int col) const {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  float Max() const;
  bool IsAllZero() const;

 private:
  int class_id_;
  int height_;
  int width_;
  std::vector<float> data_;
  bool normalized_;
};

// Class-index grid: 0 is background, 1..C foreground, kIgnoreLabel ignored.
struct LabelMap {
  LabelMap(int height, int width, std::vector<std::uint8_t> data);
  LabelMap(int height, int width, std::uint8_t fill);

  int height;
  int width;
  std::vector<std::uint8_t> data;

  std::uint8_t at(int row, int col) const {
    return data[static_cast<std::size_t>(row) * width + col];
  }
};

// Saliency probabilities in [0,1].
struct SaliencyMap {
  SaliencyMap(int height, int width, std::vector<float> data);

  int height;
  int width;
  std::vector<float> data;
};

// Corner-aligned bilinear resampling of a single-channel grid.
std::vector<float> ResizeBilinear(std::span<const float> data, int height,
                                  int width, int out_height, int out_width);

ResponseMap ResizeBilinear(const ResponseMap& map, int out_height,
                           int out_width);
SaliencyMap ResizeBilinear(const SaliencyMap& map, int out_height,
                           int out_width);

// Scales by the maximum so the peak becomes 1; all-zero maps pass through.
ResponseMap Normalize(const ResponseMap& map);

}  // namespace camrefine

#endif  // CAMREFINE_CORE_HPP_
