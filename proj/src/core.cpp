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

#include "camrefine/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "camrefine/errors.hpp"

namespace camrefine {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimension: return "dimension error";
    case ErrorCode::kContract: return "contract violation";
    case ErrorCode::kMissingFile: return "missing file";
    case ErrorCode::kMalformedModel: return "malformed model";
    case ErrorCode::kBackend: return "backend error";
    case ErrorCode::kSplitDegenerate: return "split degenerate";
    case ErrorCode::kMergeCoverage: return "merge coverage error";
    case ErrorCode::kUndefinedMetric: return "undefined metric";
    case ErrorCode::kUndefinedLoss: return "undefined loss";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kCorruptHeader: return "corrupt header";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kIo: return "io error";
  }
  return "error";
}

namespace {

void CheckDims(int height, int width, std::size_t size, std::size_t per_pixel,
               const char* what) {
  if (height < 1 || width < 1) {
    throw Error(ErrorCode::kDimension,
                std::string(what) + " must be at least 1x1, got " +
                    std::to_string(height) + "x" + std::to_string(width));
  }
  if (size != static_cast<std::size_t>(height) * width * per_pixel) {
    throw Error(ErrorCode::kDimension,
                std::string(what) + " data length " + std::to_string(size) +
                    " does not match " + std::to_string(height) + "x" +
                    std::to_string(width) + "x" + std::to_string(per_pixel));
  }
}

void CheckFinite(std::span<const float> data, const char* what) {
  for (float v : data) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kContract,
                  std::string(what) + " contains a non-finite value");
    }
  }
}

}  // namespace

ImageTensor::ImageTensor(int height, int width, std::vector<float> data)
    : height_(height), width_(width), data_(std::move(data)) {
  CheckDims(height_, width_, data_.size(), 3, "image");
  std::array<double, 3> sum{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const float v = data_[i];
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw Error(ErrorCode::kContract, "image values must lie in [0,1]");
    }
    sum[i % 3] += v;
  }
  const double pixels = static_cast<double>(height_) * width_;
  for (int c = 0; c < 3; ++c) {
    mean_color_[c] = static_cast<float>(sum[c] / pixels);
  }
}

ImageTensor ImageTensor::Filled(int height, int width, const Rgb& color) {
  if (height < 1 || width < 1) {
    throw Error(ErrorCode::kDimension, "image must be at least 1x1");
  }
  std::vector<float> data(static_cast<std::size_t>(height) * width * 3);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = color[i % 3];
  return ImageTensor(height, width, std::move(data));
}

ImageTensor ImageTensor::Crop(const Rect& rect) const {
  if (rect.top < 0 || rect.left < 0 || rect.height < 1 || rect.width < 1 ||
      rect.bottom() > height_ || rect.right() > width_) {
    throw Error(ErrorCode::kDimension, "crop rectangle outside image bounds");
  }
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>(rect.height) * rect.width * 3);
  for (int r = rect.top; r < rect.bottom(); ++r) {
    const auto row_begin =
        data_.begin() + (static_cast<std::ptrdiff_t>(r) * width_ + rect.left) * 3;
    out.insert(out.end(), row_begin, row_begin + rect.width * 3);
  }
  return ImageTensor(rect.height, rect.width, std::move(out));
}

FeatureStack::FeatureStack(int units_in, int height_in, int width_in,
                           std::vector<float> data_in)
    : units(units_in), height(height_in), width(width_in),
      data(std::move(data_in)) {
  if (units < 1) throw Error(ErrorCode::kDimension, "feature stack has no units");
  CheckDims(height, width, data.size(), static_cast<std::size_t>(units),
            "feature stack");
  CheckFinite(data, "feature stack");
}

ClassWeights::ClassWeights(int classes_in, int units_in,
                           std::vector<float> data_in)
    : classes(classes_in), units(units_in), data(std::move(data_in)) {
  CheckDims(classes, units, data.size(), 1, "class weights");
  CheckFinite(data, "class weights");
}

ClassScores::ClassScores(std::vector<float> probabilities_in)
    : probabilities(std::move(probabilities_in)) {
  for (float p : probabilities) {
    if (!(p >= 0.0f && p <= 1.0f)) {
      throw Error(ErrorCode::kContract, "class score outside [0,1]");
    }
  }
}

ResponseMap::ResponseMap(int class_id, int height, int width,
                         std::vector<float> data, bool normalized)
    : class_id_(class_id), height_(height), width_(width),
      data_(std::move(data)), normalized_(normalized) {
  CheckDims(height_, width_, data_.size(), 1, "response map");
  for (float v : data_) {
    if (!std::isfinite(v) || v < 0.0f) {
      throw Error(ErrorCode::kContract,
                  "response map values must be finite and non-negative");
    }
  }
}

ResponseMap ResponseMap::Zeros(int class_id, int height, int width) {
  return ResponseMap(class_id, height, width,
                     std::vector<float>(static_cast<std::size_t>(height) * width,
                                        0.0f));
}

float ResponseMap::Max() const {
  return *std::max_element(data_.begin(), data_.end());
}

bool ResponseMap::IsAllZero() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return v == 0.0f; });
}

LabelMap::LabelMap(int height_in, int width_in, std::vector<std::uint8_t> data_in)
    : height(height_in), width(width_in), data(std::move(data_in)) {
  CheckDims(height, width, data.size(), 1, "label map");
}

LabelMap::LabelMap(int height_in, int width_in, std::uint8_t fill)
    : LabelMap(height_in, width_in,
               std::vector<std::uint8_t>(
                   static_cast<std::size_t>(std::max(height_in, 0)) *
                       std::max(width_in, 0),
                   fill)) {}

SaliencyMap::SaliencyMap(int height_in, int width_in, std::vector<float> data_in)
    : height(height_in), width(width_in), data(std::move(data_in)) {
  CheckDims(height, width, data.size(), 1, "saliency map");
  for (float v : data) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw Error(ErrorCode::kContract, "saliency values must lie in [0,1]");
    }
  }
}

std::vector<float> ResizeBilinear(std::span<const float> data, int height,
                                  int width, int out_height, int out_width) {
  if (out_height < 1 || out_width < 1) {
    throw Error(ErrorCode::kDimension,
                "resize target must be at least 1x1, got " +
                    std::to_string(out_height) + "x" + std::to_string(out_width));
  }
  CheckDims(height, width, data.size(), 1, "resize source");
  if (height == out_height && width == out_width) {
    return std::vector<float>(data.begin(), data.end());
  }

  struct Tap {
    int lo;
    int hi;
    double frac;
  };
  auto taps = [](int in, int out) {
    std::vector<Tap> result(out);
    const double scale =
        out > 1 ? static_cast<double>(in - 1) / static_cast<double>(out - 1) : 0.0;
    for (int i = 0; i < out; ++i) {
      const double src = i * scale;
      const int lo = std::min(static_cast<int>(std::floor(src)), in - 1);
      result[i] = {lo, std::min(lo + 1, in - 1), src - lo};
    }
    return result;
  };
  const std::vector<Tap> rows = taps(height, out_height);
  const std::vector<Tap> cols = taps(width, out_width);

  std::vector<float> out(static_cast<std::size_t>(out_height) * out_width);
  for (int y = 0; y < out_height; ++y) {
    const Tap& ty = rows[y];
    const float* r0 = data.data() + static_cast<std::size_t>(ty.lo) * width;
    const float* r1 = data.data() + static_cast<std::size_t>(ty.hi) * width;
    for (int x = 0; x < out_width; ++x) {
      const Tap& tx = cols[x];
      const double top = (1.0 - tx.frac) * r0[tx.lo] + tx.frac * r0[tx.hi];
      const double bottom = (1.0 - tx.frac) * r1[tx.lo] + tx.frac * r1[tx.hi];
      out[static_cast<std::size_t>(y) * out_width + x] =
          static_cast<float>((1.0 - ty.frac) * top + ty.frac * bottom);
    }
  }
  return out;
}

ResponseMap ResizeBilinear(const ResponseMap& map, int out_height,
                           int out_width) {
  // A resampled map is no longer guaranteed to peak at exactly 1.
  const bool same = map.height() == out_height && map.width() == out_width;
  return ResponseMap(map.class_id(), out_height, out_width,
                     ResizeBilinear(map.data(), map.height(), map.width(),
                                    out_height, out_width),
                     same && map.normalized());
}

SaliencyMap ResizeBilinear(const SaliencyMap& map, int out_height,
                           int out_width) {
  std::vector<float> data =
      ResizeBilinear(map.data, map.height, map.width, out_height, out_width);
  for (float& v : data) v = std::clamp(v, 0.0f, 1.0f);
  return SaliencyMap(out_height, out_width, std::move(data));
}

ResponseMap Normalize(const ResponseMap& map) {
  const float peak = map.Max();
  if (peak <= 0.0f) {
    return ResponseMap(map.class_id(), map.height(), map.width(),
                       std::vector<float>(map.data().begin(), map.data().end()),
                       true);
  }
  std::vector<float> data(map.data().begin(), map.data().end());
  for (float& v : data) v /= peak;
  return ResponseMap(map.class_id(), map.height(), map.width(), std::move(data),
                     true);
}

}  // namespace camrefine
