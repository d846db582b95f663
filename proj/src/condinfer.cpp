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

#include "camrefine/condinfer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "camrefine/parallel.hpp"

namespace camrefine::condinfer {

namespace {

int RoundHalfUp(double v) { return static_cast<int>(std::floor(v + 0.5)); }

void CheckSplittable(int image_height, int image_width) {
  if (image_height < 2 * kMinPatch || image_width < 2 * kMinPatch) {
    throw Error(ErrorCode::kSplitDegenerate,
                "image " + std::to_string(image_height) + "x" +
                    std::to_string(image_width) + " is smaller than " +
                    std::to_string(2 * kMinPatch) + " pixels per side");
  }
}

void CheckCenter(int image_height, int image_width, Point p) {
  if (!(p.row >= 0.0 && p.row <= image_height - 1 && p.col >= 0.0 &&
        p.col <= image_width - 1)) {
    throw Error(ErrorCode::kContract, "split center lies outside the image");
  }
}

// Span [lo, hi) covering both rounded coordinates, widened to kMinPatch.
std::pair<int, int> CentralSpan(double a, double b, int extent) {
  int lo = RoundHalfUp(std::min(a, b));
  int hi = RoundHalfUp(std::max(a, b)) + 1;
  if (hi - lo < kMinPatch) {
    const int sum = lo + hi - kMinPatch;
    lo = sum >= 0 ? sum / 2 : -((-sum + 1) / 2);
    lo = std::clamp(lo, 0, extent - kMinPatch);
    hi = lo + kMinPatch;
  }
  return {lo, hi};
}

}  // namespace

const char* SplitModeName(SplitMode mode) {
  switch (mode) {
    case SplitMode::kSingleClass: return "single-class";
    case SplitMode::kTwoClass: return "two-class";
    case SplitMode::kMultiClass: return "multi-class";
  }
  return "unknown";
}

void RefinementConfig::Validate() const {
  if (!(erase_threshold > 0.0f && erase_threshold <= 1.0f)) {
    throw Error(ErrorCode::kConfig, "erase_threshold must lie in (0,1]");
  }
  if (!(stop_fraction > 0.0f && stop_fraction < 1.0f)) {
    throw Error(ErrorCode::kConfig, "stop_fraction must lie in (0,1)");
  }
  if (max_iterations < 1) {
    throw Error(ErrorCode::kConfig, "max_iterations must be at least 1");
  }
  if (!(activation_floor >= 0.0f)) {
    throw Error(ErrorCode::kConfig, "activation_floor must be non-negative");
  }
}

Point CenterOfMass(const ResponseMap& map) {
  double total = 0.0;
  double row_sum = 0.0;
  double col_sum = 0.0;
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      const double v = map.at(r, c);
      total += v;
      row_sum += r * v;
      col_sum += c * v;
    }
  }
  if (total <= 0.0) {
    return {(map.height() - 1) / 2.0, (map.width() - 1) / 2.0};
  }
  return {row_sum / total, col_sum / total};
}

SplitSpec SplitSingleClass(int image_height, int image_width, Point center) {
  CheckSplittable(image_height, image_width);
  CheckCenter(image_height, image_width, center);
  const int rs = std::clamp(RoundHalfUp(center.row), kMinPatch, image_height - kMinPatch);
  const int cs = std::clamp(RoundHalfUp(center.col), kMinPatch, image_width - kMinPatch);
  SplitSpec spec;
  spec.mode = SplitMode::kSingleClass;
  spec.patches = {
      {0, 0, rs, cs},
      {0, cs, rs, image_width - cs},
      {rs, 0, image_height - rs, cs},
      {rs, cs, image_height - rs, image_width - cs},
  };
  return spec;
}

SplitSpec SplitTwoClass(int image_height, int image_width, Point center_a,
                        Point center_b) {
  CheckSplittable(image_height, image_width);
  CheckCenter(image_height, image_width, center_a);
  CheckCenter(image_height, image_width, center_b);
  const auto [r0, r1] = CentralSpan(center_a.row, center_b.row, image_height);
  const auto [c0, c1] = CentralSpan(center_a.col, center_b.col, image_width);
  SplitSpec spec;
  spec.mode = SplitMode::kTwoClass;
  spec.overlap = Rect{r0, c0, r1 - r0, c1 - c0};
  // Each patch runs from one image corner to the far side of the central
  // rectangle, so all four contain it.
  spec.patches = {
      {0, 0, r1, c1},
      {0, c0, r1, image_width - c0},
      {r0, 0, image_height - r0, c1},
      {r0, c0, image_height - r0, image_width - c0},
  };
  return spec;
}

std::vector<std::pair<int, SplitSpec>> SplitMultiClass(
    int image_height, int image_width,
    const std::vector<std::pair<int, Point>>& centers) {
  if (centers.size() < 3) {
    throw Error(ErrorCode::kContract, "multi-class split needs at least 3 centers");
  }
  std::vector<std::pair<int, SplitSpec>> out;
  out.reserve(centers.size());
  for (const auto& [class_id, center] : centers) {
    SplitSpec spec = SplitSingleClass(image_height, image_width, center);
    spec.mode = SplitMode::kMultiClass;
    out.emplace_back(class_id, std::move(spec));
  }
  return out;
}

ResponseMap MergeSplits(std::span<const PatchMap> patches) {
  if (patches.empty()) throw Error(ErrorCode::kContract, "no patches to merge");
  int height = 0;
  int width = 0;
  for (const PatchMap& p : patches) {
    if (p.rect.top < 0 || p.rect.left < 0) {
      throw Error(ErrorCode::kDimension, "patch rectangle has negative origin");
    }
    if (p.map.height() != p.rect.height || p.map.width() != p.rect.width) {
      throw Error(ErrorCode::kDimension, "patch map size differs from its rectangle");
    }
    height = std::max(height, p.rect.bottom());
    width = std::max(width, p.rect.right());
  }
  const std::size_t pixels = static_cast<std::size_t>(height) * width;
  std::vector<float> merged(pixels, 0.0f);
  std::vector<std::uint8_t> covered(pixels, 0);
  for (const PatchMap& p : patches) {
    for (int r = 0; r < p.rect.height; ++r) {
      for (int c = 0; c < p.rect.width; ++c) {
        const std::size_t i =
            static_cast<std::size_t>(p.rect.top + r) * width + p.rect.left + c;
        merged[i] = covered[i] ? std::max(merged[i], p.map.at(r, c)) : p.map.at(r, c);
        covered[i] = 1;
      }
    }
  }
  const auto gap = std::find(covered.begin(), covered.end(), 0);
  if (gap != covered.end()) {
    const auto i = static_cast<std::size_t>(gap - covered.begin());
    throw Error(ErrorCode::kMergeCoverage,
                "pixel (" + std::to_string(i / width) + ", " +
                    std::to_string(i % width) + ") is not covered by any patch");
  }
  return Normalize(
      ResponseMap(patches.front().map.class_id(), height, width, std::move(merged)));
}

EraseResult EraseHighActivation(const ImageTensor& image, const ResponseMap& map,
                                float threshold, const Rgb& fill) {
  if (map.height() != image.height() || map.width() != image.width()) {
    throw Error(ErrorCode::kDimension, "map and image sizes differ");
  }
  if (!map.normalized()) {
    throw Error(ErrorCode::kContract, "erasing requires a normalised map");
  }
  std::vector<float> data(image.data().begin(), image.data().end());
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(image.height()) * image.width(), 0);
  int erased = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (map.data()[i] >= threshold) {
      mask[i] = 1;
      ++erased;
      for (int ch = 0; ch < 3; ++ch) data[i * 3 + ch] = fill[ch];
    }
  }
  return {ImageTensor(image.height(), image.width(), std::move(data)), std::move(mask),
          erased};
}

EraseResult EraseHighActivation(const ImageTensor& image, const ResponseMap& map,
                                float threshold) {
  return EraseHighActivation(image, map, threshold, image.mean_color());
}

IterativeResult IterativeInfer(const ClassifierHandle& handle,
                               const ImageTensor& image, int class_id,
                               const RefinementConfig& config,
                               std::optional<Rgb> fill) {
  config.Validate();
  const Rgb fill_color = fill.value_or(image.mean_color());
  const int height = image.height();
  const int width = image.width();
  const std::size_t pixels = static_cast<std::size_t>(height) * width;
  const double stop_count = static_cast<double>(config.stop_fraction) * pixels;

  std::vector<float> accumulated(pixels, 0.0f);
  std::vector<std::uint8_t> active(pixels, 0);
  IterationTrace trace;
  ImageTensor current = image;

  for (int iteration = 1; iteration <= config.max_iterations; ++iteration) {
    auto pass = [&] {
      try {
        return ClassConditionalMap(handle, current, class_id);
      } catch (const Error& e) {
        throw IterationError(e, trace);
      }
    }();

    for (std::size_t i = 0; i < pixels; ++i) accumulated[i] += pass.data()[i];
    int newly_activated = 0;
    for (std::size_t i = 0; i < pixels; ++i) {
      if (!active[i] && accumulated[i] > config.activation_floor) {
        active[i] = 1;
        ++newly_activated;
      }
    }

    IterationRecord record;
    record.iteration = iteration;
    record.newly_activated = newly_activated;
    record.accumulated =
        std::make_shared<const ResponseMap>(class_id, height, width, accumulated);

    const bool rule_fired = newly_activated < stop_count;
    const bool done = rule_fired || iteration == config.max_iterations;
    if (!done) {
      EraseResult erase =
          EraseHighActivation(current, pass, config.erase_threshold, fill_color);
      record.erased_pixels = erase.erased;
      record.erased_mask = std::move(erase.mask);
      current = std::move(erase.image);
    }
    trace.records.push_back(std::move(record));
    if (done) {
      trace.stopped_by_rule = rule_fired;
      break;
    }
  }
  return {Normalize(ResponseMap(class_id, height, width, std::move(accumulated))),
          std::move(trace)};
}

PipelineResult RunPipeline(const ClassifierHandle& handle, const ImageTensor& image,
                           const std::vector<int>& present_classes,
                           const PipelineOptions& options) {
  if (present_classes.empty()) {
    throw Error(ErrorCode::kContract, "pipeline needs at least one present class");
  }
  options.refinement.Validate();
  std::vector<int> classes = present_classes;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  for (int c : classes) {
    if (c < 0 || c >= handle.class_count()) {
      throw Error(ErrorCode::kContract, "class id " + std::to_string(c) + " out of range");
    }
  }

  const int height = image.height();
  const int width = image.width();
  const Rgb fill = image.mean_color();

  std::vector<std::optional<ResponseMap>> baselines(classes.size());
  ParallelFor(classes.size(), options.workers, [&](std::size_t i) {
    baselines[i] = ClassConditionalMap(handle, image, classes[i]);
  });

  // Patch rectangles per class; empty means whole-image inference.
  std::vector<std::optional<SplitSpec>> specs(classes.size());
  std::string fallback_reason;
  if (options.split) {
    try {
      if (classes.size() == 1) {
        specs[0] = SplitSingleClass(height, width, CenterOfMass(*baselines[0]));
      } else if (classes.size() == 2) {
        const SplitSpec shared = SplitTwoClass(height, width, CenterOfMass(*baselines[0]),
                                               CenterOfMass(*baselines[1]));
        specs[0] = shared;
        specs[1] = shared;
      } else {
        std::vector<std::pair<int, Point>> centers;
        for (std::size_t i = 0; i < classes.size(); ++i) {
          centers.emplace_back(classes[i], CenterOfMass(*baselines[i]));
        }
        auto per_class = SplitMultiClass(height, width, centers);
        for (std::size_t i = 0; i < classes.size(); ++i) {
          specs[i] = std::move(per_class[i].second);
        }
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSplitDegenerate) throw;
      fallback_reason = e.what();
      std::fill(specs.begin(), specs.end(), std::nullopt);
    }
  }

  struct Task {
    std::size_t class_index;
    Rect rect;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (specs[i]) {
      for (const Rect& r : specs[i]->patches) tasks.push_back({i, r});
    } else {
      tasks.push_back({i, Rect{0, 0, height, width}});
    }
  }

  std::vector<std::optional<IterativeResult>> outcomes(tasks.size());
  ParallelFor(tasks.size(), options.workers, [&](std::size_t t) {
    const Task& task = tasks[t];
    const bool whole = task.rect == Rect{0, 0, height, width};
    outcomes[t] = IterativeInfer(handle, whole ? image : image.Crop(task.rect),
                                 classes[task.class_index], options.refinement, fill);
  });

  PipelineResult result;
  std::size_t t = 0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    std::vector<PatchMap> patch_maps;
    std::vector<PatchTrace> traces;
    for (; t < tasks.size() && tasks[t].class_index == i; ++t) {
      patch_maps.push_back({outcomes[t]->map, tasks[t].rect});
      traces.push_back({tasks[t].rect, std::move(outcomes[t]->trace)});
    }
    ResponseMap merged = specs[i] ? MergeSplits(patch_maps) : patch_maps.front().map;
    result.classes.push_back(ClassResult{classes[i], std::move(merged),
                                         std::move(*baselines[i]), specs[i],
                                         std::move(traces),
                                         specs[i] ? std::string() : fallback_reason});
  }
  return result;
}

}  // namespace camrefine::condinfer
