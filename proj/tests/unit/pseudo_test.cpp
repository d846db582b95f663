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

#include <gtest/gtest.h>

#include <random>

#include "camrefine/errors.hpp"
#include "camrefine/metrics.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace camrefine::pseudo {
namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIo;
}

std::vector<ResponseMap> RandomMaps(std::uint64_t seed, int classes, int h, int w) {
  std::mt19937_64 rng(seed);
  // Coarse values so ties between classes and with the threshold happen.
  std::uniform_int_distribution<int> step(0, 10);
  std::vector<ResponseMap> maps;
  for (int c = 0; c < classes; ++c) {
    std::vector<float> v(static_cast<std::size_t>(h) * w);
    for (float& x : v) x = step(rng) / 10.0f;
    maps.emplace_back(c, h, w, v, true);
  }
  return maps;
}

TEST(PseudoLabelTest, SquareOnBackground) {
  std::vector<float> v(6 * 6, 0.f);
  for (int y = 1; y < 4; ++y) {
    for (int x = 2; x < 5; ++x) v[y * 6 + x] = 1.f;
  }
  std::vector<ResponseMap> maps = {ResponseMap(4, 6, 6, v, true)};
  LabelMap l = GeneratePseudoLabels(maps, 0.5f);
  for (int i = 0; i < 36; ++i) EXPECT_EQ(l.data[i], v[i] > 0 ? 5 : 0);
}

TEST(PseudoLabelTest, ZeroThresholdMakesPositivePixelsForeground) {
  std::vector<ResponseMap> maps = {ResponseMap(0, 1, 3, {0.f, 1e-6f, 0.3f}, true)};
  LabelMap l = GeneratePseudoLabels(maps, 0.0f);
  // The exact tie at 0 also goes to the foreground.
  EXPECT_EQ(l.data, (std::vector<std::uint8_t>{1, 1, 1}));
}

TEST(PseudoLabelTest, RandomMapsMatchScalarArgmax) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto maps = RandomMaps(seed, 2, 8, 8);
    const float t = 0.1f * static_cast<float>(seed % 10);
    LabelMap l = GeneratePseudoLabels(maps, t);
    for (int p = 0; p < 64; ++p) {
      const float a = maps[0].data()[p], b = maps[1].data()[p];
      int want = 0;
      if (a >= t || b >= t) want = a >= b ? 1 : 2;
      ASSERT_EQ(l.data[p], want) << "seed " << seed << " pixel " << p;
    }
  }
}

TEST(PseudoLabelTest, InputOrderDoesNotMatter) {
  auto maps = RandomMaps(3, 4, 5, 5);
  std::vector<ResponseMap> reversed(maps.rbegin(), maps.rend());
  EXPECT_EQ(GeneratePseudoLabels(maps, 0.4f).data, GeneratePseudoLabels(reversed, 0.4f).data);
}

TEST(PseudoLabelTest, Errors) {
  EXPECT_EQ(CodeOf([] { GeneratePseudoLabels({}, 0.5f); }), ErrorCode::kContract);
  std::vector<ResponseMap> mixed = {ResponseMap::Zeros(0, 2, 2), ResponseMap::Zeros(1, 2, 3)};
  EXPECT_EQ(CodeOf([&] { GeneratePseudoLabels(mixed, 0.5f); }), ErrorCode::kDimension);
  std::vector<ResponseMap> dup = {ResponseMap::Zeros(1, 2, 2), ResponseMap::Zeros(1, 2, 2)};
  EXPECT_EQ(CodeOf([&] { GeneratePseudoLabels(dup, 0.5f); }), ErrorCode::kContract);
  std::vector<ResponseMap> one = {ResponseMap::Zeros(0, 2, 2)};
  EXPECT_EQ(CodeOf([&] { GeneratePseudoLabels(one, 1.5f); }), ErrorCode::kContract);
}

TEST(PseudoLabelTest, RaisingThresholdNeverAddsForeground) {
  const auto maps = RandomMaps(11, 3, 9, 9);
  const auto grid = DefaultThresholdGrid();
  LabelMap prev = GeneratePseudoLabels(maps, grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    LabelMap cur = GeneratePseudoLabels(maps, grid[i]);
    for (std::size_t p = 0; p < cur.data.size(); ++p) {
      if (prev.data[p] == 0) ASSERT_EQ(cur.data[p], 0);
    }
    prev = cur;
  }
}

TEST(PseudoLabelTest, JointScalingKeepsLabels) {
  const auto maps = RandomMaps(12, 3, 7, 7);
  for (float c : {0.25f, 0.5f, 0.8f}) {
    std::vector<ResponseMap> scaled;
    for (const auto& m : maps) {
      std::vector<float> v(m.data().begin(), m.data().end());
      // Powers of two keep the scaling exact so ties survive.
      for (float& x : v) x *= c == 0.8f ? 0.5f : c;
      scaled.emplace_back(m.class_id(), m.height(), m.width(), v);
    }
    const float factor = c == 0.8f ? 0.5f : c;
    for (float t : {0.1f, 0.5f, 0.9f}) {
      EXPECT_EQ(GeneratePseudoLabels(maps, t).data,
                GeneratePseudoLabels(scaled, factor * t).data);
    }
  }
}

TEST(DefaultGridTest, NineteenStepsOfFivePercent) {
  const auto grid = DefaultThresholdGrid();
  ASSERT_EQ(grid.size(), 19u);
  EXPECT_FLOAT_EQ(grid.front(), 0.05f);
  EXPECT_FLOAT_EQ(grid[9], 0.5f);
  EXPECT_FLOAT_EQ(grid.back(), 0.95f);
}

TEST(SweepTest, PerfectMapsScoreOneEverywhere) {
  std::vector<float> v(4 * 4, 0.f);
  std::vector<std::uint8_t> gt(16, 0);
  for (int i : {5, 6, 9, 10}) {
    v[i] = 1.f;
    gt[i] = 1;
  }
  std::vector<ResponseMap> maps = {ResponseMap(0, 4, 4, v, true)};
  const auto grid = DefaultThresholdGrid();
  ThresholdSweepResult r = SweepBestMiou(maps, LabelMap(4, 4, gt), grid);
  ASSERT_EQ(r.miou_per_threshold.size(), grid.size());
  for (double m : r.miou_per_threshold) EXPECT_DOUBLE_EQ(m, 1.0);
  EXPECT_DOUBLE_EQ(r.best_miou, 1.0);
  EXPECT_FLOAT_EQ(r.best_threshold, 0.05f);
}

TEST(SweepTest, SingleHighThresholdOnPeakyMap) {
  // Object is a 2x2 block, but the map only reaches 1.0 at one pixel.
  std::vector<float> v(16, 0.5f);
  v[5] = 1.f;
  std::vector<std::uint8_t> gt(16, 0);
  for (int i : {5, 6, 9, 10}) gt[i] = 1;
  std::vector<ResponseMap> maps = {ResponseMap(0, 4, 4, v, true)};
  const std::vector<float> t = {0.99f};
  ThresholdSweepResult r = SweepBestMiou(maps, LabelMap(4, 4, gt), t);
  ASSERT_EQ(r.thresholds.size(), 1u);
  // Foreground IoU 1/4, background IoU 12/15.
  EXPECT_NEAR(r.best_miou, (0.25 + 12.0 / 15.0) / 2.0, 1e-15);
  EXPECT_FLOAT_EQ(r.best_threshold, 0.99f);
}

TEST(SweepTest, SampleWithoutMapsPredictsBackground) {
  const LabelMap gt(2, 2, std::vector<std::uint8_t>{0, 0, 1, 1});
  const SweepSample sample{{}, &gt};
  const std::vector<float> t = {0.0f, 0.5f};
  ThresholdSweepResult r = SweepBestMiou(std::span<const SweepSample>(&sample, 1), t, 1);
  // Background IoU 2/4, class 1 IoU 0.
  EXPECT_EQ(r.miou_per_threshold, (std::vector<double>{0.25, 0.25}));
}

TEST(SweepTest, FixtureCurveMatchesIndependentTallyAndReplays) {
  using camrefine::testing::TallyMiou;
  using camrefine::testing::TallyPairs;
  const auto handle = camrefine::testing::LoadFixture(
      camrefine::testing::FixtureRoot() / "models", "two_blob");
  std::vector<std::vector<ResponseMap>> maps;
  std::vector<LabelMap> gts;
  for (const auto& layout : camrefine::testing::TwoBlobSuite()) {
    maps.push_back({ClassConditionalMap(
        handle, camrefine::testing::FixtureImage("two_blob/images/" + layout.id + ".png"),
        0)});
    gts.push_back(camrefine::testing::TwoBlobLabels(layout));
  }
  std::vector<SweepSample> samples;
  for (std::size_t i = 0; i < maps.size(); ++i) samples.push_back({maps[i], &gts[i]});
  const auto grid = DefaultThresholdGrid();
  ThresholdSweepResult r = SweepBestMiou(samples, grid, 1, 4);
  EXPECT_EQ(r.miou_per_threshold, SweepBestMiou(samples, grid, 1, 1).miou_per_threshold);
  for (std::size_t t = 0; t < grid.size(); ++t) {
    camrefine::testing::PairTally tally;
    for (std::size_t i = 0; i < maps.size(); ++i) {
      std::vector<std::uint8_t> pred(gts[i].data.size());
      for (std::size_t p = 0; p < pred.size(); ++p) pred[p] = maps[i][0].data()[p] >= grid[t];
      for (const auto& [key, count] : TallyPairs(pred, gts[i].data)) tally[key] += count;
    }
    EXPECT_NEAR(r.miou_per_threshold[t], static_cast<double>(TallyMiou(tally)), 1e-12);
  }
  EXPECT_NEAR(r.best_miou,
              camrefine::testing::Goldens()["suite"]["baseline_best_miou"].get<double>(), 1e-9);

  const float best[] = {r.best_threshold};
  EXPECT_EQ(SweepBestMiou(samples, best, 1).best_miou, r.best_miou);
}

}  // namespace
}  // namespace camrefine::pseudo
