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

#ifndef CAMREFINE_TESTS_SUPPORT_FIXTURES_HPP_
#define CAMREFINE_TESTS_SUPPORT_FIXTURES_HPP_

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "camrefine/backend.hpp"
#include "camrefine/core.hpp"
#include <nlohmann/json.hpp>

// Hand-built classifiers and synthetic images shared by the tests.
//
// The classifier is a four-unit network over raw RGB:
//   u0 = r - g - b        (red detector)
//   u1 = g - r - b        (green detector)
//   u2 = b - r - g        (blue detector)
//   u3 = 0.75 - mean(rgb) (darkness detector)
// Unit 1 is inhibited by beta times the global mean of relu(u0), so a red
// blob hides any green blob in the same view. Features are relu of the
// inhibited responses, 2x2 average pooled. Class 0 reads units 0 and 1,
// class 1 reads unit 2.
namespace camrefine::testing {

inline constexpr float kInhibition = 50.0f;

// C x K row-major.
using WeightRows = std::vector<std::array<float, 4>>;

WeightRows TwoBlobWeights();
WeightRows EqualWeights();
WeightRows ZeroWeights();

// Serialized ONNX model.
std::string BuildModelBytes(const WeightRows& weights);
ModelManifest FixtureManifest(int classes);

// Writes <dir>/<name>.onnx and <dir>/<name>.manifest.
void WriteModel(const std::filesystem::path& dir, const std::string& name,
                const WeightRows& weights);

ClassifierHandle LoadFixture(const std::filesystem::path& dir, const std::string& name);

struct TwoBlobLayout {
  std::string id;
  int height;
  int width;
  Rect a;  // red, fully visible
  Rect b;  // green, hidden behind a
};

const std::vector<TwoBlobLayout>& TwoBlobSuite();

// A 100x100 layout whose second pass activates just under 1% of the image.
TwoBlobLayout OnePercentLayout();

inline constexpr Rgb kRed{1.0f, 0.0f, 0.0f};
inline constexpr Rgb kGreen{0.0f, 1.0f, 0.0f};
inline constexpr Rgb kBlue{0.0f, 0.0f, 1.0f};
inline constexpr Rgb kGray{0.5f, 0.5f, 0.5f};

ImageTensor RenderTwoBlob(const TwoBlobLayout& layout);
// 1 inside either blob, 0 elsewhere.
LabelMap TwoBlobLabels(const TwoBlobLayout& layout);
SaliencyMap TwoBlobSaliency(const TwoBlobLayout& layout);

// 16x16, 4x4 cells alternating red and blue.
ImageTensor Checkerboard16();

// Regenerates the committed fixture tree under `root`.
void WriteFixtureTree(const std::filesystem::path& root);

// Source tree location of the committed fixtures.
std::filesystem::path FixtureRoot();

// Frozen reference values written by tests/data/make_goldens.py.
const nlohmann::json& Goldens();
// goldens/<name>.npy as a single-channel grid.
struct Grid {
  int height = 0;
  int width = 0;
  std::vector<float> data;
};
Grid GoldenGrid(const std::string& name);

// Decoded fixture image, e.g. FixtureImage("two_blob/images/blob_00.png").
ImageTensor FixtureImage(const std::string& relative);

}  // namespace camrefine::testing

#endif  // CAMREFINE_TESTS_SUPPORT_FIXTURES_HPP_
