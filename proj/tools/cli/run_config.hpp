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

#ifndef CAMREFINE_TOOLS_CLI_RUN_CONFIG_HPP_
#define CAMREFINE_TOOLS_CLI_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace camrefine::cli {

namespace fs = std::filesystem;

// Everything a subcommand reads. Paths are empty when unset.
struct RunConfig {
  std::string command;

  fs::path model;
  fs::path manifest;  // defaults to the model path with a .manifest extension

  fs::path list;
  fs::path images;
  fs::path labels;
  fs::path saliency;
  fs::path class_file;
  fs::path maps;         // response maps written by cam / infer
  fs::path predictions;  // label PNGs for eval

  int max_iterations = 8;
  float erase_threshold = 0.7f;
  float stop_fraction = 0.01f;
  bool split = true;

  std::vector<float> thresholds;  // empty means the default grid
  std::optional<float> bg_threshold;
  fs::path report;  // eval report to take best_threshold from
  fs::path csv;

  double alpha = 0.08;
  int instances = 20;
  std::vector<int> loss_classes = {2, 20};
  int loss_height = 4;
  int loss_width = 4;
  double step = 1e-3;
  double tolerance = 1e-4;

  std::uint64_t seed = 0;

  // Not part of the digest.
  fs::path out;
  int workers = 1;
};

// TOML file. Top level: model, manifest, seed, workers, out. Tables:
//   [data]        list images labels saliency class_file maps predictions
//   [refinement]  max_iterations erase_threshold stop_fraction split
//   [eval]        thresholds bg_threshold report csv
//   [loss]        alpha instances classes height width step tolerance
// Relative paths resolve against the file's directory. Unknown keys are
// rejected.
void ApplyTomlFile(const fs::path& path, RunConfig* config);

// Sorted key = value lines over every field except out and workers.
std::string CanonicalText(const RunConfig& config);

// Lowercase hex SHA-256.
std::string Sha256Hex(const std::string& bytes);
std::string Sha256File(const fs::path& path);

inline std::string ConfigDigest(const RunConfig& config) {
  return Sha256Hex(CanonicalText(config));
}

}  // namespace camrefine::cli

#endif  // CAMREFINE_TOOLS_CLI_RUN_CONFIG_HPP_
