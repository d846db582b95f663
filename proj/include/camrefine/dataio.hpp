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

#ifndef CAMREFINE_DATAIO_HPP_
#define CAMREFINE_DATAIO_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "camrefine/core.hpp"

namespace camrefine::dataio {

namespace fs = std::filesystem;

// The twenty PASCAL VOC object classes; class id i is label i + 1.
const std::vector<std::string>& VocClassNames();

// Standard VOC colour map (256 entries; index 255 is the ignore colour).
const std::array<std::array<std::uint8_t, 3>, 256>& VocPalette();

struct DatasetEntry {
  std::string id;
  fs::path image;
  std::optional<fs::path> label;
  std::optional<fs::path> saliency;
  // Image-level classes; unset when no class list covers this id.
  std::optional<std::vector<int>> classes;
};

struct RejectedEntry {
  std::string id;
  std::string reason;
};

struct DatasetIndex {
  std::vector<DatasetEntry> entries;  // sorted by id
  std::vector<RejectedEntry> rejected;
};

// Images are looked up as <images>/<id>.{jpg,jpeg,png}, labels and saliency
// as <dir>/<id>.png. An empty `images` root skips the image lookup and
// leaves DatasetEntry::image empty. The class file holds one line per image:
//   <id> <class name> [<class name> ...]
struct DatasetRoots {
  fs::path images;
  std::optional<fs::path> labels;
  std::optional<fs::path> saliency;
  std::optional<fs::path> class_file;
  std::vector<std::string> class_names = VocClassNames();
};

// List file: one image id per line; blank lines and `#` comments ignored.
DatasetIndex LoadDataset(const fs::path& list_file, const DatasetRoots& roots);

// Writes the id list and, for entries with class lists, the class file.
void SaveDataset(const DatasetIndex& index, const fs::path& list_file,
                 const fs::path& class_file, const std::vector<std::string>& class_names);

ImageTensor ReadImage(const fs::path& path);
void WriteRgbPng(const fs::path& path, int height, int width,
                 const std::vector<std::uint8_t>& rgb);

// 8-bit palette PNGs. Indices above max_class other than 255 are rejected.
LabelMap ReadLabelPng(const fs::path& path, int max_class = 20);
void WriteLabelPng(const LabelMap& labels, const fs::path& path);

// 8-bit single-channel PNG scaled to [0,1].
SaliencyMap ReadSaliencyPng(const fs::path& path);
void WriteGrayPng(const fs::path& path, int height, int width,
                  const std::vector<std::uint8_t>& gray);

// NPY v1.0, '<f4', C order, shape (H, W).
void WriteNpy(const fs::path& path, int height, int width, const std::vector<float>& data);
std::vector<float> ReadNpy(const fs::path& path, int* height, int* width);

struct MapMetadata {
  int class_id = 0;
  bool normalized = false;
  int height = 0;
  int width = 0;
  std::string config_digest;
};

// <stem>.meta next to the tensor.
fs::path SidecarPath(const fs::path& tensor_path);

void SaveResponseMap(const ResponseMap& map, const fs::path& path,
                     const std::string& config_digest = "");
ResponseMap LoadResponseMap(const fs::path& path);
MapMetadata ReadSidecar(const fs::path& tensor_path);

}  // namespace camrefine::dataio

#endif  // CAMREFINE_DATAIO_HPP_
