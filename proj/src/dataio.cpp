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

#include "camrefine/dataio.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "camrefine/errors.hpp"
#include "camrefine/kv.hpp"

namespace camrefine::dataio {

namespace {

constexpr char kNpyMagic[] = "\x93NUMPY";

std::string ReadAll(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteAll(const fs::path& path, const std::string& bytes) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

std::optional<fs::path> FirstExisting(const fs::path& dir, const std::string& id,
                                      std::initializer_list<const char*> exts) {
  for (const char* ext : exts) {
    fs::path candidate = dir / (id + ext);
    std::error_code ec;
    if (fs::is_regular_file(candidate, ec)) return candidate;
  }
  return std::nullopt;
}

// Pulls the value following `'key':` out of a numpy header dict.
std::string HeaderField(const std::string& header, const std::string& key,
                        const fs::path& path) {
  const std::string quoted = "'" + key + "'";
  auto pos = header.find(quoted);
  if (pos == std::string::npos) {
    throw Error(ErrorCode::kCorruptHeader, path.string() + ": header lacks " + key);
  }
  pos = header.find(':', pos + quoted.size());
  if (pos == std::string::npos) {
    throw Error(ErrorCode::kCorruptHeader, path.string() + ": malformed " + key);
  }
  ++pos;
  while (pos < header.size() && header[pos] == ' ') ++pos;
  std::size_t end = pos;
  if (pos < header.size() && header[pos] == '(') {
    end = header.find(')', pos);
    if (end == std::string::npos) {
      throw Error(ErrorCode::kCorruptHeader, path.string() + ": malformed shape");
    }
    ++end;
  } else if (pos < header.size() && header[pos] == '\'') {
    end = header.find('\'', pos + 1);
    if (end == std::string::npos) {
      throw Error(ErrorCode::kCorruptHeader, path.string() + ": malformed " + key);
    }
    ++end;
  } else {
    while (end < header.size() && header[end] != ',' && header[end] != '}') ++end;
  }
  return kv::Trim(header.substr(pos, end - pos));
}

}  // namespace

const std::vector<std::string>& VocClassNames() {
  static const std::vector<std::string> names = {
      "aeroplane", "bicycle", "bird",  "boat",        "bottle",
      "bus",       "car",     "cat",   "chair",       "cow",
      "diningtable", "dog",   "horse", "motorbike",   "person",
      "pottedplant", "sheep", "sofa",  "train",       "tvmonitor"};
  return names;
}

DatasetIndex LoadDataset(const fs::path& list_file, const DatasetRoots& roots) {
  std::ifstream list(list_file);
  if (!list) {
    throw Error(ErrorCode::kMissingFile, "cannot read list file " + list_file.string());
  }
  std::map<std::string, std::vector<int>> class_lists;
  if (roots.class_file) {
    std::ifstream classes(*roots.class_file);
    if (!classes) {
      throw Error(ErrorCode::kMissingFile,
                  "cannot read class file " + roots.class_file->string());
    }
    std::string line;
    int line_no = 0;
    while (std::getline(classes, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto tokens = kv::SplitWhitespace(line);
      if (tokens.empty()) continue;
      std::vector<int> ids;
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        auto it = std::find(roots.class_names.begin(), roots.class_names.end(), tokens[i]);
        if (it == roots.class_names.end()) {
          throw Error(ErrorCode::kFormat, roots.class_file->string() + ":" +
                                              std::to_string(line_no) +
                                              ": unknown class name " + tokens[i]);
        }
        ids.push_back(static_cast<int>(it - roots.class_names.begin()));
      }
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      class_lists[tokens[0]] = std::move(ids);
    }
  }

  DatasetIndex index;
  std::set<std::string> seen;
  std::string line;
  while (std::getline(list, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto tokens = kv::SplitWhitespace(line);
    if (tokens.empty()) continue;
    const std::string& id = tokens[0];
    if (!seen.insert(id).second) {
      index.rejected.push_back({id, "duplicate id"});
      continue;
    }
    DatasetEntry entry;
    entry.id = id;
    if (!roots.images.empty()) {
      auto image = FirstExisting(roots.images, id, {".jpg", ".jpeg", ".png"});
      if (!image) {
        index.rejected.push_back({id, "missing image under " + roots.images.string()});
        continue;
      }
      entry.image = *image;
    }
    if (roots.labels) {
      entry.label = FirstExisting(*roots.labels, id, {".png"});
      if (!entry.label) {
        index.rejected.push_back({id, "missing label under " + roots.labels->string()});
        continue;
      }
    }
    if (roots.saliency) {
      entry.saliency = FirstExisting(*roots.saliency, id, {".png"});
      if (!entry.saliency) {
        index.rejected.push_back(
            {id, "missing saliency map under " + roots.saliency->string()});
        continue;
      }
    }
    if (auto it = class_lists.find(id); it != class_lists.end()) {
      entry.classes = it->second;
    }
    index.entries.push_back(std::move(entry));
  }
  std::sort(index.entries.begin(), index.entries.end(),
            [](const DatasetEntry& a, const DatasetEntry& b) { return a.id < b.id; });
  return index;
}

void SaveDataset(const DatasetIndex& index, const fs::path& list_file,
                 const fs::path& class_file, const std::vector<std::string>& class_names) {
  std::string ids;
  std::string classes;
  for (const DatasetEntry& e : index.entries) {
    ids += e.id + "\n";
    if (!e.classes) continue;
    classes += e.id;
    for (int c : *e.classes) {
      if (c < 0 || c >= static_cast<int>(class_names.size())) {
        throw Error(ErrorCode::kContract, "class id out of vocabulary for " + e.id);
      }
      classes += " " + class_names[c];
    }
    classes += "\n";
  }
  WriteAll(list_file, ids);
  WriteAll(class_file, classes);
}

void WriteNpy(const fs::path& path, int height, int width, const std::vector<float>& data) {
  if (data.size() != static_cast<std::size_t>(height) * width) {
    throw Error(ErrorCode::kDimension, "tensor data does not match shape");
  }
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': (" +
                       std::to_string(height) + ", " + std::to_string(width) + "), }";
  // Pad so the data starts on a 64-byte boundary; the header ends in '\n'.
  const std::size_t preamble = 10;
  const std::size_t total = ((preamble + header.size() + 1 + 63) / 64) * 64;
  header.append(total - preamble - header.size() - 1, ' ');
  header.push_back('\n');
  std::string bytes(kNpyMagic, 6);
  bytes.push_back('\x01');
  bytes.push_back('\x00');
  const auto len = static_cast<std::uint16_t>(header.size());
  bytes.push_back(static_cast<char>(len & 0xff));
  bytes.push_back(static_cast<char>(len >> 8));
  bytes += header;
  static_assert(sizeof(float) == 4);
  const std::size_t offset = bytes.size();
  bytes.resize(offset + data.size() * 4);
  // Little-endian host assumed; every supported target is.
  std::memcpy(bytes.data() + offset, data.data(), data.size() * 4);
  WriteAll(path, bytes);
}

std::vector<float> ReadNpy(const fs::path& path, int* height, int* width) {
  const std::string bytes = ReadAll(path);
  if (bytes.size() < 10 || bytes.compare(0, 6, kNpyMagic, 6) != 0) {
    throw Error(ErrorCode::kCorruptHeader, path.string() + ": not an NPY file");
  }
  const auto major = static_cast<unsigned char>(bytes[6]);
  std::size_t header_len = 0;
  std::size_t preamble = 0;
  if (major == 1) {
    header_len = static_cast<unsigned char>(bytes[8]) |
                 (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
    preamble = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) {
      throw Error(ErrorCode::kCorruptHeader, path.string() + ": truncated header");
    }
    for (int i = 0; i < 4; ++i) {
      header_len |= static_cast<std::size_t>(static_cast<unsigned char>(bytes[8 + i]))
                    << (8 * i);
    }
    preamble = 12;
  } else {
    throw Error(ErrorCode::kCorruptHeader,
                path.string() + ": unsupported NPY version " + std::to_string(major));
  }
  if (bytes.size() < preamble + header_len) {
    throw Error(ErrorCode::kCorruptHeader, path.string() + ": truncated header");
  }
  const std::string header = bytes.substr(preamble, header_len);
  const std::string descr = HeaderField(header, "descr", path);
  if (descr != "'<f4'") {
    throw Error(ErrorCode::kFormat, path.string() + ": expected '<f4', got " + descr);
  }
  if (HeaderField(header, "fortran_order", path) != "False") {
    throw Error(ErrorCode::kFormat, path.string() + ": Fortran order not supported");
  }
  std::string shape = HeaderField(header, "shape", path);
  shape = shape.substr(1, shape.size() - 2);
  std::replace(shape.begin(), shape.end(), ',', ' ');
  const auto dims = kv::SplitWhitespace(shape);
  if (dims.size() != 2) {
    throw Error(ErrorCode::kFormat, path.string() + ": expected a 2-D tensor");
  }
  const long long h = kv::ParseInt(dims[0], "shape");
  const long long w = kv::ParseInt(dims[1], "shape");
  if (h < 1 || w < 1) throw Error(ErrorCode::kFormat, path.string() + ": empty tensor");
  const std::size_t count = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  const std::size_t offset = preamble + header_len;
  if (bytes.size() != offset + count * 4) {
    throw Error(ErrorCode::kCorruptHeader,
                path.string() + ": payload of " + std::to_string(bytes.size() - offset) +
                    " bytes does not match shape");
  }
  std::vector<float> data(count);
  std::memcpy(data.data(), bytes.data() + offset, count * 4);
  *height = static_cast<int>(h);
  *width = static_cast<int>(w);
  return data;
}

fs::path SidecarPath(const fs::path& tensor_path) {
  fs::path p = tensor_path;
  p.replace_extension(".meta");
  return p;
}

void SaveResponseMap(const ResponseMap& map, const fs::path& path,
                     const std::string& config_digest) {
  WriteNpy(path, map.height(), map.width(),
           std::vector<float>(map.data().begin(), map.data().end()));
  WriteAll(SidecarPath(path),
           kv::Format({{"class_id", std::to_string(map.class_id())},
                       {"normalized", map.normalized() ? "true" : "false"},
                       {"height", std::to_string(map.height())},
                       {"width", std::to_string(map.width())},
                       {"config_digest", config_digest}}));
}

MapMetadata ReadSidecar(const fs::path& tensor_path) {
  const auto entries = kv::ReadFile(SidecarPath(tensor_path));
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = entries.find(key);
    if (it == entries.end()) {
      throw Error(ErrorCode::kFormat,
                  SidecarPath(tensor_path).string() + " lacks " + key);
    }
    return it->second;
  };
  MapMetadata meta;
  meta.class_id = static_cast<int>(kv::ParseInt(get("class_id"), "class_id"));
  const std::string& normalized = get("normalized");
  if (normalized != "true" && normalized != "false") {
    throw Error(ErrorCode::kFormat, "normalized must be true or false");
  }
  meta.normalized = normalized == "true";
  meta.height = static_cast<int>(kv::ParseInt(get("height"), "height"));
  meta.width = static_cast<int>(kv::ParseInt(get("width"), "width"));
  if (auto it = entries.find("config_digest"); it != entries.end()) {
    meta.config_digest = it->second;
  }
  return meta;
}

ResponseMap LoadResponseMap(const fs::path& path) {
  int height = 0;
  int width = 0;
  std::vector<float> data = ReadNpy(path, &height, &width);
  const MapMetadata meta = ReadSidecar(path);
  if (meta.height != height || meta.width != width) {
    throw Error(ErrorCode::kFormat, path.string() + ": shape " + std::to_string(height) +
                                        "x" + std::to_string(width) +
                                        " disagrees with sidecar");
  }
  return ResponseMap(meta.class_id, height, width, std::move(data), meta.normalized);
}

}  // namespace camrefine::dataio
