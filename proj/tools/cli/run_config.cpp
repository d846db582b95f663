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

#include "run_config.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "camrefine/errors.hpp"
#include "camrefine/kv.hpp"

namespace camrefine::cli {
namespace {

[[noreturn]] void Bad(const fs::path& file, const std::string& key, const std::string& what) {
  throw Error(ErrorCode::kConfig, file.string() + ": " + key + ": " + what);
}

struct Reader {
  const fs::path& file;
  fs::path base;

  std::string String(const toml::node& n, const std::string& key) const {
    auto v = n.value<std::string>();
    if (!v) Bad(file, key, "expected a string");
    return *v;
  }
  fs::path Path(const toml::node& n, const std::string& key) const {
    fs::path p = String(n, key);
    return p.is_relative() ? base / p : p;
  }
  double Number(const toml::node& n, const std::string& key) const {
    auto v = n.value<double>();
    if (!v) Bad(file, key, "expected a number");
    return *v;
  }
  long long Integer(const toml::node& n, const std::string& key) const {
    if (!n.is_integer()) Bad(file, key, "expected an integer");
    return *n.value<std::int64_t>();
  }
  bool Bool(const toml::node& n, const std::string& key) const {
    if (!n.is_boolean()) Bad(file, key, "expected true or false");
    return *n.value<bool>();
  }
  template <typename T, typename Get>
  std::vector<T> Array(const toml::node& n, const std::string& key, Get get) const {
    const toml::array* arr = n.as_array();
    if (arr == nullptr) Bad(file, key, "expected an array");
    std::vector<T> out;
    for (const toml::node& item : *arr) out.push_back(static_cast<T>((this->*get)(item, key)));
    return out;
  }
};

using Setter = std::function<void(const Reader&, const toml::node&, RunConfig*)>;

const std::map<std::string, Setter>& Setters() {
  static const std::map<std::string, Setter> table = {
      {"model", [](auto& r, auto& n, RunConfig* c) { c->model = r.Path(n, "model"); }},
      {"manifest", [](auto& r, auto& n, RunConfig* c) { c->manifest = r.Path(n, "manifest"); }},
      {"seed",
       [](auto& r, auto& n, RunConfig* c) {
         const long long s = r.Integer(n, "seed");
         if (s < 0) Bad(r.file, "seed", "must be non-negative");
         c->seed = static_cast<std::uint64_t>(s);
       }},
      {"workers",
       [](auto& r, auto& n, RunConfig* c) {
         c->workers = static_cast<int>(r.Integer(n, "workers"));
       }},
      {"out", [](auto& r, auto& n, RunConfig* c) { c->out = r.Path(n, "out"); }},
      {"data.list", [](auto& r, auto& n, RunConfig* c) { c->list = r.Path(n, "data.list"); }},
      {"data.images",
       [](auto& r, auto& n, RunConfig* c) { c->images = r.Path(n, "data.images"); }},
      {"data.labels",
       [](auto& r, auto& n, RunConfig* c) { c->labels = r.Path(n, "data.labels"); }},
      {"data.saliency",
       [](auto& r, auto& n, RunConfig* c) { c->saliency = r.Path(n, "data.saliency"); }},
      {"data.class_file",
       [](auto& r, auto& n, RunConfig* c) { c->class_file = r.Path(n, "data.class_file"); }},
      {"data.maps", [](auto& r, auto& n, RunConfig* c) { c->maps = r.Path(n, "data.maps"); }},
      {"data.predictions",
       [](auto& r, auto& n, RunConfig* c) { c->predictions = r.Path(n, "data.predictions"); }},
      {"refinement.max_iterations",
       [](auto& r, auto& n, RunConfig* c) {
         c->max_iterations = static_cast<int>(r.Integer(n, "refinement.max_iterations"));
       }},
      {"refinement.erase_threshold",
       [](auto& r, auto& n, RunConfig* c) {
         c->erase_threshold = static_cast<float>(r.Number(n, "refinement.erase_threshold"));
       }},
      {"refinement.stop_fraction",
       [](auto& r, auto& n, RunConfig* c) {
         c->stop_fraction = static_cast<float>(r.Number(n, "refinement.stop_fraction"));
       }},
      {"refinement.split",
       [](auto& r, auto& n, RunConfig* c) { c->split = r.Bool(n, "refinement.split"); }},
      {"eval.thresholds",
       [](auto& r, auto& n, RunConfig* c) {
         c->thresholds = r.template Array<float>(n, "eval.thresholds", &Reader::Number);
       }},
      {"eval.bg_threshold",
       [](auto& r, auto& n, RunConfig* c) {
         c->bg_threshold = static_cast<float>(r.Number(n, "eval.bg_threshold"));
       }},
      {"eval.report",
       [](auto& r, auto& n, RunConfig* c) { c->report = r.Path(n, "eval.report"); }},
      {"eval.csv", [](auto& r, auto& n, RunConfig* c) { c->csv = r.Path(n, "eval.csv"); }},
      {"loss.alpha",
       [](auto& r, auto& n, RunConfig* c) { c->alpha = r.Number(n, "loss.alpha"); }},
      {"loss.instances",
       [](auto& r, auto& n, RunConfig* c) {
         c->instances = static_cast<int>(r.Integer(n, "loss.instances"));
       }},
      {"loss.classes",
       [](auto& r, auto& n, RunConfig* c) {
         c->loss_classes = r.template Array<int>(n, "loss.classes", &Reader::Integer);
       }},
      {"loss.height",
       [](auto& r, auto& n, RunConfig* c) {
         c->loss_height = static_cast<int>(r.Integer(n, "loss.height"));
       }},
      {"loss.width",
       [](auto& r, auto& n, RunConfig* c) {
         c->loss_width = static_cast<int>(r.Integer(n, "loss.width"));
       }},
      {"loss.step", [](auto& r, auto& n, RunConfig* c) { c->step = r.Number(n, "loss.step"); }},
      {"loss.tolerance",
       [](auto& r, auto& n, RunConfig* c) { c->tolerance = r.Number(n, "loss.tolerance"); }},
  };
  return table;
}

void Walk(const Reader& reader, const toml::table& table, const std::string& prefix,
          RunConfig* config) {
  for (auto&& [key, node] : table) {
    const std::string name = prefix + std::string(key.str());
    if (const toml::table* sub = node.as_table(); sub != nullptr && prefix.empty()) {
      Walk(reader, *sub, name + ".", config);
      continue;
    }
    auto it = Setters().find(name);
    if (it == Setters().end()) Bad(reader.file, name, "unknown key");
    it->second(reader, node, config);
  }
}

std::string Join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : " ") + p;
  return out;
}

}  // namespace

void ApplyTomlFile(const fs::path& path, RunConfig* config) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kMissingFile, "config file " + path.string() + " not found");
  }
  toml::table table;
  try {
    table = toml::parse_file(path.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << path.string() << ":" << e.source().begin.line << ": " << e.description();
    throw Error(ErrorCode::kConfig, msg.str());
  }
  const Reader reader{path, path.parent_path()};
  Walk(reader, table, "", config);
}

std::string CanonicalText(const RunConfig& c) {
  std::vector<std::string> thresholds;
  for (float t : c.thresholds) thresholds.push_back(kv::FormatFloat(t));
  std::vector<std::string> classes;
  for (int k : c.loss_classes) classes.push_back(std::to_string(k));
  // Keys sorted so the text does not depend on declaration order.
  std::map<std::string, std::string> fields = {
      {"command", c.command},
      {"model", c.model.string()},
      {"manifest", c.manifest.string()},
      {"data.list", c.list.string()},
      {"data.images", c.images.string()},
      {"data.labels", c.labels.string()},
      {"data.saliency", c.saliency.string()},
      {"data.class_file", c.class_file.string()},
      {"data.maps", c.maps.string()},
      {"data.predictions", c.predictions.string()},
      {"refinement.max_iterations", std::to_string(c.max_iterations)},
      {"refinement.erase_threshold", kv::FormatFloat(c.erase_threshold)},
      {"refinement.stop_fraction", kv::FormatFloat(c.stop_fraction)},
      {"refinement.split", c.split ? "true" : "false"},
      {"eval.thresholds", Join(thresholds)},
      {"eval.bg_threshold", c.bg_threshold ? kv::FormatFloat(*c.bg_threshold) : ""},
      {"eval.report", c.report.string()},
      {"eval.csv", c.csv.string()},
      {"loss.alpha", kv::FormatFloat(c.alpha)},
      {"loss.instances", std::to_string(c.instances)},
      {"loss.classes", Join(classes)},
      {"loss.height", std::to_string(c.loss_height)},
      {"loss.width", std::to_string(c.loss_width)},
      {"loss.step", kv::FormatFloat(c.step)},
      {"loss.tolerance", kv::FormatFloat(c.tolerance)},
      {"seed", std::to_string(c.seed)},
  };
  std::string text;
  for (const auto& [k, v] : fields) text += k + " = " + v + "\n";
  return text;
}

std::string Sha256Hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string Sha256File(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return Sha256Hex(buf.str());
}

}  // namespace camrefine::cli
