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

#include "fixtures.hpp"

#include <fstream>
#include <stdexcept>

#include "camrefine/dataio.hpp"
#include "proto/onnx.pb.h"

namespace camrefine::testing {

namespace fs = std::filesystem;

namespace {

void AddFloatTensor(::onnx::GraphProto* graph, const std::string& name,
                    const std::vector<std::int64_t>& dims,
                    const std::vector<float>& values) {
  ::onnx::TensorProto* t = graph->add_initializer();
  t->set_name(name);
  t->set_data_type(::onnx::TensorProto::FLOAT);
  for (auto d : dims) t->add_dims(d);
  for (float v : values) t->add_float_data(v);
}

::onnx::NodeProto* AddNode(::onnx::GraphProto* graph, const std::string& op,
                           std::initializer_list<const char*> inputs,
                           const std::string& output) {
  ::onnx::NodeProto* n = graph->add_node();
  n->set_op_type(op);
  n->set_name(output);
  for (const char* in : inputs) n->add_input(in);
  n->add_output(output);
  return n;
}

void SetInts(::onnx::NodeProto* node, const std::string& name,
             std::initializer_list<std::int64_t> values) {
  ::onnx::AttributeProto* a = node->add_attribute();
  a->set_name(name);
  a->set_type(::onnx::AttributeProto::INTS);
  for (auto v : values) a->add_ints(v);
}

void SetInt(::onnx::NodeProto* node, const std::string& name, std::int64_t value) {
  ::onnx::AttributeProto* a = node->add_attribute();
  a->set_name(name);
  a->set_type(::onnx::AttributeProto::INT);
  a->set_i(value);
}

void DeclareValue(::onnx::ValueInfoProto* info, const std::string& name,
                  std::initializer_list<const char*> dims) {
  info->set_name(name);
  auto* tensor = info->mutable_type()->mutable_tensor_type();
  tensor->set_elem_type(::onnx::TensorProto::FLOAT);
  for (const char* d : dims) {
    auto* dim = tensor->mutable_shape()->add_dim();
    if (d[0] >= '0' && d[0] <= '9') {
      dim->set_dim_value(std::stoll(d));
    } else {
      dim->set_dim_param(d);
    }
  }
}

void WriteFile(const fs::path& path, const std::string& bytes) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void Paint(std::vector<float>& data, int width, const Rect& r, const Rgb& color) {
  for (int y = r.top; y < r.bottom(); ++y) {
    for (int x = r.left; x < r.right(); ++x) {
      for (int c = 0; c < 3; ++c) {
        data[(static_cast<std::size_t>(y) * width + x) * 3 + c] = color[c];
      }
    }
  }
}

std::vector<std::uint8_t> ToBytes(std::span<const float> values) {
  std::vector<std::uint8_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(values[i] * 255.0f + 0.5f);
  }
  return out;
}

}  // namespace

WeightRows TwoBlobWeights() { return {{1, 1, 0, 0}, {0, 0, 1, 0}}; }
WeightRows EqualWeights() { return {{0.25f, 0.25f, 0.25f, 0.25f}, {0, 0, 1, 0}}; }
WeightRows ZeroWeights() { return {{0, 0, 0, 0}, {0, 0, 0, 0}}; }

std::string BuildModelBytes(const WeightRows& weights) {
  ::onnx::ModelProto model;
  model.set_ir_version(7);
  model.set_producer_name("camrefine-tests");
  auto* opset = model.add_opset_import();
  opset->set_domain("");
  opset->set_version(13);
  ::onnx::GraphProto* g = model.mutable_graph();
  g->set_name("fixture");

  const float third = -1.0f / 3.0f;
  AddFloatTensor(g, "detect.weight", {4, 3, 1, 1},
                 {1, -1, -1, -1, 1, -1, -1, -1, 1, third, third, third});
  AddFloatTensor(g, "detect.bias", {4}, {0, 0, 0, 0.75f});
  std::vector<float> inhibit(16, 0.0f);
  inhibit[1 * 4 + 0] = kInhibition;
  AddFloatTensor(g, "inhibit.weight", {4, 4, 1, 1}, inhibit);
  std::vector<float> fc;
  for (const auto& row : weights) fc.insert(fc.end(), row.begin(), row.end());
  const auto classes = static_cast<std::int64_t>(weights.size());
  AddFloatTensor(g, "fc.weight", {classes, 4}, fc);
  AddFloatTensor(g, "fc.bias", {classes}, std::vector<float>(weights.size(), -0.01f));

  AddNode(g, "Conv", {"input", "detect.weight", "detect.bias"}, "detect");
  AddNode(g, "Relu", {"detect"}, "detect_relu");
  AddNode(g, "GlobalAveragePool", {"detect_relu"}, "detect_mean");
  AddNode(g, "Conv", {"detect_mean", "inhibit.weight"}, "inhibit");
  AddNode(g, "Sub", {"detect", "inhibit"}, "inhibited");
  AddNode(g, "Relu", {"inhibited"}, "inhibited_relu");
  auto* pool = AddNode(g, "AveragePool", {"inhibited_relu"}, "features");
  SetInts(pool, "kernel_shape", {2, 2});
  SetInts(pool, "strides", {2, 2});
  AddNode(g, "GlobalAveragePool", {"features"}, "gap");
  AddNode(g, "Flatten", {"gap"}, "gap_flat");
  auto* gemm = AddNode(g, "Gemm", {"gap_flat", "fc.weight", "fc.bias"}, "logits");
  SetInt(gemm, "transB", 1);
  AddNode(g, "Sigmoid", {"logits"}, "scores");

  DeclareValue(g->add_input(), "input", {"1", "3", "height", "width"});
  DeclareValue(g->add_output(), "features", {"1", "4", "feature_height", "feature_width"});
  DeclareValue(g->add_output(), "scores", {"1", "classes"});

  std::string bytes;
  if (!model.SerializeToString(&bytes)) throw std::runtime_error("serialize failed");
  return bytes;
}

ModelManifest FixtureManifest(int classes) {
  ModelManifest m;
  m.input_name = "input";
  m.feature_output = "features";
  m.score_output = "scores";
  m.score_activation = ModelManifest::ScoreActivation::kNone;
  m.weight_tensor = "fc.weight";
  m.weight_layout = ModelManifest::WeightLayout::kClassByUnit;
  m.classes = classes;
  m.units = 4;
  return m;
}

void WriteModel(const fs::path& dir, const std::string& name, const WeightRows& weights) {
  WriteFile(dir / (name + ".onnx"), BuildModelBytes(weights));
  WriteFile(dir / (name + ".manifest"),
            FixtureManifest(static_cast<int>(weights.size())).ToText());
}

ClassifierHandle LoadFixture(const fs::path& dir, const std::string& name) {
  return LoadModel(dir / (name + ".onnx"),
                   ModelManifest::FromFile(dir / (name + ".manifest")));
}

const std::vector<TwoBlobLayout>& TwoBlobSuite() {
  static const std::vector<TwoBlobLayout> suite = {
      {"blob_00", 96, 96, {16, 16, 24, 24}, {60, 56, 20, 24}},
      {"blob_01", 96, 96, {56, 60, 24, 20}, {12, 14, 20, 24}},
      {"blob_02", 96, 128, {20, 18, 26, 22}, {58, 84, 22, 26}},
      {"blob_03", 112, 96, {64, 16, 24, 24}, {14, 56, 22, 22}},
  };
  return suite;
}

TwoBlobLayout OnePercentLayout() {
  return {"one_percent", 100, 100, {20, 20, 24, 24}, {70, 70, 6, 9}};
}

ImageTensor RenderTwoBlob(const TwoBlobLayout& layout) {
  ImageTensor base = ImageTensor::Filled(layout.height, layout.width, kGray);
  std::vector<float> data(base.data().begin(), base.data().end());
  Paint(data, layout.width, layout.a, kRed);
  Paint(data, layout.width, layout.b, kGreen);
  return ImageTensor(layout.height, layout.width, std::move(data));
}

LabelMap TwoBlobLabels(const TwoBlobLayout& layout) {
  LabelMap labels(layout.height, layout.width, std::uint8_t{0});
  for (int y = 0; y < layout.height; ++y) {
    for (int x = 0; x < layout.width; ++x) {
      if (layout.a.Contains(y, x) || layout.b.Contains(y, x)) {
        labels.data[static_cast<std::size_t>(y) * layout.width + x] = 1;
      }
    }
  }
  return labels;
}

SaliencyMap TwoBlobSaliency(const TwoBlobLayout& layout) {
  const LabelMap labels = TwoBlobLabels(layout);
  std::vector<float> values(labels.data.begin(), labels.data.end());
  return SaliencyMap(layout.height, layout.width, std::move(values));
}

ImageTensor Checkerboard16() {
  std::vector<float> data(16 * 16 * 3);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      const Rgb& c = ((y / 4 + x / 4) % 2 == 0) ? kRed : kBlue;
      for (int ch = 0; ch < 3; ++ch) data[(y * 16 + x) * 3 + ch] = c[ch];
    }
  }
  return ImageTensor(16, 16, std::move(data));
}

void WriteFixtureTree(const fs::path& root) {
  WriteModel(root / "models", "two_blob", TwoBlobWeights());
  WriteModel(root / "models", "equal_weights", EqualWeights());
  WriteModel(root / "models", "zero_weights", ZeroWeights());

  const fs::path suite = root / "two_blob";
  std::string ids;
  std::string classes;
  for (const TwoBlobLayout& layout : TwoBlobSuite()) {
    const ImageTensor image = RenderTwoBlob(layout);
    dataio::WriteRgbPng(suite / "images" / (layout.id + ".png"), layout.height,
                        layout.width, ToBytes(image.data()));
    dataio::WriteLabelPng(TwoBlobLabels(layout), suite / "labels" / (layout.id + ".png"));
    const SaliencyMap sal = TwoBlobSaliency(layout);
    dataio::WriteGrayPng(suite / "saliency" / (layout.id + ".png"), layout.height,
                         layout.width, ToBytes(sal.data));
    ids += layout.id + "\n";
    classes += layout.id + " aeroplane\n";
  }
  WriteFile(suite / "train.txt", ids);
  WriteFile(suite / "classes.txt", classes);

  const fs::path misc = root / "images";
  const TwoBlobLayout one = OnePercentLayout();
  dataio::WriteRgbPng(misc / "one_percent.png", one.height, one.width,
                      ToBytes(RenderTwoBlob(one).data()));
  dataio::WriteRgbPng(misc / "checkerboard16.png", 16, 16, ToBytes(Checkerboard16().data()));
  dataio::WriteRgbPng(misc / "gray64.png", 64, 64,
                      ToBytes(ImageTensor::Filled(64, 64, kGray).data()));
  dataio::WriteRgbPng(misc / "black32.png", 32, 32,
                      ToBytes(ImageTensor::Filled(32, 32, {0, 0, 0}).data()));
}

fs::path FixtureRoot() { return fs::path(CAMREFINE_FIXTURE_DIR); }

const nlohmann::json& Goldens() {
  static const nlohmann::json goldens = [] {
    std::ifstream in(FixtureRoot() / "goldens.json");
    if (!in) throw std::runtime_error("goldens.json missing");
    return nlohmann::json::parse(in);
  }();
  return goldens;
}

Grid GoldenGrid(const std::string& name) {
  Grid g;
  g.data = dataio::ReadNpy(FixtureRoot() / "goldens" / (name + ".npy"), &g.height, &g.width);
  return g;
}

ImageTensor FixtureImage(const std::string& relative) {
  return dataio::ReadImage(FixtureRoot() / relative);
}

}  // namespace camrefine::testing
