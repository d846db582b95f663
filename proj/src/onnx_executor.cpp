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

#include "camrefine/onnx_executor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <utility>
#include <variant>

#include "camrefine/errors.hpp"
#include "proto/onnx.pb.h"

namespace camrefine::onnx {

std::int64_t Tensor::NumElements() const {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1},
                         std::multiplies<>());
}

namespace {

enum class Op {
  kConv,
  kBatchNorm,
  kRelu,
  kLeakyRelu,
  kSigmoid,
  kMaxPool,
  kAveragePool,
  kGlobalAveragePool,
  kGlobalMaxPool,
  kFlatten,
  kReshape,
  kGemm,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kIdentity,
};

const std::unordered_map<std::string, Op>& OpTable() {
  static const std::unordered_map<std::string, Op> table = {
      {"Conv", Op::kConv},
      {"BatchNormalization", Op::kBatchNorm},
      {"Relu", Op::kRelu},
      {"LeakyRelu", Op::kLeakyRelu},
      {"Sigmoid", Op::kSigmoid},
      {"MaxPool", Op::kMaxPool},
      {"AveragePool", Op::kAveragePool},
      {"GlobalAveragePool", Op::kGlobalAveragePool},
      {"GlobalMaxPool", Op::kGlobalMaxPool},
      {"Flatten", Op::kFlatten},
      {"Reshape", Op::kReshape},
      {"Gemm", Op::kGemm},
      {"MatMul", Op::kMatMul},
      {"Add", Op::kAdd},
      {"Sub", Op::kSub},
      {"Mul", Op::kMul},
      {"Div", Op::kDiv},
      {"Identity", Op::kIdentity},
      {"Dropout", Op::kIdentity},
  };
  return table;
}

using Attribute = std::variant<std::int64_t, float, std::string,
                               std::vector<std::int64_t>, std::vector<float>>;

struct Node {
  Op op;
  std::string op_type;
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::unordered_map<std::string, Attribute> attributes;

  std::int64_t Int(const std::string& key, std::int64_t fallback) const {
    auto it = attributes.find(key);
    if (it == attributes.end()) return fallback;
    if (const auto* v = std::get_if<std::int64_t>(&it->second)) return *v;
    throw Error(ErrorCode::kMalformedModel,
                "attribute " + key + " of " + name + " is not an int");
  }
  float Float(const std::string& key, float fallback) const {
    auto it = attributes.find(key);
    if (it == attributes.end()) return fallback;
    if (const auto* v = std::get_if<float>(&it->second)) return *v;
    throw Error(ErrorCode::kMalformedModel,
                "attribute " + key + " of " + name + " is not a float");
  }
  std::string String(const std::string& key, const std::string& fallback) const {
    auto it = attributes.find(key);
    if (it == attributes.end()) return fallback;
    if (const auto* v = std::get_if<std::string>(&it->second)) return *v;
    throw Error(ErrorCode::kMalformedModel,
                "attribute " + key + " of " + name + " is not a string");
  }
  std::vector<std::int64_t> Ints(const std::string& key,
                                 std::vector<std::int64_t> fallback) const {
    auto it = attributes.find(key);
    if (it == attributes.end()) return fallback;
    if (const auto* v = std::get_if<std::vector<std::int64_t>>(&it->second)) {
      return *v;
    }
    throw Error(ErrorCode::kMalformedModel,
                "attribute " + key + " of " + name + " is not an int list");
  }
};

[[noreturn]] void Malformed(const std::string& message) {
  throw Error(ErrorCode::kMalformedModel, message);
}

template <typename T>
std::vector<T> FromRaw(const std::string& raw, std::size_t count,
                       const std::string& name) {
  if (raw.size() != count * sizeof(T)) {
    Malformed("raw_data size mismatch for initializer " + name);
  }
  std::vector<T> out(count);
  // ONNX raw_data is little-endian, which matches every supported host.
  std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

Tensor ConvertTensor(const ::onnx::TensorProto& proto) {
  Tensor t;
  for (auto d : proto.dims()) {
    if (d < 0) Malformed("negative dimension in initializer " + proto.name());
    t.shape.push_back(d);
  }
  const auto count = static_cast<std::size_t>(t.NumElements());
  if (proto.data_location() == ::onnx::TensorProto::EXTERNAL) {
    Malformed("external tensor data is not supported: " + proto.name());
  }
  switch (proto.data_type()) {
    case ::onnx::TensorProto::FLOAT:
      if (proto.has_raw_data()) {
        t.data = FromRaw<float>(proto.raw_data(), count, proto.name());
      } else {
        t.data.assign(proto.float_data().begin(), proto.float_data().end());
      }
      if (t.data.size() != count) {
        Malformed("element count mismatch for initializer " + proto.name());
      }
      break;
    case ::onnx::TensorProto::DOUBLE: {
      std::vector<double> values;
      if (proto.has_raw_data()) {
        values = FromRaw<double>(proto.raw_data(), count, proto.name());
      } else {
        values.assign(proto.double_data().begin(), proto.double_data().end());
      }
      if (values.size() != count) {
        Malformed("element count mismatch for initializer " + proto.name());
      }
      t.data.assign(values.begin(), values.end());
      break;
    }
    case ::onnx::TensorProto::INT64:
      t.is_int = true;
      if (proto.has_raw_data()) {
        t.ints = FromRaw<std::int64_t>(proto.raw_data(), count, proto.name());
      } else {
        t.ints.assign(proto.int64_data().begin(), proto.int64_data().end());
      }
      if (t.ints.size() != count) {
        Malformed("element count mismatch for initializer " + proto.name());
      }
      break;
    default:
      Malformed("unsupported initializer data type " +
                std::to_string(proto.data_type()) + " for " + proto.name());
  }
  return t;
}

Attribute ConvertAttribute(const ::onnx::AttributeProto& attr) {
  using A = ::onnx::AttributeProto;
  switch (attr.type()) {
    case A::INT: return attr.i();
    case A::FLOAT: return attr.f();
    case A::STRING: return attr.s();
    case A::INTS:
      return std::vector<std::int64_t>(attr.ints().begin(), attr.ints().end());
    case A::FLOATS:
      return std::vector<float>(attr.floats().begin(), attr.floats().end());
    default:
      Malformed("unsupported attribute type for " + attr.name());
  }
}

// ---------------------------------------------------------------------------
// Kernels

const Tensor& Input(const std::vector<const Tensor*>& in, std::size_t i,
                    const Node& node) {
  if (i >= in.size() || in[i] == nullptr) {
    Malformed(node.op_type + " node " + node.name + " is missing input " +
              std::to_string(i));
  }
  if (in[i]->is_int) {
    Malformed(node.op_type + " node " + node.name + " expects a float input");
  }
  return *in[i];
}

void RequireRank(const Tensor& t, std::size_t rank, const Node& node) {
  if (t.shape.size() != rank) {
    throw Error(ErrorCode::kBackend,
                node.op_type + " node " + node.name + " expects rank " +
                    std::to_string(rank) + ", got " +
                    std::to_string(t.shape.size()));
  }
}

Tensor Unary(const Tensor& x, const std::function<float(float)>& fn) {
  Tensor y{x.shape, std::vector<float>(x.data.size()), {}, false};
  std::transform(x.data.begin(), x.data.end(), y.data.begin(), fn);
  return y;
}

Tensor Broadcast(const Tensor& a, const Tensor& b, const Node& node,
                 const std::function<float(float, float)>& fn) {
  const std::size_t rank = std::max(a.shape.size(), b.shape.size());
  auto padded = [rank](const std::vector<std::int64_t>& s) {
    std::vector<std::int64_t> out(rank - s.size(), 1);
    out.insert(out.end(), s.begin(), s.end());
    return out;
  };
  const auto sa = padded(a.shape);
  const auto sb = padded(b.shape);
  std::vector<std::int64_t> shape(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    if (sa[i] != sb[i] && sa[i] != 1 && sb[i] != 1) {
      throw Error(ErrorCode::kBackend,
                  "incompatible broadcast shapes in node " + node.name);
    }
    shape[i] = std::max(sa[i], sb[i]);
  }
  auto strides = [rank](const std::vector<std::int64_t>& s) {
    std::vector<std::int64_t> st(rank, 0);
    std::int64_t acc = 1;
    for (std::size_t i = rank; i-- > 0;) {
      st[i] = s[i] == 1 ? 0 : acc;
      acc *= s[i];
    }
    return st;
  };
  const auto st_a = strides(sa);
  const auto st_b = strides(sb);
  Tensor y;
  y.shape = shape;
  y.data.resize(static_cast<std::size_t>(y.NumElements()));
  std::vector<std::int64_t> index(rank, 0);
  for (std::size_t flat = 0; flat < y.data.size(); ++flat) {
    std::int64_t ia = 0;
    std::int64_t ib = 0;
    for (std::size_t d = 0; d < rank; ++d) {
      ia += index[d] * st_a[d];
      ib += index[d] * st_b[d];
    }
    y.data[flat] = fn(a.data[ia], b.data[ib]);
    for (std::size_t d = rank; d-- > 0;) {
      if (++index[d] < shape[d]) break;
      index[d] = 0;
    }
  }
  return y;
}

struct Window {
  std::int64_t kh, kw, sh, sw, pt, pl, pb, pr, dh, dw;
};

Window ReadWindow(const Node& node, std::int64_t kh, std::int64_t kw) {
  if (node.String("auto_pad", "NOTSET") != "NOTSET") {
    Malformed("auto_pad is not supported (node " + node.name + ")");
  }
  if (node.Int("ceil_mode", 0) != 0) {
    Malformed("ceil_mode is not supported (node " + node.name + ")");
  }
  const auto kernel = node.Ints("kernel_shape", {kh, kw});
  const auto strides = node.Ints("strides", {1, 1});
  const auto pads = node.Ints("pads", {0, 0, 0, 0});
  const auto dilations = node.Ints("dilations", {1, 1});
  if (kernel.size() != 2 || strides.size() != 2 || pads.size() != 4 ||
      dilations.size() != 2) {
    Malformed("only 2-D windows are supported (node " + node.name + ")");
  }
  return {kernel[0], kernel[1], strides[0], strides[1], pads[0],
          pads[1],   pads[2],   pads[3],    dilations[0], dilations[1]};
}

std::int64_t OutExtent(std::int64_t in, std::int64_t k, std::int64_t s,
                       std::int64_t p0, std::int64_t p1, std::int64_t d,
                       const Node& node) {
  const std::int64_t span = d * (k - 1) + 1;
  const std::int64_t out = (in + p0 + p1 - span) / s + 1;
  if (in + p0 + p1 < span || out < 1) {
    throw Error(ErrorCode::kBackend,
                "input too small for window of node " + node.name);
  }
  return out;
}

Tensor Conv(const std::vector<const Tensor*>& in, const Node& node) {
  const Tensor& x = Input(in, 0, node);
  const Tensor& w = Input(in, 1, node);
  RequireRank(x, 4, node);
  RequireRank(w, 4, node);
  const Tensor* bias = in.size() > 2 ? in[2] : nullptr;
  const std::int64_t group = node.Int("group", 1);
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2],
                     wd = x.shape[3];
  const std::int64_t m = w.shape[0], cg = w.shape[1];
  if (group < 1 || c != cg * group || m % group != 0) {
    throw Error(ErrorCode::kBackend, "channel mismatch in Conv " + node.name);
  }
  if (bias != nullptr && bias->NumElements() != m) {
    throw Error(ErrorCode::kBackend, "bias size mismatch in Conv " + node.name);
  }
  const Window win = ReadWindow(node, w.shape[2], w.shape[3]);
  if (win.kh != w.shape[2] || win.kw != w.shape[3]) {
    Malformed("kernel_shape disagrees with weights in Conv " + node.name);
  }
  const std::int64_t oh = OutExtent(h, win.kh, win.sh, win.pt, win.pb, win.dh, node);
  const std::int64_t ow = OutExtent(wd, win.kw, win.sw, win.pl, win.pr, win.dw, node);
  const std::int64_t m_per_group = m / group;

  Tensor y;
  y.shape = {n, m, oh, ow};
  y.data.assign(static_cast<std::size_t>(y.NumElements()), 0.0f);
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t oc = 0; oc < m; ++oc) {
      const std::int64_t g = oc / m_per_group;
      float* out = y.data.data() + ((b * m + oc) * oh) * ow;
      const float init = bias != nullptr ? bias->data[oc] : 0.0f;
      for (std::int64_t oy = 0; oy < oh; ++oy) {
        for (std::int64_t ox = 0; ox < ow; ++ox) {
          double acc = init;
          for (std::int64_t ic = 0; ic < cg; ++ic) {
            const std::int64_t xc = g * cg + ic;
            const float* plane = x.data.data() + ((b * c + xc) * h) * wd;
            const float* kernel = w.data.data() + ((oc * cg + ic) * win.kh) * win.kw;
            for (std::int64_t ky = 0; ky < win.kh; ++ky) {
              const std::int64_t iy = oy * win.sh - win.pt + ky * win.dh;
              if (iy < 0 || iy >= h) continue;
              for (std::int64_t kx = 0; kx < win.kw; ++kx) {
                const std::int64_t ix = ox * win.sw - win.pl + kx * win.dw;
                if (ix < 0 || ix >= wd) continue;
                acc += static_cast<double>(kernel[ky * win.kw + kx]) *
                       plane[iy * wd + ix];
              }
            }
          }
          out[oy * ow + ox] = static_cast<float>(acc);
        }
      }
    }
  }
  return y;
}

Tensor Pool(const std::vector<const Tensor*>& in, const Node& node, bool max_pool) {
  const Tensor& x = Input(in, 0, node);
  RequireRank(x, 4, node);
  if (node.attributes.find("kernel_shape") == node.attributes.end()) {
    Malformed("pool node " + node.name + " needs kernel_shape");
  }
  const Window win = ReadWindow(node, 1, 1);
  const bool include_pad = node.Int("count_include_pad", 0) != 0;
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2],
                     wd = x.shape[3];
  const std::int64_t oh = OutExtent(h, win.kh, win.sh, win.pt, win.pb, win.dh, node);
  const std::int64_t ow = OutExtent(wd, win.kw, win.sw, win.pl, win.pr, win.dw, node);
  Tensor y;
  y.shape = {n, c, oh, ow};
  y.data.resize(static_cast<std::size_t>(y.NumElements()));
  for (std::int64_t plane = 0; plane < n * c; ++plane) {
    const float* src = x.data.data() + plane * h * wd;
    float* dst = y.data.data() + plane * oh * ow;
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        double acc = max_pool ? -std::numeric_limits<double>::infinity() : 0.0;
        std::int64_t count = 0;
        for (std::int64_t ky = 0; ky < win.kh; ++ky) {
          const std::int64_t iy = oy * win.sh - win.pt + ky * win.dh;
          for (std::int64_t kx = 0; kx < win.kw; ++kx) {
            const std::int64_t ix = ox * win.sw - win.pl + kx * win.dw;
            if (iy < 0 || iy >= h || ix < 0 || ix >= wd) {
              if (include_pad) ++count;
              continue;
            }
            const double v = src[iy * wd + ix];
            acc = max_pool ? std::max(acc, v) : acc + v;
            ++count;
          }
        }
        dst[oy * ow + ox] = static_cast<float>(
            max_pool ? acc : (count > 0 ? acc / static_cast<double>(count) : 0.0));
      }
    }
  }
  return y;
}

Tensor GlobalPool(const std::vector<const Tensor*>& in, const Node& node,
                  bool max_pool) {
  const Tensor& x = Input(in, 0, node);
  if (x.shape.size() < 3) {
    throw Error(ErrorCode::kBackend, "global pool needs spatial dims: " + node.name);
  }
  const std::int64_t planes = x.shape[0] * x.shape[1];
  const std::int64_t spatial = x.NumElements() / std::max<std::int64_t>(planes, 1);
  Tensor y;
  y.shape = {x.shape[0], x.shape[1]};
  y.shape.resize(x.shape.size(), 1);
  y.data.resize(static_cast<std::size_t>(planes));
  for (std::int64_t p = 0; p < planes; ++p) {
    const float* src = x.data.data() + p * spatial;
    if (max_pool) {
      y.data[p] = *std::max_element(src, src + spatial);
    } else {
      double acc = 0.0;
      for (std::int64_t i = 0; i < spatial; ++i) acc += src[i];
      y.data[p] = static_cast<float>(acc / static_cast<double>(spatial));
    }
  }
  return y;
}

Tensor BatchNorm(const std::vector<const Tensor*>& in, const Node& node) {
  const Tensor& x = Input(in, 0, node);
  const Tensor& scale = Input(in, 1, node);
  const Tensor& shift = Input(in, 2, node);
  const Tensor& mean = Input(in, 3, node);
  const Tensor& var = Input(in, 4, node);
  const float eps = node.Float("epsilon", 1e-5f);
  if (x.shape.size() < 2) RequireRank(x, 4, node);
  const std::int64_t n = x.shape[0], c = x.shape[1];
  const std::int64_t spatial = x.NumElements() / std::max<std::int64_t>(n * c, 1);
  for (const Tensor* t : {&scale, &shift, &mean, &var}) {
    if (t->NumElements() != c) {
      throw Error(ErrorCode::kBackend, "BatchNormalization parameter size mismatch");
    }
  }
  Tensor y{x.shape, std::vector<float>(x.data.size()), {}, false};
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const double k = scale.data[ch] / std::sqrt(static_cast<double>(var.data[ch]) + eps);
      const double offset = shift.data[ch] - k * mean.data[ch];
      const std::int64_t base = (b * c + ch) * spatial;
      for (std::int64_t i = 0; i < spatial; ++i) {
        y.data[base + i] = static_cast<float>(k * x.data[base + i] + offset);
      }
    }
  }
  return y;
}

Tensor Flatten(const std::vector<const Tensor*>& in, const Node& node) {
  const Tensor& x = Input(in, 0, node);
  std::int64_t axis = node.Int("axis", 1);
  const auto rank = static_cast<std::int64_t>(x.shape.size());
  if (axis < 0) axis += rank;
  if (axis < 0 || axis > rank) Malformed("bad Flatten axis in " + node.name);
  std::int64_t outer = 1;
  for (std::int64_t i = 0; i < axis; ++i) outer *= x.shape[i];
  Tensor y = x;
  y.shape = {outer, x.NumElements() / std::max<std::int64_t>(outer, 1)};
  return y;
}

Tensor Reshape(const std::vector<const Tensor*>& in, const Node& node) {
  const Tensor& x = Input(in, 0, node);
  if (in.size() < 2 || in[1] == nullptr || !in[1]->is_int) {
    Malformed("Reshape " + node.name + " needs an int64 shape input");
  }
  std::vector<std::int64_t> shape = in[1]->ints;
  std::int64_t known = 1;
  int infer = -1;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == 0) {
      if (i >= x.shape.size()) Malformed("bad Reshape in " + node.name);
      shape[i] = x.shape[i];
    }
    if (shape[i] == -1) {
      if (infer >= 0) Malformed("multiple -1 in Reshape " + node.name);
      infer = static_cast<int>(i);
    } else {
      known *= shape[i];
    }
  }
  if (infer >= 0) shape[infer] = known > 0 ? x.NumElements() / known : 0;
  Tensor y = x;
  y.shape = shape;
  if (y.NumElements() != x.NumElements()) {
    throw Error(ErrorCode::kBackend, "Reshape size mismatch in " + node.name);
  }
  return y;
}

Tensor MatMul2d(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b,
                const Node& node) {
  RequireRank(a, 2, node);
  RequireRank(b, 2, node);
  const std::int64_t m = trans_a ? a.shape[1] : a.shape[0];
  const std::int64_t k = trans_a ? a.shape[0] : a.shape[1];
  const std::int64_t kb = trans_b ? b.shape[1] : b.shape[0];
  const std::int64_t n = trans_b ? b.shape[0] : b.shape[1];
  if (k != kb) {
    throw Error(ErrorCode::kBackend, "inner dimension mismatch in " + node.name);
  }
  Tensor y;
  y.shape = {m, n};
  y.data.resize(static_cast<std::size_t>(m * n));
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::int64_t p = 0; p < k; ++p) {
        const float av = trans_a ? a.data[p * m + i] : a.data[i * k + p];
        const float bv = trans_b ? b.data[j * k + p] : b.data[p * n + j];
        acc += static_cast<double>(av) * bv;
      }
      y.data[i * n + j] = static_cast<float>(acc);
    }
  }
  return y;
}

Tensor Gemm(const std::vector<const Tensor*>& in, const Node& node) {
  const Tensor& a = Input(in, 0, node);
  const Tensor& b = Input(in, 1, node);
  const float alpha = node.Float("alpha", 1.0f);
  const float beta = node.Float("beta", 1.0f);
  Tensor y = MatMul2d(a, b, node.Int("transA", 0) != 0,
                      node.Int("transB", 0) != 0, node);
  for (float& v : y.data) v *= alpha;
  if (in.size() > 2 && in[2] != nullptr) {
    const Tensor& c = Input(in, 2, node);
    y = Broadcast(y, c, node, [beta](float u, float v) { return u + beta * v; });
  }
  return y;
}

Tensor Execute(const Node& node, const std::vector<const Tensor*>& in) {
  switch (node.op) {
    case Op::kConv: return Conv(in, node);
    case Op::kBatchNorm: return BatchNorm(in, node);
    case Op::kRelu:
      return Unary(Input(in, 0, node), [](float v) { return v > 0.0f ? v : 0.0f; });
    case Op::kLeakyRelu: {
      const float alpha = node.Float("alpha", 0.01f);
      return Unary(Input(in, 0, node),
                   [alpha](float v) { return v >= 0.0f ? v : alpha * v; });
    }
    case Op::kSigmoid:
      return Unary(Input(in, 0, node), [](float v) {
        return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
      });
    case Op::kMaxPool: return Pool(in, node, true);
    case Op::kAveragePool: return Pool(in, node, false);
    case Op::kGlobalAveragePool: return GlobalPool(in, node, false);
    case Op::kGlobalMaxPool: return GlobalPool(in, node, true);
    case Op::kFlatten: return Flatten(in, node);
    case Op::kReshape: return Reshape(in, node);
    case Op::kGemm: return Gemm(in, node);
    case Op::kMatMul:
      return MatMul2d(Input(in, 0, node), Input(in, 1, node), false, false, node);
    case Op::kAdd:
      return Broadcast(Input(in, 0, node), Input(in, 1, node), node,
                       std::plus<float>());
    case Op::kSub:
      return Broadcast(Input(in, 0, node), Input(in, 1, node), node,
                       std::minus<float>());
    case Op::kMul:
      return Broadcast(Input(in, 0, node), Input(in, 1, node), node,
                       std::multiplies<float>());
    case Op::kDiv:
      return Broadcast(Input(in, 0, node), Input(in, 1, node), node,
                       std::divides<float>());
    case Op::kIdentity: {
      if (in.empty() || in[0] == nullptr) Malformed("Identity without input");
      return *in[0];
    }
  }
  Malformed("unreachable op");
}

}  // namespace

struct Executor::Impl {
  std::string origin;
  std::vector<Node> nodes;
  std::unordered_map<std::string, Tensor> initializers;
  std::vector<std::string> inputs;
  std::set<std::string> produced;
};

Executor::Executor(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Executor::Executor(Executor&&) noexcept = default;
Executor& Executor::operator=(Executor&&) noexcept = default;
Executor::~Executor() = default;

Executor Executor::FromFile(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kMissingFile, "model file not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return FromBytes(buffer.str(), path.string());
}

Executor Executor::FromBytes(const std::string& bytes, const std::string& origin) {
  ::onnx::ModelProto model;
  if (bytes.empty() || !model.ParseFromString(bytes) || !model.has_graph()) {
    Malformed("cannot parse ONNX model " + origin);
  }
  const ::onnx::GraphProto& graph = model.graph();

  auto impl = std::make_unique<Impl>();
  impl->origin = origin;
  for (const auto& init : graph.initializer()) {
    impl->initializers.emplace(init.name(), ConvertTensor(init));
    impl->produced.insert(init.name());
  }
  for (const auto& input : graph.input()) {
    if (impl->initializers.count(input.name()) == 0) {
      impl->inputs.push_back(input.name());
    }
    impl->produced.insert(input.name());
  }
  if (impl->inputs.empty()) Malformed("model has no runtime input: " + origin);

  for (const auto& proto : graph.node()) {
    if (!proto.domain().empty() && proto.domain() != "ai.onnx") {
      Malformed("unsupported operator domain " + proto.domain());
    }
    auto op = OpTable().find(proto.op_type());
    if (op == OpTable().end()) {
      Malformed("unsupported operator " + proto.op_type() + " in " + origin);
    }
    Node node;
    node.op = op->second;
    node.op_type = proto.op_type();
    node.name = proto.name().empty() ? proto.op_type() : proto.name();
    for (const auto& name : proto.input()) {
      if (!name.empty() && impl->produced.count(name) == 0) {
        Malformed("node " + node.name + " reads undefined value " + name +
                  " (graph must be topologically sorted)");
      }
      node.inputs.push_back(name);
    }
    for (const auto& attr : proto.attribute()) {
      node.attributes.emplace(attr.name(), ConvertAttribute(attr));
    }
    if (proto.output_size() < 1) Malformed("node " + node.name + " has no output");
    // Dropout's optional mask output is never materialised.
    node.outputs.push_back(proto.output(0));
    impl->produced.insert(proto.output(0));
    impl->nodes.push_back(std::move(node));
  }
  return Executor(std::move(impl));
}

bool Executor::HasValue(const std::string& name) const {
  return impl_->produced.count(name) > 0;
}

const Tensor* Executor::Initializer(const std::string& name) const {
  auto it = impl_->initializers.find(name);
  return it == impl_->initializers.end() ? nullptr : &it->second;
}

const std::vector<std::string>& Executor::InputNames() const {
  return impl_->inputs;
}

std::map<std::string, Tensor> Executor::Run(
    const std::map<std::string, Tensor>& feeds,
    const std::vector<std::string>& fetches) const {
  std::unordered_map<std::string, Tensor> values;
  for (const auto& name : impl_->inputs) {
    auto it = feeds.find(name);
    if (it == feeds.end()) {
      throw Error(ErrorCode::kBackend,
                  "missing feed for input " + name + " of " + impl_->origin);
    }
    values.emplace(name, it->second);
  }
  auto lookup = [&](const std::string& name) -> const Tensor* {
    if (name.empty()) return nullptr;
    auto it = values.find(name);
    if (it != values.end()) return &it->second;
    auto init = impl_->initializers.find(name);
    return init == impl_->initializers.end() ? nullptr : &init->second;
  };

  for (const Node& node : impl_->nodes) {
    std::vector<const Tensor*> in;
    in.reserve(node.inputs.size());
    for (const auto& name : node.inputs) in.push_back(lookup(name));
    values.insert_or_assign(node.outputs[0], Execute(node, in));
  }

  std::map<std::string, Tensor> out;
  for (const auto& name : fetches) {
    const Tensor* t = lookup(name);
    if (t == nullptr) {
      throw Error(ErrorCode::kBackend,
                  "value " + name + " not produced by " + impl_->origin);
    }
    out.emplace(name, *t);
  }
  return out;
}

}  // namespace camrefine::onnx
