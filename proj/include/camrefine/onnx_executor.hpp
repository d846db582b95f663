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

#ifndef CAMREFINE_ONNX_EXECUTOR_HPP_
#define CAMREFINE_ONNX_EXECUTOR_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace camrefine::onnx {

// Dense row-major tensor. Integer tensors (shape operands) keep their values
// in `ints` and leave `data` empty.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> data;
  std::vector<std::int64_t> ints;
  bool is_int = false;

  std::int64_t NumElements() const;
};

// Reference CPU interpreter for the subset of ONNX used by GAP+FC image
// classifiers: Conv, BatchNormalization, Relu, LeakyRelu, Sigmoid, MaxPool,
// AveragePool, GlobalAveragePool, GlobalMaxPool, Flatten, Reshape, Gemm,
// MatMul, Add, Sub, Mul, Div, Identity, Dropout.
//
// A loaded graph is immutable; Run() may be called from several threads.
class Executor {
 public:
  static Executor FromFile(const std::filesystem::path& path);
  static Executor FromBytes(const std::string& bytes, const std::string& origin);

  Executor(Executor&&) noexcept;
  Executor& operator=(Executor&&) noexcept;
  ~Executor();

  // True if `name` is produced by a node, is a graph input, or an initializer.
  bool HasValue(const std::string& name) const;
  const Tensor* Initializer(const std::string& name) const;
  const std::vector<std::string>& InputNames() const;

  // Evaluates the graph and returns the requested values.
  std::map<std::string, Tensor> Run(const std::map<std::string, Tensor>& feeds,
                                    const std::vector<std::string>& fetches) const;

 private:
  struct Impl;
  explicit Executor(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace camrefine::onnx

#endif  // CAMREFINE_ONNX_EXECUTOR_HPP_
