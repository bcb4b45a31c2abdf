/* Copyright 2026 The fhat Authors. All Rights Reserved.

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

#ifndef FHAT_PARAM_SET_H_
#define FHAT_PARAM_SET_H_

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "fhat/tensor.h"

namespace fhat {

// Named tensors with deterministic (insertion) iteration order.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor value;
  };

  void Add(const std::string& name, Tensor value);  // throws on duplicate
  bool Contains(const std::string& name) const { return index_.count(name) > 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t NumScalars() const;

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  // Same names and shapes, all zeros.
  ParamSet ZerosLike() const;
  void SetZero();
  // Adds `scale * other` entrywise; requires identical layout.
  void Axpy(double scale, const ParamSet& other);
  bool SameLayout(const ParamSet& other) const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

class Rng;

// Declarative parameter list: names, shapes and initializers. Counting never
// allocates, so full-scale layouts can be sized without materializing them.
class ParamLayout {
 public:
  enum class Init { kGlorotUniform, kConstant };
  struct Spec {
    std::string name;
    Shape shape;
    Init init = Init::kConstant;
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    double value = 0.0;
  };

  // uniform(-a, a), a = sqrt(6 / (fan_in + fan_out))
  void Glorot(const std::string& name, Shape shape, std::size_t fan_in, std::size_t fan_out);
  void Constant(const std::string& name, Shape shape, double value = 0.0);

  const std::vector<Spec>& specs() const { return specs_; }
  std::size_t NumScalars() const;
  // Draws initial values in declaration order.
  ParamSet Materialize(Rng& rng) const;

 private:
  std::vector<Spec> specs_;
};

}  // namespace fhat

#endif  // FHAT_PARAM_SET_H_
