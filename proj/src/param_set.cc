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

#include "fhat/param_set.h"

#include <cmath>

#include "fhat/errors.h"
#include "fhat/rng.h"

namespace fhat {

void ParamSet::Add(const std::string& name, Tensor value) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  index_.emplace(name, entries_.size());
  entries_.push_back({name, std::move(value)});
}

Tensor& ParamSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return entries_[it->second].value;
}

const Tensor& ParamSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return entries_[it->second].value;
}

std::size_t ParamSet::NumScalars() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

ParamSet ParamSet::ZerosLike() const {
  ParamSet out;
  for (const auto& e : entries_) out.Add(e.name, Tensor(e.value.shape()));
  return out;
}

void ParamSet::SetZero() {
  for (auto& e : entries_) e.value.Fill(0.0);
}

bool ParamSet::SameLayout(const ParamSet& other) const {
  if (other.entries_.size() != entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name ||
        entries_[i].value.shape() != other.entries_[i].value.shape()) {
      return false;
    }
  }
  return true;
}

void ParamSet::Axpy(double scale, const ParamSet& other) {
  if (!SameLayout(other)) throw DimensionError("ParamSet::Axpy: layout mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& dst = entries_[i].value.data();
    const auto& src = other.entries_[i].value.data();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
  }
}

void ParamLayout::Glorot(const std::string& name, Shape shape, std::size_t fan_in,
                         std::size_t fan_out) {
  specs_.push_back({name, std::move(shape), Init::kGlorotUniform, fan_in, fan_out, 0.0});
}

void ParamLayout::Constant(const std::string& name, Shape shape, double value) {
  specs_.push_back({name, std::move(shape), Init::kConstant, 0, 0, value});
}

std::size_t ParamLayout::NumScalars() const {
  std::size_t n = 0;
  for (const auto& s : specs_) n += ShapeSize(s.shape);
  return n;
}

ParamSet ParamLayout::Materialize(Rng& rng) const {
  ParamSet ps;
  for (const auto& s : specs_) {
    if (s.init == Init::kGlorotUniform) {
      const double a = std::sqrt(6.0 / static_cast<double>(s.fan_in + s.fan_out));
      ps.Add(s.name, rng.UniformTensor(s.shape, -a, a));
    } else {
      ps.Add(s.name, Tensor::Filled(s.shape, s.value));
    }
  }
  return ps;
}

}  // namespace fhat
