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

#ifndef FHAT_GRAPH_H_
#define FHAT_GRAPH_H_

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fhat/ops.h"
#include "fhat/param_set.h"
#include "fhat/tensor.h"

// A small tape for reverse-mode differentiation over the ops in ops.h. Only the
// operations the models need are provided; each has a hand-written backward.
namespace fhat::ad {

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while its Graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph() const { return graph_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool valid() const { return graph_ != nullptr; }

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

class Graph {
 public:
  // Backward closure: receives the gradient flowing into the node's output.
  using BackwardFn = std::function<void(Graph& graph, const Tensor& out_grad)>;

  // With record_gradients == false no gradient bookkeeping is kept, which is
  // how the decoder and evaluator run the models.
  explicit Graph(bool record_gradients = true) : record_(record_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }

  // Parameters are read from `params`; Backward() adds their gradients into
  // `grads` (which may be null for inference).
  void BindParams(const ParamSet* params, ParamSet* grads);
  Var Param(const std::string& name);
  Var Constant(Tensor value);

  // Records an op output. `parents` lists inputs; the node needs a gradient iff
  // any parent does. Throws NumericError if `value` contains NaN/Inf.
  Var Record(const char* op, Tensor value, std::vector<Var> parents, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  bool NeedsGrad(Var v) const { return nodes_[v.id()].needs_grad; }
  // Adds `g` to the gradient of `v` (no-op when v needs no gradient).
  void Accumulate(Var v, const Tensor& g);

  // Seeds d(out)/d(out) = 1 for a 1x1 `out` and runs all backward closures.
  void Backward(Var out);
  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool needs_grad = false;
    const std::string* param_name = nullptr;
  };

  bool record_;
  std::deque<Node> nodes_;
  const ParamSet* params_ = nullptr;
  ParamSet* grads_ = nullptr;
  std::map<std::string, std::size_t> param_nodes_;
};

Var MatMul(Var a, Var b);
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var a, double c);
// x: [n x d], bias: [1 x d] (or any d-element tensor) added to every row.
Var AddBias(Var x, Var bias);
// x * W + b
Var Linear(Var x, Var weight, Var bias);
Var AddConstant(Var x, const Tensor& c);

Var Sigmoid(Var x);
Var Tanh(Var x);
Var Swish(Var x);
// [n x 2d] -> [n x d]: first half gated by sigmoid of second half.
Var Glu(Var x);

Var LayerNorm(Var x, Var gain, Var bias);
Var DepthwiseConv1d(Var x, Var kernel);
Var Pool1d(Var x, std::size_t stride, ops::PoolMode mode);
// Rows 0, stride, 2*stride, ...: ceil(T / stride) rows.
Var DecimateRows(Var x, std::size_t stride);
Var Softmax(Var x);  // last axis

Var SliceCols(Var x, std::size_t begin, std::size_t end);
Var SliceRows(Var x, std::size_t begin, std::size_t end);
Var ConcatCols(const std::vector<Var>& parts);
Var ConcatRows(const std::vector<Var>& parts);
Var GatherRows(Var table, const std::vector<std::size_t>& indices);
// a: [T x J], b: [U x J] -> [(T*U) x J], row t*U + u = a[t] + b[u].
Var OuterAddRows(Var a, Var b);

// Scaled dot-product attention over `heads` column groups.
// q: [Lq x m], k, v: [Lkv x m] -> [Lq x m].
Var MultiHeadAttention(Var q, Var k, Var v, std::size_t heads);

Var Sum(Var x);                          // -> [1 x 1]
Var WeightedSum(Var x, const Tensor& w);  // sum(w .* x) -> [1 x 1]

}  // namespace fhat::ad

#endif  // FHAT_GRAPH_H_
