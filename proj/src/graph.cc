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

#include "fhat/graph.h"

#include <cmath>
#include <memory>

#include "fhat/errors.h"

namespace fhat::ad {

const Tensor& Var::value() const { return graph_->value(*this); }

void Graph::BindParams(const ParamSet* params, ParamSet* grads) {
  params_ = params;
  grads_ = grads;
  param_nodes_.clear();
}

Var Graph::Param(const std::string& name) {
  if (!params_) throw ConfigError("Graph::Param called without BindParams");
  auto it = param_nodes_.find(name);
  if (it != param_nodes_.end()) return Var(this, it->second);
  const Tensor& value = params_->at(name);
  Node node;
  node.value = value;
  node.needs_grad = record_ && grads_ != nullptr;
  const std::size_t id = nodes_.size();
  nodes_.push_back(std::move(node));
  auto [pos, inserted] = param_nodes_.emplace(name, id);
  nodes_[id].param_name = &pos->first;
  return Var(this, id);
}

Var Graph::Constant(Tensor value) {
  if (!value.AllFinite()) throw NumericError("non-finite constant");
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::Record(const char* op, Tensor value, std::vector<Var> parents, BackwardFn backward) {
  if (!value.AllFinite()) throw NumericError(std::string("non-finite output from ") + op);
  Node node;
  node.value = std::move(value);
  if (record_) {
    for (const Var& p : parents) {
      if (p.graph() != this) throw ConfigError(std::string(op) + ": operand from another graph");
      node.needs_grad = node.needs_grad || nodes_[p.id()].needs_grad;
    }
    if (node.needs_grad) node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Graph::Accumulate(Var v, const Tensor& g) {
  Node& node = nodes_[v.id()];
  if (!node.needs_grad) return;
  if (node.grad.empty() && !node.value.empty()) {
    node.grad = g;
    if (node.grad.shape() != node.value.shape()) {
      throw DimensionError("gradient shape " + ShapeString(g.shape()) + " for value " +
                           ShapeString(node.value.shape()));
    }
    return;
  }
  node.grad.AddInPlace(g);
}

void Graph::Backward(Var out) {
  if (!record_) throw ConfigError("Backward on a non-recording graph");
  if (value(out).size() != 1) throw DimensionError("Backward requires a scalar output");
  Accumulate(out, Tensor::Filled(value(out).shape(), 1.0));
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad.empty()) continue;
    if (node.backward) {
      node.backward(*this, node.grad);
    } else if (node.param_name && grads_) {
      grads_->at(*node.param_name).AddInPlace(node.grad);
    }
  }
}

namespace {

Graph& G(Var v) { return *v.graph(); }

void RequireSame(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": " + ShapeString(a.shape()) + " vs " +
                         ShapeString(b.shape()));
  }
}

}  // namespace

Var MatMul(Var a, Var b) {
  Tensor out = ops::MatMul(a.value(), b.value());
  return G(a).Record("MatMul", std::move(out), {a, b}, [a, b](Graph& g, const Tensor& dy) {
    if (g.NeedsGrad(a)) g.Accumulate(a, ops::MatMulTransB(dy, g.value(b)));
    if (g.NeedsGrad(b)) g.Accumulate(b, ops::MatMulTransA(g.value(a), dy));
  });
}

Var Add(Var a, Var b) {
  RequireSame(a.value(), b.value(), "Add");
  Tensor out = a.value();
  out.AddInPlace(b.value());
  return G(a).Record("Add", std::move(out), {a, b}, [a, b](Graph& g, const Tensor& dy) {
    g.Accumulate(a, dy);
    g.Accumulate(b, dy);
  });
}

Var Sub(Var a, Var b) {
  RequireSame(a.value(), b.value(), "Sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return G(a).Record("Sub", std::move(out), {a, b}, [a, b](Graph& g, const Tensor& dy) {
    g.Accumulate(a, dy);
    if (g.NeedsGrad(b)) {
      Tensor n = dy;
      for (auto& v : n.data()) v = -v;
      g.Accumulate(b, n);
    }
  });
}

Var Mul(Var a, Var b) {
  RequireSame(a.value(), b.value(), "Mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return G(a).Record("Mul", std::move(out), {a, b}, [a, b](Graph& g, const Tensor& dy) {
    if (g.NeedsGrad(a)) {
      Tensor da = dy;
      for (std::size_t i = 0; i < da.size(); ++i) da[i] *= g.value(b)[i];
      g.Accumulate(a, da);
    }
    if (g.NeedsGrad(b)) {
      Tensor db = dy;
      for (std::size_t i = 0; i < db.size(); ++i) db[i] *= g.value(a)[i];
      g.Accumulate(b, db);
    }
  });
}

Var Scale(Var a, double c) {
  Tensor out = a.value();
  for (auto& v : out.data()) v *= c;
  return G(a).Record("Scale", std::move(out), {a}, [a, c](Graph& g, const Tensor& dy) {
    Tensor da = dy;
    for (auto& v : da.data()) v *= c;
    g.Accumulate(a, da);
  });
}

Var AddBias(Var x, Var bias) {
  const Tensor& xv = x.value();
  RequireRank2(xv, "AddBias");
  const std::size_t n = xv.rows(), d = xv.cols();
  if (bias.value().size() != d) throw DimensionError("AddBias: bias size mismatch");
  Tensor out = xv;
  const Tensor& bv = bias.value();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) out.at(r, c) += bv[c];
  }
  return G(x).Record("AddBias", std::move(out), {x, bias}, [x, bias](Graph& g, const Tensor& dy) {
    g.Accumulate(x, dy);
    if (g.NeedsGrad(bias)) {
      Tensor db(g.value(bias).shape());
      for (std::size_t r = 0; r < dy.rows(); ++r) {
        for (std::size_t c = 0; c < dy.cols(); ++c) db[c] += dy.at(r, c);
      }
      g.Accumulate(bias, db);
    }
  });
}

Var Linear(Var x, Var weight, Var bias) { return AddBias(MatMul(x, weight), bias); }

Var AddConstant(Var x, const Tensor& c) {
  RequireSame(x.value(), c, "AddConstant");
  Tensor out = x.value();
  out.AddInPlace(c);
  return G(x).Record("AddConstant", std::move(out), {x},
                     [x](Graph& g, const Tensor& dy) { g.Accumulate(x, dy); });
}

Var Sigmoid(Var x) {
  Tensor out = x.value();
  for (auto& v : out.data()) v = ops::Sigmoid(v);
  auto cached = std::make_shared<Tensor>(out);
  return G(x).Record("Sigmoid", std::move(out), {x}, [x, cached](Graph& g, const Tensor& dy) {
    Tensor dx = dy;
    const Tensor& s = *cached;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= s[i] * (1.0 - s[i]);
    g.Accumulate(x, dx);
  });
}

Var Tanh(Var x) {
  Tensor out = x.value();
  for (auto& v : out.data()) v = std::tanh(v);
  auto cached = std::make_shared<Tensor>(out);
  return G(x).Record("Tanh", std::move(out), {x}, [x, cached](Graph& g, const Tensor& dy) {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= 1.0 - (*cached)[i] * (*cached)[i];
    g.Accumulate(x, dx);
  });
}

Var Swish(Var x) {
  Tensor out = x.value();
  for (auto& v : out.data()) v = v * ops::Sigmoid(v);
  return G(x).Record("Swish", std::move(out), {x}, [x](Graph& g, const Tensor& dy) {
    const Tensor& xv = g.value(x);
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double s = ops::Sigmoid(xv[i]);
      dx[i] *= s * (1.0 + xv[i] * (1.0 - s));
    }
    g.Accumulate(x, dx);
  });
}

Var Glu(Var x) {
  const Tensor& xv = x.value();
  RequireRank2(xv, "Glu");
  if (xv.cols() % 2) throw DimensionError("Glu: odd number of columns");
  const std::size_t n = xv.rows(), d = xv.cols() / 2;
  Tensor out({n, d});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) out.at(r, c) = xv.at(r, c) * ops::Sigmoid(xv.at(r, c + d));
  }
  return G(x).Record("Glu", std::move(out), {x}, [x, n, d](Graph& g, const Tensor& dy) {
    const Tensor& xv = g.value(x);
    Tensor dx({n, 2 * d});
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        const double a = xv.at(r, c);
        const double s = ops::Sigmoid(xv.at(r, c + d));
        dx.at(r, c) = dy.at(r, c) * s;
        dx.at(r, c + d) = dy.at(r, c) * a * s * (1.0 - s);
      }
    }
    g.Accumulate(x, dx);
  });
}

Var LayerNorm(Var x, Var gain, Var bias) {
  auto cache = std::make_shared<ops::LayerNormCache>();
  Tensor out = ops::LayerNorm(x.value(), gain.value(), bias.value(), cache.get());
  return G(x).Record("LayerNorm", std::move(out), {x, gain, bias},
                     [x, gain, bias, cache](Graph& g, const Tensor& dy) {
                       Tensor dx;
                       Tensor dgain(g.value(gain).shape());
                       Tensor dbias(g.value(bias).shape());
                       const bool need_x = g.NeedsGrad(x);
                       ops::LayerNormBackward(*cache, g.value(gain), dy, need_x ? &dx : nullptr,
                                              &dgain, &dbias);
                       if (need_x) g.Accumulate(x, dx);
                       g.Accumulate(gain, dgain);
                       g.Accumulate(bias, dbias);
                     });
}

Var DepthwiseConv1d(Var x, Var kernel) {
  Tensor out = ops::DepthwiseConv1d(x.value(), kernel.value());
  return G(x).Record("DepthwiseConv1d", std::move(out), {x, kernel},
                     [x, kernel](Graph& g, const Tensor& dy) {
                       Tensor dx;
                       Tensor dk(g.value(kernel).shape());
                       const bool need_x = g.NeedsGrad(x);
                       ops::DepthwiseConv1dBackward(g.value(x), g.value(kernel), dy,
                                                    need_x ? &dx : nullptr, &dk);
                       if (need_x) g.Accumulate(x, dx);
                       g.Accumulate(kernel, dk);
                     });
}

Var Pool1d(Var x, std::size_t stride, ops::PoolMode mode) {
  auto argmax = std::make_shared<std::vector<std::size_t>>();
  Tensor out = ops::Pool1d(x.value(), stride, mode, argmax.get());
  return G(x).Record("Pool1d", std::move(out), {x},
                     [x, stride, mode, argmax](Graph& g, const Tensor& dy) {
                       g.Accumulate(x, ops::Pool1dBackward(g.value(x).shape(), stride, mode,
                                                           *argmax, dy));
                     });
}

Var DecimateRows(Var x, std::size_t stride) {
  const Tensor& xv = x.value();
  RequireRank2(xv, "DecimateRows");
  if (stride < 1) throw ConfigError("DecimateRows: stride must be >= 1");
  const std::size_t n = ops::CeilDiv(xv.rows(), stride), d = xv.cols();
  Tensor out({n, d});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) out.at(r, c) = xv.at(r * stride, c);
  }
  return G(x).Record("DecimateRows", std::move(out), {x}, [x, stride](Graph& g, const Tensor& dy) {
    Tensor dx(g.value(x).shape());
    for (std::size_t r = 0; r < dy.rows(); ++r) {
      for (std::size_t c = 0; c < dy.cols(); ++c) dx.at(r * stride, c) = dy.at(r, c);
    }
    g.Accumulate(x, dx);
  });
}

Var Softmax(Var x) {
  Tensor out = ops::Softmax(x.value(), x.value().rank() - 1);
  auto cached = std::make_shared<Tensor>(out);
  return G(x).Record("Softmax", std::move(out), {x}, [x, cached](Graph& g, const Tensor& dy) {
    g.Accumulate(x, ops::SoftmaxBackward(*cached, dy));
  });
}

Var SliceCols(Var x, std::size_t begin, std::size_t end) {
  const Tensor& xv = x.value();
  RequireRank2(xv, "SliceCols");
  if (begin > end || end > xv.cols()) throw DimensionError("SliceCols: range out of bounds");
  const std::size_t n = xv.rows(), w = end - begin;
  Tensor out({n, w});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < w; ++c) out.at(r, c) = xv.at(r, begin + c);
  }
  return G(x).Record("SliceCols", std::move(out), {x}, [x, begin, w](Graph& g, const Tensor& dy) {
    Tensor dx(g.value(x).shape());
    for (std::size_t r = 0; r < dy.rows(); ++r) {
      for (std::size_t c = 0; c < w; ++c) dx.at(r, begin + c) = dy.at(r, c);
    }
    g.Accumulate(x, dx);
  });
}

Var SliceRows(Var x, std::size_t begin, std::size_t end) {
  const Tensor& xv = x.value();
  RequireRank2(xv, "SliceRows");
  if (begin > end || end > xv.rows()) throw DimensionError("SliceRows: range out of bounds");
  const std::size_t d = xv.cols();
  Tensor out({end - begin, d},
             std::vector<double>(xv.data().begin() + static_cast<std::ptrdiff_t>(begin * d),
                                 xv.data().begin() + static_cast<std::ptrdiff_t>(end * d)));
  return G(x).Record("SliceRows", std::move(out), {x}, [x, begin, d](Graph& g, const Tensor& dy) {
    Tensor dx(g.value(x).shape());
    std::copy(dy.data().begin(), dy.data().end(),
              dx.data().begin() + static_cast<std::ptrdiff_t>(begin * d));
    g.Accumulate(x, dx);
  });
}

Var ConcatCols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("ConcatCols: no inputs");
  const std::size_t n = parts[0].rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.rows() != n) throw DimensionError("ConcatCols: row count mismatch");
    offsets.push_back(total);
    total += p.cols();
  }
  Tensor out({n, total});
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Tensor& pv = parts[i].value();
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < pv.cols(); ++c) out.at(r, offsets[i] + c) = pv.at(r, c);
    }
  }
  return G(parts[0]).Record("ConcatCols", std::move(out), parts,
                            [parts, offsets](Graph& g, const Tensor& dy) {
                              for (std::size_t i = 0; i < parts.size(); ++i) {
                                if (!g.NeedsGrad(parts[i])) continue;
                                Tensor dp(g.value(parts[i]).shape());
                                for (std::size_t r = 0; r < dp.rows(); ++r) {
                                  for (std::size_t c = 0; c < dp.cols(); ++c) {
                                    dp.at(r, c) = dy.at(r, offsets[i] + c);
                                  }
                                }
                                g.Accumulate(parts[i], dp);
                              }
                            });
}

Var ConcatRows(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("ConcatRows: no inputs");
  const std::size_t d = parts[0].cols();
  std::vector<double> data;
  std::vector<std::size_t> offsets;
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != d) throw DimensionError("ConcatRows: column count mismatch");
    offsets.push_back(rows);
    rows += p.rows();
    data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  }
  return G(parts[0]).Record(
      "ConcatRows", Tensor({rows, d}, std::move(data)), parts,
      [parts, offsets, d](Graph& g, const Tensor& dy) {
        for (std::size_t i = 0; i < parts.size(); ++i) {
          if (!g.NeedsGrad(parts[i])) continue;
          const Tensor& pv = g.value(parts[i]);
          auto first = dy.data().begin() + static_cast<std::ptrdiff_t>(offsets[i] * d);
          g.Accumulate(parts[i],
                       Tensor(pv.shape(), std::vector<double>(
                                              first, first + static_cast<std::ptrdiff_t>(pv.size()))));
        }
      });
}

Var GatherRows(Var table, const std::vector<std::size_t>& indices) {
  const Tensor& tv = table.value();
  RequireRank2(tv, "GatherRows");
  const std::size_t d = tv.cols();
  Tensor out({indices.size(), d});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= tv.rows()) throw DimensionError("GatherRows: index out of range");
    for (std::size_t c = 0; c < d; ++c) out.at(i, c) = tv.at(indices[i], c);
  }
  return G(table).Record("GatherRows", std::move(out), {table},
                         [table, indices, d](Graph& g, const Tensor& dy) {
                           Tensor dt(g.value(table).shape());
                           for (std::size_t i = 0; i < indices.size(); ++i) {
                             for (std::size_t c = 0; c < d; ++c) dt.at(indices[i], c) += dy.at(i, c);
                           }
                           g.Accumulate(table, dt);
                         });
}

Var OuterAddRows(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  RequireRank2(av, "OuterAddRows");
  RequireRank2(bv, "OuterAddRows");
  if (av.cols() != bv.cols()) throw DimensionError("OuterAddRows: width mismatch");
  const std::size_t t_len = av.rows(), u_len = bv.rows(), d = av.cols();
  Tensor out({t_len * u_len, d});
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t u = 0; u < u_len; ++u) {
      double* o = out.ptr() + (t * u_len + u) * d;
      const double* ar = av.ptr() + t * d;
      const double* br = bv.ptr() + u * d;
      for (std::size_t c = 0; c < d; ++c) o[c] = ar[c] + br[c];
    }
  }
  return G(a).Record("OuterAddRows", std::move(out), {a, b},
                     [a, b, t_len, u_len, d](Graph& g, const Tensor& dy) {
                       Tensor da({t_len, d}), db({u_len, d});
                       for (std::size_t t = 0; t < t_len; ++t) {
                         for (std::size_t u = 0; u < u_len; ++u) {
                           const double* gr = dy.ptr() + (t * u_len + u) * d;
                           for (std::size_t c = 0; c < d; ++c) {
                             da.at(t, c) += gr[c];
                             db.at(u, c) += gr[c];
                           }
                         }
                       }
                       g.Accumulate(a, da);
                       g.Accumulate(b, db);
                     });
}

Var MultiHeadAttention(Var q, Var k, Var v, std::size_t heads) {
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  RequireRank2(qv, "MultiHeadAttention");
  const std::size_t lq = qv.rows(), lk = kv.rows(), m = qv.cols();
  if (kv.cols() != m || vv.cols() != m || vv.rows() != lk) {
    throw DimensionError("MultiHeadAttention: operand shapes");
  }
  if (heads == 0 || m % heads) throw ConfigError("MultiHeadAttention: heads must divide width");
  const std::size_t dk = m / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  // probs[h] is [lq x lk]
  auto probs = std::make_shared<std::vector<Tensor>>(heads, Tensor({lq, lk}));
  Tensor out({lq, m});
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor& p = (*probs)[h];
    const std::size_t off = h * dk;
    for (std::size_t i = 0; i < lq; ++i) {
      double mx = -1e300;
      for (std::size_t j = 0; j < lk; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dk; ++c) s += qv.at(i, off + c) * kv.at(j, off + c);
        s *= scale;
        p.at(i, j) = s;
        mx = std::max(mx, s);
      }
      double z = 0.0;
      for (std::size_t j = 0; j < lk; ++j) {
        p.at(i, j) = std::exp(p.at(i, j) - mx);
        z += p.at(i, j);
      }
      for (std::size_t j = 0; j < lk; ++j) p.at(i, j) /= z;
      for (std::size_t j = 0; j < lk; ++j) {
        const double w = p.at(i, j);
        for (std::size_t c = 0; c < dk; ++c) out.at(i, off + c) += w * vv.at(j, off + c);
      }
    }
  }
  return G(q).Record(
      "MultiHeadAttention", std::move(out), {q, k, v},
      [q, k, v, heads, dk, scale, probs](Graph& g, const Tensor& dy) {
        const Tensor& qv = g.value(q);
        const Tensor& kv = g.value(k);
        const Tensor& vv = g.value(v);
        const std::size_t lq = qv.rows(), lk = kv.rows(), m = qv.cols();
        Tensor dq({lq, m}), dkey({lk, m}), dv({lk, m});
        std::vector<double> dp(lk);
        for (std::size_t h = 0; h < heads; ++h) {
          const Tensor& p = (*probs)[h];
          const std::size_t off = h * dk;
          for (std::size_t i = 0; i < lq; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < lk; ++j) {
              double s = 0.0;
              for (std::size_t c = 0; c < dk; ++c) {
                s += dy.at(i, off + c) * vv.at(j, off + c);
                dv.at(j, off + c) += p.at(i, j) * dy.at(i, off + c);
              }
              dp[j] = s;
              dot += s * p.at(i, j);
            }
            for (std::size_t j = 0; j < lk; ++j) {
              const double ds = p.at(i, j) * (dp[j] - dot) * scale;
              if (ds == 0.0) continue;
              for (std::size_t c = 0; c < dk; ++c) {
                dq.at(i, off + c) += ds * kv.at(j, off + c);
                dkey.at(j, off + c) += ds * qv.at(i, off + c);
              }
            }
          }
        }
        g.Accumulate(q, dq);
        g.Accumulate(k, dkey);
        g.Accumulate(v, dv);
      });
}

Var Sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return G(x).Record("Sum", Tensor({1, 1}, {s}), {x}, [x](Graph& g, const Tensor& dy) {
    g.Accumulate(x, Tensor::Filled(g.value(x).shape(), dy[0]));
  });
}

Var WeightedSum(Var x, const Tensor& w) {
  RequireSame(x.value(), w, "WeightedSum");
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x.value()[i];
  return G(x).Record("WeightedSum", Tensor({1, 1}, {s}), {x}, [x, w](Graph& g, const Tensor& dy) {
    Tensor dx = w;
    for (auto& v : dx.data()) v *= dy[0];
    g.Accumulate(x, dx);
  });
}

}  // namespace fhat::ad
