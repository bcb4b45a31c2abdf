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

#include "fhat/hat_loss.h"

#include <cmath>
#include <limits>
#include <memory>

#include "fhat/errors.h"
#include "fhat/ops.h"

namespace fhat {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void CheckLattice(const TransducerLattice& l) {
  if (l.frames == 0) throw DimensionError("transducer lattice needs at least one frame");
  if (l.log_blank.size() != l.frames * (l.labels + 1) || l.log_emit.size() != l.frames * l.labels) {
    throw DimensionError("transducer lattice arrays have the wrong size");
  }
}

std::vector<double> Alpha(const TransducerLattice& l) {
  const std::size_t T = l.frames, U = l.labels, W = U + 1;
  std::vector<double> alpha(T * W, kNegInf);
  alpha[0] = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) continue;
      double a = kNegInf;
      if (t > 0) a = alpha[(t - 1) * W + u] + l.blank(t - 1, u);
      if (u > 0) a = ops::LogSumExp(a, alpha[t * W + u - 1] + l.emit(t, u - 1));
      alpha[t * W + u] = a;
    }
  }
  return alpha;
}

}  // namespace

double LatticeLogLikelihood(const TransducerLattice& lattice) {
  CheckLattice(lattice);
  const std::vector<double> alpha = Alpha(lattice);
  const std::size_t T = lattice.frames, U = lattice.labels;
  return alpha[(T - 1) * (U + 1) + U] + lattice.blank(T - 1, U);
}

ForwardBackwardResult LatticeForwardBackward(const TransducerLattice& l) {
  CheckLattice(l);
  const std::size_t T = l.frames, U = l.labels, W = U + 1;
  ForwardBackwardResult r;
  r.alpha = Alpha(l);
  r.beta.assign(T * W, kNegInf);
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t u = U + 1; u-- > 0;) {
      double b = kNegInf;
      if (t == T - 1 && u == U) {
        b = l.blank(t, u);
      } else {
        if (t + 1 < T) b = r.beta[(t + 1) * W + u] + l.blank(t, u);
        if (u < U) b = ops::LogSumExp(b, r.beta[t * W + u + 1] + l.emit(t, u));
      }
      r.beta[t * W + u] = b;
    }
  }
  r.log_likelihood = r.alpha[(T - 1) * W + U] + l.blank(T - 1, U);
  return r;
}

TransducerLattice LatticeFromLogits(const Tensor& logits, std::size_t frames,
                                    std::span<const int> labels) {
  const std::size_t U = labels.size(), W = U + 1;
  if (logits.rank() != 2 || logits.rows() != frames * W || logits.cols() < 2) {
    throw DimensionError("joint logits " + ShapeString(logits.shape()) + " do not match T=" +
                         std::to_string(frames) + ", U=" + std::to_string(U));
  }
  const std::size_t V = logits.cols() - 1;
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= V) throw DimensionError("label id out of range");
  }
  TransducerLattice l;
  l.frames = frames;
  l.labels = U;
  l.log_blank.resize(frames * W);
  l.log_emit.resize(frames * U);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t u = 0; u <= U; ++u) {
      const double* z = logits.ptr() + (t * W + u) * (V + 1);
      l.log_blank[t * W + u] = ops::LogSigmoid(z[0]);
      if (u == U) continue;
      double mx = z[1];
      for (std::size_t k = 2; k <= V; ++k) mx = std::max(mx, z[k]);
      double s = 0.0;
      for (std::size_t k = 1; k <= V; ++k) s += std::exp(z[k] - mx);
      const double log_label = z[1 + static_cast<std::size_t>(labels[u])] - mx - std::log(s);
      l.log_emit[t * U + u] = ops::LogSigmoid(-z[0]) + log_label;
    }
  }
  return l;
}

ad::Var HatLossFromLogits(ad::Var logits, std::size_t frames, std::vector<int> labels) {
  const TransducerLattice lattice = LatticeFromLogits(logits.value(), frames, labels);
  auto fb = std::make_shared<ForwardBackwardResult>(LatticeForwardBackward(lattice));
  const double loss = -fb->log_likelihood;
  return logits.graph()->Record(
      "HatLoss", Tensor({1, 1}, {loss}), {logits},
      [logits, frames, labels, fb](ad::Graph& g, const Tensor& dy) {
        const Tensor& z = g.value(logits);
        const std::size_t U = labels.size(), W = U + 1, V = z.cols() - 1;
        const double Z = fb->log_likelihood;
        Tensor dz(z.shape());
        std::vector<double> softmax(V);
        for (std::size_t t = 0; t < frames; ++t) {
          for (std::size_t u = 0; u <= U; ++u) {
            const std::size_t node = t * W + u;
            const double* zr = z.ptr() + node * (V + 1);
            double* gr = dz.ptr() + node * (V + 1);
            const double lb = ops::LogSigmoid(zr[0]);
            const double b = ops::Sigmoid(zr[0]);
            double occ_blank = 0.0;
            if (t + 1 < frames) {
              occ_blank = std::exp(fb->alpha[node] + lb + fb->beta[(t + 1) * W + u] - Z);
            } else if (u == U) {
              occ_blank = std::exp(fb->alpha[node] + lb - Z);
            }
            gr[0] = -occ_blank * (1.0 - b);
            if (u == U) continue;
            double mx = zr[1];
            for (std::size_t k = 2; k <= V; ++k) mx = std::max(mx, zr[k]);
            double s = 0.0;
            for (std::size_t k = 0; k < V; ++k) {
              softmax[k] = std::exp(zr[k + 1] - mx);
              s += softmax[k];
            }
            for (auto& p : softmax) p /= s;
            const std::size_t y = static_cast<std::size_t>(labels[u]);
            const double log_emit = ops::LogSigmoid(-zr[0]) + std::log(softmax[y]);
            const double occ_emit = std::exp(fb->alpha[node] + log_emit + fb->beta[node + 1] - Z);
            gr[0] += occ_emit * b;
            for (std::size_t k = 0; k < V; ++k) {
              gr[k + 1] = -occ_emit * ((k == y ? 1.0 : 0.0) - softmax[k]);
            }
          }
        }
        for (auto& v : dz.data()) v *= dy[0];
        g.Accumulate(logits, dz);
      });
}

}  // namespace fhat
