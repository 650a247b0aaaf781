// Copyright 2026 The hgt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Message-passing graph encoders over a node-feature table (K x D).
//
// Every variant computes, per layer, a pre-activation Z from the previous
// layer's table X and then applies the configured activation:
//
//   gcn:  Z_v = sum_{u in N[v]} (1/|N[v]|) (X theta)_u        N[v] = N(v) + {v}
//   gat:  Z_v = sum_{u in N[v]} a_vu (X theta)_u,
//         a_vu = softmax_u(leaky_relu(a_src . (X theta)_v + a_dst . (X theta)_u))
//   sage: Z_v = X_v theta_self + mean_{u in N(v)} X_u theta_nbr   (0 if N(v) empty)
//
// gcn and gat share one weighted-aggregation kernel and one closed-neighborhood
// ordering (self first, then neighbors ascending), so a gat layer with a zero
// attention vector reproduces the gcn layer bit for bit.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hgt/hierarchy.hpp"
#include "hgt/linalg.hpp"

namespace hgt {

enum class EncoderVariant { gcn, gat, sage };

std::string to_string(EncoderVariant v);
EncoderVariant parse_variant(const std::string& s);

struct Activation {
  enum class Kind { identity, relu, leaky_relu };
  Kind kind = Kind::identity;
  double slope = 0.01;  // leaky_relu only

  static Activation identity() { return {Kind::identity, 0.0}; }
  static Activation relu() { return {Kind::relu, 0.0}; }
  static Activation leaky_relu(double slope) { return {Kind::leaky_relu, slope}; }

  double apply(double z) const;
  double derivative(double z) const;
};

std::string to_string(const Activation& a);
Activation parse_activation(const std::string& s);

struct LayerParams {
  Matrix weight;           // D x D; theta (gcn, gat) or theta_self (sage)
  Matrix neighbor_weight;  // D x D; sage only
  Matrix attention;        // 1 x 2D; gat only, [a_src | a_dst]
};

struct EncoderParams {
  EncoderVariant variant = EncoderVariant::gat;
  Activation activation = Activation::identity();
  double attention_slope = 0.2;
  std::vector<LayerParams> layers;

  std::size_t depth() const { return layers.size(); }
  std::size_t width() const { return layers.empty() ? 0 : layers.front().weight.rows(); }

  // Throws ShapeError / ValidationError if any invariant is broken.
  void validate() const;

  // Same variant and shapes, all parameters zero.
  EncoderParams zeros_like() const;
};

struct EncoderInit {
  EncoderVariant variant = EncoderVariant::gat;
  std::size_t depth = 3;
  Activation activation = Activation::identity();
  double attention_slope = 0.2;
  // Weights start at identity_gain * I + U(-s, s) with s = spread / sqrt(D).
  double identity_gain = 1.0;
  double spread = 0.1;
};

EncoderParams init_encoder(const EncoderInit& init, std::size_t width, std::mt19937_64& rng);

// Single-layer forward passes. Shapes must agree (ShapeError).
Matrix gcn_layer(const Adjacency& g, const Matrix& x, const LayerParams& p, const Activation& act);
Matrix gat_layer(const Adjacency& g, const Matrix& x, const LayerParams& p, const Activation& act,
                 double attention_slope = 0.2);
Matrix sage_layer(const Adjacency& g, const Matrix& x, const LayerParams& p, const Activation& act);

// Per-call activation cache for encoder_backward.
struct EncoderTrace {
  struct Layer {
    Matrix input;         // X
    Matrix transformed;   // X theta (gcn/gat) or X theta_self (sage)
    Matrix aggregated;    // mean_{N(v)} X_u (sage only)
    Matrix preact;        // Z
    // gat: per node, closed-neighborhood attention weights and raw scores.
    std::vector<std::vector<double>> alpha;
    std::vector<std::vector<double>> score;
  };
  std::vector<Layer> layers;
  bool empty() const { return layers.empty(); }
};

Matrix encode(const Adjacency& g, const Matrix& x, const EncoderParams& p,
              EncoderTrace* trace = nullptr);

struct EncoderGradient {
  Matrix input;
  EncoderParams params;
};

// Backpropagates `upstream` (dL/d output) through the traced forward pass.
// Throws StateError when the trace is empty.
EncoderGradient encoder_backward(const Adjacency& g, const EncoderParams& p,
                                 const EncoderTrace& trace, const Matrix& upstream);

}  // namespace hgt
