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

// Brute-force reference implementations and random instance generators used by
// the unit and acceptance tests. Everything here is written independently of
// the library kernels: dense matrices instead of neighbor lists, explicit loops
// instead of Eigen expressions.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hgt/graph_encoder.hpp"
#include "hgt/hierarchy.hpp"
#include "hgt/linalg.hpp"
#include "hgt/trainer.hpp"

namespace oracle {

using hgt::Matrix;
using hgt::RowVector;
using hgt::Vector;

inline double act(const hgt::Activation& a, double z) {
  switch (a.kind) {
    case hgt::Activation::Kind::identity: return z;
    case hgt::Activation::Kind::relu: return z > 0.0 ? z : 0.0;
    case hgt::Activation::Kind::leaky_relu: return z > 0.0 ? z : a.slope * z;
  }
  return z;
}

inline Matrix apply_act(const hgt::Activation& a, Matrix z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = act(a, z(i, j));
  return z;
}

// Naive triple loop.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  return out;
}

inline Matrix dense_adjacency(const hgt::Adjacency& g) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  Matrix a = Matrix::Zero(n, n);
  const std::vector<std::uint8_t> d = g.dense();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = d[static_cast<std::size_t>(i * n + j)];
  return a;
}

// Row-normalized A + I.
inline Matrix normalized_adjacency(const hgt::Adjacency& g) {
  Matrix a = dense_adjacency(g);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    a(i, i) = 1.0;
    double deg = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) deg += a(i, j);
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) /= deg;
  }
  return a;
}

inline Matrix gcn(const hgt::Adjacency& g, const Matrix& x, const hgt::LayerParams& p,
                  const hgt::Activation& a) {
  return apply_act(a, matmul(matmul(normalized_adjacency(g), x), p.weight));
}

inline Matrix gat(const hgt::Adjacency& g, const Matrix& x, const hgt::LayerParams& p,
                  const hgt::Activation& a, double slope) {
  const Matrix h = matmul(x, p.weight);
  const Matrix adj = dense_adjacency(g);
  const Eigen::Index n = x.rows(), d = x.cols();
  Matrix out = Matrix::Zero(n, d);
  for (Eigen::Index v = 0; v < n; ++v) {
    std::vector<Eigen::Index> hood;
    for (Eigen::Index u = 0; u < n; ++u)
      if (u == v || adj(v, u) != 0.0) hood.push_back(u);
    std::vector<double> e;
    for (Eigen::Index u : hood) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) s += p.attention(0, k) * h(v, k) + p.attention(0, d + k) * h(u, k);
      e.push_back(s > 0.0 ? s : slope * s);
    }
    double mx = e[0];
    for (double s : e) mx = std::max(mx, s);
    double z = 0.0;
    for (double& s : e) z += (s = std::exp(s - mx));
    for (std::size_t i = 0; i < hood.size(); ++i)
      for (Eigen::Index k = 0; k < d; ++k) out(v, k) += e[i] / z * h(hood[i], k);
  }
  return apply_act(a, out);
}

inline Matrix sage(const hgt::Adjacency& g, const Matrix& x, const hgt::LayerParams& p,
                   const hgt::Activation& a) {
  const Matrix adj = dense_adjacency(g);
  const Eigen::Index n = x.rows(), d = x.cols();
  Matrix mean = Matrix::Zero(n, d);
  for (Eigen::Index v = 0; v < n; ++v) {
    double deg = 0.0;
    for (Eigen::Index u = 0; u < n; ++u)
      if (adj(v, u) != 0.0) {
        deg += 1.0;
        for (Eigen::Index k = 0; k < d; ++k) mean(v, k) += x(u, k);
      }
    if (deg > 0.0)
      for (Eigen::Index k = 0; k < d; ++k) mean(v, k) /= deg;
  }
  return apply_act(a, matmul(x, p.weight) + matmul(mean, p.neighbor_weight));
}

inline Matrix encode(const hgt::Adjacency& g, Matrix x, const hgt::EncoderParams& p) {
  for (const hgt::LayerParams& layer : p.layers) {
    switch (p.variant) {
      case hgt::EncoderVariant::gcn: x = gcn(g, x, layer, p.activation); break;
      case hgt::EncoderVariant::gat: x = gat(g, x, layer, p.activation, p.attention_slope); break;
      case hgt::EncoderVariant::sage: x = sage(g, x, layer, p.activation); break;
    }
  }
  return x;
}

// Level-i probability of node n: sum over every leaf whose ancestor chain
// passes through n.
inline std::vector<Vector> marginalize(const Vector& leaf_probs, const hgt::HierGraph& g) {
  std::vector<Vector> out;
  for (const hgt::LevelRange& r : g.level_ranges) out.push_back(Vector::Zero(static_cast<Eigen::Index>(r.size)));
  const hgt::LevelRange& leaves = g.leaf_range();
  for (std::size_t leaf = 0; leaf < leaves.size; ++leaf) {
    std::size_t node = leaves.start + leaf;
    while (true) {
      const std::size_t level = g.level_of[node];
      out[level](static_cast<Eigen::Index>(node - g.level_ranges[level].start)) += leaf_probs(static_cast<Eigen::Index>(leaf));
      if (level == 0) break;
      node = g.parent[node];
    }
  }
  return out;
}

inline Vector softmax(const Vector& x) {
  double mx = x(0);
  for (Eigen::Index i = 0; i < x.size(); ++i) mx = std::max(mx, x(i));
  Vector e(x.size());
  double z = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) z += (e(i) = std::exp(x(i) - mx));
  return e / z;
}

// Central difference of f with respect to every entry of m.
inline Matrix numeric_gradient(Matrix& m, const std::function<double()>& f, double step = 1e-4) {
  Matrix g(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double saved = m.data()[i];
    m.data()[i] = saved + step;
    const double up = f();
    m.data()[i] = saved - step;
    const double down = f();
    m.data()[i] = saved;
    g.data()[i] = (up - down) / (2.0 * step);
  }
  return g;
}

// The floor keeps finite-difference rounding noise on zero entries from
// reading as a large relative error.
inline double max_rel_error(const Matrix& analytic, const Matrix& numeric, double floor = 1e-6) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic.data()[i], n = numeric.data()[i];
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

// ----- random instances -----

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                            double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Erdos-Renyi style graph on n nodes with edge probability p.
inline hgt::Adjacency random_graph(std::mt19937_64& rng, std::size_t n, double p) {
  std::bernoulli_distribution coin(p);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng)) edges.emplace_back(i, j);
  return hgt::Adjacency::from_edges(n, edges);
}

// Random valid taxonomy: `levels` levels, each inner node with 1..max_children
// children.
inline hgt::Taxonomy random_taxonomy(std::mt19937_64& rng, std::size_t levels,
                                     std::size_t max_roots = 3, std::size_t max_children = 3) {
  std::uniform_int_distribution<std::size_t> roots(1, max_roots), kids(1, max_children);
  hgt::Taxonomy t;
  t.names.resize(levels);
  t.parent_of.resize(levels);
  const std::size_t r = roots(rng);
  for (std::size_t i = 0; i < r; ++i) t.names[0].push_back("n0_" + std::to_string(i));
  for (std::size_t level = 1; level < levels; ++level) {
    for (std::size_t p = 0; p < t.names[level - 1].size(); ++p) {
      const std::size_t c = kids(rng);
      for (std::size_t k = 0; k < c; ++k) {
        t.parent_of[level].push_back(p);
        t.names[level].push_back("n" + std::to_string(level) + "_" + std::to_string(t.names[level].size()));
      }
    }
  }
  return t;
}

inline hgt::EncoderParams random_encoder(std::mt19937_64& rng, hgt::EncoderVariant v,
                                         std::size_t depth, std::size_t d,
                                         hgt::Activation a = hgt::Activation::identity()) {
  hgt::EncoderParams p;
  p.variant = v;
  p.activation = a;
  const auto w = static_cast<Eigen::Index>(d);
  for (std::size_t l = 0; l < depth; ++l) {
    hgt::LayerParams layer;
    layer.weight = random_matrix(rng, w, w);
    if (v == hgt::EncoderVariant::sage) layer.neighbor_weight = random_matrix(rng, w, w);
    if (v == hgt::EncoderVariant::gat) layer.attention = random_matrix(rng, 1, 2 * w);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

// Small dataset over `t` with random Gaussian-ish features: every leaf gets
// `per_leaf` training images of `patches` rows.
inline hgt::Dataset random_dataset(std::mt19937_64& rng, const hgt::Taxonomy& t, std::size_t d,
                                   std::size_t per_leaf = 2, std::size_t patches = 3) {
  hgt::Dataset data;
  data.taxonomy = t;
  data.graph = hgt::build_graph(t);
  const auto k = static_cast<Eigen::Index>(data.graph.node_count());
  data.text_base = random_matrix(rng, k, static_cast<Eigen::Index>(d));
  const hgt::LevelRange leaves = data.graph.leaf_range();
  for (std::size_t leaf = 0; leaf < leaves.size; ++leaf) {
    for (std::size_t i = 0; i < per_leaf; ++i) {
      Matrix spatial = random_matrix(rng, static_cast<Eigen::Index>(patches), static_cast<Eigen::Index>(d));
      spatial.rowwise() += data.text_base.row(static_cast<Eigen::Index>(leaves.start + leaf));
      data.train.emplace_back(spatial, hgt::ancestor_path(data.graph, leaf));
    }
  }
  data.test = data.train;
  return data;
}

}  // namespace oracle
