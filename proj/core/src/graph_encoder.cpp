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

#include "hgt/graph_encoder.hpp"

#include <algorithm>
#include <cmath>

#include "hgt/error.hpp"

namespace hgt {

std::string to_string(EncoderVariant v) {
  switch (v) {
    case EncoderVariant::gcn: return "gcn";
    case EncoderVariant::gat: return "gat";
    case EncoderVariant::sage: return "sage";
  }
  return "?";
}

EncoderVariant parse_variant(const std::string& s) {
  if (s == "gcn") return EncoderVariant::gcn;
  if (s == "gat") return EncoderVariant::gat;
  if (s == "sage") return EncoderVariant::sage;
  throw ConfigError("unknown encoder variant '" + s + "' (expected gcn, gat or sage)");
}

double Activation::apply(double z) const {
  switch (kind) {
    case Kind::identity: return z;
    case Kind::relu: return z > 0.0 ? z : 0.0;
    case Kind::leaky_relu: return z > 0.0 ? z : slope * z;
  }
  return z;
}

double Activation::derivative(double z) const {
  switch (kind) {
    case Kind::identity: return 1.0;
    case Kind::relu: return z > 0.0 ? 1.0 : 0.0;
    case Kind::leaky_relu: return z > 0.0 ? 1.0 : slope;
  }
  return 1.0;
}

std::string to_string(const Activation& a) {
  switch (a.kind) {
    case Activation::Kind::identity: return "identity";
    case Activation::Kind::relu: return "relu";
    case Activation::Kind::leaky_relu: return "leaky_relu:" + std::to_string(a.slope);
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::identity();
  if (s == "relu") return Activation::relu();
  if (s.starts_with("leaky_relu")) {
    double slope = 0.01;
    if (auto pos = s.find(':'); pos != std::string::npos) slope = std::stod(s.substr(pos + 1));
    return Activation::leaky_relu(slope);
  }
  throw ConfigError("unknown activation '" + s + "'");
}

namespace {

void check_square(const Matrix& m, std::size_t d, const char* what) {
  if (static_cast<std::size_t>(m.rows()) != d || static_cast<std::size_t>(m.cols()) != d) {
    throw ShapeError(std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", expected " + std::to_string(d) + "x" +
                     std::to_string(d));
  }
}

void check_layer(EncoderVariant variant, const LayerParams& p, std::size_t d) {
  check_square(p.weight, d, "weight");
  if (variant == EncoderVariant::sage) check_square(p.neighbor_weight, d, "neighbor_weight");
  if (variant == EncoderVariant::gat &&
      (p.attention.rows() != 1 || static_cast<std::size_t>(p.attention.cols()) != 2 * d)) {
    throw ShapeError("attention vector must be 1x" + std::to_string(2 * d));
  }
}

void check_input(const Adjacency& g, const Matrix& x) {
  if (static_cast<std::size_t>(x.rows()) != g.node_count()) {
    throw ShapeError("feature table has " + std::to_string(x.rows()) + " rows for a " +
                     std::to_string(g.node_count()) + "-node graph");
  }
}

// Closed neighborhood of v: v itself first, then neighbors ascending.
template <class F>
void for_closed_neighborhood(const Adjacency& g, std::size_t v, F&& f) {
  f(v);
  for (std::size_t u : g.neighbors(v)) f(u);
}

Matrix aggregate(const Adjacency& g, const Matrix& h,
                 const std::vector<std::vector<double>>& weights) {
  Matrix z = Matrix::Zero(h.rows(), h.cols());
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    std::size_t k = 0;
    for_closed_neighborhood(g, v, [&](std::size_t u) { z.row(v) += weights[v][k++] * h.row(u); });
  }
  return z;
}

std::vector<std::vector<double>> uniform_weights(const Adjacency& g) {
  std::vector<std::vector<double>> w(g.node_count());
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    const std::size_t n = g.degree(v) + 1;
    w[v].assign(n, 1.0 / static_cast<double>(n));
  }
  return w;
}

Matrix open_mean(const Adjacency& g, const Matrix& x) {
  Matrix m = Matrix::Zero(x.rows(), x.cols());
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    const auto& nb = g.neighbors(v);
    if (nb.empty()) continue;
    for (std::size_t u : nb) m.row(v) += x.row(u);
    m.row(v) /= static_cast<double>(nb.size());
  }
  return m;
}

Matrix activate(const Matrix& z, const Activation& act) {
  if (act.kind == Activation::Kind::identity) return z;
  return z.unaryExpr([&](double v) { return act.apply(v); });
}

Matrix layer_forward(const Adjacency& g, const Matrix& x, const LayerParams& p,
                     EncoderVariant variant, double attention_slope, EncoderTrace::Layer& c) {
  check_input(g, x);
  const auto d = static_cast<std::size_t>(x.cols());
  check_layer(variant, p, d);
  c.input = x;
  switch (variant) {
    case EncoderVariant::gcn: {
      c.transformed = x * p.weight;
      c.alpha = uniform_weights(g);
      c.preact = aggregate(g, c.transformed, c.alpha);
      break;
    }
    case EncoderVariant::gat: {
      c.transformed = x * p.weight;
      const Matrix& h = c.transformed;
      const Vector src = h * p.attention.leftCols(d).transpose();
      const Vector dst = h * p.attention.rightCols(d).transpose();
      c.alpha.assign(g.node_count(), {});
      c.score.assign(g.node_count(), {});
      for (std::size_t v = 0; v < g.node_count(); ++v) {
        auto& s = c.score[v];
        for_closed_neighborhood(g, v, [&](std::size_t u) { s.push_back(src(v) + dst(u)); });
        std::vector<double> e(s.size());
        for (std::size_t k = 0; k < s.size(); ++k) {
          e[k] = s[k] > 0.0 ? s[k] : attention_slope * s[k];
        }
        const double m = *std::max_element(e.begin(), e.end());
        double total = 0.0;
        for (double& ek : e) {
          ek = std::exp(ek - m);
          total += ek;
        }
        for (double& ek : e) ek /= total;
        c.alpha[v] = std::move(e);
      }
      c.preact = aggregate(g, h, c.alpha);
      break;
    }
    case EncoderVariant::sage: {
      c.transformed = x * p.weight;
      c.aggregated = open_mean(g, x);
      c.preact = c.transformed + c.aggregated * p.neighbor_weight;
      break;
    }
  }
  return c.preact;
}

}  // namespace

void EncoderParams::validate() const {
  if (layers.empty()) throw ValidationError("encoder depth must be >= 1");
  if (variant == EncoderVariant::gat && !(attention_slope > 0.0 && attention_slope < 1.0)) {
    throw ValidationError("gat attention slope must lie in (0, 1)");
  }
  const std::size_t d = width();
  for (const LayerParams& layer : layers) {
    check_layer(variant, layer, d);
    if (!layer.weight.allFinite() || !layer.neighbor_weight.allFinite() ||
        !layer.attention.allFinite()) {
      throw ValidationError("encoder parameters must be finite");
    }
  }
}

EncoderParams EncoderParams::zeros_like() const {
  EncoderParams z = *this;
  for (LayerParams& layer : z.layers) {
    layer.weight.setZero();
    layer.neighbor_weight.setZero();
    layer.attention.setZero();
  }
  return z;
}

EncoderParams init_encoder(const EncoderInit& init, std::size_t width, std::mt19937_64& rng) {
  if (init.depth == 0) throw ValidationError("encoder depth must be >= 1");
  if (width == 0) throw ShapeError("encoder width must be positive");
  const double bound = init.spread / std::sqrt(static_cast<double>(width));
  std::uniform_real_distribution<double> u(-bound, bound);
  const auto d = static_cast<Eigen::Index>(width);
  auto square = [&](double gain) {
    Matrix m(d, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    m.diagonal().array() += gain;
    return m;
  };

  EncoderParams p;
  p.variant = init.variant;
  p.activation = init.activation;
  p.attention_slope = init.attention_slope;
  for (std::size_t l = 0; l < init.depth; ++l) {
    LayerParams layer;
    if (init.variant == EncoderVariant::sage) {
      // Self and neighbor terms split the identity so the layer starts near
      // a residual average.
      layer.weight = square(0.5 * init.identity_gain);
      layer.neighbor_weight = square(0.5 * init.identity_gain);
    } else {
      layer.weight = square(init.identity_gain);
    }
    if (init.variant == EncoderVariant::gat) {
      layer.attention.resize(1, 2 * d);
      for (Eigen::Index i = 0; i < layer.attention.size(); ++i) layer.attention.data()[i] = u(rng);
    }
    p.layers.push_back(std::move(layer));
  }
  p.validate();
  return p;
}

Matrix gcn_layer(const Adjacency& g, const Matrix& x, const LayerParams& p, const Activation& act) {
  EncoderTrace::Layer c;
  return activate(layer_forward(g, x, p, EncoderVariant::gcn, 0.2, c), act);
}

Matrix gat_layer(const Adjacency& g, const Matrix& x, const LayerParams& p, const Activation& act,
                 double attention_slope) {
  EncoderTrace::Layer c;
  return activate(layer_forward(g, x, p, EncoderVariant::gat, attention_slope, c), act);
}

Matrix sage_layer(const Adjacency& g, const Matrix& x, const LayerParams& p, const Activation& act) {
  EncoderTrace::Layer c;
  return activate(layer_forward(g, x, p, EncoderVariant::sage, 0.2, c), act);
}

Matrix encode(const Adjacency& g, const Matrix& x, const EncoderParams& p, EncoderTrace* trace) {
  if (p.layers.empty()) throw ValidationError("encoder depth must be >= 1");
  if (trace) trace->layers.clear();
  Matrix h = x;
  for (const LayerParams& layer : p.layers) {
    EncoderTrace::Layer c;
    Matrix z = layer_forward(g, h, layer, p.variant, p.attention_slope, c);
    h = activate(z, p.activation);
    if (trace) {
      trace->layers.push_back(std::move(c));
    }
  }
  return h;
}

EncoderGradient encoder_backward(const Adjacency& g, const EncoderParams& p,
                                 const EncoderTrace& trace, const Matrix& upstream) {
  if (trace.empty()) throw StateError("encoder_backward called without a cached forward pass");
  if (trace.layers.size() != p.layers.size()) {
    throw StateError("cached forward pass does not match encoder depth");
  }
  const Matrix& last = trace.layers.back().preact;
  if (upstream.rows() != last.rows() || upstream.cols() != last.cols()) {
    throw ShapeError("upstream gradient shape does not match encoder output");
  }

  EncoderGradient out;
  out.params = p.zeros_like();
  Matrix grad = upstream;
  const std::size_t d = p.width();

  for (std::size_t l = p.layers.size(); l-- > 0;) {
    const LayerParams& layer = p.layers[l];
    const EncoderTrace::Layer& c = trace.layers[l];
    LayerParams& dl = out.params.layers[l];

    Matrix dz = grad;
    if (p.activation.kind != Activation::Kind::identity) {
      for (Eigen::Index i = 0; i < dz.size(); ++i) {
        dz.data()[i] *= p.activation.derivative(c.preact.data()[i]);
      }
    }

    switch (p.variant) {
      case EncoderVariant::gcn: {
        Matrix dh = Matrix::Zero(dz.rows(), dz.cols());
        for (std::size_t v = 0; v < g.node_count(); ++v) {
          std::size_t k = 0;
          for_closed_neighborhood(g, v, [&](std::size_t u) { dh.row(u) += c.alpha[v][k++] * dz.row(v); });
        }
        dl.weight = c.input.transpose() * dh;
        grad = dh * layer.weight.transpose();
        break;
      }
      case EncoderVariant::gat: {
        const Matrix& h = c.transformed;
        const RowVector a_src = layer.attention.leftCols(d);
        const RowVector a_dst = layer.attention.rightCols(d);
        Matrix dh = Matrix::Zero(dz.rows(), dz.cols());
        RowVector da_src = RowVector::Zero(d);
        RowVector da_dst = RowVector::Zero(d);
        for (std::size_t v = 0; v < g.node_count(); ++v) {
          const auto& alpha = c.alpha[v];
          const auto& score = c.score[v];
          std::vector<std::size_t> nb;
          for_closed_neighborhood(g, v, [&](std::size_t u) { nb.push_back(u); });
          std::vector<double> dalpha(nb.size());
          double mean = 0.0;
          for (std::size_t k = 0; k < nb.size(); ++k) {
            dh.row(nb[k]) += alpha[k] * dz.row(v);
            dalpha[k] = dz.row(v).dot(h.row(nb[k]));
            mean += alpha[k] * dalpha[k];
          }
          for (std::size_t k = 0; k < nb.size(); ++k) {
            const double de = alpha[k] * (dalpha[k] - mean);
            const double ds = de * (score[k] > 0.0 ? 1.0 : p.attention_slope);
            da_src += ds * h.row(v);
            da_dst += ds * h.row(nb[k]);
            dh.row(v) += ds * a_src;
            dh.row(nb[k]) += ds * a_dst;
          }
        }
        dl.attention.leftCols(d) = da_src;
        dl.attention.rightCols(d) = da_dst;
        dl.weight = c.input.transpose() * dh;
        grad = dh * layer.weight.transpose();
        break;
      }
      case EncoderVariant::sage: {
        dl.weight = c.input.transpose() * dz;
        dl.neighbor_weight = c.aggregated.transpose() * dz;
        const Matrix dm = dz * layer.neighbor_weight.transpose();
        Matrix dx = dz * layer.weight.transpose();
        for (std::size_t v = 0; v < g.node_count(); ++v) {
          const auto& nb = g.neighbors(v);
          if (nb.empty()) continue;
          const double inv = 1.0 / static_cast<double>(nb.size());
          for (std::size_t u : nb) dx.row(u) += inv * dm.row(v);
        }
        grad = std::move(dx);
        break;
      }
    }
  }
  out.input = std::move(grad);
  return out;
}

}  // namespace hgt
