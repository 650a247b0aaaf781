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

#include "hgt/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "hgt/error.hpp"

namespace hgt {

namespace {

// std::exp rather than Eigen's vectorized exp, which clamps large negative
// arguments to a subnormal instead of underflowing to zero.
template <class Derived>
auto exp_of(const Eigen::ArrayBase<Derived>& a) {
  return a.unaryExpr([](double v) { return std::exp(v); });
}

}  // namespace

Matrix normalize_rows(const Matrix& x, Vector* norms) {
  Matrix y(x.rows(), x.cols());
  if (norms) norms->resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double n = x.row(r).norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw NormalizationError("row " + std::to_string(r) + " has zero or non-finite norm");
    }
    y.row(r) = x.row(r) / n;
    if (norms) (*norms)(r) = n;
  }
  return y;
}

Matrix normalize_rows_backward(const Matrix& y, const Vector& norms, const Matrix& dy) {
  Matrix dx(y.rows(), y.cols());
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double proj = y.row(r).dot(dy.row(r));
    dx.row(r) = (dy.row(r) - proj * y.row(r)) / norms(r);
  }
  return dx;
}

RowVector normalize(const RowVector& x, double* norm) {
  const double n = x.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw NormalizationError("vector has zero or non-finite norm");
  }
  if (norm) *norm = n;
  return x / n;
}

RowVector normalize_backward(const RowVector& y, double norm, const RowVector& dy) {
  return (dy - y.dot(dy) * y) / norm;
}

Vector softmax(const Vector& x, double scale) {
  Vector z = scale * x;
  const double m = z.maxCoeff();
  Vector e = exp_of(z.array() - m).matrix();
  return e / e.sum();
}

double log_sum_exp(const Vector& x) {
  const double m = x.maxCoeff();
  return m + std::log(exp_of(x.array() - m).sum());
}

Matrix row_softmax(const Matrix& x, double temperature) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    RowVector z = x.row(r) / temperature;
    const double m = z.maxCoeff();
    z = exp_of(z.array() - m).matrix();
    out.row(r) = z / z.sum();
  }
  return out;
}

namespace {

template <class T, class Zero>
T cascade(std::span<const T> terms, Zero zero) {
  if (terms.empty()) return zero();
  if (terms.size() == 1) return terms[0];
  const std::size_t half = terms.size() / 2;
  T left = cascade(terms.first(half), zero);
  T right = cascade(terms.subspan(half), zero);
  left += right;
  return left;
}

}  // namespace

Matrix pairwise_sum(std::span<const Matrix> terms) {
  return cascade<Matrix>(terms, [] { return Matrix(); });
}

double pairwise_sum(std::span<const double> terms) {
  return cascade<double>(terms, [] { return 0.0; });
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

void round_to_float(Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
  }
}

}  // namespace hgt
