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

// Dense types and the small set of differentiable primitives shared by the
// encoder, fusion and objective modules.

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace hgt {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;
using Vector = Eigen::VectorXd;

// Row-wise L2 normalization. `norms`, when given, receives the pre-normalization
// row norms needed by normalize_rows_backward. Throws NormalizationError on a
// zero or non-finite row.
Matrix normalize_rows(const Matrix& x, Vector* norms = nullptr);

// Gradient of normalize_rows: given y = normalize_rows(x) and dL/dy, returns dL/dx.
Matrix normalize_rows_backward(const Matrix& y, const Vector& norms, const Matrix& dy);

RowVector normalize(const RowVector& x, double* norm = nullptr);
RowVector normalize_backward(const RowVector& y, double norm, const RowVector& dy);

// Numerically stable softmax (max-subtracted), optionally over scale * x.
Vector softmax(const Vector& x, double scale = 1.0);
double log_sum_exp(const Vector& x);

// Row-wise softmax of x / temperature.
Matrix row_softmax(const Matrix& x, double temperature = 1.0);

// Pairwise (cascade) summation of equally shaped matrices. The reduction tree
// depends only on the number of terms, so results are independent of how the
// terms were produced.
Matrix pairwise_sum(std::span<const Matrix> terms);
double pairwise_sum(std::span<const double> terms);

bool all_finite(const Matrix& m);

// Rounds every entry to the nearest float, keeping values representable in the
// f32 file formats.
void round_to_float(Matrix& m);

}  // namespace hgt
