// Copyright 2026 The kgsumm Authors.
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

#include "kgsumm/kernels.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kgsumm::kernels {
namespace {

// Below this many multiply-adds the OpenMP fork costs more than it saves.
constexpr long kParallelWork = 1 << 15;

void Require(bool ok, const char* what, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                a.ShapeString() + " vs " + b.ShapeString());
  }
}

void PrepareOutput(int rows, int cols, Matrix* c, bool accumulate) {
  if (accumulate) {
    if (c->rows() != rows || c->cols() != cols) {
      throw std::invalid_argument("accumulate target has shape " +
                                  c->ShapeString());
    }
  } else if (c->rows() != rows || c->cols() != cols) {
    *c = Matrix(rows, cols);
  } else {
    c->Fill(0.0);
  }
}

// Row kernels shared by both implementations. Each output element is
// accumulated over k in ascending order.

inline void MatMulRow(const Matrix& a, const Matrix& b, Matrix* c, int i) {
  double* out = c->row(i);
  const double* arow = a.row(i);
  const int n = b.cols();
  for (int k = 0; k < a.cols(); ++k) {
    const double aik = arow[k];
    if (aik == 0.0) continue;
    const double* brow = b.row(k);
    for (int j = 0; j < n; ++j) out[j] += aik * brow[j];
  }
}

inline void MatMulTransBRow(const Matrix& a, const Matrix& b, Matrix* c,
                            int i) {
  double* out = c->row(i);
  const double* arow = a.row(i);
  for (int j = 0; j < b.rows(); ++j) {
    const double* brow = b.row(j);
    double sum = 0.0;
    for (int k = 0; k < a.cols(); ++k) sum += arow[k] * brow[k];
    out[j] += sum;
  }
}

inline void MatMulTransARow(const Matrix& a, const Matrix& b, Matrix* c,
                            int i) {
  double* out = c->row(i);
  const int n = b.cols();
  for (int k = 0; k < a.rows(); ++k) {
    const double aki = a(k, i);
    if (aki == 0.0) continue;
    const double* brow = b.row(k);
    for (int j = 0; j < n; ++j) out[j] += aki * brow[j];
  }
}

inline bool Allowed(const SoftmaxMask& mask, int cols, int i, int j) {
  if (mask.causal && j > i) return false;
  if (!mask.allowed.empty() &&
      !mask.allowed[static_cast<std::size_t>(i) * cols + j]) {
    return false;
  }
  return true;
}

inline void SoftmaxRow(const Matrix& s, const SoftmaxMask& mask, Matrix* out,
                       int i) {
  const int n = s.cols();
  const double* in = s.row(i);
  double* o = out->row(i);
  double mx = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (int j = 0; j < n; ++j) {
    if (Allowed(mask, n, i, j)) {
      any = true;
      // Non-finite scores propagate as NaN so callers can detect divergence.
      mx = std::isnan(in[j]) ? in[j] : std::max(mx, in[j]);
      if (std::isnan(mx)) break;
    }
  }
  if (!any) {
    throw std::invalid_argument("softmax row " + std::to_string(i) +
                                " has no allowed column");
  }
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    if (Allowed(mask, n, i, j)) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    } else {
      o[j] = 0.0;
    }
  }
  for (int j = 0; j < n; ++j) o[j] /= total;
}

inline int NearestRow(const Matrix& points, const Matrix& centroids, int i) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  const double* p = points.row(i);
  for (int c = 0; c < centroids.rows(); ++c) {
    const double* q = centroids.row(c);
    double d = 0.0;
    for (int k = 0; k < points.cols(); ++k) {
      const double diff = p[k] - q[k];
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

void CheckSoftmax(const Matrix& scores, const SoftmaxMask& mask) {
  if (!mask.allowed.empty() && mask.allowed.size() != scores.size()) {
    throw std::invalid_argument("softmax mask size does not match " +
                                scores.ShapeString());
  }
}

void CheckNearest(const Matrix& points, const Matrix& centroids) {
  Require(points.cols() == centroids.cols(), "AssignNearest", points,
          centroids);
  if (centroids.rows() == 0) throw std::invalid_argument("no centroids");
}

}  // namespace

namespace serial {

void MatMul(const Matrix& a, const Matrix& b, Matrix* c, bool accumulate) {
  Require(a.cols() == b.rows(), "MatMul", a, b);
  PrepareOutput(a.rows(), b.cols(), c, accumulate);
  for (int i = 0; i < a.rows(); ++i) MatMulRow(a, b, c, i);
}

void MatMulTransB(const Matrix& a, const Matrix& b, Matrix* c,
                  bool accumulate) {
  Require(a.cols() == b.cols(), "MatMulTransB", a, b);
  PrepareOutput(a.rows(), b.rows(), c, accumulate);
  for (int i = 0; i < a.rows(); ++i) MatMulTransBRow(a, b, c, i);
}

void MatMulTransA(const Matrix& a, const Matrix& b, Matrix* c,
                  bool accumulate) {
  Require(a.rows() == b.rows(), "MatMulTransA", a, b);
  PrepareOutput(a.cols(), b.cols(), c, accumulate);
  for (int i = 0; i < a.cols(); ++i) MatMulTransARow(a, b, c, i);
}

void SoftmaxRows(const Matrix& scores, const SoftmaxMask& mask, Matrix* out) {
  CheckSoftmax(scores, mask);
  if (!out->SameShape(scores)) *out = Matrix(scores.rows(), scores.cols());
  for (int i = 0; i < scores.rows(); ++i) SoftmaxRow(scores, mask, out, i);
}

void AssignNearest(const Matrix& points, const Matrix& centroids,
                   std::vector<int>* assignment) {
  CheckNearest(points, centroids);
  assignment->assign(points.rows(), 0);
  for (int i = 0; i < points.rows(); ++i) {
    (*assignment)[i] = NearestRow(points, centroids, i);
  }
}

}  // namespace serial

namespace omp {

// Exceptions must not escape an OpenMP region, so every shape check happens
// before the parallel loop and the row kernels only throw on masked-out rows,
// which SoftmaxRows pre-validates.

void MatMul(const Matrix& a, const Matrix& b, Matrix* c, bool accumulate) {
  Require(a.cols() == b.rows(), "MatMul", a, b);
  PrepareOutput(a.rows(), b.cols(), c, accumulate);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows(); ++i) MatMulRow(a, b, c, i);
}

void MatMulTransB(const Matrix& a, const Matrix& b, Matrix* c,
                  bool accumulate) {
  Require(a.cols() == b.cols(), "MatMulTransB", a, b);
  PrepareOutput(a.rows(), b.rows(), c, accumulate);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows(); ++i) MatMulTransBRow(a, b, c, i);
}

void MatMulTransA(const Matrix& a, const Matrix& b, Matrix* c,
                  bool accumulate) {
  Require(a.rows() == b.rows(), "MatMulTransA", a, b);
  PrepareOutput(a.cols(), b.cols(), c, accumulate);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.cols(); ++i) MatMulTransARow(a, b, c, i);
}

void SoftmaxRows(const Matrix& scores, const SoftmaxMask& mask, Matrix* out) {
  CheckSoftmax(scores, mask);
  for (int i = 0; i < scores.rows(); ++i) {
    bool any = false;
    for (int j = 0; j < scores.cols() && !any; ++j) {
      any = Allowed(mask, scores.cols(), i, j);
    }
    if (!any) {
      throw std::invalid_argument("softmax row " + std::to_string(i) +
                                  " has no allowed column");
    }
  }
  if (!out->SameShape(scores)) *out = Matrix(scores.rows(), scores.cols());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < scores.rows(); ++i) SoftmaxRow(scores, mask, out, i);
}

void AssignNearest(const Matrix& points, const Matrix& centroids,
                   std::vector<int>* assignment) {
  CheckNearest(points, centroids);
  assignment->assign(points.rows(), 0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < points.rows(); ++i) {
    (*assignment)[i] = NearestRow(points, centroids, i);
  }
}

}  // namespace omp

bool ParallelEnabled() {
#ifdef KGSUMM_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

namespace {

bool UseParallel(long work) { return ParallelEnabled() && work >= kParallelWork; }

}  // namespace

void MatMul(const Matrix& a, const Matrix& b, Matrix* c, bool accumulate) {
  if (UseParallel(static_cast<long>(a.rows()) * a.cols() * b.cols())) {
    omp::MatMul(a, b, c, accumulate);
  } else {
    serial::MatMul(a, b, c, accumulate);
  }
}

void MatMulTransB(const Matrix& a, const Matrix& b, Matrix* c,
                  bool accumulate) {
  if (UseParallel(static_cast<long>(a.rows()) * a.cols() * b.rows())) {
    omp::MatMulTransB(a, b, c, accumulate);
  } else {
    serial::MatMulTransB(a, b, c, accumulate);
  }
}

void MatMulTransA(const Matrix& a, const Matrix& b, Matrix* c,
                  bool accumulate) {
  if (UseParallel(static_cast<long>(a.rows()) * a.cols() * b.cols())) {
    omp::MatMulTransA(a, b, c, accumulate);
  } else {
    serial::MatMulTransA(a, b, c, accumulate);
  }
}

void SoftmaxRows(const Matrix& scores, const SoftmaxMask& mask, Matrix* out) {
  if (UseParallel(static_cast<long>(scores.size()) * 8)) {
    omp::SoftmaxRows(scores, mask, out);
  } else {
    serial::SoftmaxRows(scores, mask, out);
  }
}

void AssignNearest(const Matrix& points, const Matrix& centroids,
                   std::vector<int>* assignment) {
  if (UseParallel(static_cast<long>(points.size()) * centroids.rows())) {
    omp::AssignNearest(points, centroids, assignment);
  } else {
    serial::AssignNearest(points, centroids, assignment);
  }
}

}  // namespace kgsumm::kernels
