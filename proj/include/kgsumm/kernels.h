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

#ifndef KGSUMM_KERNELS_H_
#define KGSUMM_KERNELS_H_

// Dense numeric kernels. Every kernel has a serial reference implementation
// and an OpenMP implementation with the same per-element accumulation order,
// so the two agree bit for bit. The unqualified entry points dispatch to the
// OpenMP version when the library is built with OpenMP.

#include <cstdint>
#include <span>
#include <vector>

#include "kgsumm/matrix.h"

namespace kgsumm::kernels {

// Softmax masking. `allowed` is row-major rows x cols (empty = all allowed);
// `causal` additionally forbids column j > row i. Every row must keep at
// least one allowed column.
struct SoftmaxMask {
  std::span<const std::uint8_t> allowed;
  bool causal = false;
};

namespace serial {

// c (+)= a * b
void MatMul(const Matrix& a, const Matrix& b, Matrix* c,
            bool accumulate = false);
// c (+)= a * b^T
void MatMulTransB(const Matrix& a, const Matrix& b, Matrix* c,
                  bool accumulate = false);
// c (+)= a^T * b
void MatMulTransA(const Matrix& a, const Matrix& b, Matrix* c,
                  bool accumulate = false);
// Row-wise softmax; masked entries come out exactly 0.
void SoftmaxRows(const Matrix& scores, const SoftmaxMask& mask, Matrix* out);
// Index of the nearest centroid (squared Euclidean, lowest index wins ties)
// for every point row.
void AssignNearest(const Matrix& points, const Matrix& centroids,
                   std::vector<int>* assignment);

}  // namespace serial

namespace omp {

// c (+)= a * b
void MatMul(const Matrix& a, const Matrix& b, Matrix* c,
            bool accumulate = false);
// c (+)= a * b^T
void MatMulTransB(const Matrix& a, const Matrix& b, Matrix* c,
                  bool accumulate = false);
// c (+)= a^T * b
void MatMulTransA(const Matrix& a, const Matrix& b, Matrix* c,
                  bool accumulate = false);
// Row-wise softmax; masked entries come out exactly 0.
void SoftmaxRows(const Matrix& scores, const SoftmaxMask& mask, Matrix* out);
// Index of the nearest centroid (squared Euclidean, lowest index wins ties)
// for every point row.
void AssignNearest(const Matrix& points, const Matrix& centroids,
                   std::vector<int>* assignment);

}  // namespace omp

// Dispatching entry points.
// c (+)= a * b
void MatMul(const Matrix& a, const Matrix& b, Matrix* c,
            bool accumulate = false);
// c (+)= a * b^T
void MatMulTransB(const Matrix& a, const Matrix& b, Matrix* c,
                  bool accumulate = false);
// c (+)= a^T * b
void MatMulTransA(const Matrix& a, const Matrix& b, Matrix* c,
                  bool accumulate = false);
// Row-wise softmax; masked entries come out exactly 0.
void SoftmaxRows(const Matrix& scores, const SoftmaxMask& mask, Matrix* out);
// Index of the nearest centroid (squared Euclidean, lowest index wins ties)
// for every point row.
void AssignNearest(const Matrix& points, const Matrix& centroids,
                   std::vector<int>* assignment);

// True when the dispatching entry points run the OpenMP versions.
bool ParallelEnabled();

}  // namespace kgsumm::kernels

#endif  // KGSUMM_KERNELS_H_
