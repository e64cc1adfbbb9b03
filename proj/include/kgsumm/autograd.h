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

#ifndef KGSUMM_AUTOGRAD_H_
#define KGSUMM_AUTOGRAD_H_

// Reverse-mode differentiation over dense matrices.
//
// A Tape records every operation applied to its variables. Parameters enter a
// tape as read-only leaves; after Backward() their gradients are read back
// with GradOf(), so a const model can be evaluated and differentiated by any
// number of tapes concurrently.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgsumm/matrix.h"

namespace kgsumm {

struct Parameter {
  std::string name;
  Matrix value;
};

// Named parameters in insertion order.
class ParameterStore {
 public:
  Parameter& Add(const std::string& name, Matrix value);
  const Parameter& Get(const std::string& name) const;
  Parameter& Get(const std::string& name);
  bool Contains(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  Parameter& at(std::size_t i) { return *params_[i]; }
  const Parameter& at(std::size_t i) const { return *params_[i]; }
  std::size_t IndexOf(const Parameter* p) const;
  std::size_t ScalarCount() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Leaf(const Parameter& p);
  Var Constant(Matrix m);

  const Matrix& value(Var v) const;
  // Gradient of the last Backward() target w.r.t. v; null if v is unreached.
  const Matrix* grad(Var v) const;
  const Matrix* GradOf(const Parameter& p) const;

  // Linear algebra.
  Var MatMul(Var a, Var b);
  Var MatMulTransB(Var a, Var b);
  Var Add(Var a, Var b);
  Var AddRow(Var a, Var row);  // broadcasts a 1 x n row over every row of a
  Var Scale(Var a, double s);
  Var Transpose(Var a);

  // Elementwise nonlinearities.
  Var Elu(Var a);
  Var LeakyRelu(Var a, double slope);
  Var Gelu(Var a);

  // out(i, j) = col_a(i) + col_b(j) for column vectors a (n x 1), b (m x 1).
  Var OuterSum(Var col_a, Var col_b);
  Var Softmax(Var scores, std::vector<std::uint8_t> allowed, bool causal);
  Var LayerNorm(Var a, Var gain, Var bias);

  // Row i of the result is the mean of table rows ids[i] (zero if empty).
  Var GatherMean(Var table, const std::vector<std::vector<int>>& ids);
  Var SliceCols(Var a, int start, int width);
  Var ConcatCols(const std::vector<Var>& parts);
  Var SelectRow(Var a, int row);

  // Mean token cross-entropy; targets equal to `ignore` are skipped.
  Var CrossEntropy(Var logits, const std::vector<int>& targets,
                   int ignore = -1);

  // Seeds d(target)/d(target) = 1; target must be 1 x 1.
  void Backward(Var target);

  bool recording() const { return record_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Parameter* param = nullptr;
    bool needs_grad = false;
    Matrix grad;
    bool has_grad = false;
    std::function<void()> backward;
  };

  Var Push(Matrix value, bool needs_grad);
  bool Needs(Var v) const { return record_ && nodes_[v.id].needs_grad; }
  Matrix& GradRef(Var v);
  const Matrix& G(Var v) const { return nodes_[v.id].grad; }
  void Check(Var v) const;

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> leaves_;
};

}  // namespace kgsumm

#endif  // KGSUMM_AUTOGRAD_H_
