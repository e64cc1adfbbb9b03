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

#include "kgsumm/autograd.h"

#include <cmath>
#include <stdexcept>

#include "kgsumm/kernels.h"

namespace kgsumm {

Parameter& ParameterStore::Add(const std::string& name, Matrix value) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter " + name);
  index_[name] = params_.size();
  params_.push_back(std::make_unique<Parameter>(Parameter{name, std::move(value)}));
  return *params_.back();
}

const Parameter& ParameterStore::Get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
  return *params_[it->second];
}

Parameter& ParameterStore::Get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
  return *params_[it->second];
}

bool ParameterStore::Contains(const std::string& name) const {
  return index_.count(name) > 0;
}

std::size_t ParameterStore::IndexOf(const Parameter* p) const {
  return index_.at(p->name);
}

std::size_t ParameterStore::ScalarCount() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

Var Tape::Push(Matrix value, bool needs_grad) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = record_ && needs_grad;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::Check(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
    throw std::invalid_argument("variable does not belong to this tape");
  }
}

Var Tape::Leaf(const Parameter& p) {
  if (auto it = leaves_.find(&p); it != leaves_.end()) return Var{it->second};
  Node node;
  node.param = &p;
  node.needs_grad = record_;
  nodes_.push_back(std::move(node));
  const int id = static_cast<int>(nodes_.size()) - 1;
  leaves_[&p] = id;
  return Var{id};
}

Var Tape::Constant(Matrix m) { return Push(std::move(m), false); }

const Matrix& Tape::value(Var v) const {
  Check(v);
  const Node& n = nodes_[v.id];
  return n.param ? n.param->value : n.value;
}

const Matrix* Tape::grad(Var v) const {
  Check(v);
  const Node& n = nodes_[v.id];
  return n.has_grad ? &n.grad : nullptr;
}

const Matrix* Tape::GradOf(const Parameter& p) const {
  auto it = leaves_.find(&p);
  if (it == leaves_.end()) return nullptr;
  return grad(Var{it->second});
}

Matrix& Tape::GradRef(Var v) {
  Node& n = nodes_[v.id];
  if (!n.has_grad) {
    const Matrix& val = value(v);
    n.grad = Matrix(val.rows(), val.cols());
    n.has_grad = true;
  }
  return n.grad;
}

Var Tape::MatMul(Var a, Var b) {
  Check(a);
  Check(b);
  Matrix out;
  kernels::MatMul(value(a), value(b), &out);
  Var c = Push(std::move(out), Needs(a) || Needs(b));
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, a, b, c] {
      if (Needs(a)) kernels::MatMulTransB(G(c), value(b), &GradRef(a), true);
      if (Needs(b)) kernels::MatMulTransA(value(a), G(c), &GradRef(b), true);
    };
  }
  return c;
}

Var Tape::MatMulTransB(Var a, Var b) {
  Check(a);
  Check(b);
  Matrix out;
  kernels::MatMulTransB(value(a), value(b), &out);
  Var c = Push(std::move(out), Needs(a) || Needs(b));
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, a, b, c] {
      if (Needs(a)) kernels::MatMul(G(c), value(b), &GradRef(a), true);
      if (Needs(b)) kernels::MatMulTransA(G(c), value(a), &GradRef(b), true);
    };
  }
  return c;
}

Var Tape::Add(Var a, Var b) {
  Check(a);
  Check(b);
  const Matrix& x = value(a);
  const Matrix& y = value(b);
  if (!x.SameShape(y)) {
    throw std::invalid_argument("Add shape mismatch " + x.ShapeString() +
                                " vs " + y.ShapeString());
  }
  Matrix out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += y.data()[i];
  Var c = Push(std::move(out), Needs(a) || Needs(b));
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, a, b, c] {
      for (Var t : {a, b}) {
        if (!Needs(t)) continue;
        Matrix& g = GradRef(t);
        for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += G(c).data()[i];
      }
    };
  }
  return c;
}

Var Tape::AddRow(Var a, Var row) {
  Check(a);
  Check(row);
  const Matrix& x = value(a);
  const Matrix& r = value(row);
  if (r.rows() != 1 || r.cols() != x.cols()) {
    throw std::invalid_argument("AddRow shape mismatch " + x.ShapeString() +
                                " vs " + r.ShapeString());
  }
  Matrix out = x;
  for (int i = 0; i < out.rows(); ++i) {
    for (int j = 0; j < out.cols(); ++j) out(i, j) += r(0, j);
  }
  Var c = Push(std::move(out), Needs(a) || Needs(row));
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, a, row, c] {
      const Matrix& g = G(c);
      if (Needs(a)) {
        Matrix& ga = GradRef(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i];
      }
      if (Needs(row)) {
        Matrix& gr = GradRef(row);
        for (int i = 0; i < g.rows(); ++i) {
          for (int j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
        }
      }
    };
  }
  return c;
}

Var Tape::Scale(Var a, double s) {
  Check(a);
  Matrix out = value(a);
  for (double& v : out.data()) v *= s;
  Var c = Push(std::move(out), Needs(a));
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, a, c, s] {
      Matrix& ga = GradRef(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += s * G(c).data()[i];
    };
  }
  return c;
}

Var Tape::Transpose(Var a) {
  Check(a);
  const Matrix& x = value(a);
  Matrix out(x.cols(), x.rows());
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) out(j, i) = x(i, j);
  }
  Var c = Push(std::move(out), Needs(a));
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, a, c] {
      Matrix& ga = GradRef(a);
      for (int i = 0; i < ga.rows(); ++i) {
        for (int j = 0; j < ga.cols(); ++j) ga(i, j) += G(c)(j, i);
      }
    };
  }
  return c;
}

namespace {

double GeluValue(double x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
  return 0.5 * x * (1.0 + std::tanh(kC * (x + 0.044715 * x * x * x)));
}

double GeluSlope(double x) {
  constexpr double kC = 0.7978845608028654;
  const double t = std::tanh(kC * (x + 0.044715 * x * x * x));
  return 0.5 * (1.0 + t) +
         0.5 * x * (1.0 - t * t) * kC * (1.0 + 3.0 * 0.044715 * x * x);
}

}  // namespace

Var Tape::Elu(Var a) {
  Check(a);
  Matrix out = value(a);
  for (double& v : out.data()) v = v > 0.0 ? v : std::expm1(v);
  Var c = Push(std::move(out), Needs(a));
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, a, c] {
      Matrix& ga = GradRef(a);
      const Matrix& x = value(a);
      for (std::size_t i = 0; i < ga.size(); ++i) {
        const double xi = x.data()[i];
        ga.data()[i] += G(c).data()[i] * (xi > 0.0 ? 1.0 : std::exp(xi));
      }
    };
  }
  return c;
}

Var Tape::LeakyRelu(Var a, double slope) {
  Check(a);
  Matrix out = value(a);
  for (double& v : out.data()) v = v > 0.0 ? v : slope * v;
  Var c = Push(std::move(out), Needs(a));
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, a, c, slope] {
      Matrix& ga = GradRef(a);
      const Matrix& x = value(a);
      for (std::size_t i = 0; i < ga.size(); ++i) {
        ga.data()[i] += G(c).data()[i] * (x.data()[i] > 0.0 ? 1.0 : slope);
      }
    };
  }
  return c;
}

Var Tape::Gelu(Var a) {
  Check(a);
  Matrix out = value(a);
  for (double& v : out.data()) v = GeluValue(v);
  Var c = Push(std::move(out), Needs(a));
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, a, c] {
      Matrix& ga = GradRef(a);
      const Matrix& x = value(a);
      for (std::size_t i = 0; i < ga.size(); ++i) {
        ga.data()[i] += G(c).data()[i] * GeluSlope(x.data()[i]);
      }
    };
  }
  return c;
}

Var Tape::OuterSum(Var col_a, Var col_b) {
  Check(col_a);
  Check(col_b);
  const Matrix& x = value(col_a);
  const Matrix& y = value(col_b);
  if (x.cols() != 1 || y.cols() != 1) {
    throw std::invalid_argument("OuterSum expects column vectors, got " +
                                x.ShapeString() + " and " + y.ShapeString());
  }
  Matrix out(x.rows(), y.rows());
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < y.rows(); ++j) out(i, j) = x(i, 0) + y(j, 0);
  }
  Var c = Push(std::move(out), Needs(col_a) || Needs(col_b));
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, col_a, col_b, c] {
      const Matrix& g = G(c);
      if (Needs(col_a)) {
        Matrix& ga = GradRef(col_a);
        for (int i = 0; i < g.rows(); ++i) {
          for (int j = 0; j < g.cols(); ++j) ga(i, 0) += g(i, j);
        }
      }
      if (Needs(col_b)) {
        Matrix& gb = GradRef(col_b);
        for (int i = 0; i < g.rows(); ++i) {
          for (int j = 0; j < g.cols(); ++j) gb(j, 0) += g(i, j);
        }
      }
    };
  }
  return c;
}

Var Tape::Softmax(Var scores, std::vector<std::uint8_t> allowed, bool causal) {
  Check(scores);
  Matrix out;
  kernels::SoftmaxRows(value(scores), {allowed, causal}, &out);
  Var c = Push(std::move(out), Needs(scores));
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, scores, c] {
      const Matrix& y = value(c);
      const Matrix& gy = G(c);
      Matrix& gx = GradRef(scores);
      for (int i = 0; i < y.rows(); ++i) {
        double dot = 0.0;
        for (int j = 0; j < y.cols(); ++j) dot += gy(i, j) * y(i, j);
        for (int j = 0; j < y.cols(); ++j) gx(i, j) += y(i, j) * (gy(i, j) - dot);
      }
    };
  }
  return c;
}

Var Tape::LayerNorm(Var a, Var gain, Var bias) {
  constexpr double kEps = 1e-5;
  Check(a);
  Check(gain);
  Check(bias);
  const Matrix& x = value(a);
  const int n = x.cols();
  if (value(gain).cols() != n || value(bias).cols() != n ||
      value(gain).rows() != 1 || value(bias).rows() != 1) {
    throw std::invalid_argument("LayerNorm parameter shape mismatch for " +
                                x.ShapeString());
  }
  Matrix normed(x.rows(), n);
  std::vector<double> inv_std(x.rows());
  for (int i = 0; i < x.rows(); ++i) {
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += x(i, j);
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += (x(i, j) - mean) * (x(i, j) - mean);
    var /= n;
    inv_std[i] = 1.0 / std::sqrt(var + kEps);
    for (int j = 0; j < n; ++j) normed(i, j) = (x(i, j) - mean) * inv_std[i];
  }
  Matrix out(x.rows(), n);
  const Matrix& g = value(gain);
  const Matrix& b = value(bias);
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < n; ++j) out(i, j) = normed(i, j) * g(0, j) + b(0, j);
  }
  Var c = Push(std::move(out), Needs(a) || Needs(gain) || Needs(bias));
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, a, gain, bias, c, normed = std::move(normed),
                             inv_std = std::move(inv_std)] {
      const Matrix& gy = G(c);
      const Matrix& g = value(gain);
      const int rows = gy.rows();
      const int n = gy.cols();
      if (Needs(gain) || Needs(bias)) {
        Matrix* gg = Needs(gain) ? &GradRef(gain) : nullptr;
        Matrix* gb = Needs(bias) ? &GradRef(bias) : nullptr;
        for (int i = 0; i < rows; ++i) {
          for (int j = 0; j < n; ++j) {
            if (gg) (*gg)(0, j) += gy(i, j) * normed(i, j);
            if (gb) (*gb)(0, j) += gy(i, j);
          }
        }
      }
      if (Needs(a)) {
        Matrix& gx = GradRef(a);
        std::vector<double> dxhat(n);
        for (int i = 0; i < rows; ++i) {
          double mean_d = 0.0;
          double mean_dx = 0.0;
          for (int j = 0; j < n; ++j) {
            dxhat[j] = gy(i, j) * g(0, j);
            mean_d += dxhat[j];
            mean_dx += dxhat[j] * normed(i, j);
          }
          mean_d /= n;
          mean_dx /= n;
          for (int j = 0; j < n; ++j) {
            gx(i, j) += inv_std[i] * (dxhat[j] - mean_d - normed(i, j) * mean_dx);
          }
        }
      }
    };
  }
  return c;
}

Var Tape::GatherMean(Var table, const std::vector<std::vector<int>>& ids) {
  Check(table);
  const Matrix& t = value(table);
  Matrix out(static_cast<int>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i].empty()) continue;
    const double scale = 1.0 / static_cast<double>(ids[i].size());
    for (int id : ids[i]) {
      if (id < 0 || id >= t.rows()) {
        throw std::out_of_range("GatherMean id " + std::to_string(id) +
                                " outside table of " + std::to_string(t.rows()));
      }
      for (int j = 0; j < t.cols(); ++j) out(static_cast<int>(i), j) += scale * t(id, j);
    }
  }
  Var c = Push(std::move(out), Needs(table));
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, table, c, ids] {
      Matrix& gt = GradRef(table);
      const Matrix& g = G(c);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i].empty()) continue;
        const double scale = 1.0 / static_cast<double>(ids[i].size());
        for (int id : ids[i]) {
          for (int j = 0; j < g.cols(); ++j) gt(id, j) += scale * g(static_cast<int>(i), j);
        }
      }
    };
  }
  return c;
}

Var Tape::SliceCols(Var a, int start, int width) {
  Check(a);
  const Matrix& x = value(a);
  if (start < 0 || width < 0 || start + width > x.cols()) {
    throw std::invalid_argument("SliceCols out of range for " + x.ShapeString());
  }
  Matrix out(x.rows(), width);
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < width; ++j) out(i, j) = x(i, start + j);
  }
  Var c = Push(std::move(out), Needs(a));
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, a, c, start, width] {
      Matrix& ga = GradRef(a);
      const Matrix& g = G(c);
      for (int i = 0; i < g.rows(); ++i) {
        for (int j = 0; j < width; ++j) ga(i, start + j) += g(i, j);
      }
    };
  }
  return c;
}

Var Tape::ConcatCols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatCols of nothing");
  int rows = -1;
  int cols = 0;
  bool needs = false;
  for (Var p : parts) {
    Check(p);
    const Matrix& x = value(p);
    if (rows >= 0 && x.rows() != rows) {
      throw std::invalid_argument("ConcatCols row mismatch");
    }
    rows = x.rows();
    cols += x.cols();
    needs = needs || Needs(p);
  }
  Matrix out(rows, cols);
  int offset = 0;
  for (Var p : parts) {
    const Matrix& x = value(p);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < x.cols(); ++j) out(i, offset + j) = x(i, j);
    }
    offset += x.cols();
  }
  Var c = Push(std::move(out), needs);
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, parts, c] {
      const Matrix& g = G(c);
      int offset = 0;
      for (Var p : parts) {
        const int w = value(p).cols();
        if (Needs(p)) {
          Matrix& gp = GradRef(p);
          for (int i = 0; i < g.rows(); ++i) {
            for (int j = 0; j < w; ++j) gp(i, j) += g(i, offset + j);
          }
        }
        offset += w;
      }
    };
  }
  return c;
}

Var Tape::SelectRow(Var a, int row) {
  Check(a);
  const Matrix& x = value(a);
  if (row < 0 || row >= x.rows()) {
    throw std::out_of_range("SelectRow " + std::to_string(row) + " of " +
                            x.ShapeString());
  }
  Matrix out(1, x.cols());
  for (int j = 0; j < x.cols(); ++j) out(0, j) = x(row, j);
  Var c = Push(std::move(out), Needs(a));
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, a, c, row] {
      Matrix& ga = GradRef(a);
      for (int j = 0; j < ga.cols(); ++j) ga(row, j) += G(c)(0, j);
    };
  }
  return c;
}

Var Tape::CrossEntropy(Var logits, const std::vector<int>& targets, int ignore) {
  Check(logits);
  const Matrix& z = value(logits);
  if (static_cast<int>(targets.size()) != z.rows()) {
    throw std::invalid_argument("CrossEntropy: " + std::to_string(targets.size()) +
                                " targets for " + z.ShapeString() + " logits");
  }
  Matrix probs;
  kernels::SoftmaxRows(z, {}, &probs);
  double total = 0.0;
  int count = 0;
  for (int i = 0; i < z.rows(); ++i) {
    if (targets[i] == ignore) continue;
    if (targets[i] < 0 || targets[i] >= z.cols()) {
      throw std::out_of_range("CrossEntropy target out of vocabulary");
    }
    double mx = z(i, 0);
    for (int j = 1; j < z.cols(); ++j) mx = std::max(mx, z(i, j));
    double sum = 0.0;
    for (int j = 0; j < z.cols(); ++j) sum += std::exp(z(i, j) - mx);
    total += (mx + std::log(sum)) - z(i, targets[i]);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("CrossEntropy with no targets");
  Var c = Push(Matrix(1, 1, total / count), Needs(logits));
  if (nodes_[c.id].needs_grad) {
    nodes_[c.id].backward = [this, logits, c, targets, ignore, count,
                             probs = std::move(probs)] {
      Matrix& gz = GradRef(logits);
      const double scale = G(c)(0, 0) / count;
      for (int i = 0; i < probs.rows(); ++i) {
        if (targets[i] == ignore) continue;
        for (int j = 0; j < probs.cols(); ++j) gz(i, j) += scale * probs(i, j);
        gz(i, targets[i]) -= scale;
      }
    };
  }
  return c;
}

void Tape::Backward(Var target) {
  Check(target);
  if (!record_) throw std::logic_error("Backward on a non-recording tape");
  const Matrix& t = value(target);
  if (t.rows() != 1 || t.cols() != 1) {
    throw std::invalid_argument("Backward target must be scalar, got " +
                                t.ShapeString());
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Matrix();
  }
  GradRef(target)(0, 0) = 1.0;
  for (int i = target.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.has_grad && n.backward) n.backward();
  }
}

}  // namespace kgsumm
