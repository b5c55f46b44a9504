// Copyright 2026 The ode2vae-cpp Authors.
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

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace o2v::ad {

// Row-major dense array. Rank is at most 3 (channels, rows, cols).
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);
  Tensor(std::vector<int> s, std::vector<double> d);

  static Tensor vector(std::vector<double> d);
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  std::size_t size() const { return data.size(); }
  int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }
  int rank() const { return static_cast<int>(shape.size()); }
};

std::size_t shape_size(const std::vector<int>& shape);
std::string shape_string(const std::vector<int>& shape);

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const std::vector<int>& shape() const { return value().shape; }
  std::size_t size() const { return value().size(); }
  double item() const;  // scalar value
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode automatic differentiation over a linear tape. Nodes are
// appended in evaluation order, so backward() is a single reverse sweep.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var leaf(Tensor value);
  // Leaf whose gradient is added into `grad_sink` by backward(). The sink
  // must outlive the call to backward().
  Var param(Tensor value, std::span<double> grad_sink);

  // Seeds d(out)/d(out) = 1 and propagates. `out` must be a scalar.
  void backward(Var out);

  const Tensor& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  // Gradient buffer of node `id`, zero-initialized on first access.
  std::vector<double>& grad(int id);
  const std::vector<double>& grad(Var v) { return grad(v.id()); }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }
  // Drops every node created after the first `n`.
  void truncate(std::size_t n) {
    if (n < nodes_.size()) nodes_.resize(n);
  }

  // Appends a computed node. Ops call this; `fn` runs only when the output
  // requires a gradient.
  Var push(Tensor value, bool requires_grad, Backward fn);

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    bool requires_grad = false;
    Backward backward;
    std::span<double> sink;
  };
  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }

}  // namespace o2v::ad
