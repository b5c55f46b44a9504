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

#include "o2v/ad/tape.hpp"

#include <numeric>
#include <sstream>
#include <utility>

#include "o2v/common.hpp"

namespace o2v::ad {

std::size_t shape_size(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)), data(shape_size(shape), 0.0) {}

Tensor::Tensor(std::vector<int> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (shape_size(shape) != data.size())
    throw DimensionError("tensor data size " + std::to_string(data.size()) +
                         " does not match shape " + shape_string(shape));
}

Tensor Tensor::vector(std::vector<double> d) {
  const int n = static_cast<int>(d.size());
  return Tensor({n}, std::move(d));
}

double Var::item() const {
  const Tensor& t = value();
  if (t.size() != 1) throw DimensionError("item() on non-scalar " + shape_string(t.shape));
  return t.data[0];
}

Var Tape::push(Tensor value, bool requires_grad, Backward fn) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::leaf(Tensor value) { return push(std::move(value), true, nullptr); }

Var Tape::param(Tensor value, std::span<double> grad_sink) {
  if (grad_sink.size() != value.size())
    throw DimensionError("parameter gradient sink has wrong size");
  Var v = push(std::move(value), true, nullptr);
  nodes_.back().sink = grad_sink;
  return v;
}

std::vector<double>& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::backward(Var out) {
  if (out.size() != 1) throw DimensionError("backward() needs a scalar output");
  if (!out.requires_grad()) return;
  grad(out.id())[0] += 1.0;
  for (int id = out.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, id);
    if (!n.sink.empty()) {
      for (std::size_t i = 0; i < n.sink.size(); ++i) n.sink[i] += n.grad[i];
    }
  }
}

}  // namespace o2v::ad
