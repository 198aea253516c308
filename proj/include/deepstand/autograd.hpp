// Copyright 2026 The DeepStand Authors.
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

#ifndef DEEPSTAND_AUTOGRAD_HPP_
#define DEEPSTAND_AUTOGRAD_HPP_

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "deepstand/tensor.hpp"

namespace deepstand {

template <typename T>
class Graph;

/// A tensor participating in differentiation. Leaves (parameters, inputs)
/// are created with make_var; everything else is produced by a Graph op.
template <typename T>
struct Variable {
  Tensor<T> value;
  Tensor<T> grad;  // empty until a backward pass reaches this variable
  bool requires_grad = false;
  const Graph<T>* producer = nullptr;

  bool has_grad() const noexcept { return !grad.empty(); }
  void zero_grad() { grad = Tensor<T>(); }

  /// grad += g, allocating on first use.
  void accumulate(const Tensor<T>& g) {
    if (grad.empty()) {
      grad = g;
      return;
    }
    require(grad.shape() == g.shape(), "gradient shape mismatch");
    for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
  }

  Tensor<T>& grad_buffer() {
    if (grad.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

template <typename T>
using Var = std::shared_ptr<Variable<T>>;

template <typename T>
Var<T> make_var(Tensor<T> value, bool requires_grad = false) {
  auto v = std::make_shared<Variable<T>>();
  v->value = std::move(value);
  v->requires_grad = requires_grad;
  return v;
}

/// Tape of executed operations. Ops are appended in execution order, which is
/// a topological order, so the backward pass is a reverse scan of the tape.
template <typename T>
class Graph {
 public:
  struct Record {
    std::string name;
    std::vector<Var<T>> inputs;
    Var<T> output;
    std::function<void()> backward;  // reads output->grad, accumulates into inputs
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Appends an op. The output requires a gradient iff any input does.
  Var<T> record(std::string name, std::vector<Var<T>> inputs, Tensor<T> output,
                std::function<void(Variable<T>& out)> backward) {
    if (!output.all_finite()) {
      throw NumericError(name + ": non-finite value in output");
    }
    auto out = make_var(std::move(output));
    out->producer = this;
    for (const auto& in : inputs) out->requires_grad = out->requires_grad || in->requires_grad;
    Record rec{std::move(name), std::move(inputs), out, {}};
    if (out->requires_grad) {
      Variable<T>* raw = out.get();
      rec.backward = [raw, fn = std::move(backward)] { fn(*raw); };
    }
    records_.push_back(std::move(rec));
    return out;
  }

  /// Populates gradients of every requires_grad leaf reachable from loss.
  /// Leaf gradients accumulate across calls; intermediates are recomputed.
  /// Returns the number of ops visited.
  std::size_t backward(const Var<T>& loss) {
    if (!loss || loss->producer != this) {
      throw UsageError("backward: tensor was not produced by this graph");
    }
    require(loss->value.size() == 1, "backward: loss must be a scalar");
    for (auto& r : records_) r.output->zero_grad();
    loss->grad = Tensor<T>(loss->value.shape(), T{1});
    std::size_t visited = 0;
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
      ++visited;
      if (it->backward && it->output->has_grad()) it->backward();
    }
    return visited;
  }

  const std::vector<Record>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  void clear() { records_.clear(); }

 private:
  std::vector<Record> records_;
};

}  // namespace deepstand

#endif  // DEEPSTAND_AUTOGRAD_HPP_
