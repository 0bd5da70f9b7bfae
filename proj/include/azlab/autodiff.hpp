#pragma once

// Tape-based reverse-mode automatic differentiation.
//
// Nodes are appended in creation order, which is a topological order of the
// graph, so backward is a single reverse sweep. Parameters are referenced,
// not copied: the referenced tensors must outlive the tape.

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "azlab/tensor.hpp"

namespace azlab {

class Tape;

/// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

using Gradients = std::map<std::string, Tensor>;

class Tape {
 public:
  /// With record_gradients == false no backward closures are kept (inference).
  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Registers a named leaf. `value` is held by reference.
  Var parameter(const std::string& name, const Tensor& value);

  const Tensor& value(std::size_t id) const;
  std::size_t size() const { return nodes_.size(); }
  bool recording() const { return record_; }

  /// Gradient of a scalar `loss` with respect to every registered parameter.
  /// Parameters the loss does not depend on receive exact zeros.
  Gradients backward(Var loss);

  /// Gradient sink handed to backward rules.
  class Sink {
   public:
    /// Adds `delta` into the gradient of node `id` (shape must match).
    void add(std::size_t id, const Tensor& delta);
    /// Mutable gradient buffer of node `id`, zero-initialized on first use.
    Tensor& grad(std::size_t id);

   private:
    friend class Tape;
    explicit Sink(Tape& tape) : tape_(tape) {}
    Tape& tape_;
  };

  using Rule = std::function<void(const Tensor& upstream, const Tensor& output, Sink& sink)>;

  /// Appends a computed node. `rule` is dropped when not recording.
  Var push(Tensor value, Rule rule);

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Rule rule;
  };

  bool record_;
  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, std::size_t>> params_;
  std::vector<Tensor> grads_;
};

/// Differentiable operations. Shapes are checked eagerly; mismatches throw
/// std::invalid_argument naming both shapes. No implicit broadcasting other
/// than the explicit row-vector forms (add_row, masked_softmax's mask).
namespace ad {

Var matmul(Var a, Var b);
/// a · bᵀ
Var matmul_nt(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// Adds a [d] vector to every row of a [...×d] tensor.
Var add_row(Var a, Var row);
Var gelu(Var a);
Var reshape(Var a, Shape shape);
/// Columns [begin, end) of a matrix.
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var concat_cols(std::span<const Var> parts);
/// Rows of `table` selected by `ids`.
Var gather_rows(Var table, std::span<const std::size_t> ids);
/// Softmax over the last axis after adding a constant mask (see kernels::masked_softmax).
Var masked_softmax(Var scores, const Tensor& additive_mask);
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-12);
/// −log softmax(logits)[target] for a 1-D logits vector.
Var cross_entropy(Var logits, std::size_t target);
Var sum(Var a);
Var mean(Var a);

}  // namespace ad

}  // namespace azlab
