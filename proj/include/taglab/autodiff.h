#pragma once

#include <functional>
#include <span>
#include <vector>

#include "taglab/params.h"

// Minimal reverse-mode differentiation over vector-valued nodes. Every
// operation is evaluated eagerly when it is recorded; backward() then walks
// the tape in reverse and accumulates into node gradients and into the
// `grad` buffers of any parameter tensors the graph touched.
namespace taglab::ad {

class Graph;

struct Expr {
  Graph* graph = nullptr;
  int id = -1;

  const std::vector<double>& value() const;
  std::size_t dim() const { return value().size(); }
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Expr constant(std::vector<double> value);
  // Row `row` of a 2-D parameter table.
  Expr lookup(Tensor& table, int row);
  // The whole parameter, flattened.
  Expr parameter(Tensor& tensor);

  // Seeds d(loss)/d(loss) = 1 on a scalar node and back-propagates. A graph
  // may only be differentiated once; call reset() to record a new one.
  void backward(Expr loss);
  void reset();

  std::size_t size() const { return nodes_.size(); }

  // Used by operation implementations.
  Expr record(std::vector<double> value, std::function<void()> backward_fn);
  const std::vector<double>& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  std::vector<double>& grad(int id);

 private:
  struct Node {
    std::vector<double> value;
    std::vector<double> grad;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;
  bool differentiated_ = false;
};

// W x + b, with W a [out x in] parameter and b a [out] parameter.
Expr affine(Tensor& weight, Tensor& bias, Expr x);
Expr concat(std::span<const Expr> parts);
Expr slice(Expr x, std::size_t begin, std::size_t length);
Expr tanh(Expr x);
Expr sigmoid(Expr x);
Expr relu(Expr x);
Expr cmul(Expr a, Expr b);
Expr add(Expr a, Expr b);
// Elementwise product with a constant mask (dropout).
Expr mask(Expr x, std::vector<double> mask);
// Elementwise maximum over equally sized vectors; ties go to the earliest.
Expr max_pool(std::span<const Expr> items);
// Sum of equally sized vectors.
Expr sum(std::span<const Expr> items);
Expr scale(Expr x, double factor);
// -log softmax(logits)[gold]
Expr neg_log_softmax(Expr logits, int gold);
// logZ - score(gold) of a chain whose per-position scores are `emissions`.
Expr crf_nll(std::span<const Expr> emissions, Tensor& trans, Tensor& start, Tensor& end, std::span<const int> gold);

}  // namespace taglab::ad
