#pragma once

#include "tensor.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

/*
 * Minimal tape-free reverse-mode differentiation over NCHW Real tensors.
 *
 * Every op returns a Var whose node keeps its inputs alive; backward() walks the
 * resulting DAG in reverse topological order. Nothing is recorded while a
 * NoGradGuard is alive, so inference and recurrent warm-up build no graph.
 */
namespace cardiacsr::nn {

struct Node
{
  Tensor value;
  Tensor grad;
  bool requiresGrad = false;
  std::string name;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node &)> backward;

  // Lazily zero-initialised gradient buffer with the value's shape.
  Tensor &gradBuffer();
};

class Var
{
public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_{std::move(node)} {}

  Tensor const &value() const { return node_->value; }
  Tensor const &grad() const { return node_->grad; }
  Shape const &shape() const { return node_->value.shape(); }
  bool requiresGrad() const { return node_->requiresGrad; }
  bool defined() const { return static_cast<bool>(node_); }
  Node &node() const { return *node_; }
  std::shared_ptr<Node> const &ptr() const { return node_; }

private:
  std::shared_ptr<Node> node_;
};

Var constant(Tensor value);
Var parameter(std::string name, Tensor value);
Var detach(Var const &v);

bool gradEnabled();

class NoGradGuard
{
public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(NoGradGuard const &) = delete;
  NoGradGuard &operator=(NoGradGuard const &) = delete;

private:
  bool previous_;
};

// Seeds d(root)/d(root) = 1. root must hold a single element.
void backward(Var const &root);

// Ops. Shapes must match exactly unless noted; violations throw ShapeError.

// Same-padded, stride-1 convolution. weight is (out, in, k, k) with odd k, bias is (1, out, 1, 1).
Var conv2d(Var const &x, Var const &weight, Var const &bias);
Var add(Var const &a, Var const &b);
Var mul(Var const &a, Var const &b);
Var sigmoid(Var const &x);
Var tanh(Var const &x);
Var leakyRelu(Var const &x, Real slope);
Var concatChannels(std::vector<Var> const &parts);
Var sliceChannels(Var const &x, int begin, int count);
// (n, c*r*r, h, w) -> (n, c, h*r, w*r), channel c*r*r + i*r + j lands at offset (i, j).
Var pixelShuffle(Var const &x, int r);

// Scalar-valued reductions, result shape (1,1,1,1).
// sum |pred - target| accumulated in double; subgradient 0 at ties.
Var l1Sum(Var const &pred, Tensor const &target);
Var sumAll(Var const &x);
Var addScalars(std::vector<Var> const &terms);
Var scale(Var const &x, Real factor);

} // namespace cardiacsr::nn
