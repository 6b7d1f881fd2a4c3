#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vqp/rng.hpp"

namespace vqp::ad {

// Reverse-mode automatic differentiation over op-granularity nodes. A forward
// pass builds a fresh graph of shared_ptr-linked nodes; backward() clears the
// grad buffers of every node reachable from the root and then fills them, so
// each call yields exactly d(root)/d(node) without stale accumulation.
struct Node {
  std::vector<int> shape;
  std::vector<double> val;
  std::vector<double> grad;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // pulls this->grad into parents' grads

  size_t size() const { return val.size(); }
  bool is_scalar() const { return val.size() == 1; }
  double scalar() const { return val[0]; }
};

using Var = std::shared_ptr<Node>;

Var make_node(std::vector<int> shape);
Var make_const(std::vector<int> shape, std::vector<double> values);
Var make_scalar(double v);

// Leaf parameter with uniform fan-in init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Var make_param(std::vector<int> shape, int fan_in, Rng& rng);
Var make_zero_param(std::vector<int> shape);

void zero_grad(const Var& v);

// Seeds grad(root)=1 and runs reverse topological order. The root must be a
// scalar produced by a recorded forward pass.
void backward(const Var& root);

// --- ops -------------------------------------------------------------------

// x: [Cin,H,W], w: [Cout,Cin,k,k], b: [Cout]; zero padding.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var relu(const Var& x);
Var global_avg_pool(const Var& x);               // [C,H,W] -> [C]
Var linear(const Var& w, const Var& b, const Var& x);  // w:[out,in] -> [out]
Var mean_pool(const std::vector<Var>& xs);       // elementwise mean, uniform shape
Var mean(const std::vector<Var>& scalars);       // batch mean of scalars
Var weighted_sum(const std::vector<Var>& scalars, const std::vector<double>& weights);

// Smooth-L1 of (pred - target): r^2/(2*beta) inside |r|<beta, |r|-beta/2
// outside. beta must be positive.
Var smooth_l1(const Var& pred, double target, double beta);
double smooth_l1_value(double pred, double target, double beta);

}  // namespace vqp::ad
