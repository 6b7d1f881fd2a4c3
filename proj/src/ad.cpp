#include "vqp/ad.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace vqp::ad {

namespace {

size_t shape_size(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive");
    n *= static_cast<size_t>(d);
  }
  return n;
}

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Var make_node(std::vector<int> shape) {
  auto n = std::make_shared<Node>();
  const size_t sz = shape_size(shape);
  n->shape = std::move(shape);
  n->val.assign(sz, 0.0);
  n->grad.assign(sz, 0.0);
  return n;
}

Var make_const(std::vector<int> shape, std::vector<double> values) {
  auto n = make_node(std::move(shape));
  require(values.size() == n->size(), "value buffer does not match shape");
  n->val = std::move(values);
  return n;
}

Var make_scalar(double v) { return make_const({1}, {v}); }

Var make_param(std::vector<int> shape, int fan_in, Rng& rng) {
  require(fan_in > 0, "fan_in must be positive");
  auto n = make_node(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : n->val) v = rng.uniform(-bound, bound);
  return n;
}

Var make_zero_param(std::vector<int> shape) { return make_node(std::move(shape)); }

void zero_grad(const Var& v) {
  if (v) std::fill(v->grad.begin(), v->grad.end(), 0.0);
}

namespace {

void topo_collect(Node* n, std::unordered_set<Node*>& seen, std::vector<Node*>& order) {
  if (seen.count(n)) return;
  seen.insert(n);
  for (const auto& p : n->parents) topo_collect(p.get(), seen, order);
  order.push_back(n);
}

}  // namespace

void backward(const Var& root) {
  require(root != nullptr, "backward on empty node");
  require(root->is_scalar(), "backward root must be a scalar");
  if (root->parents.empty()) {
    throw std::invalid_argument("backward requires a recorded forward graph");
  }
  std::unordered_set<Node*> seen;
  std::vector<Node*> order;
  topo_collect(root.get(), seen, order);
  for (Node* n : order) std::fill(n->grad.begin(), n->grad.end(), 0.0);
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop(**it);
  }
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  require(x && w && b, "conv2d: null input");
  require(x->shape.size() == 3, "conv2d: input must be [C,H,W]");
  require(w->shape.size() == 4, "conv2d: weight must be [Cout,Cin,k,k]");
  require(stride >= 1 && pad >= 0, "conv2d: bad stride/pad");
  const int Cin = x->shape[0], H = x->shape[1], W = x->shape[2];
  const int Cout = w->shape[0], k = w->shape[2];
  require(w->shape[1] == Cin, "conv2d: channel mismatch");
  require(w->shape[3] == k, "conv2d: kernel must be square");
  require(b->shape.size() == 1 && b->shape[0] == Cout, "conv2d: bias shape mismatch");
  const int Ho = (H + 2 * pad - k) / stride + 1;
  const int Wo = (W + 2 * pad - k) / stride + 1;
  require(Ho >= 1 && Wo >= 1, "conv2d: output would be empty");

  auto out = make_node({Cout, Ho, Wo});
  const double* xv = x->val.data();
  const double* wv = w->val.data();
  double* ov = out->val.data();
  for (int co = 0; co < Cout; ++co) {
    const double bias = b->val[static_cast<size_t>(co)];
    for (int oy = 0; oy < Ho; ++oy) {
      for (int ox = 0; ox < Wo; ++ox) {
        double acc = bias;
        for (int ci = 0; ci < Cin; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= H) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= W) continue;
              acc += xv[(static_cast<size_t>(ci) * H + iy) * W + ix] *
                     wv[((static_cast<size_t>(co) * Cin + ci) * k + ky) * k + kx];
            }
          }
        }
        ov[(static_cast<size_t>(co) * Ho + oy) * Wo + ox] = acc;
      }
    }
  }

  out->parents = {x, w, b};
  out->backprop = [Cin, H, W, Cout, k, Ho, Wo, stride, pad](Node& self) {
    Node& xn = *self.parents[0];
    Node& wn = *self.parents[1];
    Node& bn = *self.parents[2];
    const double* g = self.grad.data();
    for (int co = 0; co < Cout; ++co) {
      for (int oy = 0; oy < Ho; ++oy) {
        for (int ox = 0; ox < Wo; ++ox) {
          const double go = g[(static_cast<size_t>(co) * Ho + oy) * Wo + ox];
          if (go == 0.0) continue;
          bn.grad[static_cast<size_t>(co)] += go;
          for (int ci = 0; ci < Cin; ++ci) {
            for (int ky = 0; ky < k; ++ky) {
              const int iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= H) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = ox * stride + kx - pad;
                if (ix < 0 || ix >= W) continue;
                const size_t xo = (static_cast<size_t>(ci) * H + iy) * W + ix;
                const size_t wo = ((static_cast<size_t>(co) * Cin + ci) * k + ky) * k + kx;
                xn.grad[xo] += go * wn.val[wo];
                wn.grad[wo] += go * xn.val[xo];
              }
            }
          }
        }
      }
    }
  };
  return out;
}

Var relu(const Var& x) {
  require(x != nullptr, "relu: null input");
  auto out = make_node(x->shape);
  for (size_t i = 0; i < x->size(); ++i) out->val[i] = x->val[i] > 0.0 ? x->val[i] : 0.0;
  out->parents = {x};
  out->backprop = [](Node& self) {
    Node& xn = *self.parents[0];
    for (size_t i = 0; i < self.size(); ++i) {
      if (xn.val[i] > 0.0) xn.grad[i] += self.grad[i];
    }
  };
  return out;
}

Var global_avg_pool(const Var& x) {
  require(x && x->shape.size() == 3, "global_avg_pool: input must be [C,H,W]");
  const int C = x->shape[0];
  const size_t plane = static_cast<size_t>(x->shape[1]) * x->shape[2];
  auto out = make_node({C});
  for (int c = 0; c < C; ++c) {
    double acc = 0.0;
    for (size_t i = 0; i < plane; ++i) acc += x->val[static_cast<size_t>(c) * plane + i];
    out->val[static_cast<size_t>(c)] = acc / static_cast<double>(plane);
  }
  out->parents = {x};
  out->backprop = [C, plane](Node& self) {
    Node& xn = *self.parents[0];
    for (int c = 0; c < C; ++c) {
      const double g = self.grad[static_cast<size_t>(c)] / static_cast<double>(plane);
      for (size_t i = 0; i < plane; ++i) xn.grad[static_cast<size_t>(c) * plane + i] += g;
    }
  };
  return out;
}

Var linear(const Var& w, const Var& b, const Var& x) {
  require(w && b && x, "linear: null input");
  require(w->shape.size() == 2, "linear: weight must be [out,in]");
  require(x->shape.size() == 1, "linear: input must be a vector");
  const int out_dim = w->shape[0], in_dim = w->shape[1];
  if (x->shape[0] != in_dim) {
    throw std::invalid_argument("linear: dimension mismatch, weight expects " +
                                std::to_string(in_dim) + " got " + std::to_string(x->shape[0]));
  }
  require(b->shape.size() == 1 && b->shape[0] == out_dim, "linear: bias shape mismatch");

  auto out = make_node({out_dim});
  for (int o = 0; o < out_dim; ++o) {
    double acc = b->val[static_cast<size_t>(o)];
    const double* wrow = &w->val[static_cast<size_t>(o) * in_dim];
    for (int i = 0; i < in_dim; ++i) acc += wrow[i] * x->val[static_cast<size_t>(i)];
    out->val[static_cast<size_t>(o)] = acc;
  }
  out->parents = {w, b, x};
  out->backprop = [out_dim, in_dim](Node& self) {
    Node& wn = *self.parents[0];
    Node& bn = *self.parents[1];
    Node& xn = *self.parents[2];
    for (int o = 0; o < out_dim; ++o) {
      const double g = self.grad[static_cast<size_t>(o)];
      if (g == 0.0) continue;
      bn.grad[static_cast<size_t>(o)] += g;
      const size_t row = static_cast<size_t>(o) * in_dim;
      for (int i = 0; i < in_dim; ++i) {
        wn.grad[row + i] += g * xn.val[static_cast<size_t>(i)];
        xn.grad[static_cast<size_t>(i)] += g * wn.val[row + i];
      }
    }
  };
  return out;
}

Var mean_pool(const std::vector<Var>& xs) {
  require(!xs.empty(), "mean_pool: empty input");
  const auto& shape = xs.front()->shape;
  for (const auto& x : xs) {
    require(x != nullptr, "mean_pool: null input");
    if (x->shape != shape) throw std::invalid_argument("mean_pool: shape mismatch");
  }
  auto out = make_node(shape);
  const double inv = 1.0 / static_cast<double>(xs.size());
  for (const auto& x : xs) {
    for (size_t i = 0; i < out->size(); ++i) out->val[i] += x->val[i];
  }
  for (double& v : out->val) v *= inv;
  out->parents.assign(xs.begin(), xs.end());
  out->backprop = [inv](Node& self) {
    for (auto& p : self.parents) {
      for (size_t i = 0; i < self.size(); ++i) p->grad[i] += inv * self.grad[i];
    }
  };
  return out;
}

Var mean(const std::vector<Var>& scalars) {
  require(!scalars.empty(), "mean: empty input");
  for (const auto& s : scalars) require(s && s->is_scalar(), "mean: inputs must be scalars");
  auto out = make_node({1});
  const double inv = 1.0 / static_cast<double>(scalars.size());
  for (const auto& s : scalars) out->val[0] += s->val[0];
  out->val[0] *= inv;
  out->parents.assign(scalars.begin(), scalars.end());
  out->backprop = [inv](Node& self) {
    for (auto& p : self.parents) p->grad[0] += inv * self.grad[0];
  };
  return out;
}

Var weighted_sum(const std::vector<Var>& scalars, const std::vector<double>& weights) {
  require(!scalars.empty(), "weighted_sum: empty input");
  if (scalars.size() != weights.size()) {
    throw std::invalid_argument("weighted_sum: length mismatch");
  }
  for (const auto& s : scalars) require(s && s->is_scalar(), "weighted_sum: inputs must be scalars");
  auto out = make_node({1});
  for (size_t i = 0; i < scalars.size(); ++i) out->val[0] += weights[i] * scalars[i]->val[0];
  out->parents.assign(scalars.begin(), scalars.end());
  std::vector<double> w = weights;
  out->backprop = [w](Node& self) {
    for (size_t i = 0; i < self.parents.size(); ++i) self.parents[i]->grad[0] += w[i] * self.grad[0];
  };
  return out;
}

double smooth_l1_value(double pred, double target, double beta) {
  if (beta <= 0.0) throw std::invalid_argument("smooth_l1: beta must be positive");
  const double r = pred - target;
  const double a = std::fabs(r);
  return a < beta ? r * r / (2.0 * beta) : a - beta / 2.0;
}

Var smooth_l1(const Var& pred, double target, double beta) {
  require(pred && pred->is_scalar(), "smooth_l1: prediction must be a scalar");
  if (beta <= 0.0) throw std::invalid_argument("smooth_l1: beta must be positive");
  auto out = make_node({1});
  out->val[0] = smooth_l1_value(pred->val[0], target, beta);
  out->parents = {pred};
  out->backprop = [target, beta](Node& self) {
    Node& p = *self.parents[0];
    const double r = p.val[0] - target;
    const double d = std::fabs(r) < beta ? r / beta : (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0));
    p.grad[0] += d * self.grad[0];
  };
  return out;
}

}  // namespace vqp::ad
