#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vqp/ad.hpp"

namespace vqp::mgda {

// Per-task flattened encoder gradients plus an optional cached Gram matrix.
// All solver arithmetic runs on the T x T Gram matrix; the long vectors are
// touched exactly once.
struct GradientBundle {
  std::vector<std::string> task_names;             // optional labels, may be empty
  std::vector<std::vector<double>> vectors;        // T rows of identical length P
  std::optional<std::vector<std::vector<double>>> gram;
};

std::vector<std::vector<double>> compute_gram(const std::vector<std::vector<double>>& vectors);
void fill_gram(GradientBundle& bundle);

struct SimplexWeights {
  std::vector<double> alpha;
  double achieved_norm_sq = 0.0;
  int iterations = 0;       // Frank-Wolfe steps taken; 0 for closed forms
  bool degenerate = false;  // all-zero gradient bundle
  // Snapshots after init and after every accepted step, for monotonicity
  // checks and diagnostic dumps.
  std::vector<double> norm_sq_trace;
  std::vector<std::vector<double>> alpha_trace;
};

// Closed-form min-norm point on the segment between two gradients:
// gamma* = clamp(<g2-g1, g2> / |g1-g2|^2, 0, 1), alpha = (gamma*, 1-gamma*).
SimplexWeights min_norm_pair(const std::vector<double>& g1, const std::vector<double>& g2);

// General solver. T=1 trivial, T=2 closed form, T>=3 Frank-Wolfe on the
// simplex starting from the best pairwise solution, exact line search per
// step, stop when the norm decrease drops below tol.
SimplexWeights min_norm_solve(const GradientBundle& bundle, double tol = 1e-7,
                              int max_iter = 250);

// L_joint = sum_t alpha_t * L_t with alpha treated as constants; no gradient
// flows back into the solver.
ad::Var compose_joint_loss(const SimplexWeights& weights, const std::vector<ad::Var>& losses);

// CSV dump of the iteration trace: step, alpha_0..alpha_{T-1}, achieved_norm.
void write_solver_trace(std::ostream& os, const SimplexWeights& weights);

}  // namespace vqp::mgda
