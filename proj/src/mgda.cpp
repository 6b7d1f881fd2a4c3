#include "vqp/mgda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vqp/util.hpp"

namespace vqp::mgda {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool all_zero(const std::vector<double>& v) {
  for (double x : v)
    if (x != 0.0) return false;
  return true;
}

// |gamma*v1 + (1-gamma)*v2|^2 minimizer over gamma in [0,1], expressed through
// inner products so it works both on raw vectors and in Gram space.
struct SegmentSolution {
  double gamma;
  double norm_sq;
};

SegmentSolution min_norm_segment(double v1v1, double v1v2, double v2v2) {
  double denom = v1v1 - 2.0 * v1v2 + v2v2;  // |v1 - v2|^2
  double gamma;
  if (denom <= 0.0) {
    gamma = 1.0;  // v1 == v2 up to rounding; first operand wins
  } else {
    gamma = std::clamp((v2v2 - v1v2) / denom, 0.0, 1.0);
  }
  double norm_sq = gamma * gamma * v1v1 + 2.0 * gamma * (1.0 - gamma) * v1v2 +
                   (1.0 - gamma) * (1.0 - gamma) * v2v2;
  return {gamma, std::max(norm_sq, 0.0)};
}

double quad_form(const std::vector<std::vector<double>>& g, const std::vector<double>& a) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double row = 0.0;
    for (size_t j = 0; j < a.size(); ++j) row += g[i][j] * a[j];
    s += a[i] * row;
  }
  return std::max(s, 0.0);
}

}  // namespace

std::vector<std::vector<double>> compute_gram(const std::vector<std::vector<double>>& vectors) {
  size_t t = vectors.size();
  std::vector<std::vector<double>> g(t, std::vector<double>(t, 0.0));
  for (size_t i = 0; i < t; ++i) {
    for (size_t j = i; j < t; ++j) {
      double d = dot(vectors[i], vectors[j]);
      g[i][j] = d;
      g[j][i] = d;
    }
  }
  return g;
}

void fill_gram(GradientBundle& bundle) {
  if (!bundle.gram) bundle.gram = compute_gram(bundle.vectors);
}

SimplexWeights min_norm_pair(const std::vector<double>& g1, const std::vector<double>& g2) {
  if (g1.size() != g2.size()) {
    throw std::invalid_argument("min_norm_pair: gradient lengths differ");
  }
  SimplexWeights w;
  if (all_zero(g1) && all_zero(g2)) {
    w.alpha = {0.5, 0.5};
    w.achieved_norm_sq = 0.0;
    w.degenerate = true;
  } else {
    auto seg = min_norm_segment(dot(g1, g1), dot(g1, g2), dot(g2, g2));
    w.alpha = {seg.gamma, 1.0 - seg.gamma};
    w.achieved_norm_sq = seg.norm_sq;
  }
  w.norm_sq_trace = {w.achieved_norm_sq};
  w.alpha_trace = {w.alpha};
  return w;
}

SimplexWeights min_norm_solve(const GradientBundle& bundle, double tol, int max_iter) {
  const size_t t = bundle.vectors.size();
  if (t == 0) throw std::invalid_argument("min_norm_solve: empty bundle");
  const size_t p = bundle.vectors[0].size();
  for (const auto& v : bundle.vectors) {
    if (v.size() != p) throw std::invalid_argument("min_norm_solve: gradient lengths differ");
  }

  bool zero = true;
  for (const auto& v : bundle.vectors) zero = zero && all_zero(v);
  if (zero) {
    SimplexWeights w;
    w.alpha.assign(t, 1.0 / static_cast<double>(t));
    w.achieved_norm_sq = 0.0;
    w.degenerate = true;
    w.norm_sq_trace = {0.0};
    w.alpha_trace = {w.alpha};
    return w;
  }

  if (t == 1) {
    SimplexWeights w;
    w.alpha = {1.0};
    w.achieved_norm_sq = dot(bundle.vectors[0], bundle.vectors[0]);
    w.norm_sq_trace = {w.achieved_norm_sq};
    w.alpha_trace = {w.alpha};
    return w;
  }
  if (t == 2) return min_norm_pair(bundle.vectors[0], bundle.vectors[1]);

  const auto gram = bundle.gram ? *bundle.gram : compute_gram(bundle.vectors);

  // Initial point: the best of all pairwise closed-form solutions. Cheap in
  // Gram space and usually already close to the optimum, so the Frank-Wolfe
  // loop only has to polish.
  std::vector<double> alpha(t, 0.0);
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < t; ++i) {
    for (size_t j = i + 1; j < t; ++j) {
      auto seg = min_norm_segment(gram[i][i], gram[i][j], gram[j][j]);
      if (seg.norm_sq < best) {
        best = seg.norm_sq;
        std::fill(alpha.begin(), alpha.end(), 0.0);
        alpha[i] = seg.gamma;
        alpha[j] = 1.0 - seg.gamma;
      }
    }
  }

  SimplexWeights w;
  double norm_sq = quad_form(gram, alpha);
  w.norm_sq_trace.push_back(norm_sq);
  w.alpha_trace.push_back(alpha);

  for (int it = 0; it < max_iter; ++it) {
    // Linearized objective: <current point, g_t> = (G alpha)_t; lowest index
    // wins ties so runs are bit-reproducible.
    std::vector<double> ga(t, 0.0);
    for (size_t i = 0; i < t; ++i) {
      double s = 0.0;
      for (size_t j = 0; j < t; ++j) s += gram[i][j] * alpha[j];
      ga[i] = s;
    }
    size_t pick = 0;
    for (size_t i = 1; i < t; ++i)
      if (ga[i] < ga[pick]) pick = i;

    // Exact line search between the current point and vertex g_pick.
    auto seg = min_norm_segment(norm_sq, ga[pick], gram[pick][pick]);
    double next_norm_sq = seg.norm_sq;
    for (size_t i = 0; i < t; ++i) alpha[i] *= seg.gamma;
    alpha[pick] += 1.0 - seg.gamma;
    w.iterations = it + 1;

    double decrease = norm_sq - next_norm_sq;
    norm_sq = std::min(next_norm_sq, norm_sq);  // exact search cannot increase
    w.norm_sq_trace.push_back(norm_sq);
    w.alpha_trace.push_back(alpha);
    if (decrease < tol) break;
  }

  // Rounding in the segment updates can leave the sum a few ulps off 1.
  double sum = 0.0;
  for (double a : alpha) sum += a;
  if (sum > 0.0)
    for (double& a : alpha) a /= sum;

  w.alpha = alpha;
  w.achieved_norm_sq = quad_form(gram, alpha);
  return w;
}

ad::Var compose_joint_loss(const SimplexWeights& weights, const std::vector<ad::Var>& losses) {
  if (weights.alpha.size() != losses.size()) {
    throw std::invalid_argument("compose_joint_loss: weight/loss count mismatch");
  }
  return ad::weighted_sum(losses, weights.alpha);
}

void write_solver_trace(std::ostream& os, const SimplexWeights& weights) {
  os << "step";
  for (size_t i = 0; i < weights.alpha.size(); ++i) os << ",alpha_" << i;
  os << ",achieved_norm\n";
  for (size_t s = 0; s < weights.norm_sq_trace.size(); ++s) {
    os << s;
    for (double a : weights.alpha_trace[s]) os << ',' << fmt_g(a);
    os << ',' << fmt_g(std::sqrt(weights.norm_sq_trace[s])) << '\n';
  }
}

}  // namespace vqp::mgda
