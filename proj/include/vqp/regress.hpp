#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vqp::regress {

// One pooled clip embedding with provenance needed for content-disjoint CV.
struct FeatureVector {
  int clip_id = 0;
  int content_id = 0;
  std::vector<double> values;
  std::optional<double> label;
};

// Per-feature (x - mean) / std; constant features map to 0 (scale 1).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const std::vector<std::vector<double>>& x);
  std::vector<double> apply(const std::vector<double>& x) const;
};

struct RidgeModel {
  Standardizer stz;
  std::vector<double> weights;  // on standardized features
  double intercept = 0.0;
  double lambda = 1.0;
  bool constant_labels = false;

  double predict(const std::vector<double>& x) const;
};

// min |Zw - yc|^2 + lambda |w|^2 on standardized Z, centered y; solved by a
// Cholesky factorization of the (SPD) normal equations.
RidgeModel ridge_fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                     double lambda);

struct SvrModel {
  Standardizer stz;
  std::vector<std::vector<double>> support;  // standardized support vectors
  std::vector<double> dual_coef;             // alpha_i - alpha_i^*, in [-C, C]
  double bias = 0.0;
  double gamma = 1.0;
  double epsilon = 0.1;
  double C = 1.0;
  bool converged = true;
  double kkt_residual = 0.0;    // m - M at exit; <= tol when converged
  double dual_objective = 0.0;  // maximized dual value

  double predict(const std::vector<double>& x) const;
};

// epsilon-insensitive SVR with RBF kernel k(a,b) = exp(-gamma |a-b|^2),
// solved by sequential maximal-violating-pair updates on the 2n-variable
// dual. Stops at KKT gap <= tol; hitting the iteration cap returns the best
// iterate with converged=false.
SvrModel svr_fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                 double C, double gamma, double epsilon, double tol = 1e-3,
                 long long max_iter = 200000);

double default_epsilon(const std::vector<double>& labels);  // 0.1 * std(labels)
double scale_gamma(const std::vector<std::vector<double>>& x);  // 1 / (D * var)
std::vector<double> default_c_grid();
std::vector<double> default_gamma_grid(const std::vector<std::vector<double>>& x);

struct GridCell {
  double c = 0.0;
  double gamma = 0.0;
  std::optional<double> mean_srcc;  // over folds with a defined validation SRCC
};

struct GridSearchResult {
  double c = 1.0;
  double gamma = 1.0;
  double epsilon = 0.1;
  SvrModel model;  // refit on the full training split
  std::optional<double> best_mean_srcc;
  int folds = 5;
  bool reduced_folds = false;
  std::vector<GridCell> table;
};

// 5-fold content-disjoint CV maximizing mean validation SRCC; ties go to the
// smaller C, then the smaller gamma. Fewer than 5 distinct contents reduce
// the fold count (flagged). Fold assignment is a pure function of the
// distinct content ids and the seed.
GridSearchResult grid_search_cv(const std::vector<FeatureVector>& data,
                                std::vector<double> c_grid = {},
                                std::vector<double> gamma_grid = {}, uint64_t seed = 0);

}  // namespace vqp::regress
