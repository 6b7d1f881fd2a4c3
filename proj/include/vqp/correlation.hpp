#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

namespace vqp::corr {

// Average ranks (1-based); tied values share the mean of their rank span.
std::vector<double> ranks(const std::vector<double>& v);

// Undefined correlations (constant inputs, degenerate tie structure) are
// reported as missing rather than 0 so that downstream medians skip them.
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);
std::optional<double> srcc(const std::vector<double>& pred, const std::vector<double>& labels);
std::optional<double> krcc(const std::vector<double>& pred, const std::vector<double>& labels);

// q(s) = b1*(1/2 - 1/(1+exp(b2*(s-b3)))) + b4, fitted by Nelder-Mead on
// squared error. Initialization is data-driven (moments of pred, range of
// labels), which makes the whole fit equivariant under affine rescaling of
// the raw predictions. Non-finite objectives fall back to a linear map.
struct LogisticFit {
  std::array<double, 4> beta{0.0, 0.0, 0.0, 0.0};
  std::vector<double> mapped;
  bool fallback_linear = false;
};
LogisticFit logistic_fit(const std::vector<double>& pred, const std::vector<double>& labels);

double logistic_apply(const std::array<double, 4>& beta, double s);

struct PlccRmse {
  std::optional<double> plcc;
  double rmse = 0.0;
};
PlccRmse plcc_rmse(const std::vector<double>& mapped, const std::vector<double>& labels);

// SRCC/KRCC on raw predictions; PLCC/RMSE after the logistic mapping.
struct CorrelationReport {
  std::optional<double> srcc;
  std::optional<double> krcc;
  std::optional<double> plcc;
  std::optional<double> rmse;
  std::array<double, 4> logistic_params{0.0, 0.0, 0.0, 0.0};
  bool logistic_fallback = false;
  size_t n = 0;
};

CorrelationReport evaluate_predictions(const std::vector<double>& pred,
                                       const std::vector<double>& labels);

// Median over the defined entries; missing when none are defined.
std::optional<double> median_defined(const std::vector<std::optional<double>>& values);

}  // namespace vqp::corr
