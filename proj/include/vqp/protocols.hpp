#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vqp/correlation.hpp"
#include "vqp/nn.hpp"
#include "vqp/regress.hpp"

namespace vqp::proto {

struct SplitPlan {
  int run_id = 0;
  std::vector<size_t> train_idx;  // indices into the feature list
  std::vector<size_t> test_idx;
  std::vector<int> train_contents;
  std::vector<int> test_contents;
};

// Certificate: no content id on both sides.
bool content_disjoint(const SplitPlan& plan);

struct RunResult {
  int run_id = 0;
  corr::CorrelationReport report;
  double c = 0.0;      // selected SVR hyperparameters where applicable
  double gamma = 0.0;
  std::vector<double> pred;   // test-side predictions, plan order
  std::vector<double> truth;  // matching labels
};

struct ProtocolSummary {
  // Per-metric medians over runs with a defined value; n = run count.
  corr::CorrelationReport median;
  std::vector<RunResult> runs;
  std::vector<SplitPlan> plans;
  bool any_reduced_folds = false;
};

// 80/20 content-disjoint splits (by content count, rounded); per run a
// grid-search-CV SVR is fitted on the train side and scored on the test side.
// Requires >= 5 distinct contents.
ProtocolSummary standard_split_protocol(const std::vector<regress::FeatureVector>& data,
                                        int n_runs, uint64_t seed, int threads = 1);

enum class RegressorKind { Ridge, Svr };
RegressorKind parse_regressor(const std::string& name);

// Random K-clip samplings (no content constraint: adaptation draws K labeled
// clips wherever they fall); Ridge uses a fixed lambda, SVR fixed C=1 with
// the scale heuristic for gamma - K is too small for nested CV.
ProtocolSummary few_shot_protocol(const std::vector<regress::FeatureVector>& data, int k,
                                  RegressorKind kind, int n_samplings, uint64_t seed,
                                  int threads = 1, double ridge_lambda = 1.0);

struct ZeroShotResult {
  corr::CorrelationReport report;
  nn::HeadParams head;          // head trained on source labels, then frozen
  regress::Standardizer stz;    // source feature statistics
  std::vector<double> target_pred;
};

// Trains a small MLP head on source features/labels, freezes it, applies it
// unchanged to the target set. epochs=0 evaluates the untrained head.
ZeroShotResult zero_shot_protocol(const std::vector<regress::FeatureVector>& source,
                                  const std::vector<regress::FeatureVector>& target,
                                  uint64_t seed, int epochs = 30);

}  // namespace vqp::proto
