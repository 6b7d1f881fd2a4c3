#include "vqp/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "vqp/rng.hpp"
#include "vqp/util.hpp"

namespace vqp::proto {

namespace {

std::vector<double> labels_of(const std::vector<regress::FeatureVector>& data) {
  std::vector<double> y;
  y.reserve(data.size());
  for (const auto& f : data) {
    if (!f.label) throw std::invalid_argument("protocol input contains unlabeled clips");
    y.push_back(*f.label);
  }
  return y;
}

std::vector<int> distinct_contents(const std::vector<regress::FeatureVector>& data) {
  std::vector<int> c;
  for (const auto& f : data) c.push_back(f.content_id);
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

corr::CorrelationReport median_report(const std::vector<RunResult>& runs) {
  std::vector<std::optional<double>> s, k, p, r;
  for (const auto& run : runs) {
    s.push_back(run.report.srcc);
    k.push_back(run.report.krcc);
    p.push_back(run.report.plcc);
    r.push_back(run.report.rmse);
  }
  corr::CorrelationReport med;
  med.srcc = corr::median_defined(s);
  med.krcc = corr::median_defined(k);
  med.plcc = corr::median_defined(p);
  med.rmse = corr::median_defined(r);
  med.n = runs.size();
  return med;
}

}  // namespace

bool content_disjoint(const SplitPlan& plan) {
  std::set<int> train(plan.train_contents.begin(), plan.train_contents.end());
  for (int c : plan.test_contents)
    if (train.count(c)) return false;
  return true;
}

RegressorKind parse_regressor(const std::string& name) {
  if (name == "ridge") return RegressorKind::Ridge;
  if (name == "svr") return RegressorKind::Svr;
  throw std::invalid_argument("unknown regressor '" + name + "' (expected ridge|svr)");
}

ProtocolSummary standard_split_protocol(const std::vector<regress::FeatureVector>& data,
                                        int n_runs, uint64_t seed, int threads) {
  labels_of(data);  // validates labels present
  if (n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
  std::vector<int> contents = distinct_contents(data);
  if (contents.size() < 5) {
    throw std::invalid_argument("standard protocol needs at least 5 distinct contents, got " +
                                std::to_string(contents.size()));
  }

  ProtocolSummary sum;
  sum.runs.resize(n_runs);
  sum.plans.resize(n_runs);
  std::vector<char> reduced(n_runs, 0);

  parallel_for(static_cast<size_t>(n_runs), threads, [&](size_t r) {
    std::vector<int> order = contents;
    Rng rng = Rng::stream(seed, Rng::tag("split"), static_cast<uint64_t>(r));
    rng.shuffle(order);
    size_t n_train = static_cast<size_t>(
        std::lround(0.8 * static_cast<double>(order.size())));
    n_train = std::clamp<size_t>(n_train, 1, order.size() - 1);

    SplitPlan plan;
    plan.run_id = static_cast<int>(r);
    plan.train_contents.assign(order.begin(), order.begin() + static_cast<long>(n_train));
    plan.test_contents.assign(order.begin() + static_cast<long>(n_train), order.end());
    std::set<int> train_set(plan.train_contents.begin(), plan.train_contents.end());
    for (size_t i = 0; i < data.size(); ++i) {
      if (train_set.count(data[i].content_id)) {
        plan.train_idx.push_back(i);
      } else {
        plan.test_idx.push_back(i);
      }
    }

    std::vector<regress::FeatureVector> train;
    for (size_t i : plan.train_idx) train.push_back(data[i]);
    uint64_t cv_seed = Rng::stream(seed, Rng::tag("cvseed"), static_cast<uint64_t>(r)).next_u64();
    regress::GridSearchResult gs = regress::grid_search_cv(train, {}, {}, cv_seed);
    reduced[r] = gs.reduced_folds ? 1 : 0;

    std::vector<double> pred, truth;
    for (size_t i : plan.test_idx) {
      pred.push_back(gs.model.predict(data[i].values));
      truth.push_back(*data[i].label);
    }

    RunResult run;
    run.run_id = static_cast<int>(r);
    run.c = gs.c;
    run.gamma = gs.gamma;
    run.report = corr::evaluate_predictions(pred, truth);
    run.pred = std::move(pred);
    run.truth = std::move(truth);
    sum.runs[r] = std::move(run);
    sum.plans[r] = std::move(plan);
  });

  for (char f : reduced) sum.any_reduced_folds = sum.any_reduced_folds || f;
  sum.median = median_report(sum.runs);
  return sum;
}

ProtocolSummary few_shot_protocol(const std::vector<regress::FeatureVector>& data, int k,
                                  RegressorKind kind, int n_samplings, uint64_t seed,
                                  int threads, double ridge_lambda) {
  labels_of(data);
  if (n_samplings < 1) throw std::invalid_argument("n_samplings must be >= 1");
  if (k < 2) throw std::invalid_argument("few-shot K must be >= 2");
  if (static_cast<size_t>(k) >= data.size()) {
    throw std::invalid_argument("few-shot K must be smaller than the dataset (" +
                                std::to_string(k) + " vs " + std::to_string(data.size()) + ")");
  }

  ProtocolSummary sum;
  sum.runs.resize(n_samplings);
  sum.plans.resize(n_samplings);

  parallel_for(static_cast<size_t>(n_samplings), threads, [&](size_t r) {
    std::vector<size_t> order(data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = Rng::stream(seed, Rng::tag("fewshot"), static_cast<uint64_t>(r));
    rng.shuffle(order);

    SplitPlan plan;
    plan.run_id = static_cast<int>(r);
    plan.train_idx.assign(order.begin(), order.begin() + k);
    plan.test_idx.assign(order.begin() + k, order.end());
    for (size_t i : plan.train_idx) plan.train_contents.push_back(data[i].content_id);
    for (size_t i : plan.test_idx) plan.test_contents.push_back(data[i].content_id);

    std::vector<std::vector<double>> xt;
    std::vector<double> yt;
    for (size_t i : plan.train_idx) {
      xt.push_back(data[i].values);
      yt.push_back(*data[i].label);
    }

    std::vector<double> pred, truth;
    RunResult run;
    run.run_id = static_cast<int>(r);
    if (kind == RegressorKind::Ridge) {
      regress::RidgeModel mdl = regress::ridge_fit(xt, yt, ridge_lambda);
      for (size_t i : plan.test_idx) pred.push_back(mdl.predict(data[i].values));
    } else {
      double gamma = regress::scale_gamma(xt);
      regress::SvrModel mdl = regress::svr_fit(xt, yt, 1.0, gamma,
                                               regress::default_epsilon(yt));
      run.c = mdl.C;
      run.gamma = gamma;
      for (size_t i : plan.test_idx) pred.push_back(mdl.predict(data[i].values));
    }
    for (size_t i : plan.test_idx) truth.push_back(*data[i].label);
    run.report = corr::evaluate_predictions(pred, truth);
    run.pred = std::move(pred);
    run.truth = std::move(truth);
    sum.runs[r] = std::move(run);
    sum.plans[r] = std::move(plan);
  });

  sum.median = median_report(sum.runs);
  return sum;
}

ZeroShotResult zero_shot_protocol(const std::vector<regress::FeatureVector>& source,
                                  const std::vector<regress::FeatureVector>& target,
                                  uint64_t seed, int epochs) {
  std::vector<double> ys = labels_of(source);
  std::vector<double> yt = labels_of(target);
  if (source.size() < 2) throw std::invalid_argument("zero-shot source too small");
  if (target.size() < 3) throw std::invalid_argument("zero-shot target too small");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  const size_t d = source.front().values.size();
  for (const auto& f : target) {
    if (f.values.size() != d) {
      throw std::invalid_argument("zero-shot feature dimension mismatch between domains");
    }
  }

  ZeroShotResult res;
  std::vector<std::vector<double>> xs;
  for (const auto& f : source) xs.push_back(f.values);
  res.stz = regress::Standardizer::fit(xs);
  std::vector<std::vector<double>> zs(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) zs[i] = res.stz.apply(xs[i]);

  res.head = nn::HeadParams::init(static_cast<int>(d), 32,
                                  Rng::stream(seed, Rng::tag("zshead")).next_u64());
  auto params = res.head.named();
  std::vector<std::vector<double>> velocity;
  for (auto& [name, v] : params) velocity.emplace_back(v->size(), 0.0);

  constexpr int kBatch = 20;
  constexpr double kLr = 0.01, kMomentum = 0.9;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::vector<size_t> order(zs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = Rng::stream(seed, Rng::tag("zs_shuffle"), static_cast<uint64_t>(epoch));
    rng.shuffle(order);
    for (size_t start = 0; start < order.size(); start += kBatch) {
      size_t end = std::min(order.size(), start + kBatch);
      std::vector<ad::Var> preds;
      std::vector<double> targets;
      for (size_t k = start; k < end; ++k) {
        ad::Var z = ad::make_const({static_cast<int>(d)}, zs[order[k]]);
        preds.push_back(nn::head_forward(res.head, z));
        targets.push_back(ys[order[k]]);
      }
      ad::Var loss = nn::task_loss(preds, targets);
      if (!std::isfinite(loss->scalar())) continue;
      ad::backward(loss);
      for (size_t p = 0; p < params.size(); ++p) {
        auto& var = params[p].second;
        for (size_t j = 0; j < var->size(); ++j) {
          velocity[p][j] = kMomentum * velocity[p][j] + var->grad[j];
          var->val[j] -= kLr * velocity[p][j];
        }
      }
    }
  }

  res.target_pred.reserve(target.size());
  for (const auto& f : target) {
    res.target_pred.push_back(nn::head_predict(res.head, res.stz.apply(f.values)));
  }
  res.report = corr::evaluate_predictions(res.target_pred, yt);
  return res;
}

}  // namespace vqp::proto
