#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "vqp/protocols.hpp"
#include "vqp/rng.hpp"

using namespace vqp;

namespace {

std::vector<regress::FeatureVector> planted(uint64_t seed, int contents, int per_content,
                                            double noise = 0.05, int first_content = 0) {
  Rng rng(seed);
  std::vector<regress::FeatureVector> out;
  int id = 0;
  for (int c = 0; c < contents; ++c) {
    for (int k = 0; k < per_content; ++k) {
      double q = rng.uniform(1.0, 5.0);
      regress::FeatureVector f;
      f.clip_id = id++;
      f.content_id = first_content + c;
      f.values = {q + noise * rng.normal(), rng.normal(), 0.3 * q + noise * rng.normal()};
      f.label = q;
      out.push_back(f);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("standard split plans are content-disjoint 80/20 partitions") {
  auto data = planted(601, 10, 3);
  auto sum = proto::standard_split_protocol(data, 12, 42);
  REQUIRE(sum.plans.size() == 12);
  REQUIRE(sum.runs.size() == 12);
  for (const auto& plan : sum.plans) {
    CHECK(proto::content_disjoint(plan));
    CHECK(plan.train_contents.size() == 8);  // round(0.8 * 10)
    CHECK(plan.test_contents.size() == 2);
    CHECK(plan.train_idx.size() + plan.test_idx.size() == data.size());
    std::set<size_t> seen(plan.train_idx.begin(), plan.train_idx.end());
    for (size_t i : plan.test_idx) CHECK_FALSE(seen.count(i));
    // index sides agree with the content split
    for (size_t i : plan.train_idx) {
      bool in_train = std::find(plan.train_contents.begin(), plan.train_contents.end(),
                                data[i].content_id) != plan.train_contents.end();
      CHECK(in_train);
    }
  }
  // different runs draw different splits
  CHECK(sum.plans[0].test_contents != sum.plans[1].test_contents);
}

TEST_CASE("standard split recovers the planted signal") {
  auto data = planted(603, 10, 3, 0.02);
  auto sum = proto::standard_split_protocol(data, 10, 7);
  REQUIRE(sum.median.srcc.has_value());
  CHECK(*sum.median.srcc >= 0.95);
  REQUIRE(sum.median.plcc.has_value());
  CHECK(*sum.median.plcc >= 0.9);
}

TEST_CASE("standard split is deterministic and thread-count invariant") {
  auto data = planted(605, 8, 3);
  auto a = proto::standard_split_protocol(data, 6, 99, 1);
  auto b = proto::standard_split_protocol(data, 6, 99, 1);
  auto c = proto::standard_split_protocol(data, 6, 99, 4);
  REQUIRE(a.runs.size() == b.runs.size());
  for (size_t r = 0; r < a.runs.size(); ++r) {
    CHECK(a.runs[r].pred == b.runs[r].pred);
    CHECK(a.runs[r].pred == c.runs[r].pred);
    CHECK(a.runs[r].c == c.runs[r].c);
    CHECK(a.runs[r].gamma == c.runs[r].gamma);
    CHECK(a.plans[r].test_contents == c.plans[r].test_contents);
  }
  CHECK(*a.median.srcc == *c.median.srcc);
}

TEST_CASE("single-run median equals that run") {
  auto data = planted(607, 6, 3);
  auto sum = proto::standard_split_protocol(data, 1, 5);
  REQUIRE(sum.runs.size() == 1);
  CHECK(sum.median.srcc == sum.runs[0].report.srcc);
  CHECK(sum.median.rmse == sum.runs[0].report.rmse);
}

TEST_CASE("median aggregation is order-independent over runs") {
  auto data = planted(609, 8, 3);
  auto sum = proto::standard_split_protocol(data, 9, 3);
  std::vector<std::optional<double>> vals;
  for (const auto& run : sum.runs) vals.push_back(run.report.srcc);
  auto direct = corr::median_defined(vals);
  std::reverse(vals.begin(), vals.end());
  auto reversed = corr::median_defined(vals);
  Rng rng(1);
  rng.shuffle(vals);
  auto shuffled = corr::median_defined(vals);
  CHECK(direct == sum.median.srcc);
  CHECK(reversed == direct);
  CHECK(shuffled == direct);
}

TEST_CASE("standard split validates inputs") {
  auto four = planted(611, 4, 3);
  CHECK_THROWS_AS(proto::standard_split_protocol(four, 5, 0), std::invalid_argument);
  auto data = planted(613, 6, 3);
  CHECK_THROWS_AS(proto::standard_split_protocol(data, 0, 0), std::invalid_argument);
  data[2].label.reset();
  CHECK_THROWS_AS(proto::standard_split_protocol(data, 5, 0), std::invalid_argument);
}

TEST_CASE("five contents force reduced CV folds but still run") {
  auto data = planted(615, 5, 4);
  auto sum = proto::standard_split_protocol(data, 4, 11);
  CHECK(sum.any_reduced_folds);  // 4 train contents < 5 folds
  REQUIRE(sum.median.srcc.has_value());
}

TEST_CASE("few-shot ridge recovers a planted signal at K=50") {
  auto data = planted(617, 20, 3, 0.02);  // 60 clips
  auto sum = proto::few_shot_protocol(data, 50, proto::RegressorKind::Ridge, 20, 21);
  REQUIRE(sum.median.srcc.has_value());
  CHECK(*sum.median.srcc >= 0.9);
  for (const auto& plan : sum.plans) {
    CHECK(plan.train_idx.size() == 50);
    CHECK(plan.test_idx.size() == 10);
  }
}

TEST_CASE("few-shot svr path fills the hyperparameter columns") {
  auto data = planted(619, 10, 3, 0.05);
  auto sum = proto::few_shot_protocol(data, 10, proto::RegressorKind::Svr, 5, 23);
  for (const auto& run : sum.runs) {
    CHECK(run.c == 1.0);  // fixed C for small-K adaptation
    CHECK(run.gamma > 0.0);
  }
  REQUIRE(sum.median.srcc.has_value());
}

TEST_CASE("few-shot medians skip samplings with undefined metrics") {
  // Half the dataset shares one label: some 2-shot draws are constant-label
  // and yield no defined PLCC; the median must come from the defined rest.
  std::vector<regress::FeatureVector> data;
  Rng rng(621);
  for (int i = 0; i < 12; ++i) {
    regress::FeatureVector f;
    f.clip_id = i;
    f.content_id = i;
    f.values = {static_cast<double>(i) + 0.01 * rng.normal()};
    f.label = (i < 6) ? 2.0 : 2.0 + static_cast<double>(i - 5);
    data.push_back(f);
  }
  auto sum = proto::few_shot_protocol(data, 2, proto::RegressorKind::Ridge, 40, 25);
  size_t defined = 0;
  for (const auto& run : sum.runs) defined += run.report.srcc.has_value() ? 1 : 0;
  CHECK(defined < sum.runs.size());  // some draws degenerate
  CHECK(defined > 0);
  CHECK(sum.median.srcc.has_value());
}

TEST_CASE("few-shot respects K bounds and determinism") {
  auto data = planted(623, 8, 2);
  CHECK_THROWS_AS(proto::few_shot_protocol(data, 1, proto::RegressorKind::Ridge, 3, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(proto::few_shot_protocol(data, 16, proto::RegressorKind::Ridge, 3, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(proto::few_shot_protocol(data, 10, proto::RegressorKind::Ridge, 0, 0),
                  std::invalid_argument);
  auto a = proto::few_shot_protocol(data, 15, proto::RegressorKind::Ridge, 6, 31);
  auto b = proto::few_shot_protocol(data, 15, proto::RegressorKind::Ridge, 6, 31);
  auto c = proto::few_shot_protocol(data, 15, proto::RegressorKind::Ridge, 6, 31, 4);
  for (size_t r = 0; r < a.runs.size(); ++r) {
    CHECK(a.runs[r].pred == b.runs[r].pred);
    CHECK(a.runs[r].pred == c.runs[r].pred);
  }
}

TEST_CASE("parse_regressor") {
  CHECK(proto::parse_regressor("ridge") == proto::RegressorKind::Ridge);
  CHECK(proto::parse_regressor("svr") == proto::RegressorKind::Svr);
  CHECK_THROWS_AS(proto::parse_regressor("mlp"), std::invalid_argument);
}

TEST_CASE("zero-shot head transfers without touching target labels") {
  auto source = planted(625, 12, 3, 0.02);
  auto target = planted(627, 8, 3, 0.02, 100);
  auto res = proto::zero_shot_protocol(source, target, 77);
  CHECK(res.report.n == target.size());
  REQUIRE(res.report.srcc.has_value());
  CHECK(*res.report.srcc > 0.8);  // same generator; only the draw differs
  CHECK(res.target_pred.size() == target.size());
  // deterministic
  auto res2 = proto::zero_shot_protocol(source, target, 77);
  CHECK(res.target_pred == res2.target_pred);
}

TEST_CASE("zero-shot on the source itself stays strong") {
  // The SGD head is no interpolator, but when target == source there is no
  // domain gap at all and the transfer should rank clips nearly perfectly.
  auto data = planted(629, 10, 3, 0.02);
  auto zs = proto::zero_shot_protocol(data, data, 5);
  REQUIRE(zs.report.srcc.has_value());
  CHECK(*zs.report.srcc > 0.9);
  CHECK(zs.report.n == data.size());
}

TEST_CASE("zero-shot with zero epochs is well-formed") {
  auto source = planted(631, 6, 2);
  auto target = planted(633, 6, 2, 0.05, 50);
  auto res = proto::zero_shot_protocol(source, target, 9, 0);
  CHECK(res.report.n == target.size());
  CHECK(res.target_pred.size() == target.size());
  for (double p : res.target_pred) CHECK(std::isfinite(p));
}

TEST_CASE("zero-shot validates dimensions and sizes") {
  auto source = planted(635, 6, 2);
  auto target = planted(637, 6, 2, 0.05, 50);
  for (auto& f : target) f.values.pop_back();
  CHECK_THROWS_AS(proto::zero_shot_protocol(source, target, 0), std::invalid_argument);
  auto tiny = planted(639, 1, 1);
  CHECK_THROWS_AS(proto::zero_shot_protocol(tiny, source, 0), std::invalid_argument);
  auto two = planted(641, 2, 1);
  CHECK_THROWS_AS(proto::zero_shot_protocol(source, two, 0), std::invalid_argument);
  CHECK_THROWS_AS(proto::zero_shot_protocol(source, source, 0, -1), std::invalid_argument);
}
