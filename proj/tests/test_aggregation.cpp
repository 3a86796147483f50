#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sflpon/aggregation.hpp"

namespace sflpon {
namespace {

using testing::exact_fedavg;
using testing::random_updates;
using testing::Rational;
using testing::relative_linf;

std::vector<double> to_vec(const ModelParams& p) { return {p.weights().begin(), p.weights().end()}; }

TEST(OnuAggregate, SingleUnitWeightClientIsIdentity) {
  std::vector<ClientUpdate> u{ClientUpdate({3, 1}, ModelParams({0.5, -0.5}), 1)};
  const auto agg = onu_aggregate(u);
  EXPECT_EQ(to_vec(agg.theta()), (std::vector<double>{0.5, -0.5}));
  EXPECT_EQ(agg.k_total(), 1);
  EXPECT_EQ(agg.client_count(), 1);
  EXPECT_EQ(agg.onu_index(), 3);
}

TEST(OnuAggregate, WeightedSumNotMean) {
  std::vector<ClientUpdate> u{ClientUpdate({1, 1}, ModelParams({1.0, 0.0}), 2),
                              ClientUpdate({1, 2}, ModelParams({0.0, 3.0}), 1)};
  const auto agg = onu_aggregate(u);
  EXPECT_EQ(to_vec(agg.theta()), (std::vector<double>{2.0, 3.0}));
  EXPECT_EQ(agg.k_total(), 3);
  EXPECT_EQ(agg.client_count(), 2);
}

TEST(OnuAggregate, Errors) {
  std::vector<ClientUpdate> none;
  try {
    onu_aggregate(none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }

  std::vector<ClientUpdate> mixed{ClientUpdate({1, 1}, ModelParams({1.0}), 1),
                                  ClientUpdate({2, 1}, ModelParams({1.0}), 1)};
  try {
    onu_aggregate(mixed);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MixedOnu);
  }

  std::vector<ClientUpdate> dims{ClientUpdate({1, 1}, ModelParams({1.0}), 1),
                                 ClientUpdate({1, 2}, ModelParams({1.0, 2.0}), 1)};
  try {
    onu_aggregate(dims);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(CpsTwoStep, DividesSummedThetaByTotalSamples) {
  std::vector<OnuAggregate> aggs{OnuAggregate(1, ModelParams({2.0, 3.0}), 3, 2)};
  const auto g = cps_aggregate_two_step(aggs, 7);
  EXPECT_DOUBLE_EQ(g.params[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(g.params[1], 1.0);
  EXPECT_EQ(g.k_total, 3);
  EXPECT_EQ(g.round, 8);
}

TEST(CpsTwoStep, IdenticalClientModelsReproduceThatModel) {
  const ModelParams w({0.25, -1.5, 4.0});
  std::vector<ClientUpdate> u;
  for (int onu = 1; onu <= 4; ++onu) {
    for (int j = 1; j <= 3; ++j) u.emplace_back(ClientId{onu, j}, w, 1 + onu * j);
  }
  const auto g = cps_aggregate_two_step(aggregate_per_onu(u), 0);
  for (std::size_t d = 0; d < w.dim(); ++d) EXPECT_NEAR(g.params[d], w[d], 1e-15);
}

TEST(CpsTwoStep, DimensionMismatch) {
  std::vector<OnuAggregate> aggs{OnuAggregate(1, ModelParams::zeros(4), 1, 1),
                                 OnuAggregate(2, ModelParams::zeros(8), 1, 1)};
  try {
    cps_aggregate_two_step(aggs, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  std::vector<OnuAggregate> none;
  EXPECT_THROW(cps_aggregate_two_step(none, 0), Error);
}

TEST(CpsOneStep, EqualWeightMean) {
  std::vector<ClientUpdate> u{ClientUpdate({1, 1}, ModelParams({0.0, 2.0}), 1),
                              ClientUpdate({2, 1}, ModelParams({2.0, 0.0}), 1)};
  const auto g = cps_aggregate_one_step(u, 0);
  EXPECT_EQ(to_vec(g.params), (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(g.round, 1);
}

TEST(CpsOneStep, SingleClientReturnsItsModel) {
  const ModelParams w({0.1, 0.7, -0.3});
  std::vector<ClientUpdate> u{ClientUpdate({5, 9}, w, 37)};
  const auto g = cps_aggregate_one_step(u, 0);
  EXPECT_EQ(g.params, w);
  EXPECT_EQ(g.k_total, 37);
}

TEST(CpsOneStep, Errors) {
  std::vector<ClientUpdate> none;
  EXPECT_THROW(cps_aggregate_one_step(none, 0), Error);
  std::vector<ClientUpdate> dims{ClientUpdate({1, 1}, ModelParams::zeros(4), 1),
                                 ClientUpdate({1, 2}, ModelParams::zeros(8), 1)};
  EXPECT_THROW(cps_aggregate_one_step(dims, 0), Error);
}

// Property: two-step and one-step agree for any grouping of the updates.
TEST(AggregationProperty, TwoStepMatchesOneStep) {
  std::mt19937_64 rng(20240611);
  for (int i = 0; i < 300; ++i) {
    const auto updates = random_updates(rng, 256, 1024, 10'000);
    const auto one = cps_aggregate_one_step(updates, 0);
    const auto two = cps_aggregate_two_step(aggregate_per_onu(updates), 0);
    ASSERT_LE(relative_linf(two.params.weights(), one.params.weights()), 1e-9) << "case " << i;
    ASSERT_EQ(one.k_total, two.k_total);
  }
}

// Property: exact rational weighted mean lies in the per-coordinate hull and
// both floating-point routes round to it closely.
TEST(AggregationProperty, ExactRationalOracleAndConvexHull) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 200; ++i) {
    const auto updates = random_updates(rng, 8, 4, 10'000, 3);
    const auto exact = exact_fedavg(updates);
    const auto one = cps_aggregate_one_step(updates, 0);
    const auto two = cps_aggregate_two_step(aggregate_per_onu(updates), 0);
    for (std::size_t d = 0; d < exact.size(); ++d) {
      Rational lo(updates.front().params()[d]);
      Rational hi = lo;
      for (const auto& u : updates) {
        lo = std::min(lo, Rational(u.params()[d]));
        hi = std::max(hi, Rational(u.params()[d]));
      }
      ASSERT_TRUE(lo <= exact[d] && exact[d] <= hi);
      const double ref = static_cast<double>(exact[d]);
      const double tol = 1e-12 * std::max(1.0, std::abs(ref));
      ASSERT_NEAR(one.params[d], ref, tol);
      ASSERT_NEAR(two.params[d], ref, tol);
    }
  }
}

// Property: canonical ordering makes the result bit-identical under any
// permutation of the inputs.
TEST(AggregationProperty, PermutationInvariant) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    auto updates = random_updates(rng, 64, 64, 1000);
    const auto one = cps_aggregate_one_step(updates, 0);
    const auto two = cps_aggregate_two_step(aggregate_per_onu(updates), 0);
    std::shuffle(updates.begin(), updates.end(), rng);
    EXPECT_EQ(cps_aggregate_one_step(updates, 0).params, one.params);
    EXPECT_EQ(cps_aggregate_two_step(aggregate_per_onu(updates), 0).params, two.params);
  }
}

}  // namespace
}  // namespace sflpon
