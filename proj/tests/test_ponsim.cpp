#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "sflpon/orchestrator.hpp"
#include "sflpon/ponsim.hpp"

namespace sflpon {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(Propagation, DistanceOverVelocity) {
  NetworkConfig cfg;
  Topology topo;
  EXPECT_NEAR(propagation_delay(topo, cfg), 1.0e-4, 1e-18);
  topo.distance_km = 0.0;
  EXPECT_EQ(propagation_delay(topo, cfg), 0.0);
  topo.distance_km = 40.0;
  EXPECT_NEAR(propagation_delay(topo, cfg), 2.0e-4, 1e-18);
}

TEST(SampleLatencies, TrainingTimeEndpointsAndMidpoint) {
  NetworkConfig cfg;
  std::vector<SelectedClient> sel{{{1, 1}, 20}, {{1, 2}, 200}, {{1, 3}, 110}};
  Rng rng(1);
  const auto lat = sample_latencies(sel, 20, 200, cfg, rng);
  ASSERT_EQ(lat.size(), 3u);
  EXPECT_DOUBLE_EQ(lat[0].t_train, 3.0);
  EXPECT_DOUBLE_EQ(lat[1].t_train, 20.0);
  EXPECT_DOUBLE_EQ(lat[2].t_train, 11.5);
  EXPECT_DOUBLE_EQ(training_time(50, 50, 50, cfg), 11.5);
  for (const auto& l : lat) {
    EXPECT_GE(l.t_wireless, 1.0);
    EXPECT_LE(l.t_wireless, 5.0);
  }
}

TEST(SampleLatencies, WirelessMeanMonteCarlo) {
  NetworkConfig cfg;
  std::vector<SelectedClient> sel;
  for (int i = 0; i < 100'000; ++i) sel.push_back({{i / 20 + 1, i % 20 + 1}, 10});
  Rng rng(7);
  const auto lat = sample_latencies(sel, 1, 100, cfg, rng);
  double sum = 0.0;
  for (const auto& l : lat) sum += l.t_wireless;
  EXPECT_NEAR(sum / static_cast<double>(lat.size()), 3.0, 0.05);
}

TEST(SampleLatencies, OrderOfSelectionDoesNotMatter) {
  NetworkConfig cfg;
  std::vector<SelectedClient> a{{{2, 1}, 30}, {{1, 5}, 40}, {{1, 1}, 50}};
  std::vector<SelectedClient> b{{{1, 1}, 50}, {{2, 1}, 30}, {{1, 5}, 40}};
  Rng ra(5);
  Rng rb(5);
  const auto la = sample_latencies(a, 20, 200, cfg, ra);
  const auto lb = sample_latencies(b, 20, 200, cfg, rb);
  for (std::size_t i = 0; i < la.size(); ++i) {
    EXPECT_EQ(la[i].id, lb[i].id);
    EXPECT_EQ(la[i].t_wireless, lb[i].t_wireless);
  }
}

TEST(Classical, SingleClientArithmetic) {
  NetworkConfig cfg;
  Topology topo;
  std::vector<ClientLatency> lat{{{1, 1}, 3.0, 1.0}};
  const auto out = simulate_upstream_classical(lat, cfg, topo);
  ASSERT_EQ(out.clients.size(), 1u);
  EXPECT_NEAR(out.clients[0].completion_s, 6.26426, 1e-9);
  EXPECT_NEAR(out.clients[0].timing.total(), 6.26426, 1e-9);
  EXPECT_NEAR(out.clients[0].timing.t_pon, 0.26426, 1e-9);
  EXPECT_EQ(out.involved.size(), 1u);
  EXPECT_EQ(out.upstream_bits, 26.416e6);
}

TEST(Classical, SerialDrainExcludesTail) {
  // 128 clients hypothetically ready at t=0: 128 * 0.26416 s = 33.8 s of
  // serial transmission, so only the first floor((25-1e-4)/0.26416) finish.
  NetworkConfig cfg;
  cfg.t_download_s = 0.0;
  Topology topo;
  std::vector<ClientLatency> lat;
  for (int i = 0; i < 128; ++i) lat.push_back({{i / 8 + 1, i % 8 + 1}, 0.0, 0.0});
  const auto out = simulate_upstream_classical(lat, cfg, topo);
  const int expected = static_cast<int>(std::floor((25.0 - 1e-4) / 0.26416));
  EXPECT_EQ(static_cast<int>(out.involved.size()), expected);
  EXPECT_LT(out.involved.size(), 128u);
  EXPECT_NEAR(out.grants.back().end_s, 128 * 0.26416, 1e-9);
  // Ties in readiness go in client-id order.
  EXPECT_EQ(out.involved.front(), (ClientId{1, 1}));
}

TEST(Classical, UpstreamBitsScaleWithN) {
  NetworkConfig cfg;
  Topology topo;
  std::vector<ClientLatency> lat;
  for (int i = 0; i < 48; ++i) lat.push_back({{i % 16 + 1, i / 16 + 1}, 5.0, 2.0});
  EXPECT_EQ(simulate_upstream_classical(lat, cfg, topo).upstream_bits, 48 * 26.416e6);
}

TEST(Sfl, SingleClientArithmetic) {
  NetworkConfig cfg;
  Topology topo;
  std::vector<ClientLatency> lat{{{4, 2}, 3.0, 1.0}};
  const auto out = simulate_upstream_sfl(lat, cfg, topo);
  EXPECT_NEAR(out.clients[0].completion_s, 6.36426, 1e-9);
  EXPECT_NEAR(out.clients[0].timing.total(), 6.36426, 1e-9);
  ASSERT_EQ(out.onus.size(), 1u);
  EXPECT_EQ(out.onus[0].onu, 4);
}

TEST(Sfl, SixteenOnusGiveConstantUpstream) {
  NetworkConfig cfg;
  Topology topo;
  for (int per_onu : {1, 2, 3, 8}) {
    std::vector<ClientLatency> lat;
    for (int onu = 1; onu <= 16; ++onu) {
      for (int j = 1; j <= per_onu; ++j) lat.push_back({{onu, j}, 3.0 + j, 1.5});
    }
    EXPECT_EQ(simulate_upstream_sfl(lat, cfg, topo).upstream_bits, 422.656e6);
  }
}

TEST(Sfl, OneClientPerOnuMatchesClassicalBits) {
  NetworkConfig cfg;
  Topology topo;
  std::vector<ClientLatency> lat;
  for (int onu = 1; onu <= 16; ++onu) lat.push_back({{onu, 1}, 4.0, 2.0});
  EXPECT_EQ(simulate_upstream_sfl(lat, cfg, topo).upstream_bits,
            simulate_upstream_classical(lat, cfg, topo).upstream_bits);
}

TEST(Sfl, ClientsOfOneOnuShareCompletion) {
  NetworkConfig cfg;
  cfg.onu_wait_policy = OnuWaitPolicy::All;
  Topology topo;
  std::vector<ClientLatency> lat{{{1, 1}, 3.0, 1.0}, {{1, 2}, 10.0, 2.0}, {{2, 1}, 5.0, 1.0}};
  const auto out = simulate_upstream_sfl(lat, cfg, topo);
  EXPECT_EQ(out.clients[0].completion_s, out.clients[1].completion_s);
  // ONU 1 ready at 2 + 12 + 0.1
  EXPECT_NEAR(out.onus[0].ready_s, 14.1, 1e-12);
  EXPECT_NEAR(out.clients[0].completion_s, 14.1 + 0.26416 + 1e-4, 1e-9);
  for (const auto& c : out.clients) EXPECT_NEAR(c.timing.total(), c.completion_s, 1e-9);
}

TEST(Sfl, CutoffDropsLateClientsButKeepsEarliest) {
  NetworkConfig cfg;  // cutoff 20 s
  Topology topo;
  // arrivals: 2+3+1 = 6, 2+17+4 = 23 (late), and ONU 2 only has a late one
  std::vector<ClientLatency> lat{{{1, 1}, 3.0, 1.0}, {{1, 2}, 17.0, 4.0}, {{2, 1}, 18.0, 2.5}};
  const auto out = simulate_upstream_sfl(lat, cfg, topo);
  EXPECT_TRUE(out.clients[0].delivered);
  EXPECT_FALSE(out.clients[1].delivered);
  EXPECT_TRUE(std::isinf(out.clients[1].completion_s));
  EXPECT_TRUE(out.clients[2].delivered);
  EXPECT_EQ(out.onus.size(), 2u);
  EXPECT_EQ(out.upstream_bits, 2 * 26.416e6);
  EXPECT_EQ(out.involved, (std::vector<ClientId>{{1, 1}, {2, 1}}));

  cfg.onu_wait_policy = OnuWaitPolicy::All;
  const auto all = simulate_upstream_sfl(lat, cfg, topo);
  EXPECT_TRUE(all.clients[1].delivered);
  EXPECT_EQ(all.involved.size(), 3u);
}

TEST(Sfl, InfiniteThresholdWaitsForEveryone) {
  NetworkConfig cfg;
  cfg.sync_threshold_s = kInf;
  Topology topo;
  std::vector<ClientLatency> lat{{{1, 1}, 3.0, 1.0}, {{1, 2}, 20.0, 5.0}};
  EXPECT_EQ(simulate_upstream_sfl(lat, cfg, topo).involved.size(), 2u);
}

TEST(Upstream, EmptySelectionRejected) {
  NetworkConfig cfg;
  Topology topo;
  std::vector<ClientLatency> none;
  EXPECT_THROW(simulate_upstream_classical(none, cfg, topo), Error);
  EXPECT_THROW(simulate_upstream_sfl(none, cfg, topo), Error);
}

std::vector<ClientLatency> random_round(std::uint64_t seed, int n, const Topology& topo, const NetworkConfig& cfg,
                                        SelectionPolicy policy = SelectionPolicy::Uniform) {
  Rng rng(seed);
  std::vector<SelectedClient> sel;
  std::uniform_int_distribution<int> k(20, 200);
  for (const auto& id : select_clients(rng, n, topo, policy)) sel.push_back({id, k(rng)});
  return sample_latencies(sel, 20, 200, cfg, rng);
}

// Property: the slice is a serial server; grants never overlap and every
// grant lasts exactly model_bits / rate.
TEST(UpstreamProperty, SerialConservation) {
  NetworkConfig cfg;
  Topology topo;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto lat = random_round(seed, 16 + static_cast<int>(seed) * 2, topo, cfg);
    for (const auto& out : {simulate_upstream_classical(lat, cfg, topo), simulate_upstream_sfl(lat, cfg, topo)}) {
      double busy = 0.0;
      for (std::size_t i = 0; i < out.grants.size(); ++i) {
        EXPECT_NEAR(out.grants[i].end_s - out.grants[i].start_s, cfg.transmit_time_s(), 1e-12);
        busy += out.grants[i].end_s - out.grants[i].start_s;
        if (i > 0) {
          EXPECT_GE(out.grants[i].start_s, out.grants[i - 1].end_s);
        }
      }
      EXPECT_NEAR(busy, static_cast<double>(out.grants.size()) * cfg.transmit_time_s(), 1e-9);
      for (const auto& c : out.clients) EXPECT_GE(c.completion_s, c.ready_s);
    }
  }
}

TEST(UpstreamProperty, RaisingThresholdNeverShrinksInvolvedSet) {
  Topology topo;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    NetworkConfig cfg;
    const auto lat = random_round(seed, 96, topo, cfg);
    std::size_t prev_classical = 0;
    std::size_t prev_sfl = 0;
    for (double th : {10.0, 15.0, 20.0, 25.0, 30.0, 60.0}) {
      cfg.sync_threshold_s = th;
      const auto c = simulate_upstream_classical(lat, cfg, topo).involved;
      const auto s = simulate_upstream_sfl(lat, cfg, topo).involved;
      EXPECT_GE(c.size(), prev_classical);
      EXPECT_GE(s.size(), prev_sfl);
      prev_classical = c.size();
      prev_sfl = s.size();
    }
  }
}

TEST(UpstreamProperty, SflBitsIndependentOfN) {
  NetworkConfig cfg;
  Topology topo;
  for (int n : {32, 48, 64, 128}) {
    const auto lat = random_round(static_cast<std::uint64_t>(n), n, topo, cfg, SelectionPolicy::OnuBalanced);
    EXPECT_EQ(simulate_upstream_sfl(lat, cfg, topo).upstream_bits, 16 * cfg.model_bits);
    EXPECT_EQ(simulate_upstream_classical(lat, cfg, topo).upstream_bits, n * cfg.model_bits);
  }
}

TEST(UpstreamProperty, Deterministic) {
  NetworkConfig cfg;
  Topology topo;
  const auto a = simulate_upstream_sfl(random_round(3, 64, topo, cfg), cfg, topo);
  const auto b = simulate_upstream_sfl(random_round(3, 64, topo, cfg), cfg, topo);
  ASSERT_EQ(a.clients.size(), b.clients.size());
  for (std::size_t i = 0; i < a.clients.size(); ++i) EXPECT_EQ(a.clients[i].completion_s, b.clients[i].completion_s);
  EXPECT_EQ(a.involved, b.involved);
}

TEST(FilterStragglers, BoundaryIsInclusive) {
  struct C {
    ClientId id;
    double completion_s;
  };
  std::vector<C> cs{{{1, 1}, 25.0}, {{1, 2}, 25.000001}, {{1, 3}, 3.0}};
  EXPECT_EQ(filter_stragglers(cs, 25.0), (std::vector<ClientId>{{1, 1}, {1, 3}}));
  std::vector<C> none;
  EXPECT_TRUE(filter_stragglers(none, 25.0).empty());
}

TEST(BandwidthSaving, FractionOfSavedUploads) {
  EXPECT_NEAR(round_bandwidth_saving(16, 48, 26.416e6), 0.667, 0.001);
  EXPECT_NEAR(round_bandwidth_saving(16, 128, 26.416e6), 0.875, 1e-12);
  EXPECT_EQ(round_bandwidth_saving(16, 16, 26.416e6), 0.0);
  EXPECT_THROW(round_bandwidth_saving(16, 8, 26.416e6), Error);
  EXPECT_THROW(round_bandwidth_saving(0, 8, 26.416e6), Error);
}

TEST(NetworkConfig, DefaultsAndValidation) {
  NetworkConfig cfg;
  EXPECT_EQ(cfg.slice_rate_bps, 1e8);
  EXPECT_EQ(cfg.model_bits, 26.416e6);
  EXPECT_EQ(cfg.sync_threshold_s, 25.0);
  EXPECT_NO_THROW(cfg.validate());
  cfg.t_train_max_s = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = NetworkConfig{};
  cfg.slice_rate_bps = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = NetworkConfig{};
  cfg.sync_threshold_s = kInf;
  EXPECT_NO_THROW(cfg.validate());
}

}  // namespace
}  // namespace sflpon
