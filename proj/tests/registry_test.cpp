#include "podchain/registry.hpp"

#include <gtest/gtest.h>

namespace podchain {
namespace {

// Brute-force oracle: simulate token accrual tick by tick.
TEST(TokenBucket, MatchesTickOracle) {
  TokenBucket tb(20, 1000, 20);  // 20 per 1000 units, burst 20
  double tokens = 20;
  SimTime now = 0;
  for (int i = 0; i < 100; ++i) {
    SimTime grant = tb.grant(now);
    // oracle: advance until one token is available
    SimTime t = now;
    while (tokens < 1.0) {
      t += 1;
      tokens += 20.0 / 1000.0;
    }
    tokens -= 1.0;
    EXPECT_LE(std::abs(static_cast<double>(grant - t)), 1.0) << "call " << i;
    now = grant;  // issue the next request when this one was granted
    // keep oracle clock aligned
    while (t < now) {
      t += 1;
      tokens = std::min(20.0, tokens + 20.0 / 1000.0);
    }
  }
}

TEST(TokenBucket, BurstThenSpacing) {
  TokenBucket tb(20, 1000, 20);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(tb.grant(0), 0) << i;  // burst
  SimTime g1 = tb.grant(0);
  SimTime g2 = tb.grant(g1);
  EXPECT_NEAR(static_cast<double>(g1), 50.0, 1.0);
  EXPECT_NEAR(static_cast<double>(g2 - g1), 50.0, 1.0);
}

TEST(TokenBucket, UnlimitedWhenRateZero) {
  TokenBucket tb(0, 1000, 0);
  EXPECT_TRUE(tb.unlimited());
  EXPECT_EQ(tb.grant(42), 42);
}

TEST(Registry, CallDoneChargesLatencyAndSerialization) {
  RegistryParams p;
  p.call_latency = 20;
  p.ser_units_per_kib = 1;
  Registry r(p);
  ControllerId c{ControllerKind::ReplicaSet, 0};
  SimTime done = r.call_done(c, 0, 17 * 1024);
  EXPECT_EQ(done, 20 + 17);  // burst grant at t=0, then latency + ser
}

TEST(Registry, PublishWithdrawAndTerminatedSet) {
  Registry r;
  PodRecord rec{5, 1, 2, Phase::Running, {0, 1}, false, false};
  r.publish(rec);
  EXPECT_EQ(r.published_count(1), 1u);
  EXPECT_FALSE(r.was_terminated(5));
  r.withdraw(5);
  EXPECT_EQ(r.published_count(1), 0u);
  EXPECT_TRUE(r.was_terminated(5));
}

TEST(Registry, PublishedOnFiltersByNode) {
  Registry r;
  r.publish(PodRecord{1, 0, 1, Phase::Running, {}, false, false});
  r.publish(PodRecord{2, 0, 2, Phase::Running, {}, false, false});
  r.publish(PodRecord{3, 0, 1, Phase::Running, {}, false, false});
  auto on1 = r.published_on(1);
  EXPECT_EQ(on1.size(), 2u);
  EXPECT_TRUE(on1.count(1));
  EXPECT_TRUE(on1.count(3));
}

TEST(Registry, NodeValidityMarks) {
  Registry r;
  r.register_node(3);
  EXPECT_TRUE(r.node_valid(3));
  r.set_node_valid(3, false);
  EXPECT_FALSE(r.node_valid(3));
  r.set_node_valid(3, true);
  EXPECT_TRUE(r.node_valid(3));
}

}  // namespace
}  // namespace podchain
