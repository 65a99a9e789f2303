#include "podchain/link.hpp"

#include <gtest/gtest.h>

#include <queue>
#include <random>

namespace podchain {
namespace {

std::vector<std::uint8_t> payload(std::uint8_t b) { return {b}; }

TEST(Link, DeliversAfterLatency) {
  Link l("t", 3);
  ASSERT_EQ(l.send(Direction::Forward, payload(1), 10, 1), SendResult::Accepted);
  EXPECT_TRUE(l.deliver_due(12).empty());
  auto got = l.deliver_due(13);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].payload, payload(1));
}

TEST(Link, NotConnectedRejects) {
  Link l("t", 1);
  l.set_connected(false);
  EXPECT_EQ(l.send(Direction::Forward, payload(1), 0, 1),
            SendResult::NotConnected);
}

TEST(Link, DisconnectDropsEverythingInFlight) {
  Link l("t", 1);
  for (int i = 0; i < 1000; ++i)
    ASSERT_EQ(l.send(Direction::Forward, payload(static_cast<std::uint8_t>(i)),
                     0, static_cast<std::uint64_t>(i)),
              SendResult::Accepted);
  l.set_connected(false);
  l.set_connected(true);
  l.clear_latch();
  EXPECT_TRUE(l.deliver_due(100).empty());
}

TEST(Link, PerDirectionFifo) {
  Link l("t", 1);
  for (std::uint8_t i = 0; i < 10; ++i)
    l.send(Direction::Forward, payload(i), 0, i);
  auto got = l.deliver_due(5);
  ASSERT_EQ(got.size(), 10u);
  for (std::uint8_t i = 0; i < 10; ++i) EXPECT_EQ(got[i].payload, payload(i));
}

TEST(Link, PartialDeliveryByDueTime) {
  Link l("t", 5);
  l.send(Direction::Forward, payload(1), 0, 1);   // due 5
  l.send(Direction::Forward, payload(2), 2, 2);   // due 7
  auto got = l.deliver_due(6);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].payload, payload(1));
  got = l.deliver_due(7);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].payload, payload(2));
}

TEST(Link, ReconnectSetsLatch) {
  Link l("t", 1);
  EXPECT_FALSE(l.latched());
  l.set_connected(false);
  l.set_connected(true);
  EXPECT_TRUE(l.latched());
  // application traffic is rejected until the handshake completes
  EXPECT_EQ(l.send(Direction::Forward, payload(1), 0, 1),
            SendResult::NotConnected);
  // handshake frames bypass the latch
  EXPECT_EQ(l.send(Direction::Backward, payload(2), 0, 2, /*control=*/true),
            SendResult::Accepted);
  l.clear_latch();
  EXPECT_EQ(l.send(Direction::Forward, payload(3), 0, 3), SendResult::Accepted);
}

// Reference oracle: with a fixed per-link latency, delivery order must match
// a priority queue over (due, seq) with both directions interleaved.
TEST(Link, MatchesPriorityQueueOracle) {
  std::mt19937_64 rng(7);
  Link l("t", 3);
  struct Item {
    SimTime due;
    std::uint64_t seq;
    Direction dir;
    std::vector<std::uint8_t> p;
  };
  auto cmp = [](const Item& a, const Item& b) {
    if (a.due != b.due) return a.due > b.due;
    return a.seq > b.seq;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(cmp)> oracle(cmp);
  SimTime now = 0;
  std::uint64_t seq = 0;
  for (int i = 0; i < 500; ++i) {
    now += static_cast<SimTime>(rng() % 3);
    Direction d = rng() % 2 ? Direction::Forward : Direction::Backward;
    auto p = payload(static_cast<std::uint8_t>(i));
    ++seq;
    ASSERT_EQ(l.send(d, p, now, seq), SendResult::Accepted);
    oracle.push(Item{now + l.latency(), seq, d, p});
  }
  auto got = l.deliver_due(now + 10);
  ASSERT_EQ(got.size(), 500u);
  for (const auto& g : got) {
    ASSERT_FALSE(oracle.empty());
    Item expect = oracle.top();
    oracle.pop();
    EXPECT_EQ(g.dir, expect.dir);
    EXPECT_EQ(g.payload, expect.p);
  }
}

TEST(Link, NoDeliveryAfterDisconnectEver) {
  Link l("t", 10);
  l.send(Direction::Forward, payload(1), 0, 1);
  l.set_connected(false);
  EXPECT_TRUE(l.deliver_due(100).empty());
  l.set_connected(true);
  EXPECT_TRUE(l.deliver_due(200).empty());
}

}  // namespace
}  // namespace podchain
