#include "podchain/controllers.hpp"

#include <gtest/gtest.h>

#include "podchain/scenario.hpp"
#include "podchain/sim.hpp"

namespace podchain {
namespace {

TEST(Autoscaler, LevelTriggeredPendingSends) {
  AutoscalerState as;
  as.metric_desired[0] = 5;
  auto p = as.pending_sends();
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0], (std::pair<FunctionId, std::uint32_t>{0, 5}));
  as.last_sent[0] = 5;
  EXPECT_TRUE(as.pending_sends().empty());  // no change, no send
  as.metric_desired[0] = 7;
  EXPECT_EQ(as.pending_sends().size(), 1u);
}

TEST(Deployment, PassThroughForwarding) {
  DeploymentState dp;
  dp.desired[2] = 5;
  auto p = dp.pending_sends();
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].second, 5u);
  dp.forwarded[2] = 5;
  EXPECT_TRUE(dp.pending_sends().empty());
}

TEST(ReplicaSet, LiveCountSkipsInvalidAndTerminating) {
  ReplicaSetState rs;
  rs.pods[1] = {1, 0, std::nullopt, Phase::Pending, {}, false, false};
  rs.pods[2] = {2, 0, std::nullopt, Phase::Running, {}, false, false};
  rs.pods[3] = {3, 0, std::nullopt, Phase::Terminating, {}, false, false};
  rs.pods[4] = {4, 0, std::nullopt, Phase::Pending, {}, false, true};  // invalid
  rs.pods[5] = {5, 1, std::nullopt, Phase::Pending, {}, false, false};
  EXPECT_EQ(rs.live_count(0), 2u);
  EXPECT_EQ(rs.live_count(1), 1u);
}

TEST(ReplicaSet, DownscaleVictimsNewestFirst) {
  ReplicaSetState rs;
  for (PodId id : {3, 9, 5, 7})
    rs.pods[id] = {id, 0, std::nullopt, Phase::Running, {}, false, false};
  auto v = rs.downscale_victims(0, 2);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0], 9u);
  EXPECT_EQ(v[1], 7u);
}

// Brute-force least-loaded oracle over a placement sequence: at each step
// pick the node with the most free believed capacity, lowest id on ties.
TEST(Scheduler, LeastLoadedMatchesBruteForce) {
  SchedulerState s;
  s.nodes[1] = {1, 2, true};
  s.nodes[2] = {2, 2, true};
  std::set<NodeId> reachable{1, 2};
  std::vector<NodeId> got;
  for (PodId id = 1; id <= 3; ++id) {
    auto n = least_loaded_policy(s, reachable);
    ASSERT_TRUE(n.has_value());
    got.push_back(*n);
    s.pods[id] = {id, 0, *n, Phase::Pending, {}, false, false};
  }
  // oracle: loads (0,0) -> tie -> n1; (1,0) -> n2; (1,1) -> tie -> n1
  EXPECT_EQ(got, (std::vector<NodeId>{1, 2, 1}));
  std::map<NodeId, int> load;
  for (auto n : got) load[n]++;
  EXPECT_EQ(load[1], 2);
  EXPECT_EQ(load[2], 1);
}

TEST(Scheduler, NoFeasibleNodeWhenAllFull) {
  SchedulerState s;
  s.nodes[1] = {1, 1, true};
  s.pods[1] = {1, 0, 1, Phase::Running, {}, false, false};
  EXPECT_FALSE(least_loaded_policy(s, {1}).has_value());
}

TEST(Scheduler, UnreachableNodesExcluded) {
  SchedulerState s;
  s.nodes[1] = {1, 4, true};
  s.nodes[2] = {2, 4, true};
  auto n = least_loaded_policy(s, {2});  // node 1 unreachable
  ASSERT_TRUE(n.has_value());
  EXPECT_EQ(*n, 2u);
}

TEST(Scheduler, InvalidNodesExcluded) {
  SchedulerState s;
  s.nodes[1] = {1, 4, false};
  s.nodes[2] = {2, 4, true};
  auto n = least_loaded_policy(s, {1, 2});
  ASSERT_TRUE(n.has_value());
  EXPECT_EQ(*n, 2u);
}

TEST(Scheduler, DeterministicForSameState) {
  SchedulerState a, b;
  for (auto* s : {&a, &b}) {
    s->nodes[1] = {1, 3, true};
    s->nodes[2] = {2, 3, true};
    s->pods[1] = {1, 0, 1, Phase::Running, {}, false, false};
  }
  EXPECT_EQ(least_loaded_policy(a, {1, 2}), least_loaded_policy(b, {1, 2}));
}

TEST(Kubelet, OccupancyAndPublishOrder) {
  KubeletState kl;
  kl.node = 1;
  kl.capacity = 8;
  kl.pods[4] = {4, 0, 1, Phase::Running, {}, false, false};
  kl.pods[2] = {2, 0, 1, Phase::Running, {}, false, false};
  kl.pods[3] = {3, 0, 1, Phase::Pending, {}, false, false};
  kl.ready_at[4] = 0;
  kl.ready_at[2] = 0;
  EXPECT_EQ(kl.occupancy(), 3u);
  auto p = kl.next_publishable(5);
  ASSERT_TRUE(p.has_value());
  EXPECT_EQ(*p, 2u);  // lowest ready id first
  kl.published.insert(2);
  p = kl.next_publishable(5);
  ASSERT_TRUE(p.has_value());
  EXPECT_EQ(*p, 4u);
}

// Level-trigger property at the chain level: a whole run with one unchanged
// command sends exactly one scale message, and a repeated run is identical.
TEST(Autoscaler, LevelTriggerSendsOnce) {
  Scenario sc;
  sc.num_nodes = 1;
  sc.proc_cost = 0;
  sc.commands.push_back({0, 3, 0});
  Simulation sim(sc);
  sim.run();
  auto msgs = sim.metrics().msgs;
  Simulation sim2(sc);
  sim2.run();
  EXPECT_EQ(msgs, sim2.metrics().msgs);
  EXPECT_EQ(msgs["as-dp/fwd"], 1u);
  EXPECT_EQ(msgs["dp-rs/fwd"], 1u);
}

}  // namespace
}  // namespace podchain
