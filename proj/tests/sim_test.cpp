#include "podchain/sim.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "podchain/scenario.hpp"

namespace podchain {
namespace {

Scenario basic(std::uint32_t nodes, std::uint32_t replicas) {
  Scenario sc;
  sc.num_nodes = nodes;
  sc.node_capacity = 8;
  sc.commands.push_back({0, replicas, 0});
  return sc;
}

void expect_clean_convergence(const RunResult& r, std::uint32_t want,
                              FunctionId fn = 0) {
  for (const auto& v : r.metrics.violations) ADD_FAILURE() << v;
  EXPECT_TRUE(r.metrics.converged);
  EXPECT_TRUE(r.metrics.quiescent);
  EXPECT_EQ(r.metrics.published_per_fn.at(fn), want);
}

TEST(Sim, SimpleScaleOutConverges) {
  RunResult r = run_scenario(basic(2, 3));
  expect_clean_convergence(r, 3);
}

TEST(Sim, DeterministicTracesAndMetrics) {
  Scenario sc = basic(3, 5);
  sc.faults.push_back({40, FaultKind::CrashController,
                       {ControllerKind::Scheduler, 0}, {}, 0, 0});
  RunResult a = run_scenario(sc);
  RunResult b = run_scenario(sc);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.metrics.msgs, b.metrics.msgs);
  EXPECT_EQ(a.metrics.bytes, b.metrics.bytes);
  EXPECT_EQ(a.metrics.end_time, b.metrics.end_time);
}

TEST(Sim, SchedulerCrashMidRunStillConverges) {
  Scenario sc = basic(2, 3);
  sc.faults.push_back({10, FaultKind::CrashController,
                       {ControllerKind::Scheduler, 0}, {}, 0, 0});
  RunResult r = run_scenario(sc);
  expect_clean_convergence(r, 3);
}

TEST(Sim, EveryControllerCrashStillConverges) {
  const ControllerId targets[] = {
      {ControllerKind::Autoscaler, 0}, {ControllerKind::Deployment, 0},
      {ControllerKind::ReplicaSet, 0}, {ControllerKind::Scheduler, 0},
      {ControllerKind::Kubelet, 1},    {ControllerKind::Kubelet, 2},
  };
  for (SimTime at : {5, 20, 60, 120}) {
    for (const auto& t : targets) {
      Scenario sc = basic(2, 4);
      sc.faults.push_back({at, FaultKind::CrashController, t, {}, 0, 0});
      RunResult r = run_scenario(sc);
      for (const auto& v : r.metrics.violations)
        ADD_FAILURE() << to_string(t) << "@" << at << ": " << v;
      EXPECT_TRUE(r.metrics.converged) << to_string(t) << "@" << at;
    }
  }
}

TEST(Sim, DisconnectReconnectEveryLinkStillConverges) {
  const LinkRef links[] = {
      {LinkRef::Which::AsDp, 0},
      {LinkRef::Which::DpRs, 0},
      {LinkRef::Which::RsSched, 0},
      {LinkRef::Which::SchedKlet, 1},
  };
  for (SimTime at : {3, 15, 50}) {
    for (const auto& l : links) {
      Scenario sc = basic(2, 4);
      sc.faults.push_back({at, FaultKind::Disconnect, {}, {l}, 0, 0});
      sc.faults.push_back({at + 30, FaultKind::Reconnect, {}, {l}, 0, 0});
      RunResult r = run_scenario(sc);
      for (const auto& v : r.metrics.violations)
        ADD_FAILURE() << to_string(l) << "@" << at << ": " << v;
      EXPECT_TRUE(r.metrics.converged) << to_string(l) << "@" << at;
    }
  }
}

TEST(Sim, DownscaleTerminatesNewestAndConverges) {
  Scenario sc = basic(2, 5);
  sc.commands.push_back({0, 2, 200});
  RunResult r = run_scenario(sc);
  expect_clean_convergence(r, 2);
  // newest-first victims: survivors are the two oldest pods
  std::vector<PodId> alive;
  Simulation sim(sc);
  RunResult rr = sim.run();
  for (const auto& [id, rec] : sim.registry().published()) alive.push_back(id);
  EXPECT_EQ(alive, (std::vector<PodId>{1, 2}));
}

TEST(Sim, DownscaleToZero) {
  Scenario sc = basic(1, 3);
  sc.commands.push_back({0, 0, 200});
  RunResult r = run_scenario(sc);
  expect_clean_convergence(r, 0);
}

TEST(Sim, MultiFunctionScaling) {
  Scenario sc;
  sc.num_nodes = 4;
  sc.node_capacity = 4;
  sc.commands.push_back({0, 3, 0});
  sc.commands.push_back({1, 4, 5});
  sc.commands.push_back({2, 2, 9});
  RunResult r = run_scenario(sc);
  for (const auto& v : r.metrics.violations) ADD_FAILURE() << v;
  EXPECT_TRUE(r.metrics.converged);
  EXPECT_EQ(r.metrics.published_per_fn.at(0), 3u);
  EXPECT_EQ(r.metrics.published_per_fn.at(1), 4u);
  EXPECT_EQ(r.metrics.published_per_fn.at(2), 2u);
}

TEST(Sim, EvictionRecreatesWithFreshId) {
  Scenario sc = basic(2, 3);
  sc.faults.push_back({100, FaultKind::EvictPod, {}, {}, 1, 1});
  RunResult r = run_scenario(sc);
  expect_clean_convergence(r, 3);
  Simulation sim(sc);
  sim.run();
  EXPECT_FALSE(sim.registry().published().count(1));  // pod 1 never comes back
  EXPECT_TRUE(sim.registry().was_terminated(1));
}

TEST(Sim, EvictUnknownPodIsNoOp) {
  Scenario sc = basic(1, 2);
  sc.faults.push_back({50, FaultKind::EvictPod, {}, {}, 1, 99});
  RunResult r = run_scenario(sc);
  expect_clean_convergence(r, 2);
}

// Anomaly #1 regression: a kubelet evicts a pod while disconnected from the
// scheduler; after reconnection the terminated pod must not be published
// again, and the replacement uses a fresh id.
Scenario anomaly1_script() {
  Scenario sc = basic(1, 2);
  sc.faults.push_back(
      {100, FaultKind::Disconnect, {}, {{LinkRef::Which::SchedKlet, 1}}, 0, 0});
  sc.faults.push_back({110, FaultKind::EvictPod, {}, {}, 1, 1});
  sc.faults.push_back(
      {140, FaultKind::Reconnect, {}, {{LinkRef::Which::SchedKlet, 1}}, 0, 0});
  return sc;
}

TEST(Sim, Anomaly1NoResurrection) {
  RunResult r = run_scenario(anomaly1_script());
  expect_clean_convergence(r, 2);
  Simulation sim(anomaly1_script());
  sim.run();
  EXPECT_FALSE(sim.registry().published().count(1));
  EXPECT_TRUE(sim.registry().published().count(3));  // fresh replacement
}

TEST(Sim, Anomaly1MutationIsCaught) {
  Scenario sc = anomaly1_script();
  sc.mutation_disable_no_resurrect = true;
  RunResult r = run_scenario(sc);
  bool caught = false;
  for (const auto& v : r.metrics.violations)
    if (v.find("no-resurrection") != std::string::npos) caught = true;
  EXPECT_TRUE(caught) << "broken build must fail the anomaly #1 regression";
}

// Anomaly #2 regression: the scheduler crash-restarts while one node is
// partitioned away; a pod running there but unknown to the scheduler must
// not be re-assigned to a different node.
Scenario anomaly2_script() {
  Scenario sc;
  sc.num_nodes = 3;
  sc.node_capacity = 8;
  sc.startup_delay = 50;  // keep pods unpublished while the fault hits
  sc.commands.push_back({0, 3, 0});
  sc.faults.push_back(
      {20, FaultKind::Partition, {}, {{LinkRef::Which::SchedKlet, 3}}, 0, 0});
  sc.faults.push_back(
      {25, FaultKind::CrashController, {ControllerKind::Scheduler, 0}, {}, 0, 0});
  sc.faults.push_back(
      {200, FaultKind::Reconnect, {}, {{LinkRef::Which::SchedKlet, 3}}, 0, 0});
  return sc;
}

TEST(Sim, Anomaly2UniqueBinding) {
  RunResult r = run_scenario(anomaly2_script());
  for (const auto& v : r.metrics.violations) ADD_FAILURE() << v;
  EXPECT_TRUE(r.metrics.converged);
}

TEST(Sim, Anomaly2MutationIsCaught) {
  Scenario sc = anomaly2_script();
  sc.mutation_disable_reset_invalidation = true;
  RunResult r = run_scenario(sc);
  bool caught = false;
  for (const auto& v : r.metrics.violations)
    if (v.find("unique-binding") != std::string::npos) caught = true;
  EXPECT_TRUE(caught) << "broken build must fail the anomaly #2 regression";
}

TEST(Sim, NodeCancellationDrainsAndRejoins) {
  Scenario sc = anomaly2_script();
  Simulation sim(sc);
  sim.run();
  // after the run the partitioned node re-registered empty and valid
  EXPECT_TRUE(sim.registry().node_valid(3));
  EXPECT_TRUE(sim.kubelet(3).pods.empty());
}

TEST(Sim, CancelWithZeroPodsIsNoOp) {
  Scenario sc;
  sc.num_nodes = 2;
  sc.commands.push_back({0, 1, 0});
  // partition a node that never hosts anything, then crash the scheduler
  sc.faults.push_back(
      {40, FaultKind::Partition, {}, {{LinkRef::Which::SchedKlet, 2}}, 0, 0});
  sc.faults.push_back(
      {45, FaultKind::CrashController, {ControllerKind::Scheduler, 0}, {}, 0, 0});
  sc.faults.push_back(
      {120, FaultKind::Reconnect, {}, {{LinkRef::Which::SchedKlet, 2}}, 0, 0});
  RunResult r = run_scenario(sc);
  expect_clean_convergence(r, 1);
}

// Preemption: synchronous termination conditioned on the downstream signal.
TEST(Sim, PreemptionWaitsForKubeletSignal) {
  Scenario sc;
  sc.num_nodes = 1;
  sc.node_capacity = 2;  // the node is full; the slot must be freed
  sc.commands.push_back({0, 2, 0});
  Simulation sim(sc);
  sim.request_preemption(200, 1, 9, 901);
  RunResult r = sim.run();
  for (const auto& v : r.metrics.violations) ADD_FAILURE() << v;
  ASSERT_TRUE(sim.preempt_status(1).has_value());
  EXPECT_EQ(*sim.preempt_status(1), Simulation::PreemptStatus::Placed);
  EXPECT_TRUE(sim.registry().was_terminated(1));
  EXPECT_TRUE(sim.registry().published().count(901));  // hipri pod ran
}

TEST(Sim, PreemptionOfGoneVictimPlacesImmediately) {
  Scenario sc = basic(1, 1);
  Simulation sim(sc);
  sim.request_preemption(0, 77, 9, 901);  // pod 77 never existed
  sim.run();
  ASSERT_TRUE(sim.preempt_status(77).has_value());
  EXPECT_EQ(*sim.preempt_status(77), Simulation::PreemptStatus::Placed);
}

TEST(Sim, PreemptionAcrossDisconnectTimesWaits) {
  Scenario sc;
  sc.num_nodes = 1;
  sc.node_capacity = 2;
  sc.commands.push_back({0, 2, 0});
  sc.faults.push_back(
      {150, FaultKind::Disconnect, {}, {{LinkRef::Which::SchedKlet, 1}}, 0, 0});
  sc.faults.push_back(
      {400, FaultKind::Reconnect, {}, {{LinkRef::Which::SchedKlet, 1}}, 0, 0});
  Simulation sim(sc);
  bool waited = false;
  sim.observer = [&](const Simulation& s, const std::string&) {
    if (s.now() > 200 && s.now() < 400 && s.preempt_status(1) &&
        *s.preempt_status(1) == Simulation::PreemptStatus::TimedWaiting)
      waited = true;
  };
  sim.request_preemption(200, 1, 9, 901);  // link is down at request time
  RunResult r = sim.run();
  for (const auto& v : r.metrics.violations) ADD_FAILURE() << v;
  EXPECT_TRUE(waited);
  ASSERT_TRUE(sim.preempt_status(1).has_value());
  EXPECT_EQ(*sim.preempt_status(1), Simulation::PreemptStatus::Placed);
}

TEST(Sim, ScenarioTextRoundTrip) {
  Scenario sc = anomaly2_script();
  sc.seed = 42;
  std::string text = format_scenario(sc);
  std::istringstream in(text);
  Scenario back = parse_scenario(in);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.num_nodes, sc.num_nodes);
  EXPECT_EQ(back.commands.size(), sc.commands.size());
  EXPECT_EQ(back.faults.size(), sc.faults.size());
  EXPECT_EQ(back.faults[0].kind, FaultKind::Partition);
  EXPECT_EQ(back.faults[1].kind, FaultKind::CrashController);
  EXPECT_EQ(back.faults[1].target,
            (ControllerId{ControllerKind::Scheduler, 0}));
}

TEST(Sim, CentralizedModeConvergesIdentically) {
  Scenario sc = basic(2, 4);
  auto [direct, central] = run_baseline_comparison(sc);
  for (const auto& v : direct.metrics.violations) ADD_FAILURE() << v;
  for (const auto& v : central.metrics.violations) ADD_FAILURE() << v;
  EXPECT_TRUE(direct.metrics.converged);
  EXPECT_TRUE(central.metrics.converged);
  EXPECT_EQ(direct.metrics.published_per_fn, central.metrics.published_per_fn);
}

TEST(Sim, CentralizedChargesFullObjects) {
  Scenario sc = basic(1, 2);
  sc.mode = RunMode::Centralized;
  Simulation sim(sc);
  RunResult r = sim.run();
  EXPECT_TRUE(r.metrics.converged);
  std::uint64_t total_msgs = 0, total_bytes = 0;
  for (const auto& [k, v] : r.metrics.msgs) total_msgs += v;
  for (const auto& [k, v] : r.metrics.bytes) total_bytes += v;
  EXPECT_EQ(total_bytes, total_msgs * 17 * 1024);
}

TEST(Sim, DirectModeMessagesFitPodBudget) {
  Scenario sc = basic(3, 6);
  sc.commands.push_back({0, 2, 300});
  RunResult r = run_scenario(sc);
  expect_clean_convergence(r, 2);
  EXPECT_LE(r.metrics.max_pod_entry_bytes, kPodEntryByteBudget);
}

TEST(Sim, CentralizedRejectsFaultScripts) {
  Scenario sc = basic(1, 1);
  sc.mode = RunMode::Centralized;
  sc.faults.push_back(
      {10, FaultKind::Disconnect, {}, {{LinkRef::Which::DpRs, 0}}, 0, 0});
  EXPECT_THROW(Simulation{sc}, std::invalid_argument);
}

}  // namespace
}  // namespace podchain
