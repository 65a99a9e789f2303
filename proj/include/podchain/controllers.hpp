#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "podchain/core.hpp"
#include "podchain/wire.hpp"

namespace podchain {

// Shared versioning/session bookkeeping. The harness owns the restart
// counter: epochs survive the controller's own cache wipe.
struct SessionState {
  std::uint32_t epoch = 0;
  std::uint64_t version_counter = 0;

  Version stamp() { return Version{epoch, ++version_counter}; }
  void next_session() {
    ++epoch;
    version_counter = 0;
  }
};

// ---------------------------------------------------------------------------
// Autoscaler: level-triggered. Recomputes desired replicas from the metric
// source every step and sends only on change; `last_sent` is its cached view
// of the downstream value, refreshed by handshakes, never trusted across
// them.
struct AutoscalerState {
  std::map<FunctionId, std::uint32_t> metric_desired;
  std::map<FunctionId, std::uint32_t> last_sent;
  SessionState session;

  std::vector<std::pair<FunctionId, std::uint32_t>> pending_sends() const {
    std::vector<std::pair<FunctionId, std::uint32_t>> out;
    for (const auto& [fn, want] : metric_desired) {
      auto it = last_sent.find(fn);
      if (it == last_sent.end() || it->second != want)
        out.emplace_back(fn, want);
    }
    return out;
  }

  void wipe() {
    metric_desired.clear();
    last_sent.clear();
    session.next_session();
  }
};

// ---------------------------------------------------------------------------
// Deployment controller: pass-through for the single live ReplicaSet of each
// function (no rolling updates here).
struct DeploymentState {
  std::map<FunctionId, std::uint32_t> desired;    // from upstream
  std::map<FunctionId, std::uint32_t> forwarded;  // cached downstream view
  SessionState session;

  std::vector<std::pair<FunctionId, std::uint32_t>> pending_sends() const {
    std::vector<std::pair<FunctionId, std::uint32_t>> out;
    for (const auto& [fn, want] : desired) {
      auto it = forwarded.find(fn);
      if (it == forwarded.end() || it->second != want)
        out.emplace_back(fn, want);
    }
    return out;
  }

  void wipe() {
    desired.clear();
    forwarded.clear();
    session.next_session();
  }
};

// ---------------------------------------------------------------------------
// ReplicaSet controller: owns pod creation. MaxPodId lives in a durable stub
// on the harness, so ids are never reused across its crashes.
struct ReplicaSetState {
  std::map<FunctionId, std::uint32_t> desired;
  std::map<PodId, PodRecord> pods;
  std::map<PodId, Tombstone> tombstones;
  std::set<PodId> forwarded;  // known sent downstream this connection epoch
  std::set<PodId> discarded;  // ids dropped after invalidation; never readmit
  SessionState session;

  bool counted_live(const PodRecord& r) const {
    return !r.invalid && r.phase != Phase::Terminating &&
           r.phase != Phase::Removed;
  }

  std::uint32_t live_count(FunctionId fn) const {
    std::uint32_t n = 0;
    for (const auto& [id, r] : pods)
      if (r.function == fn && counted_live(r)) ++n;
    return n;
  }

  // Newest-first victim selection for downscale.
  std::vector<PodId> downscale_victims(FunctionId fn,
                                       std::uint32_t excess) const {
    std::vector<PodId> live;
    for (const auto& [id, r] : pods)
      if (r.function == fn && counted_live(r)) live.push_back(id);
    std::sort(live.rbegin(), live.rend());
    if (live.size() > excess) live.resize(excess);
    return live;
  }

  void wipe() {
    desired.clear();
    pods.clear();
    tombstones.clear();
    forwarded.clear();
    discarded.clear();
    session.next_session();
  }
};

// ---------------------------------------------------------------------------
// Scheduler

struct NodeView {
  NodeId node = 0;
  std::uint32_t capacity = 0;
  bool valid = true;
};

struct SchedulerState {
  std::map<PodId, PodRecord> pods;  // bound and not-yet-bound pods
  std::map<PodId, Tombstone> tombstones;
  std::map<NodeId, NodeView> nodes;
  std::set<PodId> discarded;
  // synchronous preemption: victim -> the pod whose placement waits on it
  std::map<PodId, PodRecord> parked;
  SessionState session;

  std::uint32_t believed_load(NodeId n) const {
    std::uint32_t k = 0;
    for (const auto& [id, r] : pods)
      if (!r.invalid && r.node && *r.node == n && r.phase != Phase::Removed)
        ++k;
    return k;
  }

  std::vector<PodId> unbound_pods() const {
    std::vector<PodId> out;
    for (const auto& [id, r] : pods)
      if (!r.invalid && !r.node && r.phase == Phase::Pending)
        out.push_back(id);
    return out;
  }

  void wipe() {
    pods.clear();
    tombstones.clear();
    discarded.clear();
    parked.clear();
    session.next_session();
  }
};

// Chooses a node for one pod given the believed loads; returns nothing when
// no feasible node exists. Least-loaded with lowest-id tie break by default.
using PlacementPolicy = std::function<std::optional<NodeId>(
    const SchedulerState&, const std::set<NodeId>& reachable)>;

inline std::optional<NodeId> least_loaded_policy(
    const SchedulerState& s, const std::set<NodeId>& reachable) {
  std::optional<NodeId> best;
  std::uint32_t best_free = 0;
  for (const auto& [n, view] : s.nodes) {
    if (!view.valid || !reachable.count(n)) continue;
    std::uint32_t load = s.believed_load(n);
    if (load >= view.capacity) continue;
    std::uint32_t free = view.capacity - load;
    if (!best || free > best_free) {
      best = n;
      best_free = free;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Kubelet (one per node)

struct KubeletState {
  NodeId node = 0;
  std::uint32_t capacity = 0;
  std::map<PodId, PodRecord> pods;  // admitted, not yet removed
  std::map<PodId, SimTime> ready_at;
  std::set<PodId> published;
  std::set<PodId> publish_inflight;
  // session-scoped: ids this node actively terminated; re-deliveries of
  // these are rejected (no resurrection)
  std::set<PodId> no_resurrect;
  std::map<PodId, Tombstone> pending_tombstones;  // for pods not seen yet
  bool registered = true;
  SessionState session;

  std::uint32_t occupancy() const {
    std::uint32_t n = 0;
    for (const auto& [id, r] : pods)
      if (r.phase != Phase::Removed) ++n;
    return n;
  }

  // Lowest-id ready pod not yet published; publication order is stable.
  std::optional<PodId> next_publishable(SimTime now) const {
    for (const auto& [id, r] : pods) {
      if (r.phase != Phase::Running) continue;
      if (published.count(id) || publish_inflight.count(id)) continue;
      auto it = ready_at.find(id);
      if (it != ready_at.end() && it->second > now) continue;
      return id;
    }
    return std::nullopt;
  }

  void wipe() {
    pods.clear();
    ready_at.clear();
    published.clear();
    publish_inflight.clear();
    no_resurrect.clear();
    pending_tombstones.clear();
    session.next_session();
  }
};

}  // namespace podchain
