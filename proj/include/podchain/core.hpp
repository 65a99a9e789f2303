#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace podchain {

using PodId = std::uint64_t;       // non-zero within a run
using FunctionId = std::uint32_t;  // one ReplicaSet per function
using NodeId = std::uint32_t;      // 1..num_nodes; 0 never used
using SimTime = std::int64_t;

// ---------------------------------------------------------------------------
// Lifecycle

enum class Phase : std::uint8_t {
  Pending = 0,
  Running = 1,
  Terminating = 2,
  Removed = 3,
};

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Pending: return "Pending";
    case Phase::Running: return "Running";
    case Phase::Terminating: return "Terminating";
    case Phase::Removed: return "Removed";
  }
  return "?";
}

enum class LifecycleEvent : std::uint8_t {
  MarkReady = 0,
  MarkTerminating = 1,
  Remove = 2,
};

struct IllegalTransition : std::logic_error {
  IllegalTransition(Phase from, LifecycleEvent ev)
      : std::logic_error(std::string("illegal lifecycle transition from ") +
                         to_string(from) + " event=" +
                         std::to_string(static_cast<int>(ev))) {}
};

// Pending->Running, Pending->Terminating, Running->Terminating,
// Terminating->Removed. Everything else is a protocol bug upstream.
inline Phase lifecycle_transition(Phase from, LifecycleEvent ev) {
  switch (ev) {
    case LifecycleEvent::MarkReady:
      if (from == Phase::Pending) return Phase::Running;
      break;
    case LifecycleEvent::MarkTerminating:
      if (from == Phase::Pending || from == Phase::Running)
        return Phase::Terminating;
      break;
    case LifecycleEvent::Remove:
      if (from == Phase::Terminating) return Phase::Removed;
      break;
  }
  throw IllegalTransition(from, ev);
}

// True iff `from -> to` is an edge of the lifecycle graph (or a self-loop).
inline bool legal_phase_step(Phase from, Phase to) {
  if (from == to) return true;
  switch (from) {
    case Phase::Pending:
      return to == Phase::Running || to == Phase::Terminating;
    case Phase::Running:
      return to == Phase::Terminating;
    case Phase::Terminating:
      return to == Phase::Removed;
    case Phase::Removed:
      return false;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Versions

// Equality is the only comparison the protocol relies on; the pair just has
// to be unique per pod across a run (session epoch x per-epoch counter).
struct Version {
  std::uint32_t epoch = 0;
  std::uint64_t counter = 0;

  friend bool operator==(const Version&, const Version&) = default;
};

// ---------------------------------------------------------------------------
// Controllers

enum class ControllerKind : std::uint8_t {
  Autoscaler = 0,
  Deployment = 1,
  ReplicaSet = 2,
  Scheduler = 3,
  Kubelet = 4,
};

inline const char* to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::Autoscaler: return "autoscaler";
    case ControllerKind::Deployment: return "deployment";
    case ControllerKind::ReplicaSet: return "replicaset";
    case ControllerKind::Scheduler: return "scheduler";
    case ControllerKind::Kubelet: return "kubelet";
  }
  return "?";
}

struct ControllerId {
  ControllerKind kind = ControllerKind::Autoscaler;
  NodeId node = 0;  // only meaningful for kubelets

  friend bool operator==(const ControllerId&, const ControllerId&) = default;
  friend auto operator<=>(const ControllerId&, const ControllerId&) = default;
};

inline std::string to_string(ControllerId id) {
  std::string s = to_string(id.kind);
  if (id.kind == ControllerKind::Kubelet)
    s += ":" + std::to_string(id.node);
  return s;
}

// ---------------------------------------------------------------------------
// Records

struct PodIdMismatch : std::logic_error {
  PodIdMismatch(PodId local, PodId incoming)
      : std::logic_error("merge routed pod " + std::to_string(incoming) +
                         " into cache slot of pod " + std::to_string(local)) {}
};

struct PodRecord {
  PodId pod = 0;
  FunctionId function = 0;
  std::optional<NodeId> node;  // absent until the record passed the Scheduler
  Phase phase = Phase::Pending;
  Version version;
  bool dirty = false;    // overwritten during a reset handshake
  bool invalid = false;  // hidden from control loops, pending upstream ack

  friend bool operator==(const PodRecord&, const PodRecord&) = default;
};

// Incoming attributes win, except that Terminating is irreversible: a merge
// never moves a locally Terminating pod back to Pending/Running.
inline PodRecord merge_record(const std::optional<PodRecord>& local,
                              const PodRecord& incoming) {
  if (!local) return incoming;
  if (local->pod != incoming.pod) throw PodIdMismatch(local->pod, incoming.pod);
  PodRecord out = incoming;
  if (local->phase == Phase::Terminating &&
      (incoming.phase == Phase::Pending || incoming.phase == Phase::Running)) {
    out.phase = Phase::Terminating;
  }
  if (local->phase == Phase::Removed) out.phase = Phase::Removed;
  if (!out.node && local->node) out.node = local->node;
  return out;
}

// ---------------------------------------------------------------------------
// Tombstones & scaling commands

// Best-effort termination marker, scoped to the creating controller's
// current session (dropped when that controller crashes).
struct Tombstone {
  PodId pod = 0;
  ControllerId created_by;
  std::uint32_t session_epoch = 0;

  friend bool operator==(const Tombstone&, const Tombstone&) = default;
};

struct ScalingCommand {
  FunctionId function = 0;
  std::uint32_t desired_replicas = 0;
  SimTime issue_time = 0;
};

}  // namespace podchain
