#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "podchain/protocol.hpp"
#include "podchain/sim.hpp"

namespace podchain::model {

// Explicit-state exploration of the chain's abstract transition system at
// tiny constants: one function, one scheduler/kubelet aggregate per stage,
// upscale-only command sequences, crash and disconnect actions, and the
// downstream-first reconnection handshakes.

struct PodNode {
  std::uint64_t pod = 0;
  std::uint32_t node = 0;

  friend bool operator==(const PodNode&, const PodNode&) = default;
  friend auto operator<=>(const PodNode&, const PodNode&) = default;
};

struct BatchMsg {
  std::uint64_t batch_id = 0;
  std::uint32_t batch_size = 0;

  friend bool operator==(const BatchMsg&, const BatchMsg&) = default;
  friend auto operator<=>(const BatchMsg&, const BatchMsg&) = default;
};

struct ModelState {
  std::uint32_t cmd_index = 1;  // 1-based into the command sequence
  std::vector<PodNode> api;     // published pods (sorted set)

  std::vector<std::uint32_t> as_rs_q;  // desired-replicas values in flight
  bool as_rs_conn = true;
  std::vector<BatchMsg> rs_sched_q;
  bool rs_sched_conn = true;
  std::vector<PodNode> sched_klet_q;
  bool sched_klet_conn = true;

  std::uint32_t last_desired = 0;  // autoscaler's view of the downstream
  std::uint32_t desired = 0;       // replicaset controller's target
  std::vector<std::uint64_t> created;  // pod ids (sorted set)
  std::uint64_t max_pod_id = 0;
  std::vector<PodNode> scheduled;  // sorted set
  std::vector<PodNode> running;    // sorted set

  friend bool operator==(const ModelState&, const ModelState&) = default;

  std::string key() const {
    std::ostringstream o;
    o << cmd_index << '|';
    for (auto& p : api) o << p.pod << ':' << p.node << ',';
    o << '|' << as_rs_conn << ':';
    for (auto v : as_rs_q) o << v << ',';
    o << '|' << rs_sched_conn << ':';
    for (auto& b : rs_sched_q) o << b.batch_id << '+' << b.batch_size << ',';
    o << '|' << sched_klet_conn << ':';
    for (auto& p : sched_klet_q) o << p.pod << ':' << p.node << ',';
    o << '|' << last_desired << '|' << desired << '|';
    for (auto c : created) o << c << ',';
    o << '|' << max_pod_id << '|';
    for (auto& p : scheduled) o << p.pod << ':' << p.node << ',';
    o << '|';
    for (auto& p : running) o << p.pod << ':' << p.node << ',';
    return o.str();
  }

  std::string pretty() const {
    std::ostringstream o;
    o << "cmd_index=" << cmd_index << " desired=" << desired
      << " last=" << last_desired << " max_pod=" << max_pod_id;
    o << " created={";
    for (auto c : created) o << c << ' ';
    o << "} scheduled={";
    for (auto& p : scheduled) o << p.pod << '@' << p.node << ' ';
    o << "} running={";
    for (auto& p : running) o << p.pod << '@' << p.node << ' ';
    o << "} api={";
    for (auto& p : api) o << p.pod << '@' << p.node << ' ';
    o << "} conns=" << as_rs_conn << rs_sched_conn << sched_klet_conn;
    o << " q_as={";
    for (auto v : as_rs_q) o << v << ' ';
    o << "} q_rs={";
    for (auto& b : rs_sched_q) o << b.batch_id << '+' << b.batch_size << ' ';
    o << "} q_sk={";
    for (auto& p : sched_klet_q) o << p.pod << '@' << p.node << ' ';
    o << '}';
    return o.str();
  }
};

struct ModelConfig {
  std::uint32_t num_nodes = 1;
  std::vector<std::uint32_t> cmds;  // strictly increasing, nonempty
  bool enable_crashes = false;
  bool enable_disconnects = false;
  std::size_t max_states = 2000000;
  std::size_t max_queue = 8;
};

inline ModelState initial_state(const ModelConfig&) { return ModelState{}; }

// ---------------------------------------------------------------------------
// Canonicalization: pod identities are fungible, so states differing only by
// an order-preserving renaming of live ids (and the matching MaxPodId shift)
// collapse. This keeps crash-and-recreate loops from unboundedly growing the
// state space; batch ranges stay contiguous because ids die only in wholesale
// resets that also clear the queues referencing them.

inline void sort_unique(std::vector<PodNode>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}
inline void sort_unique(std::vector<std::uint64_t>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

inline ModelState canonical(ModelState s) {
  sort_unique(s.api);
  sort_unique(s.created);
  sort_unique(s.scheduled);
  sort_unique(s.running);

  std::set<std::uint64_t> live;
  for (auto c : s.created) live.insert(c);
  for (auto& p : s.api) live.insert(p.pod);
  for (auto& p : s.scheduled) live.insert(p.pod);
  for (auto& p : s.running) live.insert(p.pod);
  for (auto& p : s.sched_klet_q) live.insert(p.pod);
  for (auto& b : s.rs_sched_q)
    for (std::uint64_t i = 1; i <= b.batch_size; ++i) live.insert(b.batch_id + i);

  std::map<std::uint64_t, std::uint64_t> rename;
  std::uint64_t next = 0;
  for (std::uint64_t id : live) rename[id] = ++next;

  auto rn = [&](std::uint64_t id) { return rename.at(id); };
  for (auto& c : s.created) c = rn(c);
  for (auto& p : s.api) p.pod = rn(p.pod);
  for (auto& p : s.scheduled) p.pod = rn(p.pod);
  for (auto& p : s.running) p.pod = rn(p.pod);
  for (auto& p : s.sched_klet_q) p.pod = rn(p.pod);
  for (auto& b : s.rs_sched_q) b.batch_id = rn(b.batch_id + 1) - 1;
  s.max_pod_id = next;

  sort_unique(s.created);
  sort_unique(s.api);
  sort_unique(s.scheduled);
  sort_unique(s.running);
  return s;
}

// ---------------------------------------------------------------------------
// Invariants

inline bool unique_bindings(const std::vector<PodNode>& v) {
  std::map<std::uint64_t, std::uint32_t> seen;
  for (auto& p : v) {
    auto [it, inserted] = seen.emplace(p.pod, p.node);
    if (!inserted && it->second != p.node) return false;
  }
  return true;
}

inline std::uint32_t current_cmd(const ModelState& s, const ModelConfig& cfg) {
  return cfg.cmds.at(s.cmd_index - 1);
}

// Type and uniqueness invariants that must hold in every reachable state.
inline std::optional<std::string> check_invariants(const ModelState& s,
                                                   const ModelConfig& cfg) {
  if (s.cmd_index < 1 || s.cmd_index > cfg.cmds.size()) return "cmd_index range";
  for (auto& p : s.api) {
    if (p.pod == 0) return "api pod id zero";
    if (p.node < 1 || p.node > cfg.num_nodes) return "api node range";
  }
  if (!unique_bindings(s.api)) return "api binding not unique";
  if (!unique_bindings(s.scheduled)) return "SchedPodUnique violated";
  if (!unique_bindings(s.running)) return "KletPodUnique violated";
  if (s.last_desired > current_cmd(s, cfg)) return "last_desired too large";
  if (s.desired > current_cmd(s, cfg)) return "desired too large";
  for (auto c : s.created)
    if (c == 0 || c > s.max_pod_id) return "created outside 1..max_pod_id";
  for (auto& p : s.sched_klet_q)
    if (p.node < 1 || p.node > cfg.num_nodes) return "queued node range";
  if (!s.as_rs_conn && !s.as_rs_q.empty()) return "as-rs queue on dead link";
  if (!s.rs_sched_conn && !s.rs_sched_q.empty()) return "rs-sched queue on dead link";
  if (!s.sched_klet_conn && !s.sched_klet_q.empty())
    return "sched-klet queue on dead link";
  return std::nullopt;
}

// Completeness (published state is known at every stage) holds at quiescent
// cuts, not mid-recovery.
inline std::optional<std::string> check_complete(const ModelState& s) {
  std::set<std::uint64_t> created(s.created.begin(), s.created.end());
  std::set<PodNode> scheduled(s.scheduled.begin(), s.scheduled.end());
  std::set<PodNode> running(s.running.begin(), s.running.end());
  for (auto& p : s.api) {
    if (!created.count(p.pod)) return "RsPodComplete violated";
    if (!scheduled.count(p)) return "SchedPodComplete violated";
    if (!running.count(p)) return "KletPodComplete violated";
  }
  return std::nullopt;
}

inline bool converged(const ModelState& s, const ModelConfig& cfg) {
  return s.api.size() == current_cmd(s, cfg);
}

// ---------------------------------------------------------------------------
// Transition relation

struct Successor {
  std::string action;
  ModelState state;
};

inline void add_succ(std::vector<Successor>& out, const ModelState& from,
                     std::string action, ModelState to) {
  to = canonical(std::move(to));
  if (to == from) return;  // stutters add nothing to the graph
  out.push_back(Successor{std::move(action), std::move(to)});
}

// Every enabled, state-changing action. Fault actions are appended only when
// asked for, so the same function serves full exploration and the fault-free
// convergence closure.
inline std::vector<Successor> next_states(const ModelState& s,
                                          const ModelConfig& cfg,
                                          bool include_faults = true) {
  std::vector<Successor> out;

  // next scaling command becomes current
  if (s.cmd_index < cfg.cmds.size()) {
    ModelState t = s;
    t.cmd_index++;
    add_succ(out, s, "scaling-cmd", std::move(t));
  }

  // autoscaler control loop: level-triggered send on change
  if (s.last_desired != current_cmd(s, cfg) && s.as_rs_conn &&
      s.as_rs_q.size() < cfg.max_queue) {
    ModelState t = s;
    t.as_rs_q.push_back(current_cmd(s, cfg));
    t.last_desired = current_cmd(s, cfg);
    add_succ(out, s, "as-loop", std::move(t));
  }

  // replicaset control loop: receive one command and reconcile the deficit
  // against the pre-receive target in the same action
  {
    ModelState t = s;
    bool changed = false;
    if (!t.as_rs_q.empty()) {
      t.desired = t.as_rs_q.front();
      t.as_rs_q.erase(t.as_rs_q.begin());
      changed = true;
    }
    if (s.desired > s.created.size()) {
      std::uint32_t deficit =
          s.desired - static_cast<std::uint32_t>(s.created.size());
      BatchMsg b{s.max_pod_id, deficit};
      for (std::uint64_t i = 1; i <= deficit; ++i)
        t.created.push_back(b.batch_id + i);
      t.max_pod_id += deficit;
      if (t.rs_sched_conn && t.rs_sched_q.size() < cfg.max_queue)
        t.rs_sched_q.push_back(b);
      changed = true;
    }
    if (changed) add_succ(out, s, "rs-loop", std::move(t));
  }

  // scheduler control loop: take one batch, bind every pod in it; the node
  // choice is enumerated per pod (the implementation's policy is one of them)
  if (!s.rs_sched_q.empty()) {
    BatchMsg b = s.rs_sched_q.front();
    std::vector<std::vector<std::uint32_t>> assignments;
    std::vector<std::uint32_t> cur(b.batch_size, 1);
    while (true) {
      assignments.push_back(cur);
      std::size_t i = 0;
      for (; i < cur.size(); ++i) {
        if (cur[i] < cfg.num_nodes) {
          cur[i]++;
          std::fill(cur.begin(), cur.begin() + static_cast<long>(i), 1);
          break;
        }
      }
      if (i == cur.size()) break;
    }
    for (const auto& assign : assignments) {
      ModelState t = s;
      t.rs_sched_q.erase(t.rs_sched_q.begin());
      bool overflow = false;
      for (std::uint32_t i = 1; i <= b.batch_size; ++i) {
        PodNode p{b.batch_id + i, assign[i - 1]};
        t.scheduled.push_back(p);
        if (t.sched_klet_conn) {
          if (t.sched_klet_q.size() >= cfg.max_queue) overflow = true;
          t.sched_klet_q.push_back(p);
        }
      }
      if (overflow) continue;  // outside configured bounds
      std::ostringstream a;
      a << "sched-loop[";
      for (auto n : assign) a << n;
      a << ']';
      add_succ(out, s, a.str(), std::move(t));
    }
  }

  // kubelet control loop: admit the head placement and expose one
  // previously-admitted pod to the api in the same action
  {
    std::vector<PodNode> pending;
    {
      std::set<PodNode> api(s.api.begin(), s.api.end());
      for (auto& p : s.running)
        if (!api.count(p)) pending.push_back(p);
    }
    ModelState base = s;
    bool dequeued = false;
    if (!base.sched_klet_q.empty()) {
      base.running.push_back(base.sched_klet_q.front());
      base.sched_klet_q.erase(base.sched_klet_q.begin());
      dequeued = true;
    }
    if (pending.empty()) {
      if (dequeued) add_succ(out, s, "klet-loop", std::move(base));
    } else {
      for (auto& p : pending) {
        ModelState t = base;
        t.api.push_back(p);
        add_succ(out, s,
                 "klet-loop[expose " + std::to_string(p.pod) + "]", std::move(t));
      }
    }
  }

  // handshakes (hard invalidation), downstream first
  if (!s.sched_klet_conn) {
    ModelState t = s;
    std::vector<PodNode> all = s.running;
    for (auto& p : s.scheduled) all.push_back(p);
    sort_unique(all);
    std::set<PodNode> running(s.running.begin(), s.running.end());
    t.scheduled = all;
    t.sched_klet_q.clear();
    for (auto& p : all)
      if (!running.count(p)) t.sched_klet_q.push_back(p);
    t.sched_klet_conn = true;
    add_succ(out, s, "handshake-sched-klet", std::move(t));
  }
  if (!s.rs_sched_conn && s.sched_klet_conn) {
    ModelState t = s;
    t.created.clear();
    for (auto& p : s.scheduled) t.created.push_back(p.pod);
    t.rs_sched_conn = true;
    add_succ(out, s, "handshake-rs-sched", std::move(t));
  }
  if (!s.as_rs_conn && s.rs_sched_conn) {
    ModelState t = s;
    t.as_rs_conn = true;
    t.last_desired = s.desired;  // refresh the cached downstream view
    add_succ(out, s, "handshake-as-rs", std::move(t));
  }

  if (!include_faults) return out;

  if (cfg.enable_disconnects) {
    if (s.as_rs_conn) {
      ModelState t = s;
      t.as_rs_conn = false;
      t.as_rs_q.clear();
      add_succ(out, s, "disconnect-as-rs", std::move(t));
    }
    if (s.rs_sched_conn) {
      ModelState t = s;
      t.rs_sched_conn = false;
      t.rs_sched_q.clear();
      add_succ(out, s, "disconnect-rs-sched", std::move(t));
    }
    if (s.sched_klet_conn) {
      ModelState t = s;
      t.sched_klet_conn = false;
      t.sched_klet_q.clear();
      add_succ(out, s, "disconnect-sched-klet", std::move(t));
    }
  }
  if (cfg.enable_crashes) {
    {
      ModelState t = s;
      t.last_desired = 0;
      t.as_rs_conn = false;
      t.as_rs_q.clear();
      add_succ(out, s, "crash-as", std::move(t));
    }
    {
      ModelState t = s;
      t.created.clear();
      for (auto& p : s.api) t.created.push_back(p.pod);
      t.desired = static_cast<std::uint32_t>(s.api.size());
      // MaxPodId survives in the durable stub
      t.as_rs_conn = false;
      t.as_rs_q.clear();
      t.rs_sched_conn = false;
      t.rs_sched_q.clear();
      add_succ(out, s, "crash-rs", std::move(t));
    }
    {
      ModelState t = s;
      t.scheduled = s.api;
      t.rs_sched_conn = false;
      t.rs_sched_q.clear();
      t.sched_klet_conn = false;
      t.sched_klet_q.clear();
      add_succ(out, s, "crash-sched", std::move(t));
    }
    {
      ModelState t = s;
      t.running = s.api;
      t.sched_klet_conn = false;
      t.sched_klet_q.clear();
      add_succ(out, s, "crash-klet", std::move(t));
    }
  }
  return out;
}

inline bool quiescent(const ModelState& s, const ModelConfig& cfg) {
  if (!s.as_rs_conn || !s.rs_sched_conn || !s.sched_klet_conn) return false;
  if (!s.as_rs_q.empty() || !s.rs_sched_q.empty() || !s.sched_klet_q.empty())
    return false;
  return next_states(s, cfg, /*include_faults=*/false).empty();
}

// ---------------------------------------------------------------------------
// Exhaustive exploration

struct Verdict {
  std::size_t states_visited = 0;
  bool bound_exceeded = false;
  bool invariants_hold = true;
  bool convergence_holds = true;
  std::string failure;
  std::vector<std::string> counterexample;
};

inline std::vector<std::string> rebuild_path(
    const std::vector<std::pair<std::uint32_t, std::string>>& parent,
    const std::vector<ModelState>& states, std::uint32_t id) {
  std::vector<std::string> path;
  while (true) {
    path.push_back(states[id].pretty());
    if (parent[id].first == id) break;
    path.push_back("  --" + parent[id].second + "-->");
    id = parent[id].first;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

inline Verdict explore(const ModelConfig& cfg) {
  Verdict v;
  std::vector<ModelState> states;
  std::vector<std::pair<std::uint32_t, std::string>> parent;
  std::unordered_map<std::string, std::uint32_t> index;

  ModelState init = canonical(initial_state(cfg));
  states.push_back(init);
  parent.emplace_back(0, "init");
  index.emplace(init.key(), 0);

  std::deque<std::uint32_t> frontier{0};
  std::vector<std::vector<std::uint32_t>> fault_free_edges;
  fault_free_edges.emplace_back();

  while (!frontier.empty()) {
    std::uint32_t id = frontier.front();
    frontier.pop_front();
    ModelState cur = states[id];

    if (auto why = check_invariants(cur, cfg)) {
      v.invariants_hold = false;
      v.failure = "invariant: " + *why;
      v.counterexample = rebuild_path(parent, states, id);
      return v;
    }
    if (quiescent(cur, cfg)) {
      if (auto why = check_complete(cur)) {
        v.invariants_hold = false;
        v.failure = "quiescent completeness: " + *why;
        v.counterexample = rebuild_path(parent, states, id);
        return v;
      }
    }

    for (auto& succ : next_states(cur, cfg, true)) {
      auto key = succ.state.key();
      auto it = index.find(key);
      std::uint32_t sid;
      if (it == index.end()) {
        if (states.size() >= cfg.max_states) {
          v.bound_exceeded = true;
          v.failure = "state bound";
          v.states_visited = states.size();
          return v;
        }
        sid = static_cast<std::uint32_t>(states.size());
        states.push_back(succ.state);
        parent.emplace_back(id, succ.action);
        fault_free_edges.emplace_back();
        index.emplace(std::move(key), sid);
        frontier.push_back(sid);
      } else {
        sid = it->second;
      }
      bool is_fault = succ.action.rfind("crash-", 0) == 0 ||
                      succ.action.rfind("disconnect-", 0) == 0;
      if (!is_fault) fault_free_edges[id].push_back(sid);
    }
  }
  v.states_visited = states.size();

  // bounded convergence: with faults switched off, every reachable state can
  // still reach a state satisfying the convergence predicate
  std::vector<std::vector<std::uint32_t>> rev(states.size());
  for (std::uint32_t id = 0; id < states.size(); ++id)
    for (std::uint32_t to : fault_free_edges[id]) rev[to].push_back(id);
  std::vector<char> can(states.size(), 0);
  std::deque<std::uint32_t> q;
  for (std::uint32_t id = 0; id < states.size(); ++id)
    if (converged(states[id], cfg)) {
      can[id] = 1;
      q.push_back(id);
    }
  while (!q.empty()) {
    std::uint32_t id = q.front();
    q.pop_front();
    for (std::uint32_t from : rev[id])
      if (!can[from]) {
        can[from] = 1;
        q.push_back(from);
      }
  }
  for (std::uint32_t id = 0; id < states.size(); ++id) {
    if (!can[id]) {
      v.convergence_holds = false;
      v.failure = "state cannot converge with faults disabled";
      v.counterexample = rebuild_path(parent, states, id);
      return v;
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Cross validation: each simulator event must project onto a stutter or a
// single transition of the model. The projection fuses the deployment
// controller into the autoscaler edge, collapses per-node links into the one
// modeled connection, drops tombstones, acks, versions and backward traffic,
// and renames pod ids canonically.

struct CrossVerdict {
  bool consistent = true;
  std::string divergence;
  std::size_t transitions = 0;
};

inline ModelState project(const Simulation& sim, const ModelConfig& cfg) {
  ModelState m;
  m.cmd_index = static_cast<std::uint32_t>(
      std::max<std::size_t>(1, sim.commands_issued()));

  for (const auto& [id, rec] : sim.registry().published())
    if (rec.node) m.api.push_back({id, *rec.node});

  const FunctionId fn = 0;
  {
    auto it = sim.deployment().forwarded.find(fn);
    m.last_desired = it == sim.deployment().forwarded.end() ? 0 : it->second;
  }
  {
    auto it = sim.replicaset().desired.find(fn);
    m.desired = it == sim.replicaset().desired.end() ? 0 : it->second;
  }
  for (const auto& [id, rec] : sim.replicaset().pods)
    if (!rec.invalid) m.created.push_back(id);
  m.max_pod_id = sim.durable_max_pod_id();

  for (const auto& [id, rec] : sim.scheduler_state().pods)
    if (!rec.invalid) m.scheduled.push_back({id, rec.node.value_or(0)});

  for (NodeId n = 1; n <= sim.scenario().num_nodes; ++n)
    for (const auto& [id, rec] : sim.kubelet(n).pods)
      m.running.push_back({id, n});

  // fused autoscaler edge: the dp-rs link carries the modeled connection
  auto link_usable = [&](LinkRef lr) {
    const Link& l = sim.link(lr);
    return l.connected() && !l.latched();
  };
  m.as_rs_conn = link_usable({LinkRef::Which::DpRs, 0});
  ControllerId rs_id{ControllerKind::ReplicaSet, 0};
  for (const auto& [lr, f] : sim.ingress(rs_id)) {
    if (f.type != FrameType::Data) continue;
    for (const auto& [k, v] : f.msg.entries)
      if (k.kind == ObjectKind::ReplicaSet && k.attr == Attr::Replicas)
        m.as_rs_q.push_back(static_cast<std::uint32_t>(v.as_int()));
  }
  sim.link({LinkRef::Which::DpRs, 0}).each(Direction::Forward, [&](const auto& in) {
    Frame f = decode_frame(in.payload);
    if (f.type != FrameType::Data) return;
    for (const auto& [k, v] : f.msg.entries)
      if (k.kind == ObjectKind::ReplicaSet && k.attr == Attr::Replicas)
        m.as_rs_q.push_back(static_cast<std::uint32_t>(v.as_int()));
  });

  m.rs_sched_conn = link_usable({LinkRef::Which::RsSched, 0});
  ControllerId sched_id{ControllerKind::Scheduler, 0};
  for (const auto& [lr, f] : sim.ingress(sched_id)) {
    if (f.type == FrameType::Data && f.msg.batch)
      m.rs_sched_q.push_back({f.msg.batch->batch_id, f.msg.batch->batch_size});
  }
  sim.link({LinkRef::Which::RsSched, 0}).each(Direction::Forward, [&](const auto& in) {
    Frame f = decode_frame(in.payload);
    if (f.type == FrameType::Data && f.msg.batch)
      m.rs_sched_q.push_back({f.msg.batch->batch_id, f.msg.batch->batch_size});
  });

  bool all_klet_up = true;
  for (NodeId n = 1; n <= sim.scenario().num_nodes; ++n)
    if (!link_usable({LinkRef::Which::SchedKlet, n})) all_klet_up = false;
  m.sched_klet_conn = all_klet_up;
  auto collect_placement = [&](const Frame& f) {
    if (f.type != FrameType::Data || f.msg.batch) return;
    std::optional<PodId> pod;
    std::optional<NodeId> node;
    for (const auto& [k, v] : f.msg.entries) {
      if (k.kind != ObjectKind::Pod) continue;
      if (k.attr == Attr::NodeName) node = static_cast<NodeId>(v.as_int());
      if (k.attr == Attr::TemplateRef) pod = k.id;
    }
    if (pod && node) m.sched_klet_q.push_back({*pod, *node});
  };
  for (NodeId n = 1; n <= sim.scenario().num_nodes; ++n) {
    for (const auto& [lr, f] : sim.ingress(ControllerId{ControllerKind::Kubelet, n}))
      collect_placement(f);
    sim.link({LinkRef::Which::SchedKlet, n})
        .each(Direction::Forward,
              [&](const auto& in) { collect_placement(decode_frame(in.payload)); });
  }
  // placements travel in ascending pod order; fresh ids grow monotonically
  std::sort(m.sched_klet_q.begin(), m.sched_klet_q.end());

  return canonical(std::move(m));
}

inline CrossVerdict cross_validate(Scenario sc, const ModelConfig& cfg) {
  for (const auto& c : sc.commands)
    if (c.function != 0)
      return {false, "projection requires a single function (id 0)", 0};

  // protocol-semantics timing: atomic steps, synchronous publication
  sc.proc_cost = 0;
  sc.registry.call_latency = 0;
  sc.registry.notify_latency = 0;
  sc.registry.rate_tokens = 0;  // unlimited
  sc.registry.ser_units_per_kib = 0;

  CrossVerdict out;
  std::vector<std::pair<ModelState, std::string>> path;
  Simulation sim(sc);
  sim.observer = [&](const Simulation& s, const std::string& label) {
    ModelState m = project(s, cfg);
    if (path.empty() || !(path.back().first == m)) path.emplace_back(m, label);
  };
  RunResult rr = sim.run();
  if (!rr.metrics.ok()) {
    out.consistent = false;
    out.divergence = "simulator reported violations: " + rr.metrics.violations[0];
    return out;
  }
  if (path.empty()) return out;

  ModelState init = canonical(initial_state(cfg));
  std::size_t start = 0;
  if (!(path[0].first == init)) {
    out.consistent = false;
    out.divergence = "initial projection differs from model init: " +
                     path[0].first.pretty();
    return out;
  }
  for (std::size_t i = start + 1; i < path.size(); ++i) {
    const ModelState& a = path[i - 1].first;
    const ModelState& b = path[i].first;
    bool found = false;
    for (auto& succ : next_states(a, cfg, true)) {
      if (succ.state == b) {
        found = true;
        break;
      }
    }
    if (!found) {
      out.consistent = false;
      out.divergence = "no model action matches simulator step '" +
                       path[i].second + "':\n  from " + a.pretty() +
                       "\n  to   " + b.pretty();
      return out;
    }
    out.transitions++;
  }
  return out;
}

}  // namespace podchain::model
