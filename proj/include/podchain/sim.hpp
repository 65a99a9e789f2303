#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "podchain/controllers.hpp"
#include "podchain/core.hpp"
#include "podchain/link.hpp"
#include "podchain/protocol.hpp"
#include "podchain/registry.hpp"
#include "podchain/scenario.hpp"
#include "podchain/wire.hpp"

namespace podchain {

struct RunMetrics {
  SimTime end_time = 0;
  bool quiescent = false;
  bool converged = false;
  bool faults_ceased_in_time = true;
  std::map<FunctionId, std::uint32_t> final_desired;
  std::map<FunctionId, std::uint32_t> published_per_fn;
  std::map<std::string, std::uint64_t> msgs;   // link/dir -> count
  std::map<std::string, std::uint64_t> bytes;  // link/dir -> bytes
  std::map<std::string, std::uint64_t> handshake_frames;  // link -> count
  std::map<std::string, SimTime> busy;
  // per scaling command: issue -> first time the published count matched
  std::vector<SimTime> command_latency;
  SimTime scaleout_total = 0;  // first command -> all targets met
  std::uint64_t cold_starts = 0;
  std::size_t max_pod_entry_bytes = 0;
  std::uint64_t handshakes_completed = 0;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

struct RunResult {
  RunMetrics metrics;
  std::vector<std::string> trace;
};

// ---------------------------------------------------------------------------
// Run-long safety monitors. Observations are explicit calls from the
// simulation at lifecycle transitions, bindings, publications and sends.
// Binding, tail-termination and discard histories persist across crashes;
// per-controller lifecycle history is scoped to the controller's session.
class Monitors {
 public:
  std::vector<std::string> violations;

  void violation(SimTime t, const std::string& what) {
    violations.push_back("t=" + std::to_string(t) + " " + what);
  }

  void observe_phase(SimTime t, ControllerId ctl, PodId pod, Phase phase) {
    auto key = std::make_pair(ctl, pod);
    auto it = last_phase_.find(key);
    if (it != last_phase_.end() && !legal_phase_step(it->second, phase)) {
      violation(t, "lifecycle: pod " + std::to_string(pod) + " at " +
                       to_string(ctl) + " went " + to_string(it->second) +
                       " -> " + to_string(phase));
    }
    last_phase_[key] = phase;
    if (ctl.kind == ControllerKind::Kubelet) {
      if (phase == Phase::Terminating || phase == Phase::Removed) {
        tail_terminated_.insert(pod);
      } else if (tail_terminated_.count(pod)) {
        violation(t, "no-resurrection: pod " + std::to_string(pod) +
                         " re-ran at node " + std::to_string(ctl.node) +
                         " after termination");
      }
    }
  }

  void observe_binding(SimTime t, ControllerId ctl, PodId pod, NodeId node) {
    auto& nodes = bindings_[pod];
    nodes.insert(node);
    if (nodes.size() > 1)
      violation(t, "unique-binding: pod " + std::to_string(pod) +
                       " bound to " + std::to_string(nodes.size()) +
                       " distinct nodes (seen at " + to_string(ctl) + ")");
  }

  void observe_published(SimTime t, PodId pod) {
    if (tail_terminated_.count(pod))
      violation(t, "no-resurrection: pod " + std::to_string(pod) +
                       " republished after termination");
  }

  void observe_tail_terminated(SimTime, PodId pod) {
    tail_terminated_.insert(pod);
  }

  void observe_discard(SimTime, ControllerId ctl, PodId pod) {
    discarded_[ctl].insert(pod);
  }
  void observe_admission(SimTime t, ControllerId ctl, PodId pod) {
    auto it = discarded_.find(ctl);
    if (it != discarded_.end() && it->second.count(pod))
      violation(t, "ack-safety: pod " + std::to_string(pod) +
                       " reappeared at " + to_string(ctl) + " after discard");
  }

  // completeness: the initiator's relevant live ids must equal what the
  // responder advertised, minus writes deliberately re-issued
  void check_handshake(SimTime t, const std::string& link,
                       std::set<PodId> upstream_ids,
                       const std::set<PodId>& reissued,
                       const std::set<PodId>& downstream_ids) {
    for (PodId p : reissued) upstream_ids.erase(p);
    if (upstream_ids != downstream_ids)
      violation(t, "handshake-completeness: " + link +
                       " upstream slice != downstream live set");
  }

  void observe_latched_delivery(SimTime t, const std::string& link) {
    violation(t, "transport: application frame delivered on latched link " + link);
  }

  void observe_frame_size(SimTime t, const std::string& link, std::size_t bytes,
                          std::size_t pods) {
    std::size_t per = bytes / std::max<std::size_t>(1, pods);
    if (per > kPodEntryByteBudget)
      violation(t, "message-size: " + link + " frame used " +
                       std::to_string(per) + "B per pod entry");
  }

  void observe_tombstone_held(ControllerId ctl, PodId pod) {
    ts_holders_[pod].insert(ctl);
  }
  void observe_crash(ControllerId ctl, const std::set<PodId>& held_ts) {
    for (PodId p : held_ts) ts_crashed_holders_[p].insert(ctl);
    // a restarted controller is a fresh observer of pod lifecycles
    for (auto it = last_phase_.begin(); it != last_phase_.end();) {
      if (it->first.first == ctl)
        it = last_phase_.erase(it);
      else
        ++it;
    }
  }
  void audit_tombstones(SimTime t, const std::set<PodId>& live_everywhere,
                        const std::set<PodId>& tombstones_alive) {
    for (const auto& [pod, holders] : ts_holders_) {
      if (tombstones_alive.count(pod)) continue;   // still replicated
      if (!live_everywhere.count(pod)) continue;   // pod removed: GC is fine
      bool all_crashed = true;
      for (ControllerId c : holders)
        if (!ts_crashed_holders_[pod].count(c)) all_crashed = false;
      if (!all_crashed)
        violation(t, "tombstone-durability: tombstone for pod " +
                         std::to_string(pod) +
                         " vanished while the pod lives on");
    }
  }

  const std::set<PodId>& tail_terminated() const { return tail_terminated_; }

 private:
  std::map<std::pair<ControllerId, PodId>, Phase> last_phase_;
  std::map<PodId, std::set<NodeId>> bindings_;
  std::set<PodId> tail_terminated_;
  std::map<ControllerId, std::set<PodId>> discarded_;
  std::map<PodId, std::set<ControllerId>> ts_holders_;
  std::map<PodId, std::set<ControllerId>> ts_crashed_holders_;
};

// ---------------------------------------------------------------------------

class Simulation {
 public:
  explicit Simulation(Scenario sc) : sc_(std::move(sc)), registry_(sc_.registry) {
    if (sc_.mode == RunMode::Centralized && !sc_.faults.empty())
      throw std::invalid_argument("centralized mode runs are fault-free");
    links_.emplace(LinkRef{LinkRef::Which::AsDp, 0},
                   Link("as-dp", sc_.link_latency));
    links_.emplace(LinkRef{LinkRef::Which::DpRs, 0},
                   Link("dp-rs", sc_.link_latency));
    links_.emplace(LinkRef{LinkRef::Which::RsSched, 0},
                   Link("rs-sched", sc_.link_latency));
    for (NodeId n = 1; n <= sc_.num_nodes; ++n) {
      links_.emplace(LinkRef{LinkRef::Which::SchedKlet, n},
                     Link("sched-klet:" + std::to_string(n), sc_.link_latency));
      KubeletState k;
      k.node = n;
      k.capacity = sc_.node_capacity;
      klets_.emplace(n, std::move(k));
      sched_.nodes[n] = NodeView{n, sc_.node_capacity, true};
      registry_.register_node(n);
    }
    for (const auto& c : sc_.commands) templates_.add(c.function);
    for (std::size_t i = 0; i < sc_.commands.size(); ++i)
      push_event(sc_.commands[i].issue_time, EventKind::Cmd,
                 [&, i](Event& e) { e.index = i; });
    for (std::size_t i = 0; i < sc_.faults.size(); ++i)
      push_event(sc_.faults[i].at, EventKind::Fault,
                 [&, i](Event& e) { e.index = i; });
  }

  // Called after each applied event; used by tests and cross validation.
  std::function<void(const Simulation&, const std::string&)> observer;

  RunResult run() {
    while (!events_.empty()) {
      Event ev = events_.top();
      events_.pop();
      if (ev.t > sc_.max_sim_time) break;
      now_ = ev.t;
      std::string label = fire(ev);
      if (!label.empty()) {
        trace_.push_back("t=" + std::to_string(now_) + " " + label);
        if (observer) observer(*this, label);
      }
    }
    finish();
    RunResult res;
    res.metrics = metrics_;
    res.metrics.violations = monitors_.violations;
    res.trace = trace_;
    return res;
  }

  // --- state access (projection, tests) ---
  const Scenario& scenario() const { return sc_; }
  SimTime now() const { return now_; }
  const AutoscalerState& autoscaler() const { return as_; }
  const DeploymentState& deployment() const { return dp_; }
  const ReplicaSetState& replicaset() const { return rs_; }
  const SchedulerState& scheduler_state() const { return sched_; }
  const KubeletState& kubelet(NodeId n) const { return klets_.at(n); }
  const Registry& registry() const { return registry_; }
  const Link& link(LinkRef lr) const { return links_.at(lr); }
  std::uint64_t durable_max_pod_id() const { return durable_max_pod_id_; }
  std::size_t commands_issued() const { return commands_issued_; }
  const std::deque<std::pair<LinkRef, Frame>>& ingress(ControllerId c) const {
    static const std::deque<std::pair<LinkRef, Frame>> empty;
    auto it = ingress_.find(c);
    return it == ingress_.end() ? empty : it->second;
  }
  const RunMetrics& metrics() const { return metrics_; }

  // --- test driving hooks ---
  void step_controller_now(ControllerId c) { schedule_step(c); }
  enum class PreemptStatus { TimedWaiting, Placed };
  // Schedule a synchronous preemption: the high-priority pod's placement is
  // conditioned on the victim's termination.
  void request_preemption(SimTime at, PodId victim, FunctionId fn,
                          PodId hipri_id) {
    templates_.add(fn);
    push_event(at, EventKind::Preempt, [&](Event& e) {
      e.pod = victim;
      e.hipri =
          PodRecord{hipri_id, fn, std::nullopt, Phase::Pending, {}, false, false};
    });
  }
  std::optional<PreemptStatus> preempt_status(PodId victim) const {
    auto it = preempt_status_.find(victim);
    if (it == preempt_status_.end()) return std::nullopt;
    return it->second;
  }

 private:
  enum class EventKind {
    Cmd, Fault, Step, LinkDue, PodReady, PublishDone, NodeMarkDone,
    NodeMarkNotify, HandshakeKick, CentralDeliver, AutoReconnect, Preempt,
  };

  struct Event {
    SimTime t = 0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::Step;
    std::size_t index = 0;
    ControllerId ctl;
    LinkRef link;
    NodeId node = 0;
    PodId pod = 0;
    std::uint32_t epoch = 0;
    bool valid_mark = true;
    std::uint64_t gen = 0;
    Frame frame;
    ControllerId dest;
    PodRecord hipri;
  };

  struct EventCmp {
    bool operator()(const Event& a, const Event& b) const {
      if (a.t != b.t) return a.t > b.t;
      return a.seq > b.seq;
    }
  };

  template <class F>
  void push_event(SimTime t, EventKind k, F fill) {
    Event e;
    e.t = std::max(t, now_);
    e.seq = ++event_seq_;
    e.kind = k;
    fill(e);
    events_.push(std::move(e));
  }

  static constexpr ControllerId kAs{ControllerKind::Autoscaler, 0};
  static constexpr ControllerId kDp{ControllerKind::Deployment, 0};
  static constexpr ControllerId kRs{ControllerKind::ReplicaSet, 0};
  static constexpr ControllerId kSched{ControllerKind::Scheduler, 0};
  static ControllerId klet_id(NodeId n) {
    return ControllerId{ControllerKind::Kubelet, n};
  }

  ControllerId upstream_end(LinkRef lr) const {
    switch (lr.which) {
      case LinkRef::Which::AsDp: return kAs;
      case LinkRef::Which::DpRs: return kDp;
      case LinkRef::Which::RsSched: return kRs;
      case LinkRef::Which::SchedKlet: return kSched;
    }
    return kAs;
  }
  ControllerId downstream_end(LinkRef lr) const {
    switch (lr.which) {
      case LinkRef::Which::AsDp: return kDp;
      case LinkRef::Which::DpRs: return kRs;
      case LinkRef::Which::RsSched: return kSched;
      case LinkRef::Which::SchedKlet: return klet_id(lr.node);
    }
    return kDp;
  }

  // --- sending ---

  SendResult send_frame(LinkRef lr, Direction dir, const Frame& f,
                        bool control = false) {
    if (sc_.mode == RunMode::Centralized) {
      central_send(lr, dir, f);
      return SendResult::Accepted;
    }
    Link& l = links_.at(lr);
    auto bytes = encode_frame(f);
    SendResult r = l.send(dir, bytes, now_, ++wire_seq_, control);
    if (r == SendResult::Accepted) {
      std::string key = l.name() + "/" + to_string(dir);
      metrics_.msgs[key]++;
      metrics_.bytes[key] += bytes.size();
      if (f.type == FrameType::Digest || f.type == FrameType::Fetch ||
          f.type == FrameType::State)
        metrics_.handshake_frames[l.name()]++;
      std::size_t pods = pods_covered(f.msg);
      monitors_.observe_frame_size(now_, l.name(), bytes.size(), pods);
      metrics_.max_pod_entry_bytes =
          std::max(metrics_.max_pod_entry_bytes,
                   bytes.size() / std::max<std::size_t>(1, pods));
      push_event(now_ + l.latency(), EventKind::LinkDue,
                 [&](Event& e) { e.link = lr; });
    }
    return r;
  }

  // Centralized baseline: every object travels as its own full-size write
  // through the registry's rate limiter, then a notification.
  void central_send(LinkRef lr, Direction dir, const Frame& f) {
    ControllerId from =
        dir == Direction::Forward ? upstream_end(lr) : downstream_end(lr);
    ControllerId to =
        dir == Direction::Forward ? downstream_end(lr) : upstream_end(lr);
    for (Frame& piece : split_per_object(f)) {
      SimTime done =
          registry_.call_done(from, now_, registry_.params().full_object_bytes);
      std::string key = links_.at(lr).name() + "/" + to_string(dir);
      metrics_.msgs[key]++;
      metrics_.bytes[key] += registry_.params().full_object_bytes;
      push_event(done + registry_.params().notify_latency,
                 EventKind::CentralDeliver, [&](Event& e) {
                   e.dest = to;
                   e.link = lr;
                   e.frame = std::move(piece);
                 });
    }
  }

  static std::vector<Frame> split_per_object(const Frame& f) {
    std::vector<Frame> out;
    if (f.msg.batch) {
      for (std::uint32_t i = 1; i <= f.msg.batch->batch_size; ++i) {
        Frame piece;
        piece.type = f.type;
        PodId id = f.msg.batch->batch_id + i;
        for (auto [k, v] : f.msg.entries) {
          if (k.kind == ObjectKind::Pod && k.id == 0) k.id = id;
          piece.msg.entries.emplace_back(k, v);
        }
        out.push_back(std::move(piece));
      }
      return out;
    }
    std::map<std::uint64_t, Frame> by_id;
    std::vector<std::uint64_t> order;
    for (const auto& [k, v] : f.msg.entries) {
      auto [it, inserted] = by_id.try_emplace(k.id);
      if (inserted) {
        it->second.type = f.type;
        order.push_back(k.id);
      }
      it->second.msg.entries.emplace_back(k, v);
    }
    for (auto id : order) out.push_back(std::move(by_id[id]));
    if (out.empty()) out.push_back(f);
    return out;
  }

  void route_frame(LinkRef lr, Direction dir, Frame f) {
    ControllerId to =
        dir == Direction::Forward ? downstream_end(lr) : upstream_end(lr);
    if (f.type == FrameType::Digest || f.type == FrameType::Fetch ||
        f.type == FrameType::State) {
      handle_handshake_frame(lr, dir, std::move(f));
      return;
    }
    if (sc_.mode == RunMode::Direct && links_.at(lr).latched())
      monitors_.observe_latched_delivery(now_, links_.at(lr).name());
    ingress_[to].emplace_back(lr, std::move(f));
    schedule_step(to);
  }

  // --- stepping & processing charges ---

  void schedule_step(ControllerId c) {
    if (step_pending_.count(c)) return;
    step_pending_.insert(c);
    SimTime at = std::max(now_, busy_until_[c]);
    push_event(at, EventKind::Step, [&](Event& e) { e.ctl = c; });
  }

  // Work is atomic but not free: the first attempt schedules a step at the
  // paid deadline, the deadline step performs it.
  bool pay(ControllerId c, std::uint64_t objects) {
    if (sc_.proc_cost <= 0 || objects == 0) return true;
    if (paid_pending_.count(c)) {
      if (now_ >= paid_until_[c]) {
        paid_pending_.erase(c);
        return true;
      }
      return false;  // deadline step is already scheduled
    }
    SimTime cost = static_cast<SimTime>(objects) * sc_.proc_cost;
    metrics_.busy[to_string(c)] += cost;
    paid_until_[c] = now_ + cost;
    busy_until_[c] = now_ + cost;
    paid_pending_.insert(c);
    push_event(paid_until_[c], EventKind::Step, [&](Event& e) { e.ctl = c; });
    return false;
  }

  std::optional<std::pair<LinkRef, Frame>> pop_ingress(ControllerId c) {
    auto it = ingress_.find(c);
    if (it == ingress_.end() || it->second.empty()) return std::nullopt;
    auto out = std::move(it->second.front());
    it->second.pop_front();
    return out;
  }
  bool ingress_empty(ControllerId c) const {
    auto it = ingress_.find(c);
    return it == ingress_.end() || it->second.empty();
  }
  std::uint64_t ingress_head_cost(ControllerId c) const {
    auto it = ingress_.find(c);
    if (it == ingress_.end() || it->second.empty()) return 0;
    const auto& [lr, f] = it->second.front();
    if (f.type == FrameType::Data && lr.which == LinkRef::Which::RsSched &&
        c == kSched)
      return std::max<std::uint64_t>(1, pods_covered(f.msg));
    return 1;
  }

  // --- main dispatch ---

  std::string fire(Event& ev) {
    switch (ev.kind) {
      case EventKind::Cmd: return fire_cmd(ev.index);
      case EventKind::Fault: return fire_fault(sc_.faults[ev.index]);
      case EventKind::Step: return fire_step(ev.ctl);
      case EventKind::LinkDue: return fire_link_due(ev.link);
      case EventKind::PodReady: return fire_pod_ready(ev.node, ev.pod, ev.epoch);
      case EventKind::PublishDone:
        return fire_publish_done(ev.node, ev.pod, ev.epoch);
      case EventKind::NodeMarkDone:
        registry_.set_node_valid(ev.node, ev.valid_mark);
        push_event(now_ + registry_.params().notify_latency,
                   EventKind::NodeMarkNotify, [&](Event& e) {
                     e.node = ev.node;
                     e.valid_mark = ev.valid_mark;
                   });
        return "registry node " + std::to_string(ev.node) +
               (ev.valid_mark ? " valid" : " invalid");
      case EventKind::NodeMarkNotify:
        return fire_node_mark_notify(ev.node, ev.valid_mark);
      case EventKind::HandshakeKick:
        return maybe_start_handshake(ev.link)
                   ? "handshake start " + links_.at(ev.link).name()
                   : "";
      case EventKind::CentralDeliver: {
        ingress_[ev.dest].emplace_back(ev.link, std::move(ev.frame));
        schedule_step(ev.dest);
        return "central deliver to " + to_string(ev.dest);
      }
      case EventKind::AutoReconnect: {
        auto_reconnects_fired_++;
        bool stale = ev.gen != link_down_gen_[ev.link];
        Link& l = links_.at(ev.link);
        std::string out;
        if (!stale && !l.connected()) {
          l.set_connected(true);
          push_event(now_, EventKind::HandshakeKick,
                     [&](Event& e) { e.link = ev.link; });
          out = "reconnect " + l.name() + " (restart)";
        }
        try_cancel_sweep();
        return out;
      }
      case EventKind::Preempt: return fire_preempt(ev.pod, ev.hipri);
    }
    return "";
  }

  std::string fire_cmd(std::size_t idx) {
    const auto& c = sc_.commands[idx];
    commands_issued_ = std::max(commands_issued_, idx + 1);
    as_.metric_desired[c.function] = c.desired_replicas;
    metrics_.final_desired[c.function] = c.desired_replicas;
    if (first_cmd_time_ < 0) first_cmd_time_ = now_;
    command_targets_.push_back(
        CommandTarget{idx, c.function, c.desired_replicas, now_, -1});
    check_command_targets();
    schedule_step(kAs);
    return "cmd fn=" + std::to_string(c.function) +
           " replicas=" + std::to_string(c.desired_replicas);
  }

  std::string fire_step(ControllerId c) {
    step_pending_.erase(c);
    switch (c.kind) {
      case ControllerKind::Autoscaler: return step_autoscaler();
      case ControllerKind::Deployment: return step_deployment();
      case ControllerKind::ReplicaSet: return step_replicaset();
      case ControllerKind::Scheduler: return step_scheduler();
      case ControllerKind::Kubelet: return step_kubelet(c.node);
    }
    return "";
  }

  std::string fire_link_due(LinkRef lr) {
    Link& l = links_.at(lr);
    auto frames = l.deliver_due(now_);
    if (frames.empty()) return "";
    for (auto& d : frames) route_frame(lr, d.dir, decode_frame(d.payload));
    return "deliver " + l.name() + " x" + std::to_string(frames.size());
  }

  // --- controllers ---

  std::string step_autoscaler() {
    auto pending = as_.pending_sends();
    if (pending.empty()) return "";
    if (!pay(kAs, 1)) return "";
    auto [fn, want] = pending.front();
    Frame f;
    f.type = FrameType::Data;
    f.msg.entries.emplace_back(
        AttrKey{ObjectKind::Deployment, fn, Attr::Replicas},
        AttrValue::of_int(want));
    if (send_frame({LinkRef::Which::AsDp, 0}, Direction::Forward, f) ==
        SendResult::Accepted) {
      as_.last_sent[fn] = want;
      if (pending.size() > 1) schedule_step(kAs);
      return "step autoscaler: scale fn=" + std::to_string(fn) + " to " +
             std::to_string(want);
    }
    return "step autoscaler: downstream unreachable";
  }

  std::string step_deployment() {
    bool work = !ingress_empty(kDp) || !dp_.pending_sends().empty();
    if (!work) return "";
    if (!pay(kDp, 1)) return "";
    std::string what;
    if (auto in = pop_ingress(kDp)) {
      for (const auto& [k, v] : in->second.msg.entries)
        if (k.kind == ObjectKind::Deployment && k.attr == Attr::Replicas)
          dp_.desired[static_cast<FunctionId>(k.id)] =
              static_cast<std::uint32_t>(v.as_int());
      what = " recv";
    }
    auto pending = dp_.pending_sends();
    if (!pending.empty()) {
      auto [fn, want] = pending.front();
      Frame f;
      f.type = FrameType::Data;
      f.msg.entries.emplace_back(
          AttrKey{ObjectKind::ReplicaSet, fn, Attr::Replicas},
          AttrValue::of_int(want));
      if (send_frame({LinkRef::Which::DpRs, 0}, Direction::Forward, f) ==
          SendResult::Accepted) {
        dp_.forwarded[fn] = want;
        what += " forward fn=" + std::to_string(fn) + " to " +
                std::to_string(want);
      }
    }
    if (!ingress_empty(kDp) || !dp_.pending_sends().empty()) schedule_step(kDp);
    if (what.empty()) return "";
    return "step deployment:" + what;
  }

  std::optional<FunctionId> rs_reconcile_target() const {
    for (const auto& [fn, want] : rs_.desired)
      if (rs_.live_count(fn) != want) return fn;
    return std::nullopt;
  }

  bool rs_tombstones_resolvable() const {
    for (const auto& [pod, ts] : rs_.tombstones) {
      auto it = rs_.pods.find(pod);
      if (it == rs_.pods.end() || !rs_.forwarded.count(pod)) return true;
    }
    return false;
  }

  std::string step_replicaset() {
    std::string what;
    // tombstones whose pod is provably absent downstream resolve locally
    std::vector<PodId> gc;
    for (const auto& [pod, ts] : rs_.tombstones) {
      auto it = rs_.pods.find(pod);
      if (it == rs_.pods.end()) {
        gc.push_back(pod);
      } else if (!rs_.forwarded.count(pod)) {
        if (it->second.phase != Phase::Terminating)
          monitors_.observe_phase(now_, kRs, pod, Phase::Terminating);
        monitors_.observe_phase(now_, kRs, pod, Phase::Removed);
        rs_.pods.erase(pod);
        rs_.discarded.insert(pod);
        monitors_.observe_discard(now_, kRs, pod);
        gc.push_back(pod);
        what += " resolved ts pod=" + std::to_string(pod);
      }
    }
    for (PodId p : gc) rs_.tombstones.erase(p);

    if (auto fn = rs_reconcile_target()) {
      std::uint32_t want = rs_.desired[*fn];
      std::uint32_t live = rs_.live_count(*fn);
      if (want > live) {
        std::uint32_t deficit = want - live;
        // the centralized baseline has no batch API: one object per write
        std::uint32_t n =
            sc_.mode == RunMode::Centralized ? 1 : deficit;
        if (!pay(kRs, n)) return what.empty() ? "" : "step replicaset:" + what;
        std::uint64_t batch_id = durable_max_pod_id_;
        durable_max_pod_id_ += n;
        Version ver = rs_.session.stamp();
        for (std::uint64_t i = 1; i <= n; ++i) {
          PodId id = batch_id + i;
          monitors_.observe_admission(now_, kRs, id);
          rs_.pods[id] =
              PodRecord{id, *fn, std::nullopt, Phase::Pending, ver, false, false};
          monitors_.observe_phase(now_, kRs, id, Phase::Pending);
        }
        Frame f;
        f.type = FrameType::Data;
        f.msg.batch = BatchHint{batch_id, n};
        f.msg.entries.emplace_back(AttrKey{ObjectKind::Pod, 0, Attr::PhaseAttr},
                                   AttrValue::of_phase(Phase::Pending));
        f.msg.entries.emplace_back(
            AttrKey{ObjectKind::Pod, 0, Attr::TemplateRef},
            AttrValue::of_ref(
                AttrKey{ObjectKind::ReplicaSet, *fn, Attr::TemplateRef}));
        f.msg.entries.emplace_back(AttrKey{ObjectKind::Pod, 0, Attr::Valid},
                                   AttrValue::of_str(pack_version(ver)));
        if (send_frame({LinkRef::Which::RsSched, 0}, Direction::Forward, f) ==
            SendResult::Accepted)
          for (std::uint64_t i = 1; i <= n; ++i)
            rs_.forwarded.insert(batch_id + i);
        what += " batch fn=" + std::to_string(*fn) + " ids=" +
                std::to_string(batch_id + 1) + ".." +
                std::to_string(batch_id + n);
      } else {
        std::uint32_t excess = live - want;
        if (!pay(kRs, excess)) return what.empty() ? "" : "step replicaset:" + what;
        for (PodId v : rs_.downscale_victims(*fn, excess)) {
          Tombstone ts{v, kRs, rs_.session.epoch};
          rs_.tombstones[v] = ts;
          monitors_.observe_tombstone_held(kRs, v);
          monitors_.observe_phase(now_, kRs, v, Phase::Terminating);
          rs_.pods[v].phase = Phase::Terminating;
          rs_.pods[v].version = rs_.session.stamp();
          send_frame({LinkRef::Which::RsSched, 0}, Direction::Forward,
                     make_tombstone_frame(ts));
          what += " tombstone pod=" + std::to_string(v);
        }
      }
    } else if (auto in_cost = ingress_head_cost(kRs); in_cost > 0) {
      if (!pay(kRs, in_cost)) return what.empty() ? "" : "step replicaset:" + what;
      auto in = pop_ingress(kRs);
      what += apply_rs_frame(in->first, in->second);
    }

    if (!ingress_empty(kRs) || rs_reconcile_target() || rs_tombstones_resolvable())
      schedule_step(kRs);
    if (what.empty()) return "";
    return "step replicaset:" + what;
  }

  std::string apply_rs_frame(LinkRef, const Frame& f) {
    switch (f.type) {
      case FrameType::Data: {
        std::string what;
        for (const auto& [k, v] : f.msg.entries) {
          if (k.kind == ObjectKind::ReplicaSet && k.attr == Attr::Replicas) {
            rs_.desired[static_cast<FunctionId>(k.id)] =
                static_cast<std::uint32_t>(v.as_int());
            what = " recv scale";
          } else if (k.kind == ObjectKind::Pod) {
            apply_pod_entry_update(kRs, rs_.pods, rs_.discarded, k, v);
            what = " recv update";
          }
        }
        return what;
      }
      case FrameType::Invalidate: {
        std::string what;
        for (const auto& [k, v] : f.msg.entries) {
          if (k.kind != ObjectKind::Pod) continue;
          PodId pod = k.id;
          if (auto it = rs_.pods.find(pod); it != rs_.pods.end()) {
            if (it->second.phase != Phase::Terminating)
              monitors_.observe_phase(now_, kRs, pod, Phase::Terminating);
            monitors_.observe_phase(now_, kRs, pod, Phase::Removed);
            rs_.pods.erase(it);
          }
          rs_.forwarded.erase(pod);
          rs_.discarded.insert(pod);
          monitors_.observe_discard(now_, kRs, pod);
          rs_.tombstones.erase(pod);  // the pod is gone: resolved
          send_frame({LinkRef::Which::RsSched, 0}, Direction::Forward,
                     make_ack_frame(pod));
          what += " removal pod=" + std::to_string(pod);
        }
        return what;
      }
      default:
        return "";
    }
  }

  // Attribute-wise application of a partial update flowing upstream.
  // Unknown or retired ids are stale and dropped.
  void apply_pod_entry_update(ControllerId ctl, std::map<PodId, PodRecord>& pods,
                              const std::set<PodId>& discarded, const AttrKey& k,
                              const AttrValue& v) {
    if (discarded.count(k.id)) return;
    auto it = pods.find(k.id);
    if (it == pods.end()) return;
    PodRecord& rec = it->second;
    if (rec.invalid) return;
    switch (k.attr) {
      case Attr::NodeName: {
        NodeId n = static_cast<NodeId>(v.as_int());
        rec.node = n;
        monitors_.observe_binding(now_, ctl, k.id, n);
        break;
      }
      case Attr::PhaseAttr: {
        Phase p = v.as_phase();
        if (rec.phase == Phase::Terminating &&
            (p == Phase::Pending || p == Phase::Running))
          break;  // irreversibility dominates merges
        if (rec.phase != p) {
          rec.phase = p;
          monitors_.observe_phase(now_, ctl, k.id, p);
        }
        break;
      }
      case Attr::Valid:
        if (v.is_str()) rec.version = unpack_version(v.as_str());
        break;
      default:
        break;
    }
  }

  std::set<NodeId> reachable_nodes() const {
    std::set<NodeId> out;
    for (NodeId n = 1; n <= sc_.num_nodes; ++n) {
      if (sc_.mode == RunMode::Direct) {
        const Link& l = links_.at(LinkRef{LinkRef::Which::SchedKlet, n});
        if (!l.connected() || l.latched()) continue;
      }
      if (!registry_.node_valid(n)) continue;
      out.insert(n);
    }
    return out;
  }

  std::string sched_place_unbound() {
    std::string what;
    auto reachable = reachable_nodes();
    for (auto& [n, view] : sched_.nodes) view.valid = registry_.node_valid(n);
    for (PodId id : sched_.unbound_pods()) {
      auto choice = least_loaded_policy(sched_, reachable);
      if (!choice) break;  // no feasible node; retried on capacity changes
      PodRecord& rec = sched_.pods[id];
      rec.node = *choice;
      rec.version = sched_.session.stamp();
      monitors_.observe_binding(now_, kSched, id, *choice);
      send_placement(rec);
      Frame up;
      up.type = FrameType::Data;
      up.msg.entries.emplace_back(AttrKey{ObjectKind::Pod, id, Attr::NodeName},
                                  AttrValue::of_int(*choice));
      up.msg.entries.emplace_back(
          AttrKey{ObjectKind::Pod, id, Attr::Valid},
          AttrValue::of_str(pack_version(rec.version)));
      send_frame({LinkRef::Which::RsSched, 0}, Direction::Backward, up);
      what +=
          " bind pod=" + std::to_string(id) + " node=" + std::to_string(*choice);
    }
    return what;
  }

  void send_placement(const PodRecord& rec) {
    Frame f;
    f.type = FrameType::Data;
    append_record_entries(f.msg, rec);
    send_frame({LinkRef::Which::SchedKlet, *rec.node}, Direction::Forward, f);
  }

  std::string step_scheduler() {
    std::string what;
    if (auto cost = ingress_head_cost(kSched); cost > 0) {
      if (!pay(kSched, cost)) return "";
      auto in = pop_ingress(kSched);
      const Frame& f = in->second;
      switch (f.type) {
        case FrameType::Data: {
          if (in->first.which == LinkRef::Which::RsSched) {
            auto recs = materialize(f.msg, templates_);
            for (const auto& rec : recs) {
              if (sched_.discarded.count(rec.pod)) continue;
              if (registry_.was_terminated(rec.pod) &&
                  !sc_.mutation_disable_no_resurrect)
                continue;
              if (sched_.pods.count(rec.pod)) continue;  // duplicate forward
              monitors_.observe_admission(now_, kSched, rec.pod);
              sched_.pods[rec.pod] = rec;
              monitors_.observe_phase(now_, kSched, rec.pod, rec.phase);
              if (rec.node)
                monitors_.observe_binding(now_, kSched, rec.pod, *rec.node);
            }
            what = " recv pods x" + std::to_string(recs.size());
            what += sched_place_unbound();
          } else {
            for (const auto& [k, v] : f.msg.entries)
              apply_pod_entry_update(kSched, sched_.pods, sched_.discarded, k, v);
            Frame up;
            up.type = FrameType::Data;
            up.msg = f.msg;
            send_frame({LinkRef::Which::RsSched, 0}, Direction::Backward, up);
            what = " klet update";
          }
          break;
        }
        case FrameType::TombstoneFrame: {
          for (const auto& [k, v] : f.msg.entries) {
            if (k.kind != ObjectKind::TombstoneKind) continue;
            what += handle_sched_tombstone(unpack_tombstone(k.id, v.as_str()));
          }
          break;
        }
        case FrameType::Invalidate: {
          for (const auto& [k, v] : f.msg.entries)
            if (k.kind == ObjectKind::Pod)
              what += sched_remove_pod(k.id, in->first, true);
          break;
        }
        case FrameType::Ack: {
          for (const auto& [k, v] : f.msg.entries) {
            auto it = sched_.pods.find(k.id);
            if (it != sched_.pods.end() && it->second.invalid) {
              sched_.pods.erase(it);
              sched_.discarded.insert(k.id);
              monitors_.observe_discard(now_, kSched, k.id);
              what += " acked pod=" + std::to_string(k.id);
            }
          }
          break;
        }
        default:
          break;
      }
    } else {
      std::string more = sched_place_unbound();
      if (!more.empty()) what += more;
    }
    if (!ingress_empty(kSched)) schedule_step(kSched);
    if (what.empty()) return "";
    return "step scheduler:" + what;
  }

  std::string handle_sched_tombstone(const Tombstone& ts) {
    auto it = sched_.pods.find(ts.pod);
    if (it == sched_.pods.end() || it->second.invalid) {
      if (sched_.discarded.count(ts.pod) || registry_.was_terminated(ts.pod))
        return " ts pod=" + std::to_string(ts.pod) + " already resolved";
      sched_.tombstones[ts.pod] = ts;
      monitors_.observe_tombstone_held(kSched, ts.pod);
      return " ts pod=" + std::to_string(ts.pod) + " pending";
    }
    sched_.tombstones[ts.pod] = ts;
    monitors_.observe_tombstone_held(kSched, ts.pod);
    PodRecord& rec = it->second;
    if (!rec.node) {
      // never forwarded anywhere: terminate locally, inform upstream
      if (rec.phase != Phase::Terminating)
        monitors_.observe_phase(now_, kSched, ts.pod, Phase::Terminating);
      monitors_.observe_phase(now_, kSched, ts.pod, Phase::Removed);
      sched_.pods.erase(ts.pod);
      sched_.discarded.insert(ts.pod);
      monitors_.observe_discard(now_, kSched, ts.pod);
      sched_.tombstones.erase(ts.pod);
      send_frame({LinkRef::Which::RsSched, 0}, Direction::Backward,
                 make_removal_frame(ts.pod));
      return " ts pod=" + std::to_string(ts.pod) + " resolved-unbound";
    }
    if (rec.phase != Phase::Terminating) {
      rec.phase = Phase::Terminating;
      rec.version = sched_.session.stamp();
      monitors_.observe_phase(now_, kSched, ts.pod, Phase::Terminating);
    }
    send_frame({LinkRef::Which::SchedKlet, *rec.node}, Direction::Forward,
               make_tombstone_frame(ts));
    return " ts pod=" + std::to_string(ts.pod) + " replicated";
  }

  std::string sched_remove_pod(PodId pod, LinkRef from, bool ack_downstream) {
    auto it = sched_.pods.find(pod);
    if (it != sched_.pods.end()) {
      if (it->second.phase != Phase::Terminating)
        monitors_.observe_phase(now_, kSched, pod, Phase::Terminating);
      monitors_.observe_phase(now_, kSched, pod, Phase::Removed);
      sched_.pods.erase(it);
    }
    sched_.discarded.insert(pod);
    monitors_.observe_discard(now_, kSched, pod);
    sched_.tombstones.erase(pod);
    if (ack_downstream && from.which == LinkRef::Which::SchedKlet)
      send_frame(from, Direction::Forward, make_ack_frame(pod));
    send_frame({LinkRef::Which::RsSched, 0}, Direction::Backward,
               make_removal_frame(pod));
    resolve_preemption_wait(pod);
    schedule_step(kSched);  // a slot may have opened
    return " removed pod=" + std::to_string(pod);
  }

  std::string step_kubelet(NodeId n) {
    KubeletState& kl = klets_.at(n);
    bool work = kl.next_publishable(now_).has_value() || !ingress_empty(klet_id(n));
    if (!work) return "";
    if (!pay(klet_id(n), 1)) return "";
    std::string what;
    if (auto p = kl.next_publishable(now_)) {
      SimTime done = registry_.call_done(klet_id(n), now_,
                                         registry_.params().full_object_bytes);
      if (done <= now_) {
        what += do_publish(n, *p);
      } else {
        kl.publish_inflight.insert(*p);
        push_event(done, EventKind::PublishDone, [&](Event& e) {
          e.node = n;
          e.pod = *p;
          e.epoch = kl.session.epoch;
        });
        what += " publish pod=" + std::to_string(*p) + " queued";
      }
    }
    if (auto in = pop_ingress(klet_id(n))) {
      what += apply_kubelet_frame(n, in->second);
    }
    if (!ingress_empty(klet_id(n)) || kl.next_publishable(now_))
      schedule_step(klet_id(n));
    if (what.empty()) return "";
    return "step kubelet:" + std::to_string(n) + what;
  }

  std::string do_publish(NodeId n, PodId pod) {
    KubeletState& kl = klets_.at(n);
    kl.publish_inflight.erase(pod);
    auto it = kl.pods.find(pod);
    if (it == kl.pods.end() || it->second.phase != Phase::Running)
      return " publish pod=" + std::to_string(pod) + " skipped";
    registry_.publish(it->second);
    kl.published.insert(pod);
    monitors_.observe_published(now_, pod);
    metrics_.cold_starts++;
    check_command_targets();
    return " published pod=" + std::to_string(pod);
  }

  std::string apply_kubelet_frame(NodeId n, const Frame& f) {
    KubeletState& kl = klets_.at(n);
    switch (f.type) {
      case FrameType::Data: {
        std::string what;
        for (const auto& rec : materialize(f.msg, templates_))
          what += kubelet_admit(n, rec);
        return what;
      }
      case FrameType::TombstoneFrame: {
        std::string what;
        for (const auto& [k, v] : f.msg.entries) {
          if (k.kind != ObjectKind::TombstoneKind) continue;
          Tombstone ts = unpack_tombstone(k.id, v.as_str());
          monitors_.observe_tombstone_held(klet_id(n), ts.pod);
          if (kl.pods.count(ts.pod)) {
            what += kubelet_terminate(n, ts.pod);
          } else if (!registry_.was_terminated(ts.pod)) {
            kl.pending_tombstones[ts.pod] = ts;  // applies if the pod shows up
            what += " ts pod=" + std::to_string(ts.pod) + " pending";
          }
        }
        return what;
      }
      case FrameType::Ack:
        return " ack";
      default:
        return "";
    }
  }

  std::string kubelet_admit(NodeId n, const PodRecord& rec) {
    KubeletState& kl = klets_.at(n);
    PodId pod = rec.pod;
    if (kl.pods.count(pod)) return " dup pod=" + std::to_string(pod);
    bool barred = kl.no_resurrect.count(pod) || registry_.was_terminated(pod);
    if (barred && !sc_.mutation_disable_no_resurrect) {
      send_frame({LinkRef::Which::SchedKlet, n}, Direction::Backward,
                 make_removal_frame(pod));
      return " rejected pod=" + std::to_string(pod) + " (terminated)";
    }
    if (!kl.registered) {
      send_frame({LinkRef::Which::SchedKlet, n}, Direction::Backward,
                 make_removal_frame(pod));
      return " rejected pod=" + std::to_string(pod) + " (unregistered)";
    }
    if (kl.occupancy() >= kl.capacity) {
      // capacity rejection is an eviction as far as the chain is concerned
      kl.no_resurrect.insert(pod);
      registry_.mark_terminated(pod);
      monitors_.observe_tail_terminated(now_, pod);
      send_frame({LinkRef::Which::SchedKlet, n}, Direction::Backward,
                 make_removal_frame(pod));
      return " rejected pod=" + std::to_string(pod) + " (capacity)";
    }
    PodRecord admitted = rec;
    admitted.node = n;
    monitors_.observe_admission(now_, klet_id(n), pod);
    kl.pods[pod] = admitted;
    monitors_.observe_phase(now_, klet_id(n), pod, admitted.phase);
    monitors_.observe_binding(now_, klet_id(n), pod, n);
    if (auto ts = kl.pending_tombstones.find(pod);
        ts != kl.pending_tombstones.end()) {
      kl.pending_tombstones.erase(ts);
      std::string out = " admit pod=" + std::to_string(pod);
      return out + kubelet_terminate(n, pod);
    }
    if (admitted.phase == Phase::Pending) {
      kl.ready_at[pod] = now_ + sc_.startup_delay;
      push_event(now_ + sc_.startup_delay, EventKind::PodReady, [&](Event& e) {
        e.node = n;
        e.pod = pod;
        e.epoch = kl.session.epoch;
      });
    } else if (admitted.phase == Phase::Running) {
      kl.ready_at[pod] = now_;
      schedule_step(klet_id(n));
    }
    return " admit pod=" + std::to_string(pod);
  }

  std::string kubelet_terminate(NodeId n, PodId pod) {
    KubeletState& kl = klets_.at(n);
    auto it = kl.pods.find(pod);
    if (it == kl.pods.end()) return "";
    if (it->second.phase != Phase::Terminating)
      monitors_.observe_phase(now_, klet_id(n), pod, Phase::Terminating);
    if (kl.published.count(pod)) {
      registry_.withdraw(pod);
      kl.published.erase(pod);
      check_command_targets();
    }
    registry_.mark_terminated(pod);
    monitors_.observe_tail_terminated(now_, pod);
    monitors_.observe_phase(now_, klet_id(n), pod, Phase::Removed);
    kl.pods.erase(pod);
    kl.ready_at.erase(pod);
    kl.no_resurrect.insert(pod);
    kl.pending_tombstones.erase(pod);
    send_frame({LinkRef::Which::SchedKlet, n}, Direction::Backward,
               make_removal_frame(pod));
    return " terminated pod=" + std::to_string(pod);
  }

  std::string fire_pod_ready(NodeId n, PodId pod, std::uint32_t epoch) {
    KubeletState& kl = klets_.at(n);
    if (epoch != kl.session.epoch) return "";
    auto it = kl.pods.find(pod);
    if (it == kl.pods.end() || it->second.phase != Phase::Pending) return "";
    it->second.phase = Phase::Running;
    it->second.version = kl.session.stamp();
    monitors_.observe_phase(now_, klet_id(n), pod, Phase::Running);
    Frame up;
    up.type = FrameType::Data;
    up.msg.entries.emplace_back(AttrKey{ObjectKind::Pod, pod, Attr::PhaseAttr},
                                AttrValue::of_phase(Phase::Running));
    up.msg.entries.emplace_back(
        AttrKey{ObjectKind::Pod, pod, Attr::Valid},
        AttrValue::of_str(pack_version(it->second.version)));
    send_frame({LinkRef::Which::SchedKlet, n}, Direction::Backward, up);
    schedule_step(klet_id(n));
    return "ready pod=" + std::to_string(pod) + " node=" + std::to_string(n);
  }

  std::string fire_publish_done(NodeId n, PodId pod, std::uint32_t epoch) {
    KubeletState& kl = klets_.at(n);
    if (epoch != kl.session.epoch) return "";
    std::string what = do_publish(n, pod);
    schedule_step(klet_id(n));
    return "publish-done" + what;
  }

  // --- faults ---

  std::string fire_fault(const FaultEvent& f) {
    switch (f.kind) {
      case FaultKind::CrashController: return crash(f.target);
      case FaultKind::Disconnect: {
        disconnect(f.links[0]);
        return "fault disconnect " + to_string(f.links[0]);
      }
      case FaultKind::Reconnect: {
        Link& l = links_.at(f.links[0]);
        if (!l.connected()) {
          l.set_connected(true);
          push_event(now_, EventKind::HandshakeKick,
                     [&](Event& e) { e.link = f.links[0]; });
        }
        try_cancel_sweep();
        return "fault reconnect " + to_string(f.links[0]);
      }
      case FaultKind::Partition: {
        for (const auto& lr : f.links) disconnect(lr);
        return "fault partition x" + std::to_string(f.links.size());
      }
      case FaultKind::EvictPod: {
        if (!klets_.count(f.node)) return "fault evict: unknown node";
        if (!klets_.at(f.node).pods.count(f.pod))
          return "fault evict: unknown pod " + std::to_string(f.pod);
        std::string what = kubelet_terminate(f.node, f.pod);
        return "fault evict node=" + std::to_string(f.node) + what;
      }
    }
    return "";
  }

  void disconnect(LinkRef lr) {
    Link& l = links_.at(lr);
    if (!l.connected()) return;
    l.set_connected(false);
    link_down_gen_[lr]++;
    sessions_.erase(lr);
  }

  std::vector<LinkRef> adjacent_links(ControllerId c) const {
    switch (c.kind) {
      case ControllerKind::Autoscaler: return {{LinkRef::Which::AsDp, 0}};
      case ControllerKind::Deployment:
        return {{LinkRef::Which::AsDp, 0}, {LinkRef::Which::DpRs, 0}};
      case ControllerKind::ReplicaSet:
        return {{LinkRef::Which::DpRs, 0}, {LinkRef::Which::RsSched, 0}};
      case ControllerKind::Scheduler: {
        std::vector<LinkRef> out{{LinkRef::Which::RsSched, 0}};
        for (NodeId n = 1; n <= sc_.num_nodes; ++n)
          out.push_back({LinkRef::Which::SchedKlet, n});
        return out;
      }
      case ControllerKind::Kubelet:
        return {{LinkRef::Which::SchedKlet, c.node}};
    }
    return {};
  }

  std::string crash(ControllerId c) {
    std::set<PodId> held;
    if (c == kRs)
      for (const auto& [p, ts] : rs_.tombstones) held.insert(p);
    if (c == kSched)
      for (const auto& [p, ts] : sched_.tombstones) held.insert(p);
    monitors_.observe_crash(c, held);

    ingress_[c].clear();
    paid_pending_.erase(c);
    paid_until_[c] = 0;
    busy_until_[c] = 0;

    switch (c.kind) {
      case ControllerKind::Autoscaler: {
        as_.wipe();
        // level-triggered: desired counts come from the metric source
        for (std::size_t i = 0; i < commands_issued_; ++i)
          as_.metric_desired[sc_.commands[i].function] =
              sc_.commands[i].desired_replicas;
        break;
      }
      case ControllerKind::Deployment:
        dp_.wipe();
        break;
      case ControllerKind::ReplicaSet: {
        rs_.wipe();
        // MaxPodId survives in the durable stub; the cache refills from the
        // registry's published view
        std::map<FunctionId, std::uint32_t> counts;
        for (const auto& [id, rec] : registry_.published()) {
          rs_.pods[id] = rec;
          rs_.forwarded.insert(id);
          monitors_.observe_phase(now_, kRs, id, rec.phase);
          counts[rec.function]++;
        }
        rs_.desired.clear();
        for (const auto& [fn, k] : counts) rs_.desired[fn] = k;
        break;
      }
      case ControllerKind::Scheduler: {
        sched_.wipe();
        for (const auto& [id, rec] : registry_.published()) {
          sched_.pods[id] = rec;
          monitors_.observe_phase(now_, kSched, id, rec.phase);
        }
        for (NodeId n = 1; n <= sc_.num_nodes; ++n)
          sched_.nodes[n] =
              NodeView{n, sc_.node_capacity, registry_.node_valid(n)};
        needs_cancel_sweep_ = true;
        break;
      }
      case ControllerKind::Kubelet: {
        KubeletState& kl = klets_.at(c.node);
        kl.wipe();
        for (const auto& [id, rec] : registry_.published_on(c.node)) {
          kl.pods[id] = rec;
          kl.published.insert(id);
          kl.ready_at[id] = now_;
          monitors_.observe_phase(now_, c, id, rec.phase);
        }
        break;
      }
    }
    for (LinkRef lr : adjacent_links(c)) {
      Link& l = links_.at(lr);
      if (!l.connected()) continue;
      disconnect(lr);
      pending_auto_reconnects_++;
      push_event(now_ + sc_.reconnect_delay, EventKind::AutoReconnect,
                 [&](Event& e) {
                   e.link = lr;
                   e.gen = link_down_gen_[lr];
                 });
    }
    try_cancel_sweep();
    return "fault crash " + to_string(c);
  }

  // --- handshakes ---

  bool downstream_ready(ControllerId c) const {
    switch (c.kind) {
      case ControllerKind::Autoscaler: return true;  // never a responder
      case ControllerKind::Deployment: {
        const Link& l = links_.at(LinkRef{LinkRef::Which::DpRs, 0});
        return l.connected() && !l.latched();
      }
      case ControllerKind::ReplicaSet: {
        const Link& l = links_.at(LinkRef{LinkRef::Which::RsSched, 0});
        return l.connected() && !l.latched();
      }
      case ControllerKind::Scheduler: {
        if (needs_cancel_sweep_) return false;
        bool any = false;
        for (NodeId n = 1; n <= sc_.num_nodes; ++n) {
          const Link& l = links_.at(LinkRef{LinkRef::Which::SchedKlet, n});
          if (!l.connected()) continue;
          if (l.latched()) return false;
          any = true;
        }
        return any;
      }
      case ControllerKind::Kubelet: return true;  // downstream is the registry
    }
    return true;
  }

  bool initiator_cache_empty(LinkRef lr) const {
    switch (lr.which) {
      case LinkRef::Which::AsDp: return as_.last_sent.empty();
      case LinkRef::Which::DpRs:
        return dp_.desired.empty() && dp_.forwarded.empty();
      case LinkRef::Which::RsSched: return rs_.pods.empty();
      case LinkRef::Which::SchedKlet: return sched_.pods.empty();
    }
    return true;
  }

  DigestInfo responder_digest(LinkRef lr) const {
    DigestInfo info;
    switch (lr.which) {
      case LinkRef::Which::AsDp:
        for (const auto& [fn, v] : dp_.desired)
          info.scalars[{ObjectKind::Deployment, fn}] = v;
        break;
      case LinkRef::Which::DpRs:
        for (const auto& [fn, v] : rs_.desired)
          info.scalars[{ObjectKind::ReplicaSet, fn}] = v;
        break;
      case LinkRef::Which::RsSched:
        for (const auto& [id, rec] : sched_.pods)
          if (!rec.invalid) info.live[id] = rec.version;
        break;
      case LinkRef::Which::SchedKlet: {
        const KubeletState& kl = klets_.at(lr.node);
        for (const auto& [id, rec] : kl.pods) info.live[id] = rec.version;
        for (PodId p : kl.no_resurrect) info.terminated.insert(p);
        break;
      }
    }
    return info;
  }

  std::map<PodId, Version> initiator_slice(LinkRef lr) const {
    std::map<PodId, Version> out;
    if (lr.which == LinkRef::Which::RsSched) {
      for (const auto& [id, rec] : rs_.pods)
        if (!rec.invalid) out[id] = rec.version;
    } else if (lr.which == LinkRef::Which::SchedKlet) {
      for (const auto& [id, rec] : sched_.pods)
        if (!rec.invalid && rec.node && *rec.node == lr.node)
          out[id] = rec.version;
    }
    return out;
  }

  bool maybe_start_handshake(LinkRef lr) {
    if (sc_.mode == RunMode::Centralized) return false;
    Link& l = links_.at(lr);
    if (!l.connected() || !l.latched()) return false;
    if (sessions_.count(lr)) return false;
    if (!downstream_ready(downstream_end(lr))) return false;
    // round 1: the responder ships version digests of its live state
    for (const Frame& f : build_digest_frames(responder_digest(lr)))
      send_frame(lr, Direction::Backward, f, true);
    HandshakeSession s;
    s.mode =
        initiator_cache_empty(lr) ? HandshakeMode::Recover : HandshakeMode::Reset;
    sessions_[lr] = std::move(s);
    return true;
  }

  void handle_handshake_frame(LinkRef lr, Direction dir, Frame f) {
    if (dir == Direction::Forward && f.type == FrameType::Fetch) {
      // responder side: serve the requested records
      std::vector<PodRecord> recs;
      for (PodId id : parse_fetch_frame(f)) {
        if (lr.which == LinkRef::Which::RsSched) {
          auto it = sched_.pods.find(id);
          if (it != sched_.pods.end() && !it->second.invalid)
            recs.push_back(it->second);
        } else if (lr.which == LinkRef::Which::SchedKlet) {
          auto& kl = klets_.at(lr.node);
          auto it = kl.pods.find(id);
          if (it != kl.pods.end()) recs.push_back(it->second);
        }
      }
      for (const Frame& out : build_state_frames(recs))
        send_frame(lr, Direction::Backward, out, true);
      return;
    }
    auto sit = sessions_.find(lr);
    if (sit == sessions_.end()) return;  // stale frame from a dead session
    HandshakeSession& s = sit->second;
    if (f.type == FrameType::Digest) {
      parse_digest_frame(f, s.remote);
      s.digest_seen = true;
      s.diff = compute_diff(initiator_slice(lr), s.remote);
      std::vector<PodId> want;
      if (s.mode == HandshakeMode::Recover) {
        for (const auto& [id, v] : s.remote.live) want.push_back(id);
      } else {
        want = s.diff.fetch;
      }
      for (PodId id : want) s.awaiting.insert(id);
      for (const Frame& out : build_fetch_frames(want))
        send_frame(lr, Direction::Forward, out, true);
      return;
    }
    if (f.type == FrameType::State) {
      for (const auto& rec : materialize(f.msg, templates_)) {
        s.staged.push_back(rec);
        s.awaiting.erase(rec.pod);
      }
      for (const auto& [k, v] : f.msg.entries)
        if (k.attr == Attr::Replicas)
          s.staged_scalars[{k.kind, k.id}] = v.as_int();
      s.state_seen = true;
      if (s.complete()) complete_handshake(lr);
      return;
    }
  }

  void complete_handshake(LinkRef lr) {
    HandshakeSession s = std::move(sessions_.at(lr));
    sessions_.erase(lr);
    Link& l = links_.at(lr);
    std::string name = l.name();
    std::set<PodId> reissued;

    switch (lr.which) {
      case LinkRef::Which::AsDp: {
        as_.last_sent.clear();
        for (const auto& [key, v] : s.remote.scalars)
          if (key.first == ObjectKind::Deployment)
            as_.last_sent[static_cast<FunctionId>(key.second)] =
                static_cast<std::uint32_t>(v);
        break;
      }
      case LinkRef::Which::DpRs: {
        dp_.forwarded.clear();
        for (const auto& [key, v] : s.remote.scalars)
          if (key.first == ObjectKind::ReplicaSet)
            dp_.forwarded[static_cast<FunctionId>(key.second)] =
                static_cast<std::uint32_t>(v);
        if (s.mode == HandshakeMode::Recover) dp_.desired = dp_.forwarded;
        break;
      }
      case LinkRef::Which::RsSched:
        apply_rs_sched_handshake(s);
        break;
      case LinkRef::Which::SchedKlet:
        reissued = apply_sched_klet_handshake(lr.node, s);
        break;
    }

    l.clear_latch();
    flush_pending_reforwards();
    if (lr.which == LinkRef::Which::RsSched) {
      // the exchanged digests subsume any invalidations still awaiting acks
      std::vector<PodId> hidden;
      for (const auto& [id, rec] : sched_.pods)
        if (rec.invalid) hidden.push_back(id);
      for (PodId id : hidden) {
        sched_.pods.erase(id);
        sched_.discarded.insert(id);
        monitors_.observe_discard(now_, kSched, id);
      }
    }
    metrics_.handshakes_completed++;
    {
      std::set<PodId> up_ids, down_ids;
      for (const auto& [id, v] : initiator_slice(lr)) up_ids.insert(id);
      for (const auto& [id, v] : s.remote.live) down_ids.insert(id);
      monitors_.check_handshake(now_, name, up_ids, reissued, down_ids);
    }

    // now that the pair is synchronized, replicate live tombstones again
    if (lr.which == LinkRef::Which::RsSched) {
      for (const auto& [pod, ts] : rs_.tombstones)
        send_frame(lr, Direction::Forward, make_tombstone_frame(ts));
    }
    if (lr.which == LinkRef::Which::SchedKlet) {
      KubeletState& kl = klets_.at(lr.node);
      if (!kl.registered) {
        // fresh registration: the node rejoins empty and valid
        kl.registered = true;
        registry_.set_node_valid(lr.node, true);
      }
      for (const auto& [pod, ts] : sched_.tombstones) {
        auto it = sched_.pods.find(pod);
        if (it != sched_.pods.end() && !it->second.invalid &&
            it->second.node && *it->second.node == lr.node)
          send_frame(lr, Direction::Forward, make_tombstone_frame(ts));
      }
    }

    schedule_step(upstream_end(lr));
    schedule_step(downstream_end(lr));
    trace_.push_back(
        "t=" + std::to_string(now_) + " handshake " + name + " complete (" +
        (s.mode == HandshakeMode::Recover ? "recover" : "reset") + ")");
    if (observer) observer(*this, "handshake " + name + " complete");

    try_cancel_sweep();
    // downstream-first: this completion may unblock the upstream link
    for (LinkRef up : upstream_links_of(upstream_end(lr)))
      push_event(now_, EventKind::HandshakeKick, [&](Event& e) { e.link = up; });
  }

  std::vector<LinkRef> upstream_links_of(ControllerId c) const {
    switch (c.kind) {
      case ControllerKind::Deployment: return {{LinkRef::Which::AsDp, 0}};
      case ControllerKind::ReplicaSet: return {{LinkRef::Which::DpRs, 0}};
      case ControllerKind::Scheduler: return {{LinkRef::Which::RsSched, 0}};
      default: return {};
    }
  }

  void apply_rs_sched_handshake(HandshakeSession& s) {
    // adopt downstream truth for everything the scheduler has
    for (const auto& rec : s.staged) {
      if (rs_.discarded.count(rec.pod)) continue;
      if (registry_.was_terminated(rec.pod) && !rs_.pods.count(rec.pod)) continue;
      std::optional<PodRecord> local;
      if (auto it = rs_.pods.find(rec.pod); it != rs_.pods.end())
        local = it->second;
      PodRecord merged = merge_record(local, rec);
      merged.invalid = false;
      merged.dirty = false;  // nothing above the ReplicaSet holds pod records
      if (!local) monitors_.observe_admission(now_, kRs, rec.pod);
      if (!local || local->phase != merged.phase)
        monitors_.observe_phase(now_, kRs, rec.pod, merged.phase);
      if (merged.node && (!local || local->node != merged.node))
        monitors_.observe_binding(now_, kRs, rec.pod, *merged.node);
      rs_.pods[rec.pod] = merged;
    }
    // pods the downstream does not have: invalidate (or, in the broken
    // variant, fast-forward our stale copies downstream again)
    std::vector<PodId> absent;
    for (const auto& [id, rec] : rs_.pods)
      if (!rec.invalid && !s.remote.live.count(id)) absent.push_back(id);
    for (PodId id : absent) {
      if (sc_.mutation_disable_reset_invalidation) {
        Frame f;
        f.type = FrameType::Data;
        append_record_entries(f.msg, rs_.pods[id]);
        // queued behind the latch clear below
        pending_reforward_.push_back({LinkRef{LinkRef::Which::RsSched, 0}, f});
        continue;
      }
      rs_.pods.erase(id);
      rs_.forwarded.erase(id);
      rs_.discarded.insert(id);
      monitors_.observe_discard(now_, kRs, id);
      rs_.tombstones.erase(id);
    }
    rs_.forwarded.clear();
    for (const auto& [id, v] : s.remote.live) rs_.forwarded.insert(id);
    if (sc_.mutation_disable_reset_invalidation)
      for (PodId id : absent) rs_.forwarded.insert(id);
  }

  std::set<PodId> apply_sched_klet_handshake(NodeId node, HandshakeSession& s) {
    std::set<PodId> reissued;
    ChangeSet change;
    for (const auto& rec : s.staged) {
      if (sched_.discarded.count(rec.pod)) continue;
      if (registry_.was_terminated(rec.pod) && !sched_.pods.count(rec.pod) &&
          !sc_.mutation_disable_no_resurrect)
        continue;  // terminated while we were apart; never readopt
      std::optional<PodRecord> local;
      if (auto it = sched_.pods.find(rec.pod); it != sched_.pods.end())
        local = it->second;
      PodRecord merged = merge_record(local, rec);
      merged.invalid = false;
      if (!local) monitors_.observe_admission(now_, kSched, rec.pod);
      if (!local || local->phase != merged.phase)
        monitors_.observe_phase(now_, kSched, rec.pod, merged.phase);
      if (merged.node && (!local || local->node != merged.node))
        monitors_.observe_binding(now_, kSched, rec.pod, *merged.node);
      sched_.pods[rec.pod] = merged;
      change.overwritten.insert(rec.pod);
    }
    // local pods for this node the kubelet does not have
    std::vector<PodId> absent;
    for (const auto& [id, rec] : sched_.pods)
      if (!rec.invalid && rec.node && *rec.node == node &&
          !s.remote.live.count(id))
        absent.push_back(id);
    for (PodId id : absent) {
      PodRecord& rec = sched_.pods[id];
      bool terminated = s.remote.terminated.count(id) ||
                        registry_.was_terminated(id);
      if (terminated && !sc_.mutation_disable_no_resurrect) {
        // the kubelet actively terminated it while we were apart
        if (rec.phase != Phase::Terminating)
          monitors_.observe_phase(now_, kSched, id, Phase::Terminating);
        monitors_.observe_phase(now_, kSched, id, Phase::Removed);
        rec.phase = Phase::Removed;
        rec.invalid = true;  // hidden until the upstream acks the removal
        change.invalidated.insert(id);
        sched_.tombstones.erase(id);
        resolve_preemption_wait(id);
      } else {
        // a write in flight that never arrived: re-issue it
        pending_reforward_.push_back({LinkRef{LinkRef::Which::SchedKlet, node},
                                      placement_frame(rec)});
        reissued.insert(id);
      }
    }
    // propagate the change set upstream as soft invalidations
    for (PodId id : change.overwritten) {
      auto it = sched_.pods.find(id);
      if (it == sched_.pods.end()) continue;
      Frame up;
      up.type = FrameType::Data;
      append_record_entries(up.msg, it->second);
      send_frame({LinkRef::Which::RsSched, 0}, Direction::Backward, up);
      it->second.dirty = false;
    }
    for (PodId id : change.invalidated)
      send_frame({LinkRef::Which::RsSched, 0}, Direction::Backward,
                 make_removal_frame(id));
    return reissued;
  }

  Frame placement_frame(const PodRecord& rec) {
    Frame f;
    f.type = FrameType::Data;
    append_record_entries(f.msg, rec);
    return f;
  }

  // --- cancellation (unreachable nodes after a scheduler restart) ---

  void try_cancel_sweep() {
    if (!needs_cancel_sweep_) return;
    if (pending_auto_reconnects_ > auto_reconnects_fired_) return;
    for (NodeId n = 1; n <= sc_.num_nodes; ++n) {
      const Link& l = links_.at(LinkRef{LinkRef::Which::SchedKlet, n});
      if (l.connected() && l.latched()) return;  // handshake still running
    }
    needs_cancel_sweep_ = false;
    for (NodeId n = 1; n <= sc_.num_nodes; ++n) {
      const Link& l = links_.at(LinkRef{LinkRef::Which::SchedKlet, n});
      if (l.connected()) continue;
      cancel_node(n);
    }
    // the scheduler may now serve its upstream
    push_event(now_, EventKind::HandshakeKick,
               [&](Event& e) { e.link = LinkRef{LinkRef::Which::RsSched, 0}; });
  }

  void cancel_node(NodeId n) {
    SimTime done = registry_.call_done(kSched, now_, 256);
    push_event(done, EventKind::NodeMarkDone, [&](Event& e) {
      e.node = n;
      e.valid_mark = false;
    });
    trace_.push_back("t=" + std::to_string(now_) + " cancel node " +
                     std::to_string(n));
    // everything believed bound there is irreversibly terminating
    for (auto& [id, rec] : sched_.pods) {
      if (rec.invalid || !rec.node || *rec.node != n) continue;
      if (rec.phase != Phase::Terminating)
        monitors_.observe_phase(now_, kSched, id, Phase::Terminating);
      monitors_.observe_phase(now_, kSched, id, Phase::Removed);
      rec.phase = Phase::Removed;
      rec.invalid = true;
      registry_.mark_terminated(id);
      monitors_.observe_tail_terminated(now_, id);
      if (registry_.published().count(id)) registry_.withdraw(id);
      send_frame({LinkRef::Which::RsSched, 0}, Direction::Backward,
                 make_removal_frame(id));
      resolve_preemption_wait(id);
    }
    check_command_targets();
  }

  std::string fire_node_mark_notify(NodeId n, bool valid) {
    if (registry_.node_valid(n) != valid) return "";  // stale notification
    if (valid) return "";
    KubeletState& kl = klets_.at(n);
    std::string what = "node " + std::to_string(n) + " drains:";
    std::vector<PodId> all;
    for (const auto& [id, rec] : kl.pods) all.push_back(id);
    for (PodId id : all) what += kubelet_terminate(n, id);
    kl.registered = false;
    return what;
  }

  // --- preemption ---

  std::string fire_preempt(PodId victim, const PodRecord& hipri) {
    auto it = sched_.pods.find(victim);
    if (it == sched_.pods.end() || it->second.invalid) {
      // idempotent termination: the slot is already free
      preempt_status_[victim] = PreemptStatus::Placed;
      monitors_.observe_admission(now_, kSched, hipri.pod);
      sched_.pods[hipri.pod] = hipri;
      monitors_.observe_phase(now_, kSched, hipri.pod, hipri.phase);
      schedule_step(kSched);
      return "preempt: victim " + std::to_string(victim) + " already gone";
    }
    Tombstone ts{victim, kSched, sched_.session.epoch};
    sched_.tombstones[victim] = ts;
    monitors_.observe_tombstone_held(kSched, victim);
    if (!it->second.node) {
      // never forwarded: terminate locally, place immediately
      monitors_.observe_phase(now_, kSched, victim, Phase::Terminating);
      monitors_.observe_phase(now_, kSched, victim, Phase::Removed);
      sched_.pods.erase(victim);
      sched_.discarded.insert(victim);
      monitors_.observe_discard(now_, kSched, victim);
      sched_.tombstones.erase(victim);
      send_frame({LinkRef::Which::RsSched, 0}, Direction::Backward,
                 make_removal_frame(victim));
      preempt_status_[victim] = PreemptStatus::Placed;
      monitors_.observe_admission(now_, kSched, hipri.pod);
      sched_.pods[hipri.pod] = hipri;
      monitors_.observe_phase(now_, kSched, hipri.pod, hipri.phase);
      schedule_step(kSched);
      return "preempt: victim " + std::to_string(victim) + " was unbound";
    }
    NodeId n = *it->second.node;
    if (it->second.phase != Phase::Terminating) {
      it->second.phase = Phase::Terminating;
      it->second.version = sched_.session.stamp();
      monitors_.observe_phase(now_, kSched, victim, Phase::Terminating);
    }
    preempt_status_[victim] = PreemptStatus::TimedWaiting;
    PodRecord parked = hipri;
    parked.node = n;  // placement is conditioned on the victim's slot
    sched_.parked[victim] = parked;
    send_frame({LinkRef::Which::SchedKlet, n}, Direction::Forward,
               make_tombstone_frame(ts));
    return "preempt: waiting on victim " + std::to_string(victim);
  }

  void resolve_preemption_wait(PodId victim) {
    auto it = sched_.parked.find(victim);
    if (it == sched_.parked.end()) return;
    PodRecord hipri = it->second;
    sched_.parked.erase(it);
    preempt_status_[victim] = PreemptStatus::Placed;
    monitors_.observe_admission(now_, kSched, hipri.pod);
    hipri.version = sched_.session.stamp();
    sched_.pods[hipri.pod] = hipri;
    monitors_.observe_phase(now_, kSched, hipri.pod, hipri.phase);
    if (hipri.node) {
      monitors_.observe_binding(now_, kSched, hipri.pod, *hipri.node);
      send_placement(sched_.pods[hipri.pod]);
      Frame up;
      up.type = FrameType::Data;
      append_record_entries(up.msg, sched_.pods[hipri.pod]);
      send_frame({LinkRef::Which::RsSched, 0}, Direction::Backward, up);
    }
  }

  // --- end of run ---

  struct CommandTarget {
    std::size_t index;
    FunctionId fn;
    std::uint32_t count;
    SimTime issued;
    SimTime reached;
  };

  void check_command_targets() {
    for (auto& tgt : command_targets_) {
      if (tgt.reached >= 0) continue;
      if (registry_.published_count(tgt.fn) == tgt.count) tgt.reached = now_;
    }
  }

  void flush_pending_reforwards() {
    auto items = std::move(pending_reforward_);
    pending_reforward_.clear();
    for (auto& [lr, f] : items) {
      send_frame(lr, Direction::Forward, f);
      if (lr.which == LinkRef::Which::RsSched)
        for (const auto& [k, v] : f.msg.entries)
          if (k.kind == ObjectKind::Pod && k.id != 0) rs_.forwarded.insert(k.id);
    }
  }

  void finish() {
    metrics_.end_time = now_;
    metrics_.quiescent = events_.empty();
    for (const auto& [fn, want] : metrics_.final_desired)
      metrics_.published_per_fn[fn] =
          static_cast<std::uint32_t>(registry_.published_count(fn));
    bool conv = true;
    for (const auto& [fn, want] : metrics_.final_desired)
      if (metrics_.published_per_fn[fn] != want) conv = false;
    metrics_.converged = conv;
    SimTime lf = sc_.last_fault_time();
    metrics_.faults_ceased_in_time =
        lf < 0 || lf <= sc_.max_sim_time - sc_.convergence_budget;
    check_command_targets();
    metrics_.command_latency.clear();
    SimTime last_reach = first_cmd_time_;
    for (const auto& tgt : command_targets_) {
      metrics_.command_latency.push_back(
          tgt.reached < 0 ? -1 : tgt.reached - tgt.issued);
      if (tgt.reached > last_reach) last_reach = tgt.reached;
    }
    metrics_.scaleout_total =
        first_cmd_time_ < 0 ? 0
                            : std::max<SimTime>(0, last_reach - first_cmd_time_);

    std::set<PodId> live;
    for (const auto& [id, rec] : rs_.pods)
      if (!rec.invalid) live.insert(id);
    for (const auto& [id, rec] : sched_.pods)
      if (!rec.invalid) live.insert(id);
    for (const auto& [n, kl] : klets_)
      for (const auto& [id, rec] : kl.pods) live.insert(id);
    for (const auto& [id, rec] : registry_.published()) live.insert(id);
    std::set<PodId> ts_alive;
    for (const auto& [p, ts] : rs_.tombstones) ts_alive.insert(p);
    for (const auto& [p, ts] : sched_.tombstones) ts_alive.insert(p);
    monitors_.audit_tombstones(now_, live, ts_alive);

    if (metrics_.quiescent) check_quiescent_agreement();
  }

  // Testable form of the safety invariant: at a quiescent cut with all links
  // up, unlatched and drained, upstream state agrees with downstream state.
  void check_quiescent_agreement() {
    for (const auto& [lr, l] : links_)
      if (!l.connected() || l.latched() || !l.idle()) return;
    for (const auto& [c, q] : ingress_)
      if (!q.empty()) return;
    auto rank = [](Phase p) { return static_cast<int>(p); };
    for (const auto& [id, rec] : rs_.pods) {
      if (rec.invalid) continue;
      auto it = sched_.pods.find(id);
      if (it == sched_.pods.end() || it->second.invalid) {
        monitors_.violation(now_, "agreement: rs pod " + std::to_string(id) +
                                      " missing at scheduler");
        continue;
      }
      if (rec.node && it->second.node && *rec.node != *it->second.node)
        monitors_.violation(now_, "agreement: rs/sched node mismatch pod " +
                                      std::to_string(id));
      if (rank(rec.phase) > rank(it->second.phase))
        monitors_.violation(now_, "agreement: rs ahead of sched for pod " +
                                      std::to_string(id));
    }
    for (const auto& [id, rec] : sched_.pods) {
      if (rec.invalid || !rec.node || rec.phase == Phase::Terminating) continue;
      const KubeletState& kl = klets_.at(*rec.node);
      auto it = kl.pods.find(id);
      if (it == kl.pods.end()) {
        monitors_.violation(now_, "agreement: sched pod " + std::to_string(id) +
                                      " missing at kubelet " +
                                      std::to_string(*rec.node));
        continue;
      }
      if (rank(rec.phase) > rank(it->second.phase))
        monitors_.violation(now_, "agreement: sched ahead of kubelet for pod " +
                                      std::to_string(id));
    }
    for (const auto& [id, rec] : rs_.pods)
      if (!rec.invalid && monitors_.tail_terminated().count(id))
        monitors_.violation(now_, "agreement: rs holds terminated pod " +
                                      std::to_string(id));
    for (const auto& [id, rec] : sched_.pods)
      if (!rec.invalid && monitors_.tail_terminated().count(id))
        monitors_.violation(now_, "agreement: sched holds terminated pod " +
                                      std::to_string(id));
  }

  // --- data ---
  Scenario sc_;
  Registry registry_;
  TemplateStore templates_;
  AutoscalerState as_;
  DeploymentState dp_;
  ReplicaSetState rs_;
  SchedulerState sched_;
  std::map<NodeId, KubeletState> klets_;
  std::map<LinkRef, Link> links_;
  std::map<ControllerId, std::deque<std::pair<LinkRef, Frame>>> ingress_;
  std::map<LinkRef, HandshakeSession> sessions_;
  std::map<LinkRef, std::uint64_t> link_down_gen_;
  std::map<ControllerId, SimTime> busy_until_;
  std::map<ControllerId, SimTime> paid_until_;
  std::set<ControllerId> paid_pending_;
  std::set<ControllerId> step_pending_;
  std::vector<std::pair<LinkRef, Frame>> pending_reforward_;
  std::uint64_t durable_max_pod_id_ = 0;
  bool needs_cancel_sweep_ = false;
  std::uint64_t pending_auto_reconnects_ = 0;
  std::uint64_t auto_reconnects_fired_ = 0;

  std::vector<CommandTarget> command_targets_;
  SimTime first_cmd_time_ = -1;
  std::size_t commands_issued_ = 0;

  std::map<PodId, PreemptStatus> preempt_status_;

  std::priority_queue<Event, std::vector<Event>, EventCmp> events_;
  std::uint64_t event_seq_ = 0;
  std::uint64_t wire_seq_ = 0;
  SimTime now_ = 0;
  Monitors monitors_;
  RunMetrics metrics_;
  std::vector<std::string> trace_;
};

// Convenience wrappers ------------------------------------------------------

inline RunResult run_scenario(const Scenario& sc) {
  Simulation sim(sc);
  return sim.run();
}

inline std::pair<RunResult, RunResult> run_baseline_comparison(Scenario sc) {
  if (!sc.faults.empty())
    throw std::invalid_argument("baseline comparison runs are fault-free");
  sc.mode = RunMode::Direct;
  RunResult direct = run_scenario(sc);
  sc.mode = RunMode::Centralized;
  RunResult central = run_scenario(sc);
  return {direct, central};
}

}  // namespace podchain
