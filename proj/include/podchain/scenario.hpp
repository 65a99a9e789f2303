#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "podchain/core.hpp"
#include "podchain/registry.hpp"

namespace podchain {

// Which link a fault targets.
struct LinkRef {
  enum class Which : std::uint8_t { AsDp = 0, DpRs = 1, RsSched = 2, SchedKlet = 3 };
  Which which = Which::AsDp;
  NodeId node = 0;  // SchedKlet only

  friend bool operator==(const LinkRef&, const LinkRef&) = default;
  friend auto operator<=>(const LinkRef&, const LinkRef&) = default;
};

inline std::string to_string(LinkRef l) {
  switch (l.which) {
    case LinkRef::Which::AsDp: return "as-dp";
    case LinkRef::Which::DpRs: return "dp-rs";
    case LinkRef::Which::RsSched: return "rs-sched";
    case LinkRef::Which::SchedKlet:
      return "sched-klet:" + std::to_string(l.node);
  }
  return "?";
}

inline std::optional<LinkRef> parse_link(const std::string& s) {
  if (s == "as-dp") return LinkRef{LinkRef::Which::AsDp, 0};
  if (s == "dp-rs") return LinkRef{LinkRef::Which::DpRs, 0};
  if (s == "rs-sched") return LinkRef{LinkRef::Which::RsSched, 0};
  if (s.rfind("sched-klet:", 0) == 0) {
    NodeId n = static_cast<NodeId>(std::stoul(s.substr(11)));
    return LinkRef{LinkRef::Which::SchedKlet, n};
  }
  return std::nullopt;
}

inline std::optional<ControllerId> parse_controller(const std::string& s) {
  if (s == "autoscaler") return ControllerId{ControllerKind::Autoscaler, 0};
  if (s == "deployment") return ControllerId{ControllerKind::Deployment, 0};
  if (s == "replicaset") return ControllerId{ControllerKind::ReplicaSet, 0};
  if (s == "scheduler") return ControllerId{ControllerKind::Scheduler, 0};
  if (s.rfind("kubelet:", 0) == 0) {
    NodeId n = static_cast<NodeId>(std::stoul(s.substr(8)));
    return ControllerId{ControllerKind::Kubelet, n};
  }
  return std::nullopt;
}

enum class FaultKind : std::uint8_t {
  CrashController = 0,
  Disconnect = 1,
  Reconnect = 2,
  Partition = 3,
  EvictPod = 4,
};

struct FaultEvent {
  SimTime at = 0;
  FaultKind kind = FaultKind::Disconnect;
  ControllerId target;          // CrashController
  std::vector<LinkRef> links;   // Disconnect/Reconnect (one) or Partition
  NodeId node = 0;              // EvictPod
  PodId pod = 0;                // EvictPod
};

enum class RunMode : std::uint8_t { Direct = 0, Centralized = 1 };

struct Scenario {
  std::uint64_t seed = 0;
  std::uint32_t num_nodes = 2;
  std::uint32_t node_capacity = 8;
  RunMode mode = RunMode::Direct;
  SimTime max_sim_time = 200000;
  SimTime convergence_budget = 5000;
  SimTime link_latency = 1;
  SimTime startup_delay = 0;
  SimTime proc_cost = 1;       // per object handled in a control loop
  SimTime reconnect_delay = 2; // restart-to-reconnect gap after a crash
  RegistryParams registry;
  std::vector<ScalingCommand> commands;
  std::vector<FaultEvent> faults;
  // broken-build knobs used by the anomaly regression tests
  bool mutation_disable_no_resurrect = false;
  bool mutation_disable_reset_invalidation = false;

  SimTime last_fault_time() const {
    SimTime t = -1;
    for (const auto& f : faults) t = std::max(t, f.at);
    return t;
  }
};

// ---------------------------------------------------------------------------
// Text format: one record per line.
//   config <key>=<value>
//   cmd <t> <function> <replicas>
//   fault <t> crash <controller>
//   fault <t> disconnect <link>
//   fault <t> reconnect <link>
//   fault <t> partition <link> [<link> ...]
//   fault <t> evict <node> <pod>
// '#' starts a comment.

struct ScenarioParseError : std::runtime_error {
  explicit ScenarioParseError(const std::string& why)
      : std::runtime_error("scenario: " + why) {}
};

inline Scenario parse_scenario(std::istream& in) {
  Scenario sc;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    auto fail = [&](const std::string& why) {
      throw ScenarioParseError("line " + std::to_string(lineno) + ": " + why);
    };
    if (kind == "config") {
      std::string kv;
      if (!(ls >> kv)) fail("config needs key=value");
      auto eq = kv.find('=');
      if (eq == std::string::npos) fail("config needs key=value");
      std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
      auto as_i = [&]() { return std::stoll(val); };
      if (key == "seed") sc.seed = std::stoull(val);
      else if (key == "num_nodes") sc.num_nodes = static_cast<std::uint32_t>(as_i());
      else if (key == "node_capacity") sc.node_capacity = static_cast<std::uint32_t>(as_i());
      else if (key == "mode") {
        if (val == "direct") sc.mode = RunMode::Direct;
        else if (val == "centralized") sc.mode = RunMode::Centralized;
        else fail("mode must be direct|centralized");
      }
      else if (key == "max_sim_time") sc.max_sim_time = as_i();
      else if (key == "convergence_budget") sc.convergence_budget = as_i();
      else if (key == "link_latency") sc.link_latency = as_i();
      else if (key == "startup_delay") sc.startup_delay = as_i();
      else if (key == "proc_cost") sc.proc_cost = as_i();
      else if (key == "reconnect_delay") sc.reconnect_delay = as_i();
      else if (key == "registry_call_latency") sc.registry.call_latency = as_i();
      else if (key == "registry_notify_latency") sc.registry.notify_latency = as_i();
      else if (key == "registry_rate_tokens") sc.registry.rate_tokens = std::stod(val);
      else if (key == "registry_rate_window") sc.registry.rate_window = as_i();
      else if (key == "registry_rate_burst") sc.registry.rate_burst = std::stod(val);
      else if (key == "registry_object_bytes") sc.registry.full_object_bytes = static_cast<std::size_t>(as_i());
      else if (key == "registry_ser_per_kib") sc.registry.ser_units_per_kib = as_i();
      else fail("unknown config key " + key);
    } else if (kind == "cmd") {
      ScalingCommand c;
      long long t, fn, n;
      if (!(ls >> t >> fn >> n)) fail("cmd <t> <fn> <replicas>");
      c.issue_time = t;
      c.function = static_cast<FunctionId>(fn);
      c.desired_replicas = static_cast<std::uint32_t>(n);
      sc.commands.push_back(c);
    } else if (kind == "fault") {
      FaultEvent f;
      long long t;
      std::string what;
      if (!(ls >> t >> what)) fail("fault <t> <kind> ...");
      f.at = t;
      if (what == "crash") {
        std::string c;
        if (!(ls >> c)) fail("crash <controller>");
        auto id = parse_controller(c);
        if (!id) fail("unknown controller " + c);
        f.kind = FaultKind::CrashController;
        f.target = *id;
      } else if (what == "disconnect" || what == "reconnect") {
        std::string l;
        if (!(ls >> l)) fail(what + " <link>");
        auto lr = parse_link(l);
        if (!lr) fail("unknown link " + l);
        f.kind = what == "disconnect" ? FaultKind::Disconnect : FaultKind::Reconnect;
        f.links = {*lr};
      } else if (what == "partition") {
        f.kind = FaultKind::Partition;
        std::string l;
        while (ls >> l) {
          auto lr = parse_link(l);
          if (!lr) fail("unknown link " + l);
          f.links.push_back(*lr);
        }
        if (f.links.empty()) fail("partition needs at least one link");
      } else if (what == "evict") {
        long long n, p;
        if (!(ls >> n >> p)) fail("evict <node> <pod>");
        f.kind = FaultKind::EvictPod;
        f.node = static_cast<NodeId>(n);
        f.pod = static_cast<PodId>(p);
      } else {
        fail("unknown fault kind " + what);
      }
      sc.faults.push_back(f);
    } else {
      fail("unknown record kind " + kind);
    }
  }
  auto by_time = [](const auto& a, const auto& b) { return a.issue_time < b.issue_time; };
  std::stable_sort(sc.commands.begin(), sc.commands.end(), by_time);
  std::stable_sort(sc.faults.begin(), sc.faults.end(),
                   [](const auto& a, const auto& b) { return a.at < b.at; });
  return sc;
}

inline std::string format_scenario(const Scenario& sc) {
  std::ostringstream out;
  out << "config seed=" << sc.seed << "\n";
  out << "config num_nodes=" << sc.num_nodes << "\n";
  out << "config node_capacity=" << sc.node_capacity << "\n";
  out << "config mode=" << (sc.mode == RunMode::Direct ? "direct" : "centralized") << "\n";
  out << "config max_sim_time=" << sc.max_sim_time << "\n";
  for (const auto& c : sc.commands)
    out << "cmd " << c.issue_time << " " << c.function << " "
        << c.desired_replicas << "\n";
  for (const auto& f : sc.faults) {
    out << "fault " << f.at << " ";
    switch (f.kind) {
      case FaultKind::CrashController:
        out << "crash " << to_string(f.target);
        break;
      case FaultKind::Disconnect:
        out << "disconnect " << to_string(f.links[0]);
        break;
      case FaultKind::Reconnect:
        out << "reconnect " << to_string(f.links[0]);
        break;
      case FaultKind::Partition: {
        out << "partition";
        for (const auto& l : f.links) out << " " << to_string(l);
        break;
      }
      case FaultKind::EvictPod:
        out << "evict " << f.node << " " << f.pod;
        break;
    }
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Seeded random scenarios for the safety suite: small clusters, a handful of
// scaling commands, mixed fault scripts that always cease well before the
// convergence budget.

inline Scenario random_scenario(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::uint64_t lo, std::uint64_t hi) {
    return lo + rng() % (hi - lo + 1);
  };

  Scenario sc;
  sc.seed = seed;
  sc.num_nodes = static_cast<std::uint32_t>(pick(1, 8));
  std::uint32_t fns = static_cast<std::uint32_t>(pick(1, 3));
  // keep total desired within both the pod budget and cluster capacity
  std::uint32_t max_total = 20;
  sc.node_capacity =
      std::max<std::uint32_t>(3, (max_total + sc.num_nodes - 1) / sc.num_nodes);

  SimTime t = 0;
  std::uint32_t budget = max_total;
  std::vector<std::uint32_t> current(fns, 0);
  std::uint32_t ncmds = static_cast<std::uint32_t>(pick(1, 5));
  for (std::uint32_t i = 0; i < ncmds; ++i) {
    t += static_cast<SimTime>(pick(0, 120));
    FunctionId fn = static_cast<FunctionId>(pick(0, fns - 1));
    std::uint32_t headroom = budget;
    for (std::uint32_t f = 0; f < fns; ++f)
      if (f != fn) headroom -= std::min(headroom, current[f]);
    std::uint32_t want = static_cast<std::uint32_t>(pick(0, std::min<std::uint64_t>(headroom, 9)));
    if (want == current[fn]) want = (want + 1 <= headroom) ? want + 1 : (want > 0 ? want - 1 : 0);
    current[fn] = want;
    sc.commands.push_back({fn, want, t});
  }

  std::uint32_t nfaults = static_cast<std::uint32_t>(pick(0, 4));
  SimTime ft = 10;
  auto some_link = [&]() {
    switch (pick(0, 3)) {
      case 0: return LinkRef{LinkRef::Which::AsDp, 0};
      case 1: return LinkRef{LinkRef::Which::DpRs, 0};
      case 2: return LinkRef{LinkRef::Which::RsSched, 0};
      default:
        return LinkRef{LinkRef::Which::SchedKlet,
                       static_cast<NodeId>(pick(1, sc.num_nodes))};
    }
  };
  for (std::uint32_t i = 0; i < nfaults; ++i) {
    ft += static_cast<SimTime>(pick(5, 150));
    switch (pick(0, 4)) {
      case 0: {  // disconnect + paired reconnect
        FaultEvent d;
        d.at = ft;
        d.kind = FaultKind::Disconnect;
        d.links = {some_link()};
        sc.faults.push_back(d);
        FaultEvent r = d;
        r.kind = FaultKind::Reconnect;
        r.at = ft + static_cast<SimTime>(pick(5, 100));
        sc.faults.push_back(r);
        break;
      }
      case 1: {
        FaultEvent f;
        f.at = ft;
        f.kind = FaultKind::CrashController;
        switch (pick(0, 4)) {
          case 0: f.target = {ControllerKind::Autoscaler, 0}; break;
          case 1: f.target = {ControllerKind::Deployment, 0}; break;
          case 2: f.target = {ControllerKind::ReplicaSet, 0}; break;
          case 3: f.target = {ControllerKind::Scheduler, 0}; break;
          default:
            f.target = {ControllerKind::Kubelet,
                        static_cast<NodeId>(pick(1, sc.num_nodes))};
        }
        sc.faults.push_back(f);
        break;
      }
      case 2: {  // partition a couple of links, heal later
        FaultEvent p;
        p.at = ft;
        p.kind = FaultKind::Partition;
        p.links.push_back(some_link());
        auto other = some_link();
        if (!(other == p.links[0])) p.links.push_back(other);
        sc.faults.push_back(p);
        SimTime heal = ft + static_cast<SimTime>(pick(10, 120));
        for (const auto& l : p.links) {
          FaultEvent r;
          r.at = heal;
          r.kind = FaultKind::Reconnect;
          r.links = {l};
          sc.faults.push_back(r);
        }
        break;
      }
      case 3: {
        FaultEvent e;
        e.at = ft;
        e.kind = FaultKind::EvictPod;
        e.node = static_cast<NodeId>(pick(1, sc.num_nodes));
        e.pod = pick(1, 20);  // may miss; eviction of unknown pods is a no-op
        sc.faults.push_back(e);
        break;
      }
      default: {  // crash a kubelet while its link is already down
        NodeId n = static_cast<NodeId>(pick(1, sc.num_nodes));
        FaultEvent d;
        d.at = ft;
        d.kind = FaultKind::Disconnect;
        d.links = {LinkRef{LinkRef::Which::SchedKlet, n}};
        sc.faults.push_back(d);
        FaultEvent c;
        c.at = ft + static_cast<SimTime>(pick(1, 20));
        c.kind = FaultKind::CrashController;
        c.target = {ControllerKind::Kubelet, n};
        sc.faults.push_back(c);
        FaultEvent r = d;
        r.kind = FaultKind::Reconnect;
        r.at = c.at + static_cast<SimTime>(pick(5, 60));
        sc.faults.push_back(r);
        break;
      }
    }
    ft = std::max(ft, sc.faults.back().at);
  }

  std::stable_sort(sc.commands.begin(), sc.commands.end(),
                   [](const auto& a, const auto& b) { return a.issue_time < b.issue_time; });
  std::stable_sort(sc.faults.begin(), sc.faults.end(),
                   [](const auto& a, const auto& b) { return a.at < b.at; });
  sc.max_sim_time = 50000;
  return sc;
}

}  // namespace podchain
