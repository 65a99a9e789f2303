#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "podchain/core.hpp"

namespace podchain {

// Deterministic token bucket: returns the time a request can be granted and
// consumes the token at that time. rate = tokens per `window` time units.
class TokenBucket {
 public:
  TokenBucket() = default;
  TokenBucket(double tokens_per_window, SimTime window, double burst)
      : rate_(window > 0 ? tokens_per_window / static_cast<double>(window) : 0),
        burst_(burst),
        tokens_(burst) {}

  bool unlimited() const { return rate_ <= 0; }

  SimTime grant(SimTime now) {
    if (unlimited()) return now;
    refill(now);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return now;
    }
    double deficit = 1.0 - tokens_;
    SimTime wait = static_cast<SimTime>(deficit / rate_);
    while (tokens_ + rate_ * static_cast<double>(wait) < 1.0) ++wait;
    SimTime at = now + wait;
    refill(at);
    tokens_ -= 1.0;
    return at;
  }

 private:
  void refill(SimTime now) {
    if (now > last_) {
      tokens_ = std::min(burst_, tokens_ + rate_ * static_cast<double>(now - last_));
      last_ = now;
    }
  }

  double rate_ = 0;
  double burst_ = 0;
  double tokens_ = 0;
  SimTime last_ = 0;
};

struct RegistryParams {
  SimTime call_latency = 20;      // one API call round trip
  SimTime notify_latency = 20;    // watch notification to a subscriber
  double rate_tokens = 20;        // token bucket per client ...
  SimTime rate_window = 1000;     // ... per this many time units
  double rate_burst = 20;
  std::size_t full_object_bytes = 17 * 1024;  // payload charged per object
  SimTime ser_units_per_kib = 1;  // serialization charge per KiB
};

// The centralized store the chain publishes ready pods and node marks
// through. In centralized mode it also carries all inter-controller traffic
// as full-object writes plus notifications.
class Registry {
 public:
  explicit Registry(RegistryParams params = {}) : params_(params) {}

  const RegistryParams& params() const { return params_; }
  void set_params(RegistryParams p) { params_ = p; }

  // Time at which a call issued by `client` at `now` completes.
  SimTime call_done(ControllerId client, SimTime now, std::size_t bytes) {
    SimTime at = bucket(client).grant(now);
    SimTime ser = params_.ser_units_per_kib *
                  static_cast<SimTime>(bytes / 1024);
    return at + params_.call_latency + ser;
  }

  // --- published ready pods (chain exit point) ---

  void publish(const PodRecord& rec) { published_[rec.pod] = rec; }

  void withdraw(PodId pod) {
    published_.erase(pod);
    terminated_.insert(pod);
  }

  // Durable record that a pod was actively terminated; admissions consult it
  // so a terminated id can never be run again, even across kubelet restarts.
  void mark_terminated(PodId pod) { terminated_.insert(pod); }
  bool was_terminated(PodId pod) const { return terminated_.count(pod) > 0; }

  const std::map<PodId, PodRecord>& published() const { return published_; }

  std::map<PodId, PodRecord> published_on(NodeId node) const {
    std::map<PodId, PodRecord> out;
    for (const auto& [id, rec] : published_)
      if (rec.node && *rec.node == node) out.emplace(id, rec);
    return out;
  }

  std::size_t published_count(FunctionId fn) const {
    std::size_t n = 0;
    for (const auto& [id, rec] : published_)
      if (rec.function == fn) ++n;
    return n;
  }

  // --- node validity marks (cancellation path) ---

  void register_node(NodeId node) { node_valid_[node] = true; }
  void set_node_valid(NodeId node, bool valid) { node_valid_[node] = valid; }
  bool node_valid(NodeId node) const {
    auto it = node_valid_.find(node);
    return it == node_valid_.end() ? true : it->second;
  }

 private:
  TokenBucket& bucket(ControllerId client) {
    auto [it, inserted] = buckets_.try_emplace(client);
    if (inserted)
      it->second = TokenBucket(params_.rate_tokens, params_.rate_window,
                               params_.rate_burst);
    return it->second;
  }

  RegistryParams params_;
  std::map<ControllerId, TokenBucket> buckets_;
  std::map<PodId, PodRecord> published_;
  std::set<PodId> terminated_;
  std::map<NodeId, bool> node_valid_;
};

}  // namespace podchain
