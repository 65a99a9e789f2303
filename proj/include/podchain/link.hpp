#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "podchain/core.hpp"

namespace podchain {

enum class Direction : std::uint8_t { Forward = 0, Backward = 1 };

inline const char* to_string(Direction d) {
  return d == Direction::Forward ? "fwd" : "bwd";
}

enum class SendResult : std::uint8_t { Accepted = 0, NotConnected = 1 };

// Bidirectional FIFO channel between adjacent controllers. Reliable and
// ordered while connected; disconnecting atomically drops everything in
// flight. After a reconnect the latch rejects application traffic until a
// handshake completes; handshake frames are control traffic and bypass it.
class Link {
 public:
  struct InFlight {
    SimTime due = 0;
    std::uint64_t seq = 0;  // global send order, ties broken by caller
    std::vector<std::uint8_t> payload;
  };

  struct Delivered {
    Direction dir;
    std::vector<std::uint8_t> payload;
  };

  explicit Link(std::string name = "", SimTime latency = 1)
      : name_(std::move(name)), latency_(latency) {}

  const std::string& name() const { return name_; }
  bool connected() const { return connected_; }
  bool latched() const { return latch_; }
  SimTime latency() const { return latency_; }
  void set_latency(SimTime l) { latency_ = l; }

  SendResult send(Direction dir, std::vector<std::uint8_t> payload, SimTime now,
                  std::uint64_t seq, bool control = false) {
    if (!connected_) return SendResult::NotConnected;
    if (latch_ && !control) return SendResult::NotConnected;
    queue(dir).push_back(InFlight{now + latency_, seq, std::move(payload)});
    return SendResult::Accepted;
  }

  // Remove and return everything due by `now`, per-direction FIFO order
  // preserved; across directions ordered by (due, seq).
  std::vector<Delivered> deliver_due(SimTime now) {
    std::vector<Delivered> out;
    auto& f = fwd_;
    auto& b = bwd_;
    while (true) {
      bool f_ok = !f.empty() && f.front().due <= now;
      bool b_ok = !b.empty() && b.front().due <= now;
      if (!f_ok && !b_ok) break;
      bool take_fwd;
      if (f_ok && b_ok) {
        if (f.front().due != b.front().due)
          take_fwd = f.front().due < b.front().due;
        else
          take_fwd = f.front().seq < b.front().seq;
      } else {
        take_fwd = f_ok;
      }
      auto& q = take_fwd ? f : b;
      out.push_back(Delivered{take_fwd ? Direction::Forward : Direction::Backward,
                              std::move(q.front().payload)});
      q.pop_front();
    }
    return out;
  }

  SimTime next_due() const {
    SimTime t = -1;
    if (!fwd_.empty()) t = fwd_.front().due;
    if (!bwd_.empty() && (t < 0 || bwd_.front().due < t)) t = bwd_.front().due;
    return t;  // -1 when idle
  }

  void set_connected(bool state) {
    if (state == connected_) return;
    connected_ = state;
    fwd_.clear();
    bwd_.clear();
    if (state) latch_ = true;  // reconnect requires a handshake
  }

  void clear_latch() { latch_ = false; }

  std::size_t pending(Direction dir) const { return queue(dir).size(); }
  bool idle() const { return fwd_.empty() && bwd_.empty(); }

  // Inspect in-flight messages in FIFO order (diagnostics, projections).
  template <class F>
  void each(Direction dir, F f) const {
    for (const auto& m : queue(dir)) f(m);
  }

 private:
  std::deque<InFlight>& queue(Direction d) {
    return d == Direction::Forward ? fwd_ : bwd_;
  }
  const std::deque<InFlight>& queue(Direction d) const {
    return d == Direction::Forward ? fwd_ : bwd_;
  }

  std::string name_;
  SimTime latency_;
  bool connected_ = true;
  bool latch_ = false;  // start connected and synchronized (both sides empty)
  std::deque<InFlight> fwd_;
  std::deque<InFlight> bwd_;
};

}  // namespace podchain
