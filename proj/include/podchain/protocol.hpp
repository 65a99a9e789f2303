#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "podchain/core.hpp"
#include "podchain/wire.hpp"

namespace podchain {

// Everything on a link is a delta message behind a one-byte frame type.
// Data carries ordinary forward/backward deltas; Digest/Fetch/State make up
// the handshake; Invalidate/Ack carry removals and their acknowledgments;
// TombstoneFrame replicates termination markers.
enum class FrameType : std::uint8_t {
  Data = 0,
  Digest = 1,
  Fetch = 2,
  State = 3,
  Invalidate = 4,
  Ack = 5,
  TombstoneFrame = 6,
};

inline const char* to_string(FrameType t) {
  switch (t) {
    case FrameType::Data: return "data";
    case FrameType::Digest: return "digest";
    case FrameType::Fetch: return "fetch";
    case FrameType::State: return "state";
    case FrameType::Invalidate: return "invalidate";
    case FrameType::Ack: return "ack";
    case FrameType::TombstoneFrame: return "tombstone";
  }
  return "?";
}

struct Frame {
  FrameType type = FrameType::Data;
  DeltaMessage msg;

  friend bool operator==(const Frame&, const Frame&) = default;
};

inline std::vector<std::uint8_t> encode_frame(const Frame& f) {
  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>(f.type));
  auto body = encode_message(f.msg);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

inline Frame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw MalformedMessage("empty frame");
  if (bytes[0] > 6) throw MalformedMessage("bad frame type");
  Frame f;
  f.type = static_cast<FrameType>(bytes[0]);
  f.msg = decode_message(bytes.subspan(1));
  return f;
}

// Per-frame entry caps; digests pack densely so a matched handshake stays
// cheap while full state transfers grow with the miss count.
inline constexpr std::size_t kDigestEntriesPerFrame = 1024;
inline constexpr std::size_t kFetchEntriesPerFrame = 64;
inline constexpr std::size_t kStatePodsPerFrame = 16;

// ---------------------------------------------------------------------------
// Tombstone frames

inline std::string pack_tombstone(const Tombstone& t) {
  std::vector<std::uint8_t> b;
  b.push_back(static_cast<std::uint8_t>(t.created_by.kind));
  put_varint(b, t.created_by.node);
  put_varint(b, t.session_epoch);
  return std::string(b.begin(), b.end());
}

inline Tombstone unpack_tombstone(PodId pod, const std::string& s) {
  std::span<const std::uint8_t> sp(
      reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
  if (sp.empty()) throw MalformedMessage("empty tombstone");
  Tombstone t;
  t.pod = pod;
  t.created_by.kind = static_cast<ControllerKind>(sp[0]);
  std::size_t pos = 1;
  t.created_by.node = static_cast<NodeId>(get_varint(sp, pos));
  t.session_epoch = static_cast<std::uint32_t>(get_varint(sp, pos));
  return t;
}

inline Frame make_tombstone_frame(const Tombstone& t) {
  Frame f;
  f.type = FrameType::TombstoneFrame;
  f.msg.entries.emplace_back(
      AttrKey{ObjectKind::TombstoneKind, t.pod, Attr::Valid},
      AttrValue::of_str(pack_tombstone(t)));
  return f;
}

// ---------------------------------------------------------------------------
// Invalidations & acks

inline Frame make_removal_frame(PodId pod) {
  Frame f;
  f.type = FrameType::Invalidate;
  f.msg.entries.emplace_back(AttrKey{ObjectKind::Pod, pod, Attr::Valid},
                             AttrValue::of_int(0));
  return f;
}

inline Frame make_ack_frame(PodId pod) {
  Frame f;
  f.type = FrameType::Ack;
  f.msg.entries.emplace_back(AttrKey{ObjectKind::Pod, pod, Attr::Valid},
                             AttrValue::of_int(1));
  return f;
}

// ---------------------------------------------------------------------------
// Handshake: digests, diffs, sessions
//
// Round 1: the responder (downstream) sends version digests of its live
// state. Round 2: the initiator fetches full records only for missing or
// version-mismatched pods, then applies everything atomically. In recover
// mode (empty local cache) the initiator adopts the downstream state as is;
// in reset mode responder-present pods are overwritten and marked dirty,
// locally-present-but-responder-absent pods are marked invalid and hidden.

enum class HandshakeMode : std::uint8_t { Recover = 0, Reset = 1 };

struct DigestInfo {
  std::map<PodId, Version> live;
  std::set<PodId> terminated;  // ids the responder actively terminated
  // scalar state, e.g. desired replicas per function at the responder
  std::map<std::pair<ObjectKind, std::uint64_t>, std::int64_t> scalars;
};

inline std::vector<Frame> build_digest_frames(const DigestInfo& info) {
  std::vector<std::pair<AttrKey, AttrValue>> entries;
  for (const auto& [id, ver] : info.live)
    entries.emplace_back(AttrKey{ObjectKind::Pod, id, Attr::Valid},
                         AttrValue::of_str(pack_version(ver)));
  for (PodId id : info.terminated)
    entries.emplace_back(AttrKey{ObjectKind::Pod, id, Attr::Valid},
                         AttrValue::of_int(0));
  for (const auto& [key, val] : info.scalars)
    entries.emplace_back(AttrKey{key.first, key.second, Attr::Replicas},
                         AttrValue::of_int(val));

  std::vector<Frame> frames;
  std::size_t i = 0;
  do {
    Frame f;
    f.type = FrameType::Digest;
    for (std::size_t n = 0; n < kDigestEntriesPerFrame && i < entries.size();
         ++n, ++i)
      f.msg.entries.push_back(entries[i]);
    frames.push_back(std::move(f));
  } while (i < entries.size());
  return frames;
}

inline void parse_digest_frame(const Frame& f, DigestInfo& out) {
  for (const auto& [k, v] : f.msg.entries) {
    if (k.kind == ObjectKind::Pod && k.attr == Attr::Valid) {
      if (v.is_str())
        out.live[k.id] = unpack_version(v.as_str());
      else if (v.is_int() && v.as_int() == 0)
        out.terminated.insert(k.id);
    } else if (k.attr == Attr::Replicas) {
      out.scalars[{k.kind, k.id}] = v.as_int();
    }
  }
}

// What a reset-mode initiator decides after round 1, computed over the slice
// of its cache that is relevant to this responder.
struct HandshakeDiff {
  std::vector<PodId> fetch;       // responder-present, missing or changed here
  std::vector<PodId> matched;     // version-identical, skip round 2
  std::vector<PodId> absent;      // local live, responder never had them
  std::vector<PodId> terminated;  // local live, responder terminated them
};

inline HandshakeDiff compute_diff(const std::map<PodId, Version>& local,
                                  const DigestInfo& remote) {
  HandshakeDiff d;
  for (const auto& [id, ver] : remote.live) {
    auto it = local.find(id);
    if (it != local.end() && it->second == ver)
      d.matched.push_back(id);
    else
      d.fetch.push_back(id);
  }
  for (const auto& [id, ver] : local) {
    if (remote.live.count(id)) continue;
    if (remote.terminated.count(id))
      d.terminated.push_back(id);
    else
      d.absent.push_back(id);
  }
  return d;
}

inline std::vector<Frame> build_fetch_frames(const std::vector<PodId>& ids) {
  std::vector<Frame> frames;
  std::size_t i = 0;
  do {
    Frame f;
    f.type = FrameType::Fetch;
    for (std::size_t n = 0; n < kFetchEntriesPerFrame && i < ids.size();
         ++n, ++i)
      f.msg.entries.emplace_back(AttrKey{ObjectKind::Pod, ids[i], Attr::Valid},
                                 AttrValue::of_int(1));
    frames.push_back(std::move(f));
  } while (i < ids.size());
  return frames;
}

inline std::vector<PodId> parse_fetch_frame(const Frame& f) {
  std::vector<PodId> ids;
  for (const auto& [k, v] : f.msg.entries)
    if (k.kind == ObjectKind::Pod) ids.push_back(k.id);
  return ids;
}

inline void append_record_entries(DeltaMessage& msg, const PodRecord& rec) {
  msg.entries.emplace_back(AttrKey{ObjectKind::Pod, rec.pod, Attr::PhaseAttr},
                           AttrValue::of_phase(rec.phase));
  msg.entries.emplace_back(
      AttrKey{ObjectKind::Pod, rec.pod, Attr::TemplateRef},
      AttrValue::of_ref(
          AttrKey{ObjectKind::ReplicaSet, rec.function, Attr::TemplateRef}));
  if (rec.node)
    msg.entries.emplace_back(AttrKey{ObjectKind::Pod, rec.pod, Attr::NodeName},
                             AttrValue::of_int(*rec.node));
  msg.entries.emplace_back(AttrKey{ObjectKind::Pod, rec.pod, Attr::Valid},
                           AttrValue::of_str(pack_version(rec.version)));
}

inline std::vector<Frame> build_state_frames(
    const std::vector<PodRecord>& recs,
    const std::map<std::pair<ObjectKind, std::uint64_t>, std::int64_t>&
        scalars = {}) {
  std::vector<Frame> frames;
  std::size_t i = 0;
  do {
    Frame f;
    f.type = FrameType::State;
    for (std::size_t n = 0; n < kStatePodsPerFrame && i < recs.size();
         ++n, ++i)
      append_record_entries(f.msg, recs[i]);
    if (frames.empty())
      for (const auto& [key, val] : scalars)
        f.msg.entries.emplace_back(AttrKey{key.first, key.second, Attr::Replicas},
                                   AttrValue::of_int(val));
    frames.push_back(std::move(f));
  } while (i < recs.size());
  return frames;
}

// The change set a reset-mode handshake leaves behind, to be propagated to
// the further upstream as soft invalidations.
struct ChangeSet {
  std::set<PodId> overwritten;  // dirty
  std::set<PodId> invalidated;

  bool empty() const { return overwritten.empty() && invalidated.empty(); }
};

// Initiator-side bookkeeping for one in-flight handshake. Nothing is applied
// until every requested record arrived; a disconnect discards the session.
struct HandshakeSession {
  HandshakeMode mode = HandshakeMode::Reset;
  bool digest_seen = false;
  DigestInfo remote;
  HandshakeDiff diff;
  std::set<PodId> awaiting;  // fetch ids not yet received
  bool state_seen = false;   // at least one state frame arrived
  std::vector<PodRecord> staged;
  std::map<std::pair<ObjectKind, std::uint64_t>, std::int64_t> staged_scalars;

  bool complete() const { return digest_seen && state_seen && awaiting.empty(); }
};

}  // namespace podchain
