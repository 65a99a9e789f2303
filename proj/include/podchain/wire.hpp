#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "podchain/core.hpp"

namespace podchain {

// Minimal delta message format. A key names one attribute of one API object;
// a value is a literal or an external key pointing at a static attribute of
// another object (resolved from the receiver's cache at materialization).

enum class ObjectKind : std::uint8_t {
  Pod = 1,
  ReplicaSet = 2,
  Deployment = 3,
  TombstoneKind = 4,
  Node = 5,
};

enum class Attr : std::uint8_t {
  Replicas = 1,
  NodeName = 2,
  PhaseAttr = 3,
  TemplateRef = 4,
  Valid = 5,
};

inline bool attr_valid_for(ObjectKind k, Attr a) {
  switch (k) {
    case ObjectKind::Pod:
      return a == Attr::NodeName || a == Attr::PhaseAttr ||
             a == Attr::TemplateRef || a == Attr::Valid;
    case ObjectKind::ReplicaSet:
    case ObjectKind::Deployment:
      return a == Attr::Replicas || a == Attr::TemplateRef;
    case ObjectKind::TombstoneKind:
      return a == Attr::Valid;
    case ObjectKind::Node:
      return a == Attr::Valid;
  }
  return false;
}

struct AttrKey {
  ObjectKind kind = ObjectKind::Pod;
  std::uint64_t id = 0;
  Attr attr = Attr::PhaseAttr;

  friend bool operator==(const AttrKey&, const AttrKey&) = default;
  friend auto operator<=>(const AttrKey&, const AttrKey&) = default;
};

struct AttrValue {
  // Int, short string (<= 255 bytes), phase, or external reference.
  std::variant<std::int64_t, std::string, Phase, AttrKey> v;

  static AttrValue of_int(std::int64_t x) { return {x}; }
  static AttrValue of_str(std::string s) { return {std::move(s)}; }
  static AttrValue of_phase(Phase p) { return {p}; }
  static AttrValue of_ref(AttrKey k) { return {k}; }

  bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
  bool is_str() const { return std::holds_alternative<std::string>(v); }
  bool is_phase() const { return std::holds_alternative<Phase>(v); }
  bool is_ref() const { return std::holds_alternative<AttrKey>(v); }
  std::int64_t as_int() const { return std::get<std::int64_t>(v); }
  const std::string& as_str() const { return std::get<std::string>(v); }
  Phase as_phase() const { return std::get<Phase>(v); }
  const AttrKey& as_ref() const { return std::get<AttrKey>(v); }

  friend bool operator==(const AttrValue&, const AttrValue&) = default;
};

struct BatchHint {
  std::uint64_t batch_id = 0;    // pods get ids batch_id+1 .. batch_id+size
  std::uint32_t batch_size = 0;

  friend bool operator==(const BatchHint&, const BatchHint&) = default;
};

struct DeltaMessage {
  std::vector<std::pair<AttrKey, AttrValue>> entries;
  std::optional<BatchHint> batch;

  friend bool operator==(const DeltaMessage&, const DeltaMessage&) = default;
};

struct MalformedMessage : std::runtime_error {
  explicit MalformedMessage(const std::string& why)
      : std::runtime_error("malformed message: " + why) {}
};

struct OversizeEntry : std::runtime_error {
  explicit OversizeEntry(std::size_t n)
      : std::runtime_error("entry exceeds per-pod byte budget: " +
                           std::to_string(n)) {}
};

struct DanglingRef : std::runtime_error {
  explicit DanglingRef(const std::string& what)
      : std::runtime_error("unresolvable external ref: " + what) {}
};

// Budget from the wire contract: one pod's worth of delta fits in 64 bytes.
inline constexpr std::size_t kPodEntryByteBudget = 64;

// ---------------------------------------------------------------------------
// varint (LEB128, unsigned)

inline void put_varint(std::vector<std::uint8_t>& out, std::uint64_t x) {
  while (x >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(x) | 0x80);
    x >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(x));
}

inline std::uint64_t get_varint(std::span<const std::uint8_t> in,
                                std::size_t& pos) {
  std::uint64_t x = 0;
  int shift = 0;
  while (true) {
    if (pos >= in.size()) throw MalformedMessage("truncated varint");
    if (shift > 63) throw MalformedMessage("varint overflow");
    std::uint8_t b = in[pos++];
    x |= static_cast<std::uint64_t>(b & 0x7f) << shift;
    if (!(b & 0x80)) return x;
    shift += 7;
  }
}

inline std::size_t varint_size(std::uint64_t x) {
  std::size_t n = 1;
  while (x >= 0x80) { x >>= 7; ++n; }
  return n;
}

// Versions travel as a short string of two varints.
inline std::string pack_version(Version v) {
  std::vector<std::uint8_t> b;
  put_varint(b, v.epoch);
  put_varint(b, v.counter);
  return std::string(b.begin(), b.end());
}

inline Version unpack_version(const std::string& s) {
  std::span<const std::uint8_t> sp(
      reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
  std::size_t pos = 0;
  Version v;
  v.epoch = static_cast<std::uint32_t>(get_varint(sp, pos));
  v.counter = get_varint(sp, pos);
  if (pos != sp.size()) throw MalformedMessage("version trailer");
  return v;
}

// ---------------------------------------------------------------------------
// Encoding
//
// header: [format=1][flags][count lo][count hi]; flags bit0 = batch hint.
// batch hint: varint batch_id, varint batch_size.
// entry: key = [kind][varint id][attr]; value = [tag][payload].
// value tags: 0 int (zigzag varint), 1 string (varint len + bytes),
//             2 phase (1 byte), 3 ref (key).

inline constexpr std::uint8_t kWireFormatVersion = 1;

namespace detail {

inline void put_key(std::vector<std::uint8_t>& out, const AttrKey& k) {
  out.push_back(static_cast<std::uint8_t>(k.kind));
  put_varint(out, k.id);
  out.push_back(static_cast<std::uint8_t>(k.attr));
}

inline AttrKey get_key(std::span<const std::uint8_t> in, std::size_t& pos) {
  if (pos >= in.size()) throw MalformedMessage("truncated key");
  auto kind = in[pos++];
  if (kind < 1 || kind > 5) throw MalformedMessage("bad object kind");
  AttrKey k;
  k.kind = static_cast<ObjectKind>(kind);
  k.id = get_varint(in, pos);
  if (pos >= in.size()) throw MalformedMessage("truncated attr");
  auto attr = in[pos++];
  if (attr < 1 || attr > 5) throw MalformedMessage("bad attribute tag");
  k.attr = static_cast<Attr>(attr);
  if (!attr_valid_for(k.kind, k.attr))
    throw MalformedMessage("attribute not valid for kind");
  return k;
}

inline std::uint64_t zigzag(std::int64_t x) {
  return (static_cast<std::uint64_t>(x) << 1) ^
         static_cast<std::uint64_t>(x >> 63);
}

inline std::int64_t unzigzag(std::uint64_t x) {
  return static_cast<std::int64_t>(x >> 1) ^ -static_cast<std::int64_t>(x & 1);
}

inline void put_value(std::vector<std::uint8_t>& out, const AttrValue& v) {
  if (v.is_int()) {
    out.push_back(0);
    put_varint(out, zigzag(v.as_int()));
  } else if (v.is_str()) {
    const auto& s = v.as_str();
    if (s.size() > 255) throw OversizeEntry(s.size());
    out.push_back(1);
    put_varint(out, s.size());
    out.insert(out.end(), s.begin(), s.end());
  } else if (v.is_phase()) {
    out.push_back(2);
    out.push_back(static_cast<std::uint8_t>(v.as_phase()));
  } else {
    out.push_back(3);
    put_key(out, v.as_ref());
  }
}

inline AttrValue get_value(std::span<const std::uint8_t> in, std::size_t& pos) {
  if (pos >= in.size()) throw MalformedMessage("truncated value tag");
  auto tag = in[pos++];
  switch (tag) {
    case 0:
      return AttrValue::of_int(unzigzag(get_varint(in, pos)));
    case 1: {
      auto n = get_varint(in, pos);
      if (n > 255) throw MalformedMessage("string too long");
      if (pos + n > in.size()) throw MalformedMessage("truncated string");
      std::string s(reinterpret_cast<const char*>(in.data() + pos),
                    static_cast<std::size_t>(n));
      pos += static_cast<std::size_t>(n);
      return AttrValue::of_str(std::move(s));
    }
    case 2: {
      if (pos >= in.size()) throw MalformedMessage("truncated phase");
      auto p = in[pos++];
      if (p > 3) throw MalformedMessage("bad phase");
      return AttrValue::of_phase(static_cast<Phase>(p));
    }
    case 3:
      return AttrValue::of_ref(get_key(in, pos));
    default:
      throw MalformedMessage("bad value tag");
  }
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_message(const DeltaMessage& msg) {
  if (msg.entries.size() > 0xffff) throw OversizeEntry(msg.entries.size());
  std::vector<std::uint8_t> out;
  out.push_back(kWireFormatVersion);
  out.push_back(msg.batch ? 1 : 0);
  out.push_back(static_cast<std::uint8_t>(msg.entries.size() & 0xff));
  out.push_back(static_cast<std::uint8_t>(msg.entries.size() >> 8));
  if (msg.batch) {
    put_varint(out, msg.batch->batch_id);
    put_varint(out, msg.batch->batch_size);
  }
  for (const auto& [k, v] : msg.entries) {
    std::size_t before = out.size();
    detail::put_key(out, k);
    detail::put_value(out, v);
    if (out.size() - before > kPodEntryByteBudget)
      throw OversizeEntry(out.size() - before);
  }
  return out;
}

inline DeltaMessage decode_message(std::span<const std::uint8_t> in) {
  if (in.size() < 4) throw MalformedMessage("truncated header");
  if (in[0] != kWireFormatVersion) throw MalformedMessage("bad format version");
  if (in[1] > 1) throw MalformedMessage("bad flags");
  std::size_t count = in[2] | (static_cast<std::size_t>(in[3]) << 8);
  std::size_t pos = 4;
  DeltaMessage msg;
  if (in[1] & 1) {
    BatchHint b;
    b.batch_id = get_varint(in, pos);
    auto sz = get_varint(in, pos);
    if (sz == 0 || sz > 0xffffffffULL) throw MalformedMessage("bad batch size");
    b.batch_size = static_cast<std::uint32_t>(sz);
    msg.batch = b;
  }
  msg.entries.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    AttrKey k = detail::get_key(in, pos);
    AttrValue v = detail::get_value(in, pos);
    msg.entries.emplace_back(k, std::move(v));
  }
  if (pos != in.size()) throw MalformedMessage("trailing bytes");
  return msg;
}

// Number of distinct pods a message carries state for; used to amortize the
// byte budget over batches.
inline std::size_t pods_covered(const DeltaMessage& msg) {
  if (msg.batch) return msg.batch->batch_size;
  std::vector<std::uint64_t> ids;
  for (const auto& [k, v] : msg.entries)
    if (k.kind == ObjectKind::Pod && k.id != 0) ids.push_back(k.id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids.size();
}

// ---------------------------------------------------------------------------
// Templates & materialization

// function -> opaque static pod template; stands in for the full spec the
// delta format elides. Read-only during a run.
struct TemplateStore {
  std::map<FunctionId, std::string> templates;

  bool has(FunctionId f) const { return templates.count(f) > 0; }
  void add(FunctionId f, std::size_t payload_bytes = 17 * 1024) {
    templates[f] = std::string(payload_bytes, 'x');
  }
  std::size_t payload_size(FunctionId f) const {
    auto it = templates.find(f);
    return it == templates.end() ? 0 : it->second.size();
  }
};

// Emit only attributes that differ from `prior` (everything plus a template
// ref if there is no prior), sorted by key.
inline DeltaMessage extract_delta(const PodRecord& rec,
                                  const PodRecord* prior = nullptr) {
  DeltaMessage msg;
  auto key = [&](Attr a) { return AttrKey{ObjectKind::Pod, rec.pod, a}; };
  if (!prior) {
    msg.entries.emplace_back(key(Attr::PhaseAttr),
                             AttrValue::of_phase(rec.phase));
    msg.entries.emplace_back(
        key(Attr::TemplateRef),
        AttrValue::of_ref(AttrKey{ObjectKind::ReplicaSet, rec.function,
                                  Attr::TemplateRef}));
    if (rec.node)
      msg.entries.emplace_back(key(Attr::NodeName),
                               AttrValue::of_int(*rec.node));
    msg.entries.emplace_back(key(Attr::Valid),
                             AttrValue::of_str(pack_version(rec.version)));
  } else {
    if (prior->pod != rec.pod) throw PodIdMismatch(prior->pod, rec.pod);
    if (prior->phase != rec.phase)
      msg.entries.emplace_back(key(Attr::PhaseAttr),
                               AttrValue::of_phase(rec.phase));
    if (prior->node != rec.node && rec.node)
      msg.entries.emplace_back(key(Attr::NodeName),
                               AttrValue::of_int(*rec.node));
    if (!(prior->version == rec.version) && !msg.entries.empty())
      msg.entries.emplace_back(key(Attr::Valid),
                               AttrValue::of_str(pack_version(rec.version)));
  }
  std::sort(msg.entries.begin(), msg.entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return msg;
}

// Assemble full records from a delta plus locally cached templates. Entries
// keyed to pod id 0 apply to every pod a batch hint expands to.
inline std::vector<PodRecord> materialize(const DeltaMessage& msg,
                                          const TemplateStore& templates) {
  struct Partial {
    PodRecord rec;
    bool have_fn = false;
  };
  std::map<PodId, Partial> by_pod;
  std::vector<PodId> order;

  auto ensure = [&](PodId id) -> Partial& {
    auto [it, inserted] = by_pod.try_emplace(id);
    if (inserted) {
      it->second.rec.pod = id;
      order.push_back(id);
    }
    return it->second;
  };

  if (msg.batch) {
    for (std::uint32_t i = 1; i <= msg.batch->batch_size; ++i)
      ensure(msg.batch->batch_id + i);
  }

  auto apply = [&](Partial& p, Attr attr, const AttrValue& v) {
    switch (attr) {
      case Attr::PhaseAttr:
        if (!v.is_phase()) throw MalformedMessage("phase attr needs phase");
        p.rec.phase = v.as_phase();
        break;
      case Attr::NodeName:
        if (!v.is_int()) throw MalformedMessage("node attr needs int");
        p.rec.node = static_cast<NodeId>(v.as_int());
        break;
      case Attr::TemplateRef: {
        if (!v.is_ref()) throw MalformedMessage("template attr needs ref");
        const AttrKey& ref = v.as_ref();
        if (ref.kind != ObjectKind::ReplicaSet || ref.attr != Attr::TemplateRef)
          throw MalformedMessage("template ref shape");
        if (!templates.has(static_cast<FunctionId>(ref.id)))
          throw DanglingRef("template for function " + std::to_string(ref.id));
        p.rec.function = static_cast<FunctionId>(ref.id);
        p.have_fn = true;
        break;
      }
      case Attr::Valid:
        if (v.is_str())
          p.rec.version = unpack_version(v.as_str());
        else if (v.is_int())
          p.rec.invalid = v.as_int() == 0;
        else
          throw MalformedMessage("valid attr shape");
        break;
      case Attr::Replicas:
        throw MalformedMessage("replicas attr on pod");
    }
  };

  for (const auto& [k, v] : msg.entries) {
    if (k.kind != ObjectKind::Pod) continue;  // scalar entries handled by caller
    if (k.id == 0) {
      if (!msg.batch) throw MalformedMessage("wildcard entry without batch");
      for (std::uint32_t i = 1; i <= msg.batch->batch_size; ++i)
        apply(ensure(msg.batch->batch_id + i), k.attr, v);
    } else {
      apply(ensure(k.id), k.attr, v);
    }
  }

  std::vector<PodRecord> out;
  out.reserve(order.size());
  for (PodId id : order) out.push_back(by_pod[id].rec);
  return out;
}

}  // namespace podchain
