#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "flowmob/core.hpp"
#include "flowmob/error.hpp"
#include "flowmob/handover.hpp"
#include "flowmob/hnbp.hpp"

namespace flowmob {

// ---------------------------------------------------------------------------
// Scenario description

enum class ScenarioCase {
  AllActiveShared,
  AllActiveDiff,
  PowerOnShared,
  PowerOnDiff,
  PowerOnSharedBlock,
  PowerOnDiffBlock,
  AllActiveSharedMAG,
  AllActiveDiffMAG,
  PowerOnSharedMAG,
  PowerOnDiffMAG,
  PowerOnSharedMAGBlock,
  PowerOnDiffMAGBlock,
};

inline constexpr std::array kAllScenarioCases = {
    ScenarioCase::AllActiveShared,    ScenarioCase::AllActiveDiff,
    ScenarioCase::PowerOnShared,      ScenarioCase::PowerOnDiff,
    ScenarioCase::PowerOnSharedBlock, ScenarioCase::PowerOnDiffBlock,
    ScenarioCase::AllActiveSharedMAG, ScenarioCase::AllActiveDiffMAG,
    ScenarioCase::PowerOnSharedMAG,   ScenarioCase::PowerOnDiffMAG,
    ScenarioCase::PowerOnSharedMAGBlock, ScenarioCase::PowerOnDiffMAGBlock,
};

struct CaseTraits {
  Environment environment;
  bool power_on;
  bool shared_prefix;
  bool block;
  std::optional<Technique> technique;  // none for the signaling-free cases
};

inline CaseTraits traits_of(ScenarioCase c) {
  using E = Environment;
  using T = Technique;
  switch (c) {
    case ScenarioCase::AllActiveShared: return {E::SingleLMA, false, true, false, std::nullopt};
    case ScenarioCase::AllActiveDiff: return {E::SingleLMA, false, false, false, T::ActiveDiff};
    case ScenarioCase::PowerOnShared: return {E::SingleLMA, true, true, false, T::NotactiveCom};
    case ScenarioCase::PowerOnDiff: return {E::SingleLMA, true, false, false, T::NotactiveDiff};
    case ScenarioCase::PowerOnSharedBlock:
      return {E::SingleLMA, true, true, true, T::NotactiveComBlock};
    case ScenarioCase::PowerOnDiffBlock:
      return {E::SingleLMA, true, false, true, T::NotactiveDiffBlock};
    case ScenarioCase::AllActiveSharedMAG: return {E::MultiLMA, false, false, false, std::nullopt};
    case ScenarioCase::AllActiveDiffMAG: return {E::MultiLMA, false, false, false, T::Active2MAG};
    case ScenarioCase::PowerOnSharedMAG: return {E::MultiLMA, true, false, false, T::Notactive1MAG};
    case ScenarioCase::PowerOnDiffMAG: return {E::MultiLMA, true, false, false, T::Notactive2MAG};
    case ScenarioCase::PowerOnSharedMAGBlock:
      return {E::MultiLMA, true, false, true, T::Notactive1MAGBlock};
    case ScenarioCase::PowerOnDiffMAGBlock:
      return {E::MultiLMA, true, false, true, T::Notactive2MAGBlock};
  }
  throw Error(ErrorCode::UnsupportedCase, "unknown scenario case");
}

inline std::string_view to_string(ScenarioCase c) {
  switch (c) {
    case ScenarioCase::AllActiveShared: return "all_active_shared";
    case ScenarioCase::AllActiveDiff: return "all_active_diff";
    case ScenarioCase::PowerOnShared: return "power_on_shared";
    case ScenarioCase::PowerOnDiff: return "power_on_diff";
    case ScenarioCase::PowerOnSharedBlock: return "power_on_shared_block";
    case ScenarioCase::PowerOnDiffBlock: return "power_on_diff_block";
    case ScenarioCase::AllActiveSharedMAG: return "all_active_shared_mag";
    case ScenarioCase::AllActiveDiffMAG: return "all_active_diff_mag";
    case ScenarioCase::PowerOnSharedMAG: return "power_on_shared_mag";
    case ScenarioCase::PowerOnDiffMAG: return "power_on_diff_mag";
    case ScenarioCase::PowerOnSharedMAGBlock: return "power_on_shared_mag_block";
    case ScenarioCase::PowerOnDiffMAGBlock: return "power_on_diff_mag_block";
  }
  return "?";
}

inline ScenarioCase parse_scenario_case(std::string_view text) {
  for (auto c : kAllScenarioCases) {
    if (to_string(c) == text) return c;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown scenario case '" + std::string(text) + "'");
}

struct FlowSpec {
  FlowId flow_id;
  IfId initial_if;
  Prefix initial_prefix;
  NodeId owning_lma;
  NodeId initial_mag;
};

struct MoveSpec {
  FlowId flow_id;
  IfId target_if;
  NodeId target_mag;
  /// Prefix the MN presents on the new interface; defaults to the flow's
  /// current prefix. Only consulted by block-prefix cases.
  std::optional<Prefix> presented_prefix;
};

struct ScenarioSpec {
  Environment environment = Environment::SingleLMA;
  ScenarioCase scenario_case = ScenarioCase::AllActiveShared;
  MnId mn_id = "MN";
  std::vector<FlowSpec> flows;
  std::vector<MoveSpec> moves;
  HnbpMode hnbp_mode = HnbpMode::ExactSet;
  /// Send the follow-up FMI/FMA that clears a moved flow's state at its old
  /// MAG (active cases with unique prefixes).
  bool fmi_cleanup = true;

  /// The standard three-flow X/Y/Z setup for `c`.
  static ScenarioSpec canonical(ScenarioCase c);
};

inline Prefix case_prefix(int n) {
  return Prefix::parse("2001:db8:" + std::to_string(n) + "::/48");
}

inline ScenarioSpec ScenarioSpec::canonical(ScenarioCase c) {
  const auto tr = traits_of(c);
  ScenarioSpec s;
  s.environment = tr.environment;
  s.scenario_case = c;
  const Prefix p1 = case_prefix(1);
  const Prefix p2 = tr.shared_prefix ? p1 : case_prefix(2);
  const Prefix p3 = tr.shared_prefix ? p1 : case_prefix(3);

  const bool multi = tr.environment == Environment::MultiLMA;
  const bool shared_mag = c == ScenarioCase::AllActiveSharedMAG ||
                          c == ScenarioCase::PowerOnSharedMAG ||
                          c == ScenarioCase::PowerOnSharedMAGBlock;
  const NodeId lma_xy = multi ? "LMA1" : "LMA";
  const NodeId lma_z = multi ? "LMA2" : "LMA";
  const NodeId mag1 = shared_mag ? "MAG" : "MAG1";
  const NodeId mag2 = shared_mag ? "MAG" : "MAG2";

  if (tr.power_on) {
    // X, Y, Z start on IF 1; Y and Z move to freshly powered IF 2 / IF 3.
    // In the different-MAG multi-LMA case LMA 2 reaches the MN through MAG 2.
    const NodeId z_mag = (multi && !shared_mag) ? mag2 : mag1;
    s.flows = {{"X", "IF1", p1, lma_xy, mag1},
               {"Y", "IF1", p2, lma_xy, mag1},
               {"Z", "IF1", p3, lma_z, z_mag}};
    s.moves = {{"Y", "IF2", mag1, std::nullopt}, {"Z", "IF3", mag2, std::nullopt}};
  } else {
    // X, Y, Z start on IF 1, IF 2, IF 3; Y and Z converge onto IF 1.
    s.flows = {{"X", "IF1", p1, lma_xy, mag1},
               {"Y", "IF2", p2, lma_xy, mag1},
               {"Z", "IF3", p3, lma_z, mag2}};
    s.moves = {{"Y", "IF1", mag1, std::nullopt}, {"Z", "IF1", mag1, std::nullopt}};
  }
  return s;
}

// ---------------------------------------------------------------------------
// Results

struct TraceEvent {
  double timestamp_ms = 0.0;  // send time
  SignalingMessage message;
  LinkClass link = LinkClass::MagLma;
  bool cleanup = false;  // post-handover state removal

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct SignalingTrace {
  std::vector<TraceEvent> events;

  /// `timestamp_ms,msg_type,size_bytes,src,dst` with a header row.
  std::string to_csv() const {
    std::string out = "timestamp_ms,msg_type,size_bytes,src,dst\n";
    for (const auto& e : events) {
      out += fmt::format("{},{},{},{},{}\n", e.timestamp_ms, to_string(e.message.mtype),
                         e.message.size_bytes, e.message.src, e.message.dst);
    }
    return out;
  }

  std::size_t count(MessageType t) const {
    return static_cast<std::size_t>(std::count_if(
        events.begin(), events.end(), [t](const TraceEvent& e) { return e.message.mtype == t; }));
  }
};

struct MagRoute {
  IfId if_id;
  Prefix prefix;
  NodeId lma;

  friend bool operator==(const MagRoute&, const MagRoute&) = default;
};

struct LmaSnapshot {
  NodeId lma;
  std::vector<BindingCacheEntry> bindings;
  std::vector<IfFlowState> if_flows;
  std::optional<HomeNetworkBlockPrefix> hnbp;
};

struct MagSnapshot {
  NodeId mag;
  std::vector<MagRoute> routes;
  std::map<NodeId, HomeNetworkBlockPrefix> stored_hnbp;  // keyed by originating LMA
};

struct CacheSnapshot {
  std::vector<LmaSnapshot> lmas;
  std::vector<MagSnapshot> mags;

  const IfFlowState* flow(const FlowId& id) const {
    for (const auto& l : lmas) {
      for (const auto& f : l.if_flows) {
        if (f.flow_id == id) return &f;
      }
    }
    return nullptr;
  }

  std::vector<FlowId> flow_ids() const {
    std::vector<FlowId> ids;
    for (const auto& l : lmas) {
      for (const auto& f : l.if_flows) ids.push_back(f.flow_id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  const LmaSnapshot* lma(const NodeId& id) const {
    for (const auto& l : lmas) {
      if (l.lma == id) return &l;
    }
    return nullptr;
  }

  const MagSnapshot* mag(const NodeId& id) const {
    for (const auto& m : mags) {
      if (m.mag == id) return &m;
    }
    return nullptr;
  }
};

enum class ScenarioStatus { Ok, VerificationFailed };

struct ScenarioResult {
  SignalingTrace trace;
  CacheSnapshot before;
  CacheSnapshot after;
  ScenarioStatus status = ScenarioStatus::Ok;
  /// Flows whose presented prefix the block prefix rejected; each fell back
  /// to a full proxy binding registration.
  std::vector<FlowId> rejected_flows;
};

// ---------------------------------------------------------------------------
// Engine

namespace detail {

inline bool is_mn_endpoint(const NodeId& n) { return n.rfind("MN", 0) == 0; }
inline bool is_mag(const NodeId& n) { return n.rfind("MAG", 0) == 0; }
inline bool is_lma(const NodeId& n) { return n.rfind("LMA", 0) == 0; }

inline LinkClass classify(const NodeId& a, const NodeId& b) {
  if (is_mn_endpoint(a) || is_mn_endpoint(b)) return LinkClass::Wireless;
  if (is_lma(a) && is_lma(b)) return LinkClass::LmaLma;
  if (is_mag(a) && is_mag(b)) return LinkClass::MagMag;
  return LinkClass::MagLma;
}

/// Deterministic message-driven execution of one scenario. Each move is run
/// to quiescence before the next one starts (IF 2 before IF 3).
class ScenarioEngine {
 public:
  ScenarioEngine(const ScenarioSpec& spec, const Topology& topo)
      : spec_(spec), topo_(topo), traits_(traits_of(spec.scenario_case)) {
    if (traits_.environment != spec.environment) {
      throw Error(ErrorCode::UnsupportedCase,
                  std::string(to_string(spec.scenario_case)) + " is not defined for the " +
                      std::string(to_string(spec.environment)) + "-LMA environment");
    }
    topo_.validate();
    validate();
    build_initial_state();
  }

  ScenarioResult run() {
    ScenarioResult result;
    result.before = snapshot();
    for (const auto& move : spec_.moves) {
      start_move(move, result);
      drain();
    }
    revoke_moved_prefixes();
    drain();
    result.trace = std::move(trace_);
    result.after = snapshot();
    if (!result.rejected_flows.empty()) result.status = ScenarioStatus::VerificationFailed;
    return result;
  }

 private:
  struct Lma {
    NodeId id;
    std::vector<BindingCacheEntry> cache;
    std::vector<IfFlowState> if_flows;
    std::optional<HomeNetworkBlockPrefix> hnbp;
  };
  struct Mag {
    NodeId id;
    std::vector<MagRoute> routes;
    std::map<NodeId, HomeNetworkBlockPrefix> stored_hnbp;
  };
  // Context carried alongside a message in flight; not part of its size.
  struct Payload {
    FlowId flow;
    IfId if_id;
    Prefix prefix;
    NodeId target_mag;   // final MAG for forwarded eFMI
    NodeId origin_lma;   // LMA that started an eFMI exchange
    NodeId relay_lma;
    NodeId old_mag;      // for cleanup after FMA
    std::vector<Prefix> revoked;
    bool cleanup = false;
  };
  struct InFlight {
    double deliver_at;
    std::uint64_t seq;
    SignalingMessage message;
    Payload payload;
    bool operator>(const InFlight& o) const {
      return deliver_at != o.deliver_at ? deliver_at > o.deliver_at : seq > o.seq;
    }
  };

  void validate() const {
    if (spec_.flows.empty()) throw Error(ErrorCode::InvalidArgument, "scenario has no flows");
    std::vector<IfId> initial_ifs;
    for (const auto& f : spec_.flows) {
      if (!is_lma(f.owning_lma) || !is_mag(f.initial_mag)) {
        throw Error(ErrorCode::InvalidArgument, "flow " + f.flow_id + " needs an LMA* owner and MAG* attachment");
      }
      initial_ifs.push_back(f.initial_if);
    }
    std::vector<IfId> new_ifs;
    for (const auto& m : spec_.moves) {
      auto it = std::find_if(spec_.flows.begin(), spec_.flows.end(),
                             [&](const FlowSpec& f) { return f.flow_id == m.flow_id; });
      if (it == spec_.flows.end()) {
        throw Error(ErrorCode::InvalidArgument, "move references unknown flow " + m.flow_id);
      }
      if (it->initial_if == m.target_if) {
        throw Error(ErrorCode::InvalidArgument, "flow " + m.flow_id + " already on " + m.target_if);
      }
      if (!is_mag(m.target_mag)) {
        throw Error(ErrorCode::InvalidArgument, "move target must be a MAG*, got " + m.target_mag);
      }
      const bool known = std::find(initial_ifs.begin(), initial_ifs.end(), m.target_if) != initial_ifs.end();
      if (traits_.power_on) {
        if (known || std::find(new_ifs.begin(), new_ifs.end(), m.target_if) != new_ifs.end()) {
          throw Error(ErrorCode::InvalidArgument,
                      "power-on case needs a distinct, not yet active interface; got " + m.target_if);
        }
        new_ifs.push_back(m.target_if);
      } else if (!known) {
        throw Error(ErrorCode::InvalidArgument,
                    "all-active case needs an already active target interface; got " + m.target_if);
      }
    }
  }

  int bid_of(const IfId& if_id) {
    auto [it, inserted] = bids_.try_emplace(if_id, static_cast<int>(bids_.size()) + 1);
    return it->second;
  }

  Lma& lma(const NodeId& id) {
    for (auto& l : lmas_) {
      if (l.id == id) return l;
    }
    lmas_.push_back({id, {}, {}, std::nullopt});
    return lmas_.back();
  }

  Mag& mag(const NodeId& id) {
    for (auto& m : mags_) {
      if (m.id == id) return m;
    }
    mags_.push_back({id, {}, {}});
    return mags_.back();
  }

  void build_initial_state() {
    for (const auto& f : spec_.flows) {
      const int bid = bid_of(f.initial_if);
      auto& l = lma(f.owning_lma);
      auto& entry = binding_for(l, f.initial_if, f.initial_mag);
      entry.bid = bid;
      add_unique(entry.prefixes, f.initial_prefix);
      l.if_flows.push_back({f.flow_id, f.initial_if, bid, f.initial_prefix});
      auto& m = mag(f.initial_mag);
      MagRoute route{f.initial_if, f.initial_prefix, f.owning_lma};
      if (std::find(m.routes.begin(), m.routes.end(), route) == m.routes.end()) m.routes.push_back(route);
    }
    for (const auto& mv : spec_.moves) mag(mv.target_mag);
    std::sort(lmas_.begin(), lmas_.end(), [](const Lma& a, const Lma& b) { return a.id < b.id; });
    std::sort(mags_.begin(), mags_.end(), [](const Mag& a, const Mag& b) { return a.id < b.id; });
    for (auto& l : lmas_) regenerate_hnbp(l);
  }

  BindingCacheEntry& binding_for(Lma& l, const IfId& if_id, const NodeId& attached_mag) {
    for (auto& e : l.cache) {
      if (e.if_id == if_id) return e;
    }
    l.cache.push_back({spec_.mn_id, if_id, bid_of(if_id), {}, attached_mag, l.id});
    return l.cache.back();
  }

  BindingCacheEntry* find_binding(Lma& l, const IfId& if_id) {
    for (auto& e : l.cache) {
      if (e.if_id == if_id) return &e;
    }
    return nullptr;
  }

  static void add_unique(std::vector<Prefix>& v, const Prefix& p) {
    if (std::find(v.begin(), v.end(), p) == v.end()) v.push_back(p);
  }

  IfFlowState& if_flow(Lma& l, const FlowId& id) {
    for (auto& f : l.if_flows) {
      if (f.flow_id == id) return f;
    }
    throw Error(ErrorCode::InvalidArgument, "flow " + id + " unknown at " + l.id);
  }

  const FlowSpec& flow_spec(const FlowId& id) const {
    for (const auto& f : spec_.flows) {
      if (f.flow_id == id) return f;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown flow " + id);
  }

  // The LMA regenerates and redistributes the block prefix whenever the MN's
  // prefix set changes. Distribution to MAGs is out of band and free.
  void regenerate_hnbp(Lma& l) {
    std::vector<Prefix> prefixes;
    for (const auto& e : l.cache) {
      for (const auto& p : e.prefixes) add_unique(prefixes, p);
    }
    if (prefixes.empty()) {
      l.hnbp.reset();
      for (auto& m : mags_) m.stored_hnbp.erase(l.id);
      return;
    }
    std::sort(prefixes.begin(), prefixes.end());
    auto fresh = generate_hnbp(prefixes, spec_.hnbp_mode, hnbp_clock_);
    if (l.hnbp && l.hnbp->members == fresh.members && l.hnbp->mask == fresh.mask) return;
    fresh.generation_time = ++hnbp_clock_;
    l.hnbp = fresh;
    for (auto& m : mags_) m.stored_hnbp[l.id] = fresh;
  }

  void send(MessageType t, const NodeId& src, const NodeId& dst) { send(t, src, dst, Payload{}); }

  void send(MessageType t, const NodeId& src, const NodeId& dst, Payload payload) {
    auto msg = SignalingMessage::make(t, src, dst);
    const LinkClass link = classify(src, dst);
    // RS is the layer-2 attachment trigger and is modeled as instantaneous.
    const double delay = t == MessageType::RS ? 0.0 : topo_.link_delay(link);
    trace_.events.push_back({now_, msg, link, payload.cleanup});
    queue_.push({now_ + delay, seq_++, std::move(msg), std::move(payload)});
  }

  void drain() {
    while (!queue_.empty()) {
      auto ev = queue_.top();
      queue_.pop();
      now_ = ev.deliver_at;
      deliver(ev.message, ev.payload);
    }
  }

  static NodeId mn_endpoint(const IfId& if_id) { return "MN/" + if_id; }

  NodeId current_lma_of(const FlowId& id) const { return flow_spec(id).owning_lma; }

  void start_move(const MoveSpec& mv, ScenarioResult& result) {
    auto& owner = lma(current_lma_of(mv.flow_id));
    auto& state = if_flow(owner, mv.flow_id);
    if (traits_.power_on) {
      Payload p;
      p.flow = mv.flow_id;
      p.if_id = mv.target_if;
      p.prefix = mv.presented_prefix.value_or(state.prefix);
      p.target_mag = mv.target_mag;
      pending_rejects_ = &result.rejected_flows;
      send(MessageType::RS, mn_endpoint(mv.target_if), mv.target_mag, std::move(p));
      return;
    }
    active_move(mv, owner, state);
  }

  // ---- all-active cases --------------------------------------------------

  void active_move(const MoveSpec& mv, Lma& owner, IfFlowState& state) {
    auto& target = mag(mv.target_mag);
    const bool has_route = std::any_of(target.routes.begin(), target.routes.end(),
                                       [&](const MagRoute& r) { return r.prefix == state.prefix; });
    if (has_route) {
      // Target MAG already routes the prefix; only the LMA caches change.
      reroute_at_mag(target, state.prefix, mv.target_if, owner.id);
      commit_active_move(owner, mv.flow_id, mv.target_if, mv.target_mag);
      return;
    }
    Payload p;
    p.flow = mv.flow_id;
    p.if_id = mv.target_if;
    p.prefix = state.prefix;
    p.target_mag = mv.target_mag;
    p.origin_lma = owner.id;
    p.old_mag = attached_mag_of(owner, state.if_id);
    if (knows_mag(owner, mv.target_mag)) {
      send(MessageType::FMI, owner.id, mv.target_mag, std::move(p));
      return;
    }
    // The owner has no binding through the target MAG; relay via an LMA that has.
    for (auto& other : lmas_) {
      if (other.id != owner.id && knows_mag(other, mv.target_mag)) {
        p.relay_lma = other.id;
        send(MessageType::eFMI, owner.id, other.id, std::move(p));
        return;
      }
    }
    throw Error(ErrorCode::InvalidArgument, "no LMA has a binding through " + mv.target_mag);
  }

  bool knows_mag(const Lma& l, const NodeId& m) const {
    return std::any_of(l.cache.begin(), l.cache.end(),
                       [&](const BindingCacheEntry& e) { return e.attached_mag == m; });
  }

  NodeId attached_mag_of(Lma& l, const IfId& if_id) {
    if (auto* e = find_binding(l, if_id)) return e->attached_mag;
    return {};
  }

  void reroute_at_mag(Mag& m, const Prefix& prefix, const IfId& if_id, const NodeId& lma_id) {
    if (!traits_.shared_prefix) {
      std::erase_if(m.routes, [&](const MagRoute& r) { return r.prefix == prefix; });
    }
    MagRoute route{if_id, prefix, lma_id};
    if (std::find(m.routes.begin(), m.routes.end(), route) == m.routes.end()) m.routes.push_back(route);
  }

  /// Moves `flow` onto `if_id` at the LMA: with unique prefixes the prefix
  /// leaves its old binding; with a shared prefix it stays on both.
  void move_prefix_binding(Lma& l, const IfFlowState& state, const IfId& if_id,
                           const NodeId& mag_id) {
    auto& target = binding_for(l, if_id, mag_id);
    add_unique(target.prefixes, state.prefix);
    if (traits_.shared_prefix) return;
    if (auto* old = find_binding(l, state.if_id); old && old != &target) {
      std::erase(old->prefixes, state.prefix);
      if (old->prefixes.empty()) {
        const IfId gone = old->if_id;
        std::erase_if(l.cache, [&](const BindingCacheEntry& e) { return e.if_id == gone; });
      }
    }
  }

  void commit_active_move(Lma& l, const FlowId& flow, const IfId& if_id, const NodeId& mag_id) {
    auto& state = if_flow(l, flow);
    move_prefix_binding(l, state, if_id, mag_id);
    state.if_id = if_id;
    state.bid = bid_of(if_id);
    regenerate_hnbp(l);
  }

  // ---- power-on cases ----------------------------------------------------

  void on_rs(const NodeId& mag_id, const Payload& p) {
    auto& m = mag(mag_id);
    if (traits_.block) {
      for (const auto& [lma_id, hnbp] : m.stored_hnbp) {
        bool ok = false;
        try {
          ok = on_attach(hnbp, p.prefix).action == AttachDecision::Action::SendUS;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::LengthMismatch) throw;
        }
        if (!ok) continue;
        m.routes.push_back({p.if_id, p.prefix, lma_id});
        send(MessageType::US, mag_id, lma_id, p);
        send(MessageType::RA, mag_id, mn_endpoint(p.if_id), p);
        return;
      }
      if (pending_rejects_) pending_rejects_->push_back(p.flow);
    }
    send(MessageType::PBU, mag_id, current_lma_of(p.flow), p);
  }

  void on_us(Lma& l, const Payload& p) {
    // Interface mobility: the flow keeps its binding (and BID) and prefix;
    // only the if-flow row learns the new interface.
    auto& state = if_flow(l, p.flow);
    state.if_id = p.if_id;
    state.prefix = p.prefix;
  }

  void on_pbu(Lma& l, const NodeId& from_mag, const Payload& p) {
    auto& state = if_flow(l, p.flow);
    const NodeId old_mag = attached_mag_of(l, state.if_id);
    move_prefix_binding(l, state, p.if_id, from_mag);
    if (!traits_.shared_prefix && !old_mag.empty() && old_mag != from_mag) {
      revocations_[{l.id, old_mag}].push_back(state.prefix);
    }
    state.if_id = p.if_id;
    state.bid = bid_of(p.if_id);
    regenerate_hnbp(l);
    Payload ack = p;
    ack.prefix = state.prefix;
    send(MessageType::PBA, l.id, from_mag, std::move(ack));
  }

  void on_pba(const NodeId& mag_id, const NodeId& from_lma, const Payload& p) {
    reroute_at_mag(mag(mag_id), p.prefix, p.if_id, from_lma);
    send(MessageType::RA, mag_id, mn_endpoint(p.if_id), p);
  }

  void revoke_moved_prefixes() {
    for (auto& [key, prefixes] : revocations_) {
      Payload p;
      p.revoked = prefixes;
      p.old_mag = key.second;
      send(MessageType::BRI, key.first, key.second, std::move(p));
    }
    revocations_.clear();
  }

  // ---- dispatch ----------------------------------------------------------

  void deliver(const SignalingMessage& msg, const Payload& p) {
    const NodeId& at = msg.dst;
    switch (msg.mtype) {
      case MessageType::RS: on_rs(at, p); break;
      case MessageType::RA: break;  // MN configures the prefix; no reply
      case MessageType::PBU: on_pbu(lma(at), msg.src, p); break;
      case MessageType::PBA: on_pba(at, msg.src, p); break;
      case MessageType::US: on_us(lma(at), p); break;
      case MessageType::FMI:
        if (p.cleanup) {
          std::erase_if(mag(at).routes, [&](const MagRoute& r) { return r.prefix == p.prefix; });
        } else {
          reroute_at_mag(mag(at), p.prefix, p.if_id, p.origin_lma);
        }
        send(MessageType::FMA, at, msg.src, p);
        break;
      case MessageType::FMA:
        if (!p.cleanup) finish_flow_move(lma(at), p);
        break;
      case MessageType::eFMI:
        if (is_lma(at)) {
          send(MessageType::eFMI, at, p.target_mag, p);
        } else {
          reroute_at_mag(mag(at), p.prefix, p.if_id, p.origin_lma);
          send(MessageType::eFMA, at, msg.src, p);
        }
        break;
      case MessageType::eFMA:
        if (at != p.origin_lma) {
          send(MessageType::eFMA, at, p.origin_lma, p);
        } else {
          finish_flow_move(lma(at), p);
        }
        break;
      case MessageType::BRI:
        for (const auto& pre : p.revoked) {
          std::erase_if(mag(at).routes, [&](const MagRoute& r) { return r.prefix == pre && r.lma == msg.src; });
        }
        send(MessageType::BRA, at, msg.src, p);
        break;
      case MessageType::BRA: break;
    }
  }

  void finish_flow_move(Lma& l, const Payload& p) {
    commit_active_move(l, p.flow, p.if_id, p.target_mag);
    if (spec_.fmi_cleanup && !traits_.shared_prefix && !p.old_mag.empty() &&
        p.old_mag != p.target_mag) {
      Payload c = p;
      c.cleanup = true;
      send(MessageType::FMI, l.id, p.old_mag, std::move(c));
    }
  }

  CacheSnapshot snapshot() const {
    CacheSnapshot s;
    for (const auto& l : lmas_) {
      LmaSnapshot ls{l.id, l.cache, l.if_flows, l.hnbp};
      std::sort(ls.bindings.begin(), ls.bindings.end(),
                [](const auto& a, const auto& b) { return a.bid < b.bid; });
      std::sort(ls.if_flows.begin(), ls.if_flows.end(),
                [](const auto& a, const auto& b) { return a.flow_id < b.flow_id; });
      s.lmas.push_back(std::move(ls));
    }
    for (const auto& m : mags_) s.mags.push_back({m.id, m.routes, m.stored_hnbp});
    return s;
  }

  const ScenarioSpec& spec_;
  Topology topo_;
  CaseTraits traits_;
  std::vector<Lma> lmas_;
  std::vector<Mag> mags_;
  std::map<IfId, int> bids_;
  std::map<std::pair<NodeId, NodeId>, std::vector<Prefix>> revocations_;
  std::priority_queue<InFlight, std::vector<InFlight>, std::greater<>> queue_;
  SignalingTrace trace_;
  std::vector<FlowId>* pending_rejects_ = nullptr;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
  std::uint64_t hnbp_clock_ = 0;
};

}  // namespace detail

/// Executes one of the twelve flow-mobility cases and returns its signaling
/// trace plus LMA/MAG cache snapshots before and after the moves.
inline ScenarioResult run_scenario(const ScenarioSpec& spec, const Topology& topology) {
  return detail::ScenarioEngine(spec, topology).run();
}

// ---------------------------------------------------------------------------
// Trace accounting

struct MessageTally {
  int count = 0;
  int total_bytes = 0;

  friend bool operator==(const MessageTally&, const MessageTally&) = default;
};

using SignalingTally = std::map<std::pair<LinkClass, MessageType>, MessageTally>;

inline SignalingTally count_signaling(const SignalingTrace& trace) {
  SignalingTally out;
  for (const auto& e : trace.events) {
    auto& t = out[{e.link, e.message.mtype}];
    ++t.count;
    t.total_bytes += e.message.size_bytes;
  }
  return out;
}

/// Sum of one-way link delays along the trace, excluding RS triggers and,
/// unless asked, cleanup exchanges.
inline double trace_link_delay(const SignalingTrace& trace, const Topology& topo,
                               bool include_cleanup = true) {
  double total = 0.0;
  for (const auto& e : trace.events) {
    if (e.message.mtype == MessageType::RS) continue;
    if (e.cleanup && !include_cleanup) continue;
    total += topo.link_delay(e.link);
  }
  return total;
}

}  // namespace flowmob
