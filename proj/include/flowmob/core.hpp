#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowmob/error.hpp"
#include "flowmob/prefix.hpp"

namespace flowmob {

using NodeId = std::string;
using MnId = std::string;
using IfId = std::string;
using FlowId = std::string;

// ---------------------------------------------------------------------------
// Signaling messages

enum class MessageType { RS, RA, PBU, PBA, FMI, FMA, eFMI, eFMA, BRI, BRA, US };

inline constexpr std::array kAllMessageTypes = {
    MessageType::RS,  MessageType::RA,   MessageType::PBU,  MessageType::PBA,
    MessageType::FMI, MessageType::FMA,  MessageType::eFMI, MessageType::eFMA,
    MessageType::BRI, MessageType::BRA,  MessageType::US,
};

inline std::string_view to_string(MessageType t) {
  switch (t) {
    case MessageType::RS: return "RS";
    case MessageType::RA: return "RA";
    case MessageType::PBU: return "PBU";
    case MessageType::PBA: return "PBA";
    case MessageType::FMI: return "FMI";
    case MessageType::FMA: return "FMA";
    case MessageType::eFMI: return "eFMI";
    case MessageType::eFMA: return "eFMA";
    case MessageType::BRI: return "BRI";
    case MessageType::BRA: return "BRA";
    case MessageType::US: return "US";
  }
  return "?";
}

/// Size in bytes used for overhead accounting. eFMI/eFMA carry the same
/// payload as FMI/FMA and are costed identically.
constexpr int message_size(MessageType t) {
  switch (t) {
    case MessageType::RS: return 80;
    case MessageType::RA: return 90;
    case MessageType::PBU: return 76;
    case MessageType::PBA: return 76;
    case MessageType::FMI:
    case MessageType::eFMI: return 56;
    case MessageType::FMA:
    case MessageType::eFMA: return 56;
    case MessageType::US: return 56;
    case MessageType::BRI: return 56;
    case MessageType::BRA: return 56;
  }
  return 0;
}

struct SignalingMessage {
  MessageType mtype = MessageType::RS;
  int size_bytes = 0;
  NodeId src;
  NodeId dst;
  bool b_flag = false;  // set only on US: the flow was verified against the block prefix

  static SignalingMessage make(MessageType t, NodeId src, NodeId dst) {
    return {t, message_size(t), std::move(src), std::move(dst), t == MessageType::US};
  }

  friend bool operator==(const SignalingMessage&, const SignalingMessage&) = default;
};

// ---------------------------------------------------------------------------
// Topology

enum class LinkClass { Wireless, MagLma, LmaLma, MagMag };

inline std::string_view to_string(LinkClass c) {
  switch (c) {
    case LinkClass::Wireless: return "MN-MAG";
    case LinkClass::MagLma: return "MAG-LMA";
    case LinkClass::LmaLma: return "LMA-LMA";
    case LinkClass::MagMag: return "MAG-MAG";
  }
  return "?";
}

/// Hop counts and one-way delays (ms). The wireless path MN-AP-MAG costs
/// t_mr + t_ra; MAG-LMA costs t_am; LMA-LMA costs t_pn.
struct Topology {
  int n_mn_mag = 2;
  int n_mag_lma = 2;
  int n_mag_mag = 1;
  int n_lma_lma = 2;
  double t_mr = 10.0;
  double t_ra = 2.0;
  double t_am = 20.0;
  double t_pn = 20.0;

  void validate() const {
    if (n_mn_mag < 1 || n_mag_lma < 1 || n_mag_mag < 1 || n_lma_lma < 1) {
      throw Error(ErrorCode::InvalidArgument, "topology hop counts must be >= 1");
    }
    if (!(t_mr > 0) || !(t_ra > 0) || !(t_am > 0) || !(t_pn > 0)) {
      throw Error(ErrorCode::InvalidArgument, "topology delays must be > 0");
    }
  }

  double link_delay(LinkClass c) const {
    switch (c) {
      case LinkClass::Wireless: return t_mr + t_ra;
      case LinkClass::MagLma: return t_am;
      case LinkClass::LmaLma: return t_pn;
      // Not used by any evaluated technique; MAG-MAG paths reuse the wired delay.
      case LinkClass::MagMag: return t_am;
    }
    return 0.0;
  }

  int link_hops(LinkClass c) const {
    switch (c) {
      case LinkClass::Wireless: return n_mn_mag;
      case LinkClass::MagLma: return n_mag_lma;
      case LinkClass::LmaLma: return n_lma_lma;
      case LinkClass::MagMag: return n_mag_mag;
    }
    return 0;
  }

  friend bool operator==(const Topology&, const Topology&) = default;
};

// ---------------------------------------------------------------------------
// Techniques

enum class Environment { SingleLMA, MultiLMA };

inline std::string_view to_string(Environment e) {
  return e == Environment::SingleLMA ? "single" : "multi";
}

enum class Technique {
  ActiveDiff,
  NotactiveCom,
  NotactiveDiff,
  NotactiveComBlock,
  NotactiveDiffBlock,
  Active2MAG,
  Notactive1MAG,
  Notactive2MAG,
  Notactive1MAGBlock,
  Notactive2MAGBlock,
};

inline constexpr std::array kAllTechniques = {
    Technique::ActiveDiff,    Technique::NotactiveCom,       Technique::NotactiveDiff,
    Technique::NotactiveComBlock, Technique::NotactiveDiffBlock, Technique::Active2MAG,
    Technique::Notactive1MAG, Technique::Notactive2MAG,      Technique::Notactive1MAGBlock,
    Technique::Notactive2MAGBlock,
};

inline Environment environment_of(Technique t) {
  return static_cast<int>(t) < 5 ? Environment::SingleLMA : Environment::MultiLMA;
}

inline bool is_block(Technique t) {
  return t == Technique::NotactiveComBlock || t == Technique::NotactiveDiffBlock ||
         t == Technique::Notactive1MAGBlock || t == Technique::Notactive2MAGBlock;
}

inline bool is_power_on(Technique t) {
  return t != Technique::ActiveDiff && t != Technique::Active2MAG;
}

inline std::string_view to_string(Technique t) {
  switch (t) {
    case Technique::ActiveDiff: return "active_diff";
    case Technique::NotactiveCom: return "notactive_com";
    case Technique::NotactiveDiff: return "notactive_diff";
    case Technique::NotactiveComBlock: return "notactive_com_block";
    case Technique::NotactiveDiffBlock: return "notactive_diff_block";
    case Technique::Active2MAG: return "active_2MAG";
    case Technique::Notactive1MAG: return "notactive_1MAG";
    case Technique::Notactive2MAG: return "notactive_2MAG";
    case Technique::Notactive1MAGBlock: return "notactive_1MAG_block";
    case Technique::Notactive2MAGBlock: return "notactive_2MAG_block";
  }
  return "?";
}

inline Technique parse_technique(std::string_view text) {
  for (auto t : kAllTechniques) {
    if (to_string(t) == text) return t;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown technique '" + std::string(text) + "'");
}

inline std::vector<Technique> techniques_for(Environment env) {
  std::vector<Technique> out;
  for (auto t : kAllTechniques) {
    if (environment_of(t) == env) out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mobility state

struct BindingCacheEntry {
  MnId mn_id;
  IfId if_id;
  int bid = 0;
  std::vector<Prefix> prefixes;
  NodeId attached_mag;
  NodeId owning_lma;

  friend bool operator==(const BindingCacheEntry&, const BindingCacheEntry&) = default;
};

/// One row of an LMA's interface-flow mobility cache.
struct IfFlowState {
  FlowId flow_id;
  IfId if_id;
  int bid = 0;
  Prefix prefix;

  friend bool operator==(const IfFlowState&, const IfFlowState&) = default;
};

}  // namespace flowmob
