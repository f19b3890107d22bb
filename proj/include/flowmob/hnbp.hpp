#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "flowmob/error.hpp"
#include "flowmob/prefix.hpp"

namespace flowmob {

/// Builds the block prefix an LMA distributes to its MAGs.
///
/// OrMask folds the prefixes with bitwise OR (a single repeated prefix folds
/// to itself) and requires a common length. ExactSet keeps the prefixes as a
/// set. Both results are independent of input order and multiplicity.
inline HomeNetworkBlockPrefix generate_hnbp(std::span<const Prefix> prefixes, HnbpMode mode,
                                            std::uint64_t generation_time = 0) {
  if (prefixes.empty()) {
    throw Error(ErrorCode::EmptyPrefixList, "cannot build a block prefix from no prefixes");
  }
  HomeNetworkBlockPrefix hnbp;
  hnbp.mode = mode;
  hnbp.generation_time = generation_time;
  if (mode == HnbpMode::ExactSet) {
    hnbp.members.insert(prefixes.begin(), prefixes.end());
    return hnbp;
  }
  const int length = prefixes.front().length();
  Bits128 acc{};
  for (const auto& p : prefixes) {
    if (p.length() != length) {
      throw Error(ErrorCode::MixedPrefixLengths,
                  "OR-mask aggregation needs equal lengths, got /" + std::to_string(length) +
                      " and /" + std::to_string(p.length()));
    }
    acc = acc | p.bits();
  }
  hnbp.mask = Prefix(acc, length);
  return hnbp;
}

/// MAG-side check of a prefix presented on a newly attached interface.
///
/// OrMask accepts any candidate whose set bits are contained in the mask,
/// which includes prefixes that were never assigned (e.g. OR{1,2} admits 3).
inline bool verify_prefix(const HomeNetworkBlockPrefix& hnbp, const Prefix& candidate) {
  if (hnbp.mode == HnbpMode::ExactSet) return hnbp.members.contains(candidate);
  if (candidate.length() != hnbp.mask.length()) {
    throw Error(ErrorCode::LengthMismatch, "candidate " + candidate.to_string() +
                                               " vs block prefix " + hnbp.mask.to_string());
  }
  return (candidate.bits() & hnbp.mask.bits()) == candidate.bits();
}

struct AttachDecision {
  enum class Action { SendUS, ProxyBindingRegistration };

  Action action = Action::ProxyBindingRegistration;
  std::optional<Prefix> verified_prefix;

  friend bool operator==(const AttachDecision&, const AttachDecision&) = default;
};

inline AttachDecision on_attach(const HomeNetworkBlockPrefix& hnbp, const Prefix& flow_prefix) {
  if (verify_prefix(hnbp, flow_prefix)) {
    return {AttachDecision::Action::SendUS, flow_prefix};
  }
  return {AttachDecision::Action::ProxyBindingRegistration, std::nullopt};
}

}  // namespace flowmob
