#pragma once

#include <vector>

#include "flowmob/core.hpp"

namespace flowmob {

/// Whether the multi-LMA formulas are used verbatim or with the
/// notactive_2MAG delay term restored to match its hop count.
enum class FormulaMode { Verbatim, Corrected };

inline std::string_view to_string(FormulaMode m) {
  return m == FormulaMode::Verbatim ? "verbatim" : "corrected";
}

/// `multiplicity` one-way traversals of a link class. A term with
/// `counts_delay == false` contributes hops but no delay.
struct HandoverTerm {
  int multiplicity = 0;
  LinkClass link = LinkClass::MagLma;
  bool counts_delay = true;
};

inline std::vector<HandoverTerm> handover_terms(Technique t,
                                                FormulaMode mode = FormulaMode::Verbatim) {
  using L = LinkClass;
  switch (t) {
    case Technique::ActiveDiff:
      return {{2, L::MagLma}, {2, L::MagLma}};
    case Technique::NotactiveCom:
    case Technique::Notactive1MAG:
      return {{2, L::Wireless}, {4, L::MagLma}};
    case Technique::NotactiveDiff:
      return {{2, L::Wireless}, {4, L::MagLma}, {2, L::MagLma}};
    case Technique::NotactiveComBlock:
    case Technique::NotactiveDiffBlock:
    case Technique::Notactive1MAGBlock:
    case Technique::Notactive2MAGBlock:
      return {{2, L::Wireless}, {2, L::MagLma}};
    case Technique::Active2MAG:
      return {{2, L::LmaLma}, {2, L::MagLma}, {2, L::MagLma}};
    case Technique::Notactive2MAG:
      // Verbatim delay has 4 t_am while the hop count has 4+2 N_MAG-LMA.
      return {{2, L::Wireless}, {4, L::MagLma}, {2, L::MagLma, mode == FormulaMode::Corrected}};
  }
  return {};
}

struct HandoverComponents {
  double d_ho = 0.0;  // ms
  int n_ho = 0;       // hops
};

inline HandoverComponents handover_components(Technique t, const Topology& topo,
                                              FormulaMode mode = FormulaMode::Verbatim) {
  HandoverComponents out;
  for (const auto& term : handover_terms(t, mode)) {
    if (term.counts_delay) out.d_ho += term.multiplicity * topo.link_delay(term.link);
    out.n_ho += term.multiplicity * topo.link_hops(term.link);
  }
  return out;
}

}  // namespace flowmob
