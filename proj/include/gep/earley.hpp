#ifndef GEP_EARLEY_HPP
#define GEP_EARLEY_HPP

#include <string>
#include <vector>

#include "gep/grammar.hpp"

namespace gep {

/// Dotted rule with the index of the state set where matching began.
struct EarleyItem {
  int rule = 0;
  int dot = 0;
  int origin = 0;

  friend bool operator==(const EarleyItem&, const EarleyItem&) = default;
};

/// How an item entered its set. Item numbers are 0-based positions.
struct ItemSource {
  enum class Kind { kStart, kPredict, kScan, kComplete };
  Kind kind = Kind::kStart;
  int item = -1;         // predicting / scanned / completed item
  int origin_set = -1;   // set of the advanced item (scan, complete)
  int origin_item = -1;  // the advanced item (complete)
};

struct ChartEntry {
  EarleyItem item;
  ItemSource source;
};

/// State sets S(0)..S(n), each duplicate-free and in insertion order.
struct Chart {
  std::vector<std::vector<ChartEntry>> sets;
  Sentence input;

  bool contains(std::size_t set, const EarleyItem& item) const;
};

struct Recognition {
  bool accepted = false;
  Chart chart;
};

/// Classic Earley recognition with prediction, scanning and completion
/// run to a fixed point per set through an insertion-ordered worklist.
/// Throws InputError if the sentence holds an index that is not a
/// terminal of g.
Recognition recognize(const Grammar& g, const Sentence& sentence);

/// Best tree of an accepting chart; ties resolved as in
/// viterbi_likelihood. Zero-weight rules are used only when no positive
/// derivation exists. Throws Error on a rejecting chart.
ParseTree extract_parse_tree(const Chart& chart, const Grammar& g);

/// One block per set: "state# | rule-with-dot | origin | comment".
std::string dump_chart(const Chart& chart, const Grammar& g);

}  // namespace gep

#endif  // GEP_EARLEY_HPP
