#ifndef GEP_PARSER_HPP
#define GEP_PARSER_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gep/grammar.hpp"
#include "gep/matrix.hpp"

namespace gep {

/// Cached probabilities of one label prefix l under a matrix y, all in
/// log space:
///   at[t]    = log p(l | x_0..t)  (merged labeling of frames 0..t is l)
///   prefix   = log p(l... | x)    (merged labeling starts with l)
///   sentence = at[T-1]
struct PrefixProbabilities {
  std::vector<double> at;
  double prefix = 0.0;
  double sentence = 0.0;
};

/// Values for the empty prefix: at[] all -inf, prefix log 1.
PrefixProbabilities empty_prefix_probabilities(const ProbMatrix& y);

/// Extends parent (the probabilities of l) by the label in column
/// `column`, giving those of l + label. O(T).
PrefixProbabilities extend_prefix(const ProbMatrix& y, const PrefixProbabilities& parent,
                                  bool parent_is_empty, std::size_t column);

/// Probabilities of a whole label sequence, folded from the empty prefix.
/// Throws InputError on a label missing from y.
PrefixProbabilities prefix_probabilities(const ProbMatrix& y, std::span<const std::string> labels);

/// log p(l | x_0..T-1); -inf when |l| > T. Throws InputError for an empty
/// sentence or an unknown label.
double sentence_log_probability(const ProbMatrix& y, std::span<const std::string> sentence);

/// log p(l... | x_0..T-1); 0 for the empty prefix.
double prefix_log_probability(const ProbMatrix& y, std::span<const std::string> prefix);

/// Coordinates (m, n) of a state set: prefix length and creation ordinal
/// within that level.
struct SetCoords {
  int level = 0;
  int ordinal = 0;

  friend bool operator==(const SetCoords&, const SetCoords&) = default;
};

struct DottedRule {
  int rule = 0;
  int dot = 0;

  friend bool operator==(const DottedRule&, const DottedRule&) = default;
  friend auto operator<=>(const DottedRule&, const DottedRule&) = default;
};

struct ParseOutcome {
  Sentence best_sentence;
  std::vector<std::string> best_labels;
  double log_sentence_prob = 0.0;
  double log_prefix_prob = 0.0;
  /// Always set for complete parses; empty for a prefix that is not a sentence.
  std::optional<ParseTree> parse_tree;
  SetCoords final_set;
  /// Dotted rules of the closed final set S(m, n), sorted, duplicates
  /// (differing only in origin) removed.
  std::vector<DottedRule> final_states;
  std::size_t expanded_nodes = 0;
  std::size_t created_nodes = 0;
};

struct ParseOptions {
  /// Online mode for partially observed sequences: every prefix-tree
  /// node is eligible, so best_sentence is the most probable grammatical
  /// prefix rather than a complete sentence.
  bool allow_prefix = false;
};

/// Best-first search over the grammar prefix tree. Each popped state set
/// is closed under prediction and completion; scanning creates one child
/// set per (set, terminal), prioritized by its prefix probability. Stops
/// once the best complete sentence is at least as probable as every
/// unexpanded prefix, which makes the result the exact argmax of
/// p(l | x) over L(G). Equal probabilities go to the earlier-created
/// prefix node; children are created in the label order of y.
///
/// Every terminal of g must be a label of y. Throws InfeasibleParseError
/// when no sentence has positive probability.
ParseOutcome parse(const Grammar& g, const ProbMatrix& y, const ParseOptions& options = {});

}  // namespace gep

#endif  // GEP_PARSER_HPP
