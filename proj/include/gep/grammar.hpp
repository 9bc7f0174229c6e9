#ifndef GEP_GRAMMAR_HPP
#define GEP_GRAMMAR_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gep {

enum class SymbolKind { kTerminal, kNonterminal };

/// A grammar symbol by kind and index into the grammar's terminal or
/// nonterminal table.
struct SymbolRef {
  SymbolKind kind = SymbolKind::kTerminal;
  int index = 0;

  bool terminal() const { return kind == SymbolKind::kTerminal; }
  friend bool operator==(const SymbolRef&, const SymbolRef&) = default;
};

inline SymbolRef terminal_ref(int index) { return {SymbolKind::kTerminal, index}; }
inline SymbolRef nonterminal_ref(int index) { return {SymbolKind::kNonterminal, index}; }

struct ProductionRule {
  int lhs = 0;
  std::vector<SymbolRef> rhs;
  double weight = 1.0;
};

/// A sentence over the terminals of one grammar, as terminal indices.
using Sentence = std::vector<int>;

/// Probabilistic context-free grammar. Immutable once built; every
/// instance satisfies the load-time validation rules (no empty right-hand
/// sides, all nonterminals defined, productive and reachable, weights
/// normalized per left-hand side).
class Grammar {
 public:
  /// Validates and normalizes. Throws GrammarError.
  static Grammar build(std::vector<std::string> terminals,
                       std::vector<std::string> nonterminals,
                       std::vector<ProductionRule> rules, int root);

  const std::vector<std::string>& terminals() const { return terminals_; }
  const std::vector<std::string>& nonterminals() const { return nonterminals_; }
  const std::vector<ProductionRule>& rules() const { return rules_; }
  const ProductionRule& rule(int index) const { return rules_[static_cast<std::size_t>(index)]; }
  int root() const { return root_; }

  /// Rule indices with the given left-hand side, in file order.
  std::span<const int> rules_for(int nonterminal) const {
    return rules_by_lhs_[static_cast<std::size_t>(nonterminal)];
  }

  std::optional<int> terminal_index(std::string_view name) const;
  std::optional<int> nonterminal_index(std::string_view name) const;

  const std::string& name(SymbolRef s) const {
    return s.terminal() ? terminals_[static_cast<std::size_t>(s.index)]
                        : nonterminals_[static_cast<std::size_t>(s.index)];
  }

  /// Rule indices whose weight is zero (kept structurally, never scored).
  std::vector<int> zero_weight_rules() const;

  /// Messages produced while building (renormalization, zero weights).
  const std::vector<std::string>& notices() const { return notices_; }

  /// Same structure, new weights (renormalized per left-hand side).
  Grammar with_weights(std::span<const double> weights) const;

  /// Rule rendered as "A -> B 'a' C".
  std::string rule_string(int index, int dot = -1) const;

  /// Serialization in the grammar file format; load_grammar(to_text())
  /// reproduces the grammar.
  std::string to_text() const;

 private:
  Grammar() = default;

  std::vector<std::string> terminals_;
  std::vector<std::string> nonterminals_;
  std::vector<ProductionRule> rules_;
  std::vector<std::vector<int>> rules_by_lhs_;
  int root_ = 0;
  std::vector<std::string> notices_;
};

/// Parses grammar file text:
///   LHS -> sym sym ... [weight] | alt ... [weight]
/// Terminals in single quotes, '#' comments, optional "%root NAME".
/// Throws GrammarError with line and column for syntax errors.
Grammar load_grammar(std::string_view text);
Grammar load_grammar_file(const std::string& path);

/// Splits on whitespace and maps each token to a terminal index.
/// Throws InputError on an unknown terminal.
Sentence parse_sentence(const Grammar& g, std::string_view text);
Sentence to_sentence(const Grammar& g, std::span<const std::string> labels);
std::vector<std::string> sentence_labels(const Grammar& g, const Sentence& s);
std::string format_sentence(const Grammar& g, const Sentence& s);

/// Parse tree node. Terminal leaves carry rule == -1 and no children.
struct ParseTree {
  SymbolRef symbol;
  int rule = -1;
  std::vector<ParseTree> children;

  Sentence leaves() const;
  /// Product of rule weights, in log space.
  double log_probability(const Grammar& g) const;
  /// Bracketed form, e.g. (G (R '0')).
  std::string to_string(const Grammar& g) const;
};

/// Draws a sentence by left-most derivation. Past max_depth every
/// nonterminal expands by its shortest-yield rule, so sampling always
/// terminates. Zero-weight rules are never drawn.
Sentence sample_sentence(const Grammar& g, std::uint64_t seed, int max_depth = 32);

struct ViterbiParse {
  double probability = 0.0;
  double log_probability = 0.0;
  std::optional<ParseTree> tree;
};

/// Maximum-probability derivation of a complete sentence. Among equally
/// probable trees the one whose pre-order rule-index sequence is
/// lexicographically smallest wins, i.e. the smallest rule index at the
/// first differing node. Ungrammatical sentences give probability 0.
ViterbiParse viterbi_likelihood(const Grammar& g, const Sentence& sentence);

struct PrefixLikelihoodOptions {
  double mass_cutoff = 1e-6;
  int max_len = 64;
  /// Bound on distinct search states; the sum so far is returned when hit.
  std::size_t state_cap = 1'000'000;
};

/// Sum of Viterbi likelihoods of complete sentences starting with prefix,
/// enumerated best-first over left-most partial derivations. Partial
/// derivations below mass_cutoff or longer than max_len are pruned, so the
/// result is a lower bound, exact for finite languages within max_len
/// when mass_cutoff is 0.
double grammar_prefix_likelihood(const Grammar& g, const Sentence& prefix,
                                 const PrefixLikelihoodOptions& options = {});

using SentenceCorpus = std::vector<Sentence>;

/// Re-estimates rule weights from Viterbi rule-use counts with additive
/// smoothing. Rules left at weight 0 are reported in the returned
/// grammar's notices(). Throws InputError naming the first ungrammatical
/// sentence.
Grammar fit_rule_probabilities(const Grammar& structure, const SentenceCorpus& corpus,
                               double smoothing = 0.0);

struct ScoredSentence {
  Sentence sentence;
  double probability = 0.0;
};

/// Every sentence of L(G) with length <= max_len, with its Viterbi
/// likelihood, sorted by sentence. Breadth-first over sentential forms;
/// throws Error when the frontier exceeds frontier_cap.
std::vector<ScoredSentence> enumerate_language(const Grammar& g, int max_len,
                                               std::size_t frontier_cap = 1'000'000);

}  // namespace gep

#endif  // GEP_GRAMMAR_HPP
