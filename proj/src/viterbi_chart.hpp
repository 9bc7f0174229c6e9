#ifndef GEP_SRC_VITERBI_CHART_HPP
#define GEP_SRC_VITERBI_CHART_HPP

#include <functional>
#include <optional>
#include <vector>

#include "gep/grammar.hpp"

namespace gep::detail {

/// Span-based max-product chart over a complete sentence. Handles general
/// rules: right-hand sides of any length, unit rules relaxed to a fixed
/// point per span.
class ViterbiChart {
 public:
  /// allowed(A, i, j) restricts which nonterminal spans [i, j) may be
  /// built. With structural set, zero-weight rules take a large finite
  /// penalty instead of being excluded.
  using SpanFilter = std::function<bool(int, int, int)>;

  ViterbiChart(const Grammar& g, const Sentence& sentence, bool structural = false,
               const SpanFilter& allowed = {});

  double log_probability(int nonterminal, int start, int end) const {
    return cell(nonterminal, start, end).log_prob;
  }
  /// Root derivation over the whole sentence, if any.
  std::optional<ParseTree> root_tree() const;
  double root_log_probability() const;

 private:
  struct Cell {
    double log_prob;
    int rule = -1;
    std::vector<std::pair<int, int>> spans;
    std::vector<int> preorder;
  };

  const Cell& cell(int a, int i, int j) const { return cells_[index(a, i, j)]; }
  Cell& cell(int a, int i, int j) { return cells_[index(a, i, j)]; }
  std::size_t index(int a, int i, int j) const {
    const std::size_t n1 = n_ + 1;
    return (static_cast<std::size_t>(a) * n1 + static_cast<std::size_t>(i)) * n1 +
           static_cast<std::size_t>(j);
  }
  double rule_log_weight(int rule) const;
  void fill_span(int i, int j, const SpanFilter& allowed);
  ParseTree build(int a, int i, int j) const;

  const Grammar& g_;
  const Sentence& s_;
  bool structural_;
  std::size_t n_;
  std::vector<Cell> cells_;
};

}  // namespace gep::detail

#endif  // GEP_SRC_VITERBI_CHART_HPP
