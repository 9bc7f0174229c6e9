// Scoring, sampling and estimation over a loaded Grammar.

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <set>
#include <unordered_set>

#include "gep/error.hpp"
#include "gep/grammar.hpp"
#include "gep/logspace.hpp"
#include "viterbi_chart.hpp"

namespace gep {

namespace detail {

namespace {

constexpr double kZeroWeightPenalty = -1e6;

// Strictly better: higher probability, or tied probability with a
// lexicographically smaller pre-order rule sequence.
bool better(double lp, const std::vector<int>& order, double best_lp,
            const std::vector<int>& best_order) {
  if (lp == kLogZero) return false;
  if (best_lp == kLogZero) return true;
  if (log_equal(lp, best_lp)) return order < best_order;
  return lp > best_lp;
}

struct Partial {
  double log_prob = kLogZero;
  std::vector<std::pair<int, int>> spans;
  std::vector<int> preorder;
};

}  // namespace

ViterbiChart::ViterbiChart(const Grammar& g, const Sentence& sentence, bool structural,
                           const SpanFilter& allowed)
    : g_(g), s_(sentence), structural_(structural), n_(sentence.size()) {
  const std::size_t n1 = n_ + 1;
  cells_.assign(g.nonterminals().size() * n1 * n1, Cell{kLogZero, -1, {}, {}});
  for (std::size_t len = 1; len <= n_; ++len) {
    for (std::size_t i = 0; i + len <= n_; ++i) {
      fill_span(static_cast<int>(i), static_cast<int>(i + len), allowed);
    }
  }
}

double ViterbiChart::rule_log_weight(int rule) const {
  const double w = g_.rule(rule).weight;
  if (w > 0.0) return std::log(w);
  return structural_ ? kZeroWeightPenalty : kLogZero;
}

void ViterbiChart::fill_span(int i, int j, const SpanFilter& allowed) {
  const int len = j - i;
  const auto& rules = g_.rules();
  for (std::size_t ri = 0; ri < rules.size(); ++ri) {
    const auto& r = rules[ri];
    const int m = static_cast<int>(r.rhs.size());
    if (m > len) continue;
    if (m == 1 && !r.rhs[0].terminal()) continue;  // unit rules below
    if (allowed && !allowed(r.lhs, i, j)) continue;
    const double lw = rule_log_weight(static_cast<int>(ri));
    if (lw == kLogZero) continue;

    // partial[p - i]: best match of rhs[0..k) over [i, p).
    std::vector<Partial> cur(static_cast<std::size_t>(len) + 1);
    cur[0].log_prob = 0.0;
    for (int k = 0; k < m; ++k) {
      std::vector<Partial> next(static_cast<std::size_t>(len) + 1);
      const SymbolRef sym = r.rhs[static_cast<std::size_t>(k)];
      const int rest = m - k - 1;
      for (int p = i; p <= j; ++p) {
        const Partial& from = cur[static_cast<std::size_t>(p - i)];
        if (from.log_prob == kLogZero) continue;
        for (int q = p + 1; q <= j - rest; ++q) {
          double add = kLogZero;
          const std::vector<int>* sub_order = nullptr;
          if (sym.terminal()) {
            if (q != p + 1 || s_[static_cast<std::size_t>(p)] != sym.index) continue;
            add = 0.0;
          } else {
            const Cell& c = cell(sym.index, p, q);
            if (c.log_prob == kLogZero) continue;
            add = c.log_prob;
            sub_order = &c.preorder;
          }
          std::vector<int> order = from.preorder;
          if (sub_order) order.insert(order.end(), sub_order->begin(), sub_order->end());
          Partial& to = next[static_cast<std::size_t>(q - i)];
          const double lp = from.log_prob + add;
          if (better(lp, order, to.log_prob, to.preorder)) {
            to.log_prob = lp;
            to.preorder = std::move(order);
            to.spans = from.spans;
            to.spans.emplace_back(p, q);
          }
        }
      }
      cur = std::move(next);
    }
    Partial& done = cur[static_cast<std::size_t>(len)];
    if (done.log_prob == kLogZero) continue;
    std::vector<int> order;
    order.reserve(done.preorder.size() + 1);
    order.push_back(static_cast<int>(ri));
    order.insert(order.end(), done.preorder.begin(), done.preorder.end());
    Cell& target = cell(r.lhs, i, j);
    const double lp = done.log_prob + lw;
    if (better(lp, order, target.log_prob, target.preorder)) {
      target.log_prob = lp;
      target.rule = static_cast<int>(ri);
      target.spans = std::move(done.spans);
      target.preorder = std::move(order);
    }
  }

  // Unit rules: relax to a fixed point. Every improvement is strict, and a
  // cycle through unit rules never improves a score, so this terminates.
  const std::size_t max_rounds = rules.size() * g_.nonterminals().size() + 2;
  for (std::size_t round = 0; round < max_rounds; ++round) {
    bool changed = false;
    for (std::size_t ri = 0; ri < rules.size(); ++ri) {
      const auto& r = rules[ri];
      if (r.rhs.size() != 1 || r.rhs[0].terminal()) continue;
      if (allowed && !allowed(r.lhs, i, j)) continue;
      const double lw = rule_log_weight(static_cast<int>(ri));
      if (lw == kLogZero) continue;
      const Cell& child = cell(r.rhs[0].index, i, j);
      if (child.log_prob == kLogZero) continue;
      std::vector<int> order;
      order.reserve(child.preorder.size() + 1);
      order.push_back(static_cast<int>(ri));
      order.insert(order.end(), child.preorder.begin(), child.preorder.end());
      const double lp = child.log_prob + lw;
      Cell& target = cell(r.lhs, i, j);
      if (better(lp, order, target.log_prob, target.preorder)) {
        target.log_prob = lp;
        target.rule = static_cast<int>(ri);
        target.spans = {{i, j}};
        target.preorder = std::move(order);
        changed = true;
      }
    }
    if (!changed) break;
  }
}

ParseTree ViterbiChart::build(int a, int i, int j) const {
  const Cell& c = cell(a, i, j);
  ParseTree node{nonterminal_ref(a), c.rule, {}};
  const auto& r = g_.rule(c.rule);
  for (std::size_t k = 0; k < r.rhs.size(); ++k) {
    const SymbolRef sym = r.rhs[k];
    const auto [p, q] = c.spans[k];
    if (sym.terminal()) node.children.push_back(ParseTree{sym, -1, {}});
    else node.children.push_back(build(sym.index, p, q));
  }
  return node;
}

double ViterbiChart::root_log_probability() const {
  if (n_ == 0) return kLogZero;
  return cell(g_.root(), 0, static_cast<int>(n_)).log_prob;
}

std::optional<ParseTree> ViterbiChart::root_tree() const {
  if (root_log_probability() == kLogZero) return std::nullopt;
  return build(g_.root(), 0, static_cast<int>(n_));
}

}  // namespace detail

ViterbiParse viterbi_likelihood(const Grammar& g, const Sentence& sentence) {
  ViterbiParse out;
  out.log_probability = kLogZero;
  if (sentence.empty()) return out;
  detail::ViterbiChart chart(g, sentence);
  out.log_probability = chart.root_log_probability();
  out.probability = std::exp(out.log_probability);
  out.tree = chart.root_tree();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Search state of a left-most partial derivation: the terminals produced
// so far and the pending symbols, leftmost last.
struct DerivationState {
  Sentence produced;
  std::vector<SymbolRef> pending;
};

std::vector<int> state_key(const DerivationState& s) {
  std::vector<int> key(s.produced);
  key.push_back(-1);
  for (SymbolRef p : s.pending) key.push_back(p.terminal() ? p.index : -2 - p.index);
  return key;
}

struct KeyHash {
  std::size_t operator()(const std::vector<int>& v) const {
    std::size_t h = 1469598103934665603ULL;
    for (int x : v) {
      h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

// Moves leading terminals from pending to produced; false when one of them
// contradicts the required prefix.
bool shift_terminals(DerivationState& s, const Sentence& prefix) {
  while (!s.pending.empty() && s.pending.back().terminal()) {
    const int t = s.pending.back().index;
    const std::size_t pos = s.produced.size();
    if (pos < prefix.size() && prefix[pos] != t) return false;
    s.produced.push_back(t);
    s.pending.pop_back();
  }
  return true;
}

}  // namespace

double grammar_prefix_likelihood(const Grammar& g, const Sentence& prefix,
                                 const PrefixLikelihoodOptions& options) {
  if (options.mass_cutoff < 0.0) throw Error("mass_cutoff must be non-negative");
  if (static_cast<int>(prefix.size()) > options.max_len) return 0.0;
  const double log_cutoff = options.mass_cutoff > 0.0 ? std::log(options.mass_cutoff) : kLogZero;

  struct Entry {
    double log_prob;
    std::uint64_t seq;
    DerivationState state;
  };
  auto cmp = [](const Entry& a, const Entry& b) {
    if (a.log_prob != b.log_prob) return a.log_prob < b.log_prob;
    return a.seq > b.seq;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> frontier(cmp);
  std::unordered_set<std::vector<int>, KeyHash> expanded;
  std::uint64_t seq = 0;

  auto admissible = [&](const DerivationState& s) {
    return static_cast<int>(s.produced.size() + s.pending.size()) <= options.max_len;
  };

  DerivationState start;
  start.pending.push_back(nonterminal_ref(g.root()));
  frontier.push(Entry{0.0, seq++, std::move(start)});

  std::vector<double> found;
  while (!frontier.empty()) {
    Entry top = frontier.top();
    frontier.pop();
    auto key = state_key(top.state);
    if (!expanded.insert(std::move(key)).second) continue;
    if (expanded.size() > options.state_cap) break;

    if (top.state.pending.empty()) {
      // First pop of a complete sentence carries its best derivation.
      if (top.state.produced.size() >= prefix.size()) found.push_back(std::exp(top.log_prob));
      continue;
    }
    const int a = top.state.pending.back().index;
    for (int ri : g.rules_for(a)) {
      const auto& r = g.rule(ri);
      if (r.weight <= 0.0) continue;
      const double lp = top.log_prob + std::log(r.weight);
      if (lp < log_cutoff) continue;
      DerivationState next{top.state.produced, top.state.pending};
      next.pending.pop_back();
      for (auto it = r.rhs.rbegin(); it != r.rhs.rend(); ++it) next.pending.push_back(*it);
      if (!shift_terminals(next, prefix) || !admissible(next)) continue;
      if (expanded.count(state_key(next))) continue;
      frontier.push(Entry{lp, seq++, std::move(next)});
    }
  }
  // Summation order is fixed by value so equal multisets give equal sums.
  std::sort(found.begin(), found.end());
  double total = 0.0;
  for (double p : found) total += p;
  return total;
}

// ---------------------------------------------------------------------------

Grammar fit_rule_probabilities(const Grammar& structure, const SentenceCorpus& corpus,
                               double smoothing) {
  if (!(smoothing >= 0.0)) throw Error("smoothing must be non-negative");
  std::vector<double> counts(structure.rules().size(), 0.0);
  for (std::size_t idx = 0; idx < corpus.size(); ++idx) {
    const Sentence& s = corpus[idx];
    if (s.empty()) throw InputError("corpus sentence " + std::to_string(idx) + " is empty");
    detail::ViterbiChart chart(structure, s, /*structural=*/true);
    const auto tree = chart.root_tree();
    if (!tree) {
      throw InputError("corpus sentence " + std::to_string(idx) + " (\"" +
                       format_sentence(structure, s) + "\") is not in the language");
    }
    std::vector<const ParseTree*> stack{&*tree};
    while (!stack.empty()) {
      const ParseTree* n = stack.back();
      stack.pop_back();
      if (n->rule >= 0) counts[static_cast<std::size_t>(n->rule)] += 1.0;
      for (const auto& c : n->children) stack.push_back(&c);
    }
  }

  // Nonterminals the corpus never uses keep their prior weights.
  std::vector<double> weights(counts.size());
  for (std::size_t a = 0; a < structure.nonterminals().size(); ++a) {
    const auto ids = structure.rules_for(static_cast<int>(a));
    double total = 0.0;
    for (int ri : ids) total += counts[static_cast<std::size_t>(ri)] + smoothing;
    for (int ri : ids) {
      const auto i = static_cast<std::size_t>(ri);
      weights[i] = total > 0.0 ? (counts[i] + smoothing) / total : structure.rule(ri).weight;
    }
  }
  return structure.with_weights(weights);
}

// ---------------------------------------------------------------------------

std::vector<ScoredSentence> enumerate_language(const Grammar& g, int max_len,
                                               std::size_t frontier_cap) {
  std::vector<ScoredSentence> out;
  if (max_len <= 0) return out;

  using Form = std::vector<SymbolRef>;
  auto form_key = [](const Form& f) {
    std::vector<int> k;
    k.reserve(f.size());
    for (SymbolRef s : f) k.push_back(s.terminal() ? s.index : -1 - s.index);
    return k;
  };

  std::set<Sentence> sentences;
  std::set<std::vector<int>> seen;
  std::vector<Form> frontier{Form{nonterminal_ref(g.root())}};
  seen.insert(form_key(frontier.front()));
  while (!frontier.empty()) {
    std::vector<Form> next;
    for (const Form& f : frontier) {
      auto lead = std::find_if(f.begin(), f.end(), [](SymbolRef s) { return !s.terminal(); });
      if (lead == f.end()) {
        Sentence s;
        for (SymbolRef t : f) s.push_back(t.index);
        sentences.insert(std::move(s));
        continue;
      }
      const auto pos = static_cast<std::size_t>(lead - f.begin());
      for (int ri : g.rules_for(lead->index)) {
        const auto& rhs = g.rule(ri).rhs;
        if (f.size() - 1 + rhs.size() > static_cast<std::size_t>(max_len)) continue;
        Form expanded(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(pos));
        expanded.insert(expanded.end(), rhs.begin(), rhs.end());
        expanded.insert(expanded.end(), f.begin() + static_cast<std::ptrdiff_t>(pos) + 1, f.end());
        if (seen.insert(form_key(expanded)).second) next.push_back(std::move(expanded));
      }
    }
    if (next.size() > frontier_cap)
      throw Error("enumerate_language: frontier exceeds cap of " + std::to_string(frontier_cap));
    frontier = std::move(next);
  }

  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back({s, viterbi_likelihood(g, s).probability});
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Shortest-yield rule per nonterminal, ordered by (yield length, height);
// the chosen rule's nonterminals all have strictly smaller height, so
// following it always terminates.
std::vector<int> shortest_yield_rules(const Grammar& g) {
  const std::size_t n = g.nonterminals().size();
  constexpr long kInf = 1L << 40;
  std::vector<std::pair<long, long>> best(n, {kInf, kInf});
  std::vector<int> choice(n, -1);
  for (bool allow_zero : {false, true}) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t ri = 0; ri < g.rules().size(); ++ri) {
        const auto& r = g.rules()[ri];
        if (r.weight <= 0.0 && !allow_zero) continue;
        long len = 0;
        long height = 0;
        bool ok = true;
        for (SymbolRef s : r.rhs) {
          if (s.terminal()) {
            ++len;
            continue;
          }
          const auto& b = best[static_cast<std::size_t>(s.index)];
          if (b.first >= kInf) {
            ok = false;
            break;
          }
          len += b.first;
          height = std::max(height, b.second);
        }
        if (!ok) continue;
        const std::pair<long, long> cand{len, height + 1};
        auto& cur = best[static_cast<std::size_t>(r.lhs)];
        if (cand < cur) {
          cur = cand;
          choice[static_cast<std::size_t>(r.lhs)] = static_cast<int>(ri);
          changed = true;
        }
      }
    }
  }
  return choice;
}

}  // namespace

Sentence sample_sentence(const Grammar& g, std::uint64_t seed, int max_depth) {
  if (max_depth < 1) throw Error("max_depth must be at least 1");
  const auto fallback = shortest_yield_rules(g);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto draw = [&](int a) {
    const auto ids = g.rules_for(a);
    double total = 0.0;
    for (int ri : ids) total += g.rule(ri).weight;
    double u = unit(rng) * total;
    int last_positive = fallback[static_cast<std::size_t>(a)];
    for (int ri : ids) {
      const double w = g.rule(ri).weight;
      if (w <= 0.0) continue;
      last_positive = ri;
      if (u < w) return ri;
      u -= w;
    }
    return last_positive;
  };

  Sentence out;
  // (symbol, depth); leftmost on top.
  std::vector<std::pair<SymbolRef, int>> stack{{nonterminal_ref(g.root()), 1}};
  while (!stack.empty()) {
    const auto [sym, depth] = stack.back();
    stack.pop_back();
    if (sym.terminal()) {
      out.push_back(sym.index);
      continue;
    }
    const int ri = depth > max_depth ? fallback[static_cast<std::size_t>(sym.index)] : draw(sym.index);
    const auto& rhs = g.rule(ri).rhs;
    for (auto it = rhs.rbegin(); it != rhs.rend(); ++it) stack.push_back({*it, depth + 1});
  }
  return out;
}

}  // namespace gep
