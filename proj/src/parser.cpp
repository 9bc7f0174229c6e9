#include "gep/parser.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <unordered_set>

#include "gep/earley.hpp"
#include "gep/error.hpp"
#include "gep/logspace.hpp"

namespace gep {

PrefixProbabilities empty_prefix_probabilities(const ProbMatrix& y) {
  return {std::vector<double>(y.num_frames(), kLogZero), 0.0, kLogZero};
}

PrefixProbabilities extend_prefix(const ProbMatrix& y, const PrefixProbabilities& parent,
                                  bool parent_is_empty, std::size_t column) {
  const std::size_t frames = y.num_frames();
  PrefixProbabilities child;
  child.at.assign(frames, kLogZero);
  // A single label may start at frame 0; longer sentences cannot end there.
  child.at[0] = parent_is_empty ? safe_log(y.at(0, column)) : kLogZero;
  std::vector<double> terms;
  terms.reserve(frames);
  terms.push_back(child.at[0]);
  for (std::size_t t = 1; t < frames; ++t) {
    const double ly = safe_log(y.at(t, column));
    child.at[t] = ly + log_add(child.at[t - 1], parent.at[t - 1]);
    // Transition into the new label happens exactly at frame t.
    terms.push_back(ly + parent.at[t - 1]);
  }
  child.prefix = log_sum_exp(terms);
  child.sentence = child.at[frames - 1];
  return child;
}

PrefixProbabilities prefix_probabilities(const ProbMatrix& y, std::span<const std::string> labels) {
  PrefixProbabilities p = empty_prefix_probabilities(y);
  bool empty = true;
  for (const auto& label : labels) {
    const auto col = y.column(label);
    if (!col) throw InputError("label '" + label + "' is not a column of the matrix");
    p = extend_prefix(y, p, empty, *col);
    empty = false;
  }
  return p;
}

double sentence_log_probability(const ProbMatrix& y, std::span<const std::string> sentence) {
  if (sentence.empty()) throw InputError("sentence probability of an empty sentence");
  return prefix_probabilities(y, sentence).sentence;
}

double prefix_log_probability(const ProbMatrix& y, std::span<const std::string> prefix) {
  return prefix_probabilities(y, prefix).prefix;
}

// ---------------------------------------------------------------------------

namespace {

struct GepState {
  int rule;
  int dot;
  int origin;  // state set id
};

std::uint64_t state_key(const GepState& s) {
  return (static_cast<std::uint64_t>(s.rule) << 40) ^ (static_cast<std::uint64_t>(s.dot) << 24) ^
         static_cast<std::uint64_t>(s.origin);
}

// One node of the prefix tree together with its state set S(m, n).
struct StateSet {
  int parent = -1;
  int terminal = -1;
  SetCoords coords;
  PrefixProbabilities probs;
  std::vector<GepState> states;
  std::unordered_set<std::uint64_t> keys;

  void add(const GepState& s) {
    if (keys.insert(state_key(s)).second) states.push_back(s);
  }
};

class PrefixSearch {
 public:
  PrefixSearch(const Grammar& g, const ProbMatrix& y, const ParseOptions& options)
      : g_(g), y_(y), options_(options) {
    columns_.resize(g.terminals().size());
    for (std::size_t t = 0; t < g.terminals().size(); ++t) {
      const auto col = y.column(g.terminals()[t]);
      if (!col) throw InputError("grammar terminal '" + g.terminals()[t] + "' is not a matrix label");
      columns_[t] = *col;
    }
  }

  ParseOutcome run() {
    StateSet root;
    root.probs = empty_prefix_probabilities(y_);
    for (int ri : g_.rules_for(g_.root())) root.add({ri, 0, 0});
    sets_.push_back(std::move(root));
    level_sizes_.push_back(1);
    frontier_.push({0.0, 0});

    std::size_t expanded = 0;
    while (!frontier_.empty()) {
      const int id = frontier_.top().second;
      frontier_.pop();
      ++expanded;
      close(id);
      // Closed sets never gain states again.
      std::unordered_set<std::uint64_t>().swap(sets_[static_cast<std::size_t>(id)].keys);
      if (id != 0 && (options_.allow_prefix || completes_root(id))) consider(id);
      scan(id);
      if (best_ >= 0 && !frontier_can_beat_best()) break;
    }
    if (best_ < 0)
      throw InfeasibleParseError("no feasible parse: no grammatical sentence has positive probability within " +
                                 std::to_string(y_.num_frames()) + " frames");
    return outcome(expanded);
  }

 private:
  using Entry = std::pair<double, int>;  // (log prefix prob, set id)
  struct EntryOrder {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.first != b.first) return a.first < b.first;
      return a.second > b.second;  // earlier-created sets first
    }
  };

  // Prediction and completion to a fixed point, in insertion order.
  void close(int id) {
    for (std::size_t idx = 0; idx < sets_[static_cast<std::size_t>(id)].states.size(); ++idx) {
      const GepState s = sets_[static_cast<std::size_t>(id)].states[idx];
      const auto& rule = g_.rule(s.rule);
      if (static_cast<std::size_t>(s.dot) < rule.rhs.size()) {
        const SymbolRef next = rule.rhs[static_cast<std::size_t>(s.dot)];
        if (!next.terminal()) {
          for (int ri : g_.rules_for(next.index)) sets_[static_cast<std::size_t>(id)].add({ri, 0, id});
        }
        continue;
      }
      // Origin sets are strict ancestors (no empty rules), already closed.
      const auto& origin = sets_[static_cast<std::size_t>(s.origin)].states;
      for (std::size_t j = 0; j < origin.size(); ++j) {
        const GepState w = origin[j];
        const auto& wr = g_.rule(w.rule);
        if (static_cast<std::size_t>(w.dot) >= wr.rhs.size()) continue;
        const SymbolRef sym = wr.rhs[static_cast<std::size_t>(w.dot)];
        if (!sym.terminal() && sym.index == rule.lhs)
          sets_[static_cast<std::size_t>(id)].add({w.rule, w.dot + 1, w.origin});
      }
    }
  }

  bool completes_root(int id) const {
    if (id == 0) return false;
    for (const auto& s : sets_[static_cast<std::size_t>(id)].states) {
      const auto& r = g_.rule(s.rule);
      if (r.lhs == g_.root() && s.origin == 0 && static_cast<std::size_t>(s.dot) == r.rhs.size())
        return true;
    }
    return false;
  }

  void consider(int id) {
    const double lp = sets_[static_cast<std::size_t>(id)].probs.sentence;
    if (lp == kLogZero) return;
    if (best_ < 0) {
      best_ = id;
      return;
    }
    const double cur = sets_[static_cast<std::size_t>(best_)].probs.sentence;
    if (log_equal(lp, cur) ? id < best_ : lp > cur) best_ = id;
  }

  bool frontier_can_beat_best() const {
    if (frontier_.empty()) return false;
    const auto& [lp, id] = frontier_.top();
    const double cur = sets_[static_cast<std::size_t>(best_)].probs.sentence;
    return log_equal(lp, cur) ? id < best_ : lp > cur;
  }

  void scan(int id) {
    // Group scanning states by terminal; children follow the label order of y.
    std::map<std::size_t, std::vector<GepState>> by_column;
    for (const auto& s : sets_[static_cast<std::size_t>(id)].states) {
      const auto& r = g_.rule(s.rule);
      if (static_cast<std::size_t>(s.dot) >= r.rhs.size()) continue;
      const SymbolRef sym = r.rhs[static_cast<std::size_t>(s.dot)];
      if (!sym.terminal()) continue;
      by_column[columns_[static_cast<std::size_t>(sym.index)]].push_back({s.rule, s.dot + 1, s.origin});
    }
    const int level = sets_[static_cast<std::size_t>(id)].coords.level + 1;
    for (auto& [column, advanced] : by_column) {
      PrefixProbabilities probs =
          extend_prefix(y_, sets_[static_cast<std::size_t>(id)].probs, id == 0, column);
      if (probs.prefix == kLogZero) continue;
      if (best_ >= 0) {
        const double cur = sets_[static_cast<std::size_t>(best_)].probs.sentence;
        // A new node can never win a tie against an existing best.
        if (probs.prefix < cur || log_equal(probs.prefix, cur)) continue;
      }
      if (level_sizes_.size() <= static_cast<std::size_t>(level)) level_sizes_.push_back(0);
      StateSet child;
      child.parent = id;
      child.terminal = g_.rule(advanced.front().rule).rhs[static_cast<std::size_t>(advanced.front().dot - 1)].index;
      child.coords = {level, level_sizes_[static_cast<std::size_t>(level)]++};
      child.probs = std::move(probs);
      for (const auto& s : advanced) child.add(s);
      const double priority = child.probs.prefix;
      sets_.push_back(std::move(child));
      frontier_.push({priority, static_cast<int>(sets_.size()) - 1});
    }
  }

  ParseOutcome outcome(std::size_t expanded) const {
    const StateSet& best = sets_[static_cast<std::size_t>(best_)];
    ParseOutcome out;
    for (int id = best_; id != 0; id = sets_[static_cast<std::size_t>(id)].parent)
      out.best_sentence.push_back(sets_[static_cast<std::size_t>(id)].terminal);
    std::reverse(out.best_sentence.begin(), out.best_sentence.end());
    out.best_labels = sentence_labels(g_, out.best_sentence);
    out.log_sentence_prob = best.probs.sentence;
    out.log_prefix_prob = best.probs.prefix;
    out.final_set = best.coords;
    for (const auto& s : best.states) out.final_states.push_back({s.rule, s.dot});
    std::sort(out.final_states.begin(), out.final_states.end());
    out.final_states.erase(std::unique(out.final_states.begin(), out.final_states.end()),
                           out.final_states.end());
    out.expanded_nodes = expanded;
    out.created_nodes = sets_.size();
    const auto rec = recognize(g_, out.best_sentence);
    if (rec.accepted) out.parse_tree = extract_parse_tree(rec.chart, g_);
    return out;
  }

  const Grammar& g_;
  const ProbMatrix& y_;
  ParseOptions options_;
  std::vector<std::size_t> columns_;
  std::vector<StateSet> sets_;
  std::vector<int> level_sizes_;
  std::priority_queue<Entry, std::vector<Entry>, EntryOrder> frontier_;
  int best_ = -1;
};

}  // namespace

ParseOutcome parse(const Grammar& g, const ProbMatrix& y, const ParseOptions& options) {
  return PrefixSearch(g, y, options).run();
}

}  // namespace gep
