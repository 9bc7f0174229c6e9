#include "gep/earley.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

#include "gep/error.hpp"
#include "viterbi_chart.hpp"

namespace gep {

namespace {

std::uint64_t item_key(const EarleyItem& it) {
  return (static_cast<std::uint64_t>(it.rule) << 40) ^ (static_cast<std::uint64_t>(it.dot) << 24) ^
         static_cast<std::uint64_t>(it.origin);
}

class SetBuilder {
 public:
  explicit SetBuilder(std::vector<ChartEntry>& entries) : entries_(entries) {
    for (std::size_t i = 0; i < entries.size(); ++i) index_.emplace(item_key(entries[i].item), i);
  }
  void add(const EarleyItem& item, const ItemSource& source) {
    if (index_.emplace(item_key(item), entries_.size()).second) entries_.push_back({item, source});
  }

 private:
  std::vector<ChartEntry>& entries_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

}  // namespace

bool Chart::contains(std::size_t set, const EarleyItem& item) const {
  if (set >= sets.size()) return false;
  return std::any_of(sets[set].begin(), sets[set].end(),
                     [&](const ChartEntry& e) { return e.item == item; });
}

Recognition recognize(const Grammar& g, const Sentence& sentence) {
  for (int t : sentence) {
    if (t < 0 || static_cast<std::size_t>(t) >= g.terminals().size())
      throw InputError("unknown terminal index " + std::to_string(t));
  }
  const std::size_t n = sentence.size();
  Recognition out;
  out.chart.input = sentence;
  auto& sets = out.chart.sets;
  sets.resize(n + 1);

  {
    SetBuilder s0(sets[0]);
    for (int ri : g.rules_for(g.root())) s0.add({ri, 0, 0}, {});
  }

  for (std::size_t k = 0; k <= n; ++k) {
    SetBuilder current(sets[k]);
    std::optional<SetBuilder> following;
    if (k < n) following.emplace(sets[k + 1]);
    // sets[k] grows while we walk it.
    for (std::size_t idx = 0; idx < sets[k].size(); ++idx) {
      const EarleyItem item = sets[k][idx].item;
      const auto& rule = g.rule(item.rule);
      const int at = static_cast<int>(idx);
      if (static_cast<std::size_t>(item.dot) < rule.rhs.size()) {
        const SymbolRef next = rule.rhs[static_cast<std::size_t>(item.dot)];
        if (next.terminal()) {
          if (k < n && sentence[k] == next.index) {
            following->add({item.rule, item.dot + 1, item.origin},
                           {ItemSource::Kind::kScan, at, static_cast<int>(k), -1});
          }
        } else {
          for (int ri : g.rules_for(next.index)) {
            current.add({ri, 0, static_cast<int>(k)}, {ItemSource::Kind::kPredict, at, -1, -1});
          }
        }
        continue;
      }
      // Completion. Without empty rules origin < k, so sets[origin] is final.
      const auto origin = static_cast<std::size_t>(item.origin);
      const int lhs = rule.lhs;
      for (std::size_t j = 0; j < sets[origin].size(); ++j) {
        const EarleyItem waiting = sets[origin][j].item;
        const auto& wr = g.rule(waiting.rule);
        if (static_cast<std::size_t>(waiting.dot) >= wr.rhs.size()) continue;
        const SymbolRef s = wr.rhs[static_cast<std::size_t>(waiting.dot)];
        if (s.terminal() || s.index != lhs) continue;
        current.add({waiting.rule, waiting.dot + 1, waiting.origin},
                    {ItemSource::Kind::kComplete, at, item.origin, static_cast<int>(j)});
      }
    }
  }

  if (n > 0) {
    for (const auto& e : sets[n]) {
      const auto& r = g.rule(e.item.rule);
      if (r.lhs == g.root() && e.item.origin == 0 &&
          static_cast<std::size_t>(e.item.dot) == r.rhs.size()) {
        out.accepted = true;
        break;
      }
    }
  }
  return out;
}

ParseTree extract_parse_tree(const Chart& chart, const Grammar& g) {
  const std::size_t n = chart.input.size();
  // Completed spans (A, i, j) recorded in the chart bound the search.
  std::vector<std::vector<std::vector<bool>>> done(
      g.nonterminals().size(), std::vector<std::vector<bool>>(n + 1, std::vector<bool>(n + 1)));
  bool accepted = false;
  for (std::size_t j = 0; j < chart.sets.size(); ++j) {
    for (const auto& e : chart.sets[j]) {
      const auto& r = g.rule(e.item.rule);
      if (static_cast<std::size_t>(e.item.dot) != r.rhs.size()) continue;
      done[static_cast<std::size_t>(r.lhs)][static_cast<std::size_t>(e.item.origin)][j] = true;
      if (j == n && n > 0 && r.lhs == g.root() && e.item.origin == 0) accepted = true;
    }
  }
  if (!accepted) throw Error("extract_parse_tree: chart does not accept its input");

  auto allowed = [&](int a, int i, int j) {
    return done[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  };
  // Positive-weight derivations first; zero-weight rules only as a last resort.
  {
    detail::ViterbiChart best(g, chart.input, false, allowed);
    if (auto tree = best.root_tree()) return *tree;
  }
  detail::ViterbiChart structural(g, chart.input, true, allowed);
  return *structural.root_tree();
}

std::string dump_chart(const Chart& chart, const Grammar& g) {
  std::ostringstream out;
  for (std::size_t k = 0; k < chart.sets.size(); ++k) {
    out << "S(" << k << ")\n";
    const auto& set = chart.sets[k];
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto& [item, src] = set[i];
      out << "  (" << i + 1 << ") | " << g.rule_string(item.rule, item.dot) << " | " << item.origin
          << " | ";
      switch (src.kind) {
        case ItemSource::Kind::kStart:
          out << "start rule";
          break;
        case ItemSource::Kind::kPredict:
          out << "predict: (" << src.item + 1 << ")";
          break;
        case ItemSource::Kind::kScan:
          out << "scan: S(" << src.origin_set << ")(" << src.item + 1 << ")";
          break;
        case ItemSource::Kind::kComplete:
          out << "complete: (" << src.item + 1 << ") and S(" << src.origin_set << ")("
              << src.origin_item + 1 << ")";
          break;
      }
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace gep
