#include "gep/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "gep/error.hpp"
#include "gep/logspace.hpp"

namespace gep {

namespace {

constexpr double kWeightTolerance = 1e-9;

std::string format_weight(double w) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", w);
  return buf;
}

// Fixed point: a nonterminal is productive once some rule has an all
// productive right-hand side.
std::vector<bool> productive_nonterminals(std::size_t count,
                                          const std::vector<ProductionRule>& rules) {
  std::vector<bool> productive(count, false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& r : rules) {
      if (productive[static_cast<std::size_t>(r.lhs)]) continue;
      const bool ok = std::all_of(r.rhs.begin(), r.rhs.end(), [&](SymbolRef s) {
        return s.terminal() || productive[static_cast<std::size_t>(s.index)];
      });
      if (ok) {
        productive[static_cast<std::size_t>(r.lhs)] = true;
        changed = true;
      }
    }
  }
  return productive;
}

std::vector<bool> reachable_nonterminals(std::size_t count, const std::vector<ProductionRule>& rules,
                                         const std::vector<std::vector<int>>& by_lhs, int root) {
  std::vector<bool> seen(count, false);
  std::vector<int> stack{root};
  seen[static_cast<std::size_t>(root)] = true;
  while (!stack.empty()) {
    const int a = stack.back();
    stack.pop_back();
    for (int ri : by_lhs[static_cast<std::size_t>(a)]) {
      for (SymbolRef s : rules[static_cast<std::size_t>(ri)].rhs) {
        if (!s.terminal() && !seen[static_cast<std::size_t>(s.index)]) {
          seen[static_cast<std::size_t>(s.index)] = true;
          stack.push_back(s.index);
        }
      }
    }
  }
  return seen;
}

}  // namespace

Grammar Grammar::build(std::vector<std::string> terminals, std::vector<std::string> nonterminals,
                       std::vector<ProductionRule> rules, int root) {
  if (rules.empty()) throw GrammarError("no rules");
  if (root < 0 || static_cast<std::size_t>(root) >= nonterminals.size())
    throw GrammarError("root is not a nonterminal");

  for (const auto& t : terminals) {
    if (t.empty()) throw GrammarError("empty terminal name");
    if (std::find(nonterminals.begin(), nonterminals.end(), t) != nonterminals.end())
      throw GrammarError("symbol '" + t + "' used as both terminal and nonterminal");
  }

  Grammar g;
  g.rules_by_lhs_.assign(nonterminals.size(), {});
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    if (r.rhs.empty())
      throw GrammarError("empty right-hand side for '" +
                         nonterminals[static_cast<std::size_t>(r.lhs)] + "'");
    if (!(r.weight >= 0.0) || !std::isfinite(r.weight))
      throw GrammarError("invalid weight for rule " + std::to_string(i));
    for (SymbolRef s : r.rhs) {
      const std::size_t bound = s.terminal() ? terminals.size() : nonterminals.size();
      if (s.index < 0 || static_cast<std::size_t>(s.index) >= bound)
        throw GrammarError("rule " + std::to_string(i) + " references an undefined symbol");
    }
    g.rules_by_lhs_[static_cast<std::size_t>(r.lhs)].push_back(static_cast<int>(i));
  }

  for (std::size_t a = 0; a < nonterminals.size(); ++a) {
    if (g.rules_by_lhs_[a].empty())
      throw GrammarError("undefined symbol '" + nonterminals[a] + "' (no rules)");
  }

  const auto productive = productive_nonterminals(nonterminals.size(), rules);
  if (!productive[static_cast<std::size_t>(root)])
    throw GrammarError("empty language: root '" + nonterminals[static_cast<std::size_t>(root)] +
                       "' derives no terminal string");
  for (std::size_t a = 0; a < nonterminals.size(); ++a) {
    if (!productive[a]) throw GrammarError("unproductive nonterminal '" + nonterminals[a] + "'");
  }
  const auto reachable = reachable_nonterminals(nonterminals.size(), rules, g.rules_by_lhs_, root);
  for (std::size_t a = 0; a < nonterminals.size(); ++a) {
    if (!reachable[a]) throw GrammarError("unreachable nonterminal '" + nonterminals[a] + "'");
  }

  for (std::size_t a = 0; a < nonterminals.size(); ++a) {
    double total = 0.0;
    for (int ri : g.rules_by_lhs_[a]) total += rules[static_cast<std::size_t>(ri)].weight;
    if (total <= 0.0)
      throw GrammarError("all rules of '" + nonterminals[a] + "' have weight 0");
    if (std::abs(total - 1.0) > kWeightTolerance) {
      g.notices_.push_back("weights of '" + nonterminals[a] + "' sum to " + format_weight(total) +
                           "; renormalized");
    }
    for (int ri : g.rules_by_lhs_[a]) {
      auto& r = rules[static_cast<std::size_t>(ri)];
      r.weight /= total;
      if (r.weight == 0.0) {
        g.notices_.push_back("rule " + std::to_string(ri) + " of '" + nonterminals[a] +
                             "' has weight 0 and is skipped when sampling and scoring");
      }
    }
  }

  g.terminals_ = std::move(terminals);
  g.nonterminals_ = std::move(nonterminals);
  g.rules_ = std::move(rules);
  g.root_ = root;
  return g;
}

std::optional<int> Grammar::terminal_index(std::string_view name) const {
  auto it = std::find(terminals_.begin(), terminals_.end(), name);
  if (it == terminals_.end()) return std::nullopt;
  return static_cast<int>(it - terminals_.begin());
}

std::optional<int> Grammar::nonterminal_index(std::string_view name) const {
  auto it = std::find(nonterminals_.begin(), nonterminals_.end(), name);
  if (it == nonterminals_.end()) return std::nullopt;
  return static_cast<int>(it - nonterminals_.begin());
}

std::vector<int> Grammar::zero_weight_rules() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < rules_.size(); ++i)
    if (rules_[i].weight == 0.0) out.push_back(static_cast<int>(i));
  return out;
}

Grammar Grammar::with_weights(std::span<const double> weights) const {
  if (weights.size() != rules_.size()) throw Error("weight count does not match rule count");
  auto rules = rules_;
  for (std::size_t i = 0; i < rules.size(); ++i) rules[i].weight = weights[i];
  return build(terminals_, nonterminals_, std::move(rules), root_);
}

std::string Grammar::rule_string(int index, int dot) const {
  const auto& r = rule(index);
  std::string out = nonterminals_[static_cast<std::size_t>(r.lhs)] + " ->";
  for (std::size_t k = 0; k <= r.rhs.size(); ++k) {
    if (static_cast<int>(k) == dot) out += " .";
    if (k == r.rhs.size()) break;
    const SymbolRef s = r.rhs[k];
    out += s.terminal() ? " '" + name(s) + "'" : " " + name(s);
  }
  return out;
}

std::string Grammar::to_text() const {
  std::string out = "%root " + nonterminals_[static_cast<std::size_t>(root_)] + "\n";
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    out += rule_string(static_cast<int>(i)) + " [" + format_weight(rules_[i].weight) + "]\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grammar file parsing.

namespace {

struct PendingSymbol {
  std::string name;
  bool terminal = false;
  int line = 0;
  int column = 0;
};

struct PendingRule {
  std::string lhs;
  std::vector<PendingSymbol> rhs;
  std::optional<double> weight;
  int line = 0;
  int column = 0;
};

bool is_name_char(char c) {
  return !std::isspace(static_cast<unsigned char>(c)) && c != '\'' && c != '|' && c != '[' &&
         c != ']' && c != '#';
}

class LineScanner {
 public:
  LineScanner(std::string_view line, int line_no) : s_(line), line_(line_no) {}

  void skip_space() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool done() {
    skip_space();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }
  char peek() const { return s_[pos_]; }
  int column() const { return static_cast<int>(pos_) + 1; }
  bool consume(std::string_view tok) {
    skip_space();
    if (s_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw GrammarError(msg, line_, column()); }

  std::string name() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && is_name_char(s_[pos_])) {
      if (s_.substr(pos_, 2) == "->") break;
      ++pos_;
    }
    if (pos_ == start) fail("expected a symbol name");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string quoted() {
    ++pos_;  // opening quote
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != '\'') ++pos_;
    if (pos_ >= s_.size()) {
      pos_ = start - 1;
      fail("unterminated terminal quote");
    }
    std::string out(s_.substr(start, pos_ - start));
    ++pos_;
    if (out.empty()) {
      pos_ = start - 1;
      fail("empty terminal ''");
    }
    return out;
  }

  double weight() {
    ++pos_;  // '['
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ']') ++pos_;
    if (pos_ >= s_.size()) {
      pos_ = start;
      fail("unterminated weight bracket");
    }
    std::string text(s_.substr(start, pos_ - start));
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
    ++pos_;
    std::size_t used = 0;
    double w = 0.0;
    try {
      w = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size() || !std::isfinite(w) || w < 0.0) {
      pos_ = start;
      fail("invalid weight '" + text + "'");
    }
    return w;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
};

}  // namespace

Grammar load_grammar(std::string_view text) {
  std::vector<PendingRule> pending;
  std::optional<std::pair<std::string, int>> root_directive;

  int line_no = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(begin, end - begin);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    begin = end + 1;

    LineScanner sc(line, line_no);
    if (sc.done()) {
      if (end == text.size()) break;
      continue;
    }
    if (sc.consume("%root")) {
      const std::string name = sc.name();
      if (!sc.done()) sc.fail("unexpected text after %root");
      root_directive = {name, line_no};
      continue;
    }
    if (sc.peek() == '%') sc.fail("unknown directive");

    const int lhs_col = sc.column();
    const std::string lhs = sc.name();
    if (!sc.consume("->")) sc.fail("expected '->'");

    for (;;) {
      PendingRule rule;
      rule.lhs = lhs;
      rule.line = line_no;
      rule.column = lhs_col;
      const int alt_col = sc.column();
      while (!sc.done()) {
        const char c = sc.peek();
        if (c == '|') break;
        if (rule.weight) sc.fail("symbol after weight");
        if (c == '[') {
          rule.weight = sc.weight();
        } else if (c == '\'') {
          const int col = sc.column();
          rule.rhs.push_back({sc.quoted(), true, line_no, col});
        } else if (c == ']') {
          sc.fail("unexpected ']'");
        } else {
          const int col = sc.column();
          rule.rhs.push_back({sc.name(), false, line_no, col});
        }
      }
      if (rule.rhs.empty())
        throw GrammarError("empty production for '" + lhs + "' (epsilon rules are not supported)",
                           line_no, alt_col);
      pending.push_back(std::move(rule));
      if (sc.done()) break;
      sc.consume("|");
    }
    if (end == text.size()) break;
  }

  if (pending.empty()) throw GrammarError("no rules");

  std::vector<std::string> nonterminals;
  for (const auto& r : pending) {
    if (std::find(nonterminals.begin(), nonterminals.end(), r.lhs) == nonterminals.end())
      nonterminals.push_back(r.lhs);
  }
  std::vector<std::string> terminals;
  for (const auto& r : pending) {
    for (const auto& s : r.rhs) {
      if (!s.terminal) {
        if (std::find(nonterminals.begin(), nonterminals.end(), s.name) == nonterminals.end())
          throw GrammarError("undefined symbol '" + s.name + "'", s.line, s.column);
        continue;
      }
      if (std::find(nonterminals.begin(), nonterminals.end(), s.name) != nonterminals.end())
        throw GrammarError("symbol '" + s.name + "' used as both terminal and nonterminal", s.line,
                           s.column);
      if (std::find(terminals.begin(), terminals.end(), s.name) == terminals.end())
        terminals.push_back(s.name);
    }
  }
  auto index_of = [](const std::vector<std::string>& v, const std::string& name) {
    return static_cast<int>(std::find(v.begin(), v.end(), name) - v.begin());
  };

  int root = 0;
  if (root_directive) {
    const auto& [name, line] = *root_directive;
    if (std::find(nonterminals.begin(), nonterminals.end(), name) == nonterminals.end())
      throw GrammarError("root '" + name + "' has no rules", line, 1);
    root = index_of(nonterminals, name);
  } else {
    root = index_of(nonterminals, pending.front().lhs);
  }

  // Omitted weights share whatever mass the explicit weights of the same
  // left-hand side leave over.
  std::map<std::string, std::pair<double, int>> explicit_mass;
  for (const auto& r : pending) {
    auto& [sum, omitted] = explicit_mass[r.lhs];
    if (r.weight) sum += *r.weight;
    else ++omitted;
  }

  std::vector<ProductionRule> rules;
  rules.reserve(pending.size());
  for (const auto& r : pending) {
    ProductionRule pr;
    pr.lhs = index_of(nonterminals, r.lhs);
    for (const auto& s : r.rhs) {
      pr.rhs.push_back(s.terminal ? terminal_ref(index_of(terminals, s.name))
                                  : nonterminal_ref(index_of(nonterminals, s.name)));
    }
    if (r.weight) {
      pr.weight = *r.weight;
    } else {
      const auto [sum, omitted] = explicit_mass[r.lhs];
      if (sum == 0.0) {
        pr.weight = 1.0 / omitted;
      } else if (sum < 1.0 - kWeightTolerance) {
        pr.weight = (1.0 - sum) / omitted;
      } else {
        throw GrammarError("explicit weights of '" + r.lhs +
                               "' leave no mass for rules without a weight",
                           r.line, r.column);
      }
    }
    rules.push_back(std::move(pr));
  }

  return Grammar::build(std::move(terminals), std::move(nonterminals), std::move(rules), root);
}

Grammar load_grammar_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open grammar file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_grammar(buf.str());
}

Sentence parse_sentence(const Grammar& g, std::string_view text) {
  Sentence out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) {
    // Accept the quoted form used in grammar files as well.
    if (tok.size() >= 2 && tok.front() == '\'' && tok.back() == '\'') tok = tok.substr(1, tok.size() - 2);
    const auto idx = g.terminal_index(tok);
    if (!idx) throw InputError("unknown terminal '" + tok + "'");
    out.push_back(*idx);
  }
  return out;
}

Sentence to_sentence(const Grammar& g, std::span<const std::string> labels) {
  Sentence out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    const auto idx = g.terminal_index(l);
    if (!idx) throw InputError("unknown terminal '" + l + "'");
    out.push_back(*idx);
  }
  return out;
}

std::vector<std::string> sentence_labels(const Grammar& g, const Sentence& s) {
  std::vector<std::string> out;
  out.reserve(s.size());
  for (int t : s) out.push_back(g.terminals()[static_cast<std::size_t>(t)]);
  return out;
}

std::string format_sentence(const Grammar& g, const Sentence& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ' ';
    out += g.terminals()[static_cast<std::size_t>(s[i])];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parse trees.

Sentence ParseTree::leaves() const {
  Sentence out;
  std::vector<const ParseTree*> stack{this};
  while (!stack.empty()) {
    const ParseTree* n = stack.back();
    stack.pop_back();
    if (n->symbol.terminal()) {
      out.push_back(n->symbol.index);
      continue;
    }
    for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(&*it);
  }
  return out;
}

double ParseTree::log_probability(const Grammar& g) const {
  if (symbol.terminal()) return 0.0;
  double lp = safe_log(g.rule(rule).weight);
  for (const auto& c : children) lp += c.log_probability(g);
  return lp;
}

std::string ParseTree::to_string(const Grammar& g) const {
  if (symbol.terminal()) return "'" + g.name(symbol) + "'";
  std::string out = "(" + g.name(symbol);
  for (const auto& c : children) out += " " + c.to_string(g);
  return out + ")";
}

}  // namespace gep
