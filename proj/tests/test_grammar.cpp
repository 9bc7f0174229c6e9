#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "gep/error.hpp"
#include "gep/grammar.hpp"
#include "gep/random.hpp"
#include "oracles.hpp"

using namespace gep;

namespace {

const char* kFig2 = "G -> R\nR -> R '+' R [0.4]\nR -> '0' [0.3]\nR -> '1' [0.3]";

std::set<std::string> language_strings(const Grammar& g, int max_len) {
  std::set<std::string> out;
  for (const auto& s : enumerate_language(g, max_len)) out.insert(format_sentence(g, s.sentence));
  return out;
}

Sentence sent(const Grammar& g, const char* text) { return parse_sentence(g, text); }

std::string load_error(const std::string& text) {
  try {
    load_grammar(text);
  } catch (const GrammarError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("load the sample grammar") {
  const Grammar g = load_grammar(kFig2);
  CHECK(g.rules().size() == 4);
  CHECK(g.nonterminals()[static_cast<std::size_t>(g.root())] == "G");
  CHECK(g.terminals() == std::vector<std::string>{"+", "0", "1"});
  CHECK(g.rule(1).weight == doctest::Approx(0.4));
  CHECK(g.rule_string(1, 1) == "R -> R . '+' R");
  CHECK(g.notices().empty());
}

TEST_CASE("alternatives, comments and root directive") {
  const Grammar g = load_grammar("# comment\n%root T\nS -> 'x'\nT -> S 'y' | 'z' # trailing\n");
  CHECK(g.nonterminals()[static_cast<std::size_t>(g.root())] == "T");
  CHECK(g.rules().size() == 3);
  CHECK(g.rule(1).weight == doctest::Approx(0.5));
  CHECK(g.rule(2).weight == doctest::Approx(0.5));
}

TEST_CASE("weights are renormalized per lhs with a notice") {
  const Grammar g = load_grammar("S -> 'a' [2]\nS -> 'b' [2]");
  CHECK(g.rule(0).weight == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g.rule(1).weight == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g.notices().size() == 1);
}

TEST_CASE("omitted weights share the remaining mass") {
  const Grammar g = load_grammar("S -> 'a' [0.5] | 'b' | 'c'");
  CHECK(g.rule(1).weight == doctest::Approx(0.25));
  CHECK(g.rule(2).weight == doctest::Approx(0.25));
}

TEST_CASE("load errors") {
  CHECK(load_error("").find("no rules") != std::string::npos);
  CHECK(load_error("# only a comment\n").find("no rules") != std::string::npos);
  CHECK(load_error("S -> 'a' |").find("epsilon") != std::string::npos);
  CHECK(load_error("S ->").find("epsilon") != std::string::npos);
  CHECK(load_error("S -> A").find("undefined symbol 'A'") != std::string::npos);
  CHECK(load_error("S -> 'a'\nT -> 'b'").find("unreachable") != std::string::npos);
  CHECK(load_error("S -> S 'a'").find("empty language") != std::string::npos);
  CHECK(load_error("S -> 'a' | A\nA -> A 'b'").find("unproductive") != std::string::npos);
  CHECK(load_error("S -> 'a' [0]").find("weight 0") != std::string::npos);
  const std::string syntax = load_error("S -> 'a\n");
  CHECK(syntax.find("line 1") != std::string::npos);
  CHECK(load_error("S -> 'a' [x]").find("line 1, column") != std::string::npos);
}

TEST_CASE("sampling") {
  const Grammar single = load_grammar("S -> 'a'");
  for (std::uint64_t seed = 0; seed < 5; ++seed) CHECK(format_sentence(single, sample_sentence(single, seed)) == "a");

  const Grammar g = load_grammar(kFig2);
  CHECK(sample_sentence(g, 99) == sample_sentence(g, 99));

  // P("0") is the weight of R -> '0' under the root's single R.
  int zeros = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) zeros += format_sentence(g, sample_sentence(g, derive_seed(1, static_cast<std::uint64_t>(i)))) == "0";
  CHECK(std::abs(zeros / static_cast<double>(n) - 0.3) <= 0.02);

  // Past max_depth every expansion takes the shortest rule.
  for (int i = 0; i < 200; ++i) {
    const auto s = sample_sentence(g, static_cast<std::uint64_t>(i), 1);
    CHECK(s.size() <= 3);
    CHECK(viterbi_likelihood(g, s).probability > 0.0);
  }
}

TEST_CASE("viterbi likelihood") {
  const Grammar g = load_grammar(kFig2);
  CHECK(viterbi_likelihood(g, sent(g, "0")).probability == doctest::Approx(0.3).epsilon(1e-12));
  const auto v = viterbi_likelihood(g, sent(g, "0 + 1"));
  CHECK(v.probability == doctest::Approx(0.036).epsilon(1e-12));
  REQUIRE(v.tree);
  CHECK(v.tree->to_string(g) == "(G (R (R '0') '+' (R '1')))");
  CHECK(v.tree->leaves() == sent(g, "0 + 1"));
  const auto bad = viterbi_likelihood(g, sent(g, "+"));
  CHECK(bad.probability == 0.0);
  CHECK_FALSE(bad.tree);
}

TEST_CASE("viterbi tie goes to the smaller rule index at the top") {
  const Grammar g = load_grammar("G -> R\nR -> R '+' R | '0' | '1'");
  const auto v = viterbi_likelihood(g, sent(g, "0 + 1 + 0"));
  REQUIRE(v.tree);
  CHECK(v.tree->to_string(g) == "(G (R (R (R '0') '+' (R '1')) '+' (R '0')))");
}

TEST_CASE("viterbi prefers the more probable derivation") {
  // Two derivations of "a b": S -> A 'b' (0.3 * 1) and S -> 'a' 'b' (0.7).
  const Grammar g = load_grammar("S -> A 'b' [0.3] | 'a' 'b' [0.7]\nA -> 'a'");
  const auto v = viterbi_likelihood(g, sent(g, "a b"));
  CHECK(v.probability == doctest::Approx(0.7));
  CHECK(v.tree->to_string(g) == "(S 'a' 'b')");
}

TEST_CASE("grammar prefix likelihood") {
  const Grammar g = load_grammar(kFig2);
  PrefixLikelihoodOptions opts;
  opts.mass_cutoff = 0.0;
  opts.max_len = 3;
  CHECK(grammar_prefix_likelihood(g, sent(g, "0"), opts) == doctest::Approx(0.372).epsilon(1e-12));
  CHECK(grammar_prefix_likelihood(g, sent(g, "+ +"), opts) == 0.0);

  // Non-recursive grammar: equals the enumerated sum of completions.
  const Grammar flat = load_grammar(
      "S -> A B [0.6] | A [0.4]\nA -> 'x' [0.5] | 'x' 'y' [0.5]\nB -> 'y' [0.2] | 'z' [0.8]");
  for (const auto& prefix : {"x", "x y", "x z", "x y z"}) {
    double expect = 0.0;
    const Sentence p = sent(flat, prefix);
    for (const auto& s : enumerate_language(flat, 10)) {
      if (s.sentence.size() >= p.size() && std::equal(p.begin(), p.end(), s.sentence.begin())) expect += s.probability;
    }
    CHECK(grammar_prefix_likelihood(flat, p, {0.0, 10}) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("grammar prefix likelihood is monotone under extension") {
  std::mt19937_64 rng(5);
  int checked = 0;
  while (checked < 40) {
    auto g = oracle::random_grammar(rng);
    if (!g) continue;
    const auto lang = enumerate_language(*g, 5);
    if (lang.empty()) continue;
    ++checked;
    PrefixLikelihoodOptions opts{1e-6, 6};
    for (const auto& s : lang) {
      Sentence prefix;
      double prev = grammar_prefix_likelihood(*g, prefix, opts);
      for (int z : s.sentence) {
        prefix.push_back(z);
        const double cur = grammar_prefix_likelihood(*g, prefix, opts);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
      }
    }
  }
}

TEST_CASE("fit rule probabilities") {
  const Grammar g = load_grammar(kFig2);
  const SentenceCorpus corpus = {sent(g, "0"), sent(g, "0"), sent(g, "0 + 1")};
  const Grammar fitted = fit_rule_probabilities(g, corpus, 0.0);
  CHECK(fitted.rule(1).weight == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(fitted.rule(2).weight == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(fitted.rule(3).weight == doctest::Approx(0.2).epsilon(1e-12));

  const Grammar single = fit_rule_probabilities(g, {sent(g, "0")}, 0.0);
  CHECK(single.rule(2).weight == 1.0);
  CHECK(single.rule(1).weight == 0.0);
  CHECK(single.zero_weight_rules() == std::vector<int>{1, 3});
  CHECK_FALSE(single.notices().empty());
  // Zero-weight rules are skipped when sampling and scoring.
  for (std::uint64_t s = 0; s < 20; ++s) CHECK(format_sentence(single, sample_sentence(single, s)) == "0");
  CHECK(viterbi_likelihood(single, sent(g, "0 + 0")).probability == 0.0);

  const Grammar smooth = fit_rule_probabilities(g, {sent(g, "0")}, 1.0);
  CHECK(smooth.rule(1).weight == doctest::Approx(0.25));
  CHECK(smooth.rule(2).weight == doctest::Approx(0.5));
  CHECK(smooth.rule(3).weight == doctest::Approx(0.25));

  CHECK_THROWS_AS(fit_rule_probabilities(g, {sent(g, "0"), sent(g, "0 +")}, 0.0), InputError);
  try {
    fit_rule_probabilities(g, {sent(g, "0"), sent(g, "+")}, 0.0);
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("sentence 1") != std::string::npos);
  }
}

TEST_CASE("fit recovers the weights of an unambiguous grammar") {
  const Grammar truth = load_grammar(
      "S -> 'a' S 'b' [0.35] | 'c' T [0.65]\nT -> 'd' [0.2] | 'e' [0.5] | 'f' 'g' [0.3]");
  const Grammar flat = load_grammar("S -> 'a' S 'b' | 'c' T\nT -> 'd' | 'e' | 'f' 'g'");
  SentenceCorpus corpus;
  for (int i = 0; i < 10000; ++i) corpus.push_back(sample_sentence(truth, derive_seed(3, static_cast<std::uint64_t>(i)), 64));
  const Grammar fitted = fit_rule_probabilities(flat, corpus, 0.0);
  for (std::size_t r = 0; r < truth.rules().size(); ++r)
    CHECK(std::abs(fitted.rules()[r].weight - truth.rules()[r].weight) <= 0.02);
}

TEST_CASE("enumerate language") {
  const Grammar g = load_grammar(kFig2);
  CHECK(language_strings(g, 1) == std::set<std::string>{"0", "1"});
  CHECK(language_strings(g, 3) == std::set<std::string>{"0", "1", "0 + 0", "0 + 1", "1 + 0", "1 + 1"});
  CHECK(enumerate_language(g, 0).empty());
  for (const auto& s : enumerate_language(g, 5))
    CHECK(s.probability == doctest::Approx(viterbi_likelihood(g, s.sentence).probability).epsilon(1e-12));
  CHECK_THROWS_AS(enumerate_language(g, 40, 100), Error);
}

TEST_CASE("enumerated mass is at most one, and one for finite unambiguous languages") {
  std::mt19937_64 rng(11);
  int checked = 0;
  while (checked < 60) {
    auto g = oracle::random_grammar(rng);
    if (!g) continue;
    ++checked;
    double total = 0.0;
    for (const auto& s : enumerate_language(*g, 6)) total += s.probability;
    CHECK(total <= 1.0 + 1e-9);
  }
  const Grammar flat = load_grammar(
      "S -> A B [0.6] | A [0.4]\nA -> 'x' [0.5] | 'w' [0.5]\nB -> 'y' [0.2] | 'z' [0.8]");
  double total = 0.0;
  for (const auto& s : enumerate_language(flat, 2)) total += s.probability;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("viterbi positive iff in the enumerated language") {
  std::mt19937_64 rng(21);
  int checked = 0;
  while (checked < 30) {
    auto g = oracle::random_grammar(rng);
    if (!g) continue;
    ++checked;
    std::set<Sentence> lang;
    for (const auto& s : enumerate_language(*g, 4)) lang.insert(s.sentence);
    const int K = static_cast<int>(g->terminals().size());
    for (int len = 1; len <= 4; ++len) {
      Sentence s(static_cast<std::size_t>(len), 0);
      while (true) {
        CHECK((viterbi_likelihood(*g, s).probability > 0.0) == (lang.count(s) > 0));
        int i = 0;
        while (i < len && ++s[static_cast<std::size_t>(i)] == K) s[static_cast<std::size_t>(i++)] = 0;
        if (i == len) break;
      }
    }
  }
}

TEST_CASE("weights of every lhs sum to one") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    auto g = oracle::random_grammar(rng);
    if (!g) continue;
    std::map<int, double> sums;
    for (const auto& r : g->rules()) sums[r.lhs] += r.weight;
    for (const auto& [lhs, s] : sums) CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("to_text round trip") {
  const Grammar g = load_grammar(kFig2);
  const Grammar again = load_grammar(g.to_text());
  REQUIRE(again.rules().size() == g.rules().size());
  for (std::size_t r = 0; r < g.rules().size(); ++r) CHECK(again.rules()[r].weight == g.rules()[r].weight);
}
