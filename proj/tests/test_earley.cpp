#include <doctest.h>

#include <random>
#include <set>

#include "gep/earley.hpp"
#include "gep/error.hpp"
#include "gep/grammar.hpp"
#include "oracles.hpp"

using namespace gep;

namespace {

Grammar fig2() { return load_grammar_file(oracle::fixture("fig2.gram")); }

bool has_item(const Grammar& g, const Chart& c, std::size_t set, const char* rule, int origin) {
  for (const auto& e : c.sets[set])
    if (g.rule_string(e.item.rule, e.item.dot) == rule && e.item.origin == origin) return true;
  return false;
}

}  // namespace

TEST_CASE("recognize 0 + 1") {
  const Grammar g = fig2();
  const auto rec = recognize(g, parse_sentence(g, "0 + 1"));
  CHECK(rec.accepted);
  REQUIRE(rec.chart.sets.size() == 4);
  CHECK(rec.chart.sets[0].size() == 4);
  CHECK(rec.chart.sets[1].size() == 3);
  CHECK(rec.chart.sets[2].size() == 4);
  // The figure lists four states in S(3); the full closure also contains
  // R -> R . '+' R with origin 0 (completing R -> R '+' R . against S(0)).
  CHECK(rec.chart.sets[3].size() == 5);
  CHECK(has_item(g, rec.chart, 3, "R -> '1' .", 2));
  CHECK(has_item(g, rec.chart, 3, "R -> R '+' R .", 0));
  CHECK(has_item(g, rec.chart, 3, "R -> R . '+' R", 2));
  CHECK(has_item(g, rec.chart, 3, "G -> R .", 0));
  CHECK(has_item(g, rec.chart, 3, "R -> R . '+' R", 0));
}

TEST_CASE("chart dump mirrors the figure layout") {
  const Grammar g = fig2();
  const auto rec = recognize(g, parse_sentence(g, "0 + 1"));
  const std::string dump = dump_chart(rec.chart, g);
  CHECK(dump.find("S(0)\n  (1) | G -> . R | 0 | start rule\n  (2) | R -> . R '+' R | 0 | predict: (1)") == 0);
  CHECK(dump.find("(1) | R -> '0' . | 0 | scan: S(0)(3)") != std::string::npos);
  CHECK(dump.find("R -> R '+' . R | 0 | scan: S(1)(3)") != std::string::npos);
  CHECK(dump.find("R -> R '+' R . | 0 | complete: (1) and S(2)(1)") != std::string::npos);
}

TEST_CASE("rejections") {
  const Grammar g = fig2();
  const auto partial = recognize(g, parse_sentence(g, "0 +"));
  CHECK_FALSE(partial.accepted);
  CHECK(partial.chart.sets.size() == 3);
  CHECK_FALSE(recognize(g, {}).accepted);
  CHECK_FALSE(recognize(g, parse_sentence(g, "+ 0")).accepted);
  CHECK_THROWS_AS(parse_sentence(g, "0 * 1"), InputError);
  CHECK_THROWS_AS(recognize(g, {0, 7}), InputError);
}

TEST_CASE("parse trees") {
  const Grammar g = fig2();
  auto tree = [&](const char* s) {
    const auto rec = recognize(g, parse_sentence(g, s));
    return extract_parse_tree(rec.chart, g).to_string(g);
  };
  CHECK(tree("0 + 1") == "(G (R (R '0') '+' (R '1')))");
  CHECK(tree("0") == "(G (R '0'))");

  const Grammar uniform = load_grammar("G -> R\nR -> R '+' R | '0' | '1'");
  const auto rec = recognize(uniform, parse_sentence(uniform, "0 + 1 + 0"));
  CHECK(extract_parse_tree(rec.chart, uniform).to_string(uniform) == "(G (R (R (R '0') '+' (R '1')) '+' (R '0')))");

  CHECK_THROWS_AS(extract_parse_tree(recognize(g, parse_sentence(g, "0 +")).chart, g), Error);
}

TEST_CASE("acceptance matches the enumerated language") {
  std::mt19937_64 rng(2);
  int checked = 0;
  while (checked < 40) {
    auto g = oracle::random_grammar(rng);
    if (!g) continue;
    ++checked;
    std::set<Sentence> lang;
    for (const auto& s : enumerate_language(*g, 5)) lang.insert(s.sentence);
    const int K = static_cast<int>(g->terminals().size());
    for (int len = 1; len <= 5; ++len) {
      Sentence s(static_cast<std::size_t>(len), 0);
      while (true) {
        const auto rec = recognize(*g, s);
        CHECK(rec.accepted == (lang.count(s) > 0));
        if (rec.accepted) {
          const auto t = extract_parse_tree(rec.chart, *g);
          CHECK(t.leaves() == s);
          CHECK(std::exp(t.log_probability(*g)) == doctest::Approx(viterbi_likelihood(*g, s).probability).epsilon(1e-12));
        }
        int i = 0;
        while (i < len && ++s[static_cast<std::size_t>(i)] == K) s[static_cast<std::size_t>(i++)] = 0;
        if (i == len) break;
      }
    }
  }
}

TEST_CASE("charts are duplicate free and deterministic") {
  const Grammar g = load_grammar_file(oracle::fixture("activity.gram"));
  const Sentence s = parse_sentence(g, "reach open pour stir pour stir place close");
  const auto a = recognize(g, s);
  const auto b = recognize(g, s);
  CHECK(a.accepted);
  CHECK(dump_chart(a.chart, g) == dump_chart(b.chart, g));
  for (const auto& set : a.chart.sets) {
    for (std::size_t i = 0; i < set.size(); ++i)
      for (std::size_t j = i + 1; j < set.size(); ++j) CHECK_FALSE(set[i].item == set[j].item);
  }
}
