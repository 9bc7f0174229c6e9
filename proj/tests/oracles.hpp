// Brute-force reference computations shared by the unit and acceptance tests.
#ifndef GEP_TESTS_ORACLES_HPP
#define GEP_TESTS_ORACLES_HPP

#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gep/error.hpp"
#include "gep/grammar.hpp"
#include "gep/matrix.hpp"

namespace oracle {

inline std::string fixture(const std::string& name) { return std::string(GEP_FIXTURES) + "/" + name; }

inline std::vector<std::string> merge(const std::vector<std::string>& frames) {
  std::vector<std::string> out;
  for (const auto& f : frames)
    if (out.empty() || out.back() != f) out.push_back(f);
  return out;
}

// Distribution of merged labelings: sum over all K^T frame labelings.
inline std::map<std::vector<std::string>, double> merged_distribution(const gep::ProbMatrix& y) {
  const std::size_t T = y.num_frames(), K = y.num_labels();
  std::map<std::vector<std::string>, double> dist;
  std::vector<std::size_t> pick(T, 0);
  while (true) {
    double p = 1.0;
    std::vector<std::string> frames;
    for (std::size_t t = 0; t < T; ++t) {
      p *= y.at(t, pick[t]);
      frames.push_back(y.labels()[pick[t]]);
    }
    dist[merge(frames)] += p;
    std::size_t t = 0;
    while (t < T && ++pick[t] == K) pick[t++] = 0;
    if (t == T) break;
  }
  return dist;
}

// Literal sentence probability: sum over every tiling of T frames into |l| segments.
inline double sentence_probability(const gep::ProbMatrix& y, const std::vector<std::string>& l) {
  const int T = static_cast<int>(y.num_frames());
  const int n = static_cast<int>(l.size());
  std::vector<std::size_t> cols;
  for (const auto& s : l) cols.push_back(*y.column(s));
  double total = 0.0;
  // ends[i] = last frame of segment i
  std::vector<int> ends(static_cast<std::size_t>(n));
  auto rec = [&](auto&& self, int i, int start) -> void {
    if (i == n - 1) {
      double p = 1.0;
      int b = 0;
      ends[static_cast<std::size_t>(i)] = T - 1;
      for (int k = 0; k < n; ++k) {
        for (int t = b; t <= ends[static_cast<std::size_t>(k)]; ++t) p *= y.at(static_cast<std::size_t>(t), cols[static_cast<std::size_t>(k)]);
        b = ends[static_cast<std::size_t>(k)] + 1;
      }
      total += p;
      return;
    }
    for (int e = start; e <= T - (n - i); ++e) {
      ends[static_cast<std::size_t>(i)] = e;
      self(self, i + 1, e + 1);
    }
  };
  if (n >= 1 && n <= T) rec(rec, 0, 0);
  return total;
}

struct Tiling {
  std::vector<int> starts;
  double log_prob = -INFINITY;
};

// Every tiling of T frames into |l| non-empty segments, in lexicographic
// order of start frames.
inline std::vector<Tiling> all_tilings(const gep::ProbMatrix& y, const std::vector<std::string>& l) {
  const int T = static_cast<int>(y.num_frames());
  const int n = static_cast<int>(l.size());
  std::vector<Tiling> out;
  std::vector<int> starts(static_cast<std::size_t>(n), 0);
  auto rec = [&](auto&& self, int i) -> void {
    if (i == n) {
      Tiling tl{starts, 0.0};
      for (int k = 0; k < n; ++k) {
        const int b = starts[static_cast<std::size_t>(k)];
        const int e = k + 1 < n ? starts[static_cast<std::size_t>(k) + 1] - 1 : T - 1;
        const auto col = *y.column(l[static_cast<std::size_t>(k)]);
        for (int t = b; t <= e; ++t) tl.log_prob += std::log(y.at(static_cast<std::size_t>(t), col));
      }
      out.push_back(tl);
      return;
    }
    const int lo = starts[static_cast<std::size_t>(i) - 1] + 1;
    for (int b = lo; b <= T - (n - i); ++b) {
      starts[static_cast<std::size_t>(i)] = b;
      self(self, i + 1);
    }
  };
  if (n >= 1 && n <= T) rec(rec, 1);
  return out;
}

inline gep::ProbMatrix random_matrix(std::mt19937_64& rng, std::size_t T, std::vector<std::string> labels,
                                     double zero_rate = 0.0) {
  std::uniform_real_distribution<double> u(0.01, 1.0), coin(0.0, 1.0);
  std::vector<std::vector<double>> rows(T);
  for (auto& row : rows) {
    double sum = 0.0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      double v = coin(rng) < zero_rate ? 0.0 : u(rng);
      row.push_back(v);
      sum += v;
    }
    if (sum == 0.0) {
      row[0] = 1.0;
      sum = 1.0;
    }
    for (double& v : row) v /= sum;
  }
  return gep::ProbMatrix::from_rows(std::move(labels), rows);
}

inline bool has_adjacent_repeat(const gep::Sentence& s) {
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i] == s[i - 1]) return true;
  return false;
}

// Random small grammar text over nonterminals S,A,B and terminals a,b,c,
// with at most `max_rules` rules; std::nullopt when the draw is invalid.
inline std::optional<gep::Grammar> random_grammar(std::mt19937_64& rng, int max_rules = 6) {
  const std::vector<std::string> nts = {"S", "A", "B"};
  const std::vector<std::string> ts = {"'a'", "'b'", "'c'"};
  std::uniform_int_distribution<int> n_rules(2, max_rules), rhs_len(1, 3), pick(0, 5), pick_nt(0, 2),
      weight(1, 9);
  const int rules = n_rules(rng);
  std::string text;
  for (int r = 0; r < rules; ++r) {
    const std::string lhs = r == 0 ? "S" : nts[static_cast<std::size_t>(pick_nt(rng))];
    text += lhs + " ->";
    const int len = rhs_len(rng);
    for (int i = 0; i < len; ++i) {
      const int s = pick(rng);
      text += " " + (s < 3 ? ts[static_cast<std::size_t>(s)] : nts[static_cast<std::size_t>(s - 3)]);
    }
    text += " [" + std::to_string(weight(rng)) + "]\n";
  }
  try {
    return gep::load_grammar(text);
  } catch (const gep::GrammarError&) {
    return std::nullopt;
  }
}

}  // namespace oracle

#endif  // GEP_TESTS_ORACLES_HPP
