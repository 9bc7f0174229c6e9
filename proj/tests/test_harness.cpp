#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "gep/error.hpp"
#include "gep/harness.hpp"
#include "oracles.hpp"

using namespace gep;

namespace {

std::vector<std::string> words(std::initializer_list<const char*> w) { return {w.begin(), w.end()}; }

}  // namespace

TEST_CASE("one-hot encoding") {
  const auto labels = words({"0", "1", "+"});
  const ProbMatrix y = one_hot(words({"0", "+", "1"}), std::vector<int>{2, 1, 2}, labels);
  const ProbMatrix fig3 = load_matrix_file(oracle::fixture("fig3_matrix.csv"));
  REQUIRE(y.num_frames() == 5);
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t k = 0; k < 3; ++k) CHECK(y.at(t, k) == (fig3.at(t, k) == 0.8 ? 1.0 : 0.0));

  const ProbMatrix single = one_hot(words({"1"}), std::vector<int>{1}, labels);
  CHECK(single.num_frames() == 1);
  CHECK(single.at(0, 1) == 1.0);

  CHECK_THROWS_AS(one_hot(words({"0", "1"}), std::vector<int>{1}, labels), InputError);
  CHECK_THROWS_AS(one_hot(words({"0"}), std::vector<int>{0}, labels), InputError);
  CHECK_THROWS_AS(one_hot(words({"x"}), std::vector<int>{1}, labels), InputError);
}

TEST_CASE("synthetic classifier output") {
  const auto labels = words({"a", "b", "c"});
  const auto sentence = words({"a", "b", "a", "c"});
  const std::vector<int> durations = {3, 2, 4, 1};
  const ProbMatrix zero = synthesize_matrix(sentence, durations, labels, 0.0, 5);
  CHECK(zero.values() == one_hot(sentence, durations, labels).values());
  for (double tau : {0.1, 0.6, 2.0}) {
    const ProbMatrix y = synthesize_matrix(sentence, durations, labels, tau, 5);
    CHECK(y.values() == synthesize_matrix(sentence, durations, labels, tau, 5).values());
    CHECK(y.values() != synthesize_matrix(sentence, durations, labels, tau, 6).values());
    for (std::size_t t = 0; t < y.num_frames(); ++t) {
      double s = 0.0;
      for (double v : y.row(t)) {
        CHECK(v > 0.0);
        s += v;
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(synthesize_matrix(sentence, durations, labels, -1.0, 5), InputError);
}

TEST_CASE("metrics") {
  const auto ab = words({"a", "b"});
  const auto m = compute_metrics(words({"a", "b", "b", "b"}), words({"a", "a", "b", "b"}), ab);
  CHECK(m.micro_pr == 0.75);
  CHECK(m.macro_precision == doctest::Approx(0.8333333333).epsilon(1e-6));
  CHECK(m.macro_recall == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(m.macro_f1 == doctest::Approx((2.0 / 3 + 0.8) / 2).epsilon(1e-9));
  CHECK(m.per_class.at("a").support == 2);

  const auto same = compute_metrics(words({"a", "b"}), words({"a", "b"}), ab);
  CHECK(same.micro_pr == 1.0);
  CHECK(same.macro_f1 == 1.0);

  const auto disjoint = compute_metrics(words({"b", "b"}), words({"a", "a"}), ab);
  CHECK(disjoint.micro_pr == 0.0);
  CHECK(disjoint.macro_f1 == 0.0);
  // 'b' has no gold support and stays out of the macro average.
  CHECK(disjoint.macro_precision == 0.0);

  CHECK_THROWS_AS(compute_metrics(words({"a"}), words({"a", "b"}), ab), InputError);
  CHECK_THROWS_AS(compute_metrics({}, {}, ab), InputError);
}

TEST_CASE("benchmark config parsing") {
  const auto c = BenchmarkConfig::from_json(
      R"({"grammar": "g.gram", "sequences": 3, "tau": 0.2, "seed": 9, "task": "frame-horizon-prediction",
          "horizon": 4, "durations": {"fallback": {"mu": 1.0, "sigma": 0.1}}})",
      "/data");
  CHECK(c.grammar_path == "/data/g.gram");
  CHECK(c.sequences == 3);
  CHECK(c.tau == 0.2);
  CHECK(c.seed == 9);
  CHECK(c.task == BenchmarkTask::kFrameHorizonPrediction);
  CHECK(c.horizon == 4);
  CHECK(c.durations.fallback.mu == 1.0);
  CHECK_THROWS_AS(BenchmarkConfig::from_json(R"({"grammar": "g", "task": "other"})"), InputError);
  CHECK_THROWS_AS(BenchmarkConfig::from_json(R"({"grammar": "g", "sequences": 0})"), InputError);
  CHECK_THROWS_AS(BenchmarkConfig::from_json(R"({"grammar": "g", "tau": -1})"), InputError);
  CHECK_THROWS_AS(BenchmarkConfig::from_json(R"({"sequences": 2})"), InputError);
  CHECK_THROWS_AS(BenchmarkConfig::from_json("not json"), InputError);
}

TEST_CASE("noiseless benchmark") {
  BenchmarkConfig c;
  c.grammar_path = oracle::fixture("fig2.gram");
  c.sequences = 20;
  c.tau = 0.0;
  const auto r = run_benchmark(c);
  CHECK(r.argmax.metrics.micro_pr == 1.0);
  CHECK(r.parser.metrics.micro_pr == 1.0);
  CHECK(r.parser.grammaticality == 1.0);
  CHECK(r.argmax.grammaticality == 1.0);
}

TEST_CASE("noisy benchmark is grammatical and deterministic") {
  BenchmarkConfig c;
  c.grammar_path = oracle::fixture("fig2.gram");
  c.sequences = 30;
  c.tau = 0.8;
  const auto a = run_benchmark(c);
  const auto b = run_benchmark(c);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.to_table() == b.to_table());
  CHECK(a.parser.grammaticality == 1.0);
  CHECK(a.argmax.grammaticality <= 1.0);
  const auto j = nlohmann::json::parse(a.to_json());
  CHECK(j.at("frames").get<std::size_t>() == a.frames);
  CHECK(j.at("detection").at("parser").at("grammaticality") == 1.0);
}

TEST_CASE("prediction benchmarks") {
  const Grammar g = load_grammar_file(oracle::fixture("activity.gram"));
  BenchmarkConfig c;
  c.grammar_path = oracle::fixture("activity.gram");
  c.sequences = 6;
  c.stride = 4;
  c.training_sentences = 100;
  c.samples = 10;
  c.horizon = 5;
  for (auto task : {BenchmarkTask::kSegmentPrediction, BenchmarkTask::kFrameHorizonPrediction}) {
    c.task = task;
    const auto a = run_benchmark(c, g);
    CHECK(a.has_prediction);
    CHECK(a.prediction_points > 0);
    CHECK(a.parser_prediction.micro_pr >= 0.0);
    CHECK(a.parser_prediction.micro_pr <= 1.0);
    CHECK(a.to_json() == run_benchmark(c, g).to_json());
  }
}

TEST_CASE("synthetic sequences") {
  const Grammar g = load_grammar_file(oracle::fixture("fig2.gram"));
  BenchmarkConfig c;
  const auto s = synthesize_sequence(g, c, 3);
  CHECK(s.labels.size() == s.durations.size());
  CHECK(static_cast<int>(s.labels.size()) <= c.max_sentence_length);
  CHECK(s.frame_labels().size() == s.matrix.num_frames());
  CHECK(s.matrix.values() == synthesize_sequence(g, c, 3).matrix.values());
}
