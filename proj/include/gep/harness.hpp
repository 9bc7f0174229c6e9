#ifndef GEP_HARNESS_HPP
#define GEP_HARNESS_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gep/grammar.hpp"
#include "gep/matrix.hpp"
#include "gep/prediction.hpp"

namespace gep {

/// Binary matrix: each frame is 1 at its segment's label.
/// Throws InputError on length mismatch, zero durations or unknown labels.
ProbMatrix one_hot(std::span<const std::string> sentence, std::span<const int> durations,
                   std::span<const std::string> labels);

/// Simulated classifier output: softmax(onehot / max(tau, 1e-6) + tau * N(0,1))
/// per frame. tau == 0 gives one_hot exactly.
ProbMatrix synthesize_matrix(std::span<const std::string> sentence, std::span<const int> durations,
                             std::span<const std::string> labels, double tau, std::uint64_t seed);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct Metrics {
  double micro_pr = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::map<std::string, ClassScores> per_class;
};

/// Frame-level micro accuracy plus per-class precision/recall/F1. Macro
/// values average the classes with gold support; precision is 0 for a
/// class never predicted. Throws InputError on length mismatch or empty input.
Metrics compute_metrics(std::span<const std::string> predicted, std::span<const std::string> gold,
                        std::span<const std::string> label_set);

enum class BenchmarkTask { kDetection, kSegmentPrediction, kFrameHorizonPrediction };

struct BenchmarkConfig {
  std::string grammar_path;
  int sequences = 200;
  /// Segment durations in frames are round(exp(N(mu, sigma))), at least 1.
  DurationModel durations{{}, {1.791759469228055, 0.3}};
  double tau = 0.6;
  std::uint64_t seed = 17;
  BenchmarkTask task = BenchmarkTask::kDetection;
  int horizon = 10;
  int samples = 20;
  /// Sentences outside [min, max] are redrawn.
  int min_sentence_length = 1;
  int max_sentence_length = 9;
  int sample_max_depth = 16;
  /// Size of the sampled training corpus for the prediction baselines and
  /// the fitted duration model.
  int training_sentences = 500;
  /// Online prediction is evaluated every `stride` frames.
  int stride = 1;

  /// Parses the JSON config; relative grammar paths resolve against base_dir.
  static BenchmarkConfig from_json(std::string_view text, const std::string& base_dir = "");
};

/// One generated benchmark sequence: a sampled sentence, its segment
/// durations and the simulated classifier matrix.
struct SyntheticSequence {
  Sentence sentence;
  std::vector<std::string> labels;
  std::vector<int> durations;
  ProbMatrix matrix;

  /// Gold per-frame labels.
  std::vector<std::string> frame_labels() const;
};

/// Sequence `index` of the benchmark described by config; the matrix
/// columns are g's terminals. Deterministic in (config.seed, index).
SyntheticSequence synthesize_sequence(const Grammar& g, const BenchmarkConfig& config, std::uint64_t index);

struct MethodReport {
  Metrics metrics;
  double grammaticality = 0.0;
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::size_t frames = 0;
  MethodReport argmax;
  MethodReport parser;
  /// Present for prediction tasks.
  bool has_prediction = false;
  std::size_t prediction_points = 0;
  Metrics baseline_prediction;
  Metrics parser_prediction;

  std::string to_json() const;
  std::string to_table() const;
};

/// Samples sequences, synthesizes matrices and scores the per-frame
/// argmax baseline against parse + segmentation. Deterministic per seed.
BenchmarkReport run_benchmark(const BenchmarkConfig& config);
BenchmarkReport run_benchmark(const BenchmarkConfig& config, const Grammar& g);

}  // namespace gep

#endif  // GEP_HARNESS_HPP
