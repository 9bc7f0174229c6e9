#ifndef GEP_PREDICTION_HPP
#define GEP_PREDICTION_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gep/grammar.hpp"
#include "gep/parser.hpp"
#include "gep/segmentation.hpp"

namespace gep {

/// Symbol name of the end-of-sentence candidate.
inline constexpr const char* kEndOfSentence = "<end>";

struct Candidate {
  std::string symbol;
  double score = 0.0;
  bool end_of_sentence = false;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Next-symbol candidates sorted by descending score, ties by symbol name.
struct PredictionSet {
  std::vector<Candidate> candidates;

  const Candidate* best() const { return candidates.empty() ? nullptr : &candidates.front(); }
};

/// Memo of grammar_prefix_likelihood keyed by prefix. Not thread-safe;
/// valid for one grammar and one set of options.
class PrefixScoreCache {
 public:
  double get(const Grammar& g, const Sentence& prefix, const PrefixLikelihoodOptions& options);

 private:
  std::map<Sentence, double> scores_;
};

struct PredictionOptions {
  PrefixLikelihoodOptions likelihood;
  PrefixScoreCache* cache = nullptr;
};

/// Candidates z from the states X -> a . z b of the outcome's final set,
/// each scored by p(l + z | G). When l is itself a sentence of L(G), an
/// end-of-sentence candidate scored by its Viterbi likelihood is added.
PredictionSet predict_next_symbols(const ParseOutcome& outcome, const Grammar& g,
                                   const PredictionOptions& options = {});

/// Same, for a symbolic prefix (possibly empty); the final set is the
/// last Earley state set of the prefix.
PredictionSet predict_next_symbols(const Sentence& prefix, const Grammar& g,
                                   const PredictionOptions& options = {});

/// Log-normal segment durations in frames, per label with a global
/// fallback.
struct DurationModel {
  struct LogNormal {
    double mu = 0.0;
    double sigma = 0.0;
  };
  std::map<std::string, LogNormal> per_label;
  LogNormal fallback;

  const LogNormal& for_label(const std::string& label) const {
    auto it = per_label.find(label);
    return it == per_label.end() ? fallback : it->second;
  }
  std::string to_json() const;
  static DurationModel from_json(std::string_view text);
};

/// Labels with at least two segments get their own (mu, sigma) from the
/// log durations; the rest use the global fit. Population standard
/// deviation. Throws InputError when there are no segments.
DurationModel fit_duration_model(std::span<const Segmentation> segmentations);

struct ForecastOptions {
  /// Frames already spent in the in-progress (last) segment.
  int observed_duration = 0;
  /// Label to fill after an end-of-sentence draw; the last label if unset
  /// or absent from the label set.
  std::optional<std::string> null_label;
  PredictionOptions prediction;
};

/// Monte Carlo rollouts of future labels: the in-progress segment's
/// remaining duration, then labels drawn in proportion to the prediction
/// scores with log-normal durations, until `horizon` frames are covered.
/// Returns horizon rows of label frequencies over `labels`. Sample i uses
/// a generator seeded from (seed, i).
std::vector<std::vector<double>> predict_future_frames(
    const ParseOutcome& outcome, const Grammar& g, const DurationModel& durations,
    std::span<const std::string> labels, int horizon, int samples, std::uint64_t seed,
    const ForecastOptions& options = {});

/// Symbolic-prefix form used by the above; `prefix` must be non-empty.
std::vector<std::vector<double>> predict_future_frames(
    const Sentence& prefix, const Grammar& g, const DurationModel& durations,
    std::span<const std::string> labels, int horizon, int samples, std::uint64_t seed,
    const ForecastOptions& options = {});

/// Prediction JSON: {"prefix", "candidates", "frame_dist"}.
std::string prediction_json(std::span<const std::string> prefix, const PredictionSet& set,
                            const std::vector<std::vector<double>>& frame_dist);

}  // namespace gep

#endif  // GEP_PREDICTION_HPP
