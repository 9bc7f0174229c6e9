#include "gep/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <set>

#include <json.hpp>

#include "gep/earley.hpp"
#include "gep/error.hpp"
#include "gep/parser.hpp"
#include "gep/random.hpp"
#include "gep/segmentation.hpp"

namespace gep {

namespace {

std::vector<std::size_t> label_columns(std::span<const std::string> sentence,
                                       std::span<const int> durations,
                                       std::span<const std::string> labels) {
  if (sentence.size() != durations.size())
    throw InputError("sentence has " + std::to_string(sentence.size()) + " labels but " +
                     std::to_string(durations.size()) + " durations");
  if (sentence.empty()) throw InputError("empty sentence");
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    if (durations[i] < 1) throw InputError("segment " + std::to_string(i) + " has zero duration");
    auto it = std::find(labels.begin(), labels.end(), sentence[i]);
    if (it == labels.end()) throw InputError("label '" + sentence[i] + "' not in the label set");
    cols.push_back(static_cast<std::size_t>(it - labels.begin()));
  }
  return cols;
}

}  // namespace

ProbMatrix one_hot(std::span<const std::string> sentence, std::span<const int> durations,
                   std::span<const std::string> labels) {
  const auto cols = label_columns(sentence, durations, labels);
  std::vector<double> values;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    for (int d = 0; d < durations[i]; ++d) {
      for (std::size_t k = 0; k < labels.size(); ++k) values.push_back(k == cols[i] ? 1.0 : 0.0);
    }
  }
  return ProbMatrix({labels.begin(), labels.end()}, std::move(values));
}

ProbMatrix synthesize_matrix(std::span<const std::string> sentence, std::span<const int> durations,
                             std::span<const std::string> labels, double tau, std::uint64_t seed) {
  if (!(tau >= 0.0)) throw InputError("tau must be non-negative");
  if (tau == 0.0) return one_hot(sentence, durations, labels);
  const auto cols = label_columns(sentence, durations, labels);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise;
  const double scale = 1.0 / std::max(tau, 1e-6);
  const std::size_t k = labels.size();
  std::vector<double> values;
  std::vector<double> logits(k);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    for (int d = 0; d < durations[i]; ++d) {
      for (std::size_t j = 0; j < k; ++j) logits[j] = (j == cols[i] ? scale : 0.0) + tau * noise(rng);
      const double hi = *std::max_element(logits.begin(), logits.end());
      double sum = 0.0;
      for (double& v : logits) sum += (v = std::exp(v - hi));
      for (double v : logits) values.push_back(v / sum);
    }
  }
  return ProbMatrix({labels.begin(), labels.end()}, std::move(values));
}

Metrics compute_metrics(std::span<const std::string> predicted, std::span<const std::string> gold,
                        std::span<const std::string> label_set) {
  if (predicted.size() != gold.size())
    throw InputError("predicted and gold lengths differ (" + std::to_string(predicted.size()) +
                     " vs " + std::to_string(gold.size()) + ")");
  if (gold.empty()) throw InputError("no frames to score");

  struct Counts {
    std::size_t tp = 0, fp = 0, support = 0;
  };
  std::map<std::string, Counts> counts;
  for (const auto& l : label_set) counts[l];
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] == gold[i]) {
      ++correct;
      ++counts[gold[i]].tp;
    } else {
      ++counts[predicted[i]].fp;
    }
    ++counts[gold[i]].support;
  }

  Metrics m;
  m.micro_pr = static_cast<double>(correct) / static_cast<double>(gold.size());
  std::size_t classes = 0;
  for (const auto& l : label_set) {
    const Counts& c = counts[l];
    ClassScores s;
    s.support = c.support;
    s.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    s.recall = c.support > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.support) : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    m.per_class[l] = s;
    if (c.support == 0) continue;
    ++classes;
    m.macro_precision += s.precision;
    m.macro_recall += s.recall;
    m.macro_f1 += s.f1;
  }
  if (classes > 0) {
    m.macro_precision /= static_cast<double>(classes);
    m.macro_recall /= static_cast<double>(classes);
    m.macro_f1 /= static_cast<double>(classes);
  }
  return m;
}

// ---------------------------------------------------------------------------

namespace {

const char* task_name(BenchmarkTask t) {
  switch (t) {
    case BenchmarkTask::kDetection:
      return "detection";
    case BenchmarkTask::kSegmentPrediction:
      return "segment-prediction";
    case BenchmarkTask::kFrameHorizonPrediction:
      return "frame-horizon-prediction";
  }
  return "?";
}

}  // namespace

BenchmarkConfig BenchmarkConfig::from_json(std::string_view text, const std::string& base_dir) {
  BenchmarkConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.grammar_path = j.at("grammar").get<std::string>();
    if (!base_dir.empty() && std::filesystem::path(c.grammar_path).is_relative())
      c.grammar_path = (std::filesystem::path(base_dir) / c.grammar_path).string();
    c.sequences = j.value("sequences", c.sequences);
    c.tau = j.value("tau", c.tau);
    c.seed = j.value("seed", c.seed);
    c.horizon = j.value("horizon", c.horizon);
    c.samples = j.value("samples", c.samples);
    c.min_sentence_length = j.value("min_sentence_length", c.min_sentence_length);
    c.max_sentence_length = j.value("max_sentence_length", c.max_sentence_length);
    c.sample_max_depth = j.value("sample_max_depth", c.sample_max_depth);
    c.training_sentences = j.value("training_sentences", c.training_sentences);
    c.stride = j.value("stride", c.stride);
    if (j.contains("durations")) c.durations = DurationModel::from_json(j.at("durations").dump());
    const std::string task = j.value("task", std::string("detection"));
    if (task == "detection") c.task = BenchmarkTask::kDetection;
    else if (task == "segment-prediction") c.task = BenchmarkTask::kSegmentPrediction;
    else if (task == "frame-horizon-prediction") c.task = BenchmarkTask::kFrameHorizonPrediction;
    else throw InputError("unknown task '" + task + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("benchmark config: ") + e.what());
  }
  if (c.sequences < 1 || c.samples < 1 || c.stride < 1 || c.training_sentences < 1 ||
      c.min_sentence_length < 1 || c.max_sentence_length < c.min_sentence_length || c.sample_max_depth < 1)
    throw InputError("benchmark config: counts must be at least 1");
  if (!(c.tau >= 0.0)) throw InputError("benchmark config: tau must be non-negative");
  if (c.horizon < 0) throw InputError("benchmark config: horizon must be non-negative");
  return c;
}

namespace {

struct SampledSequence {
  Sentence sentence;
  std::vector<std::string> labels;
  std::vector<int> durations;
};

SampledSequence sample_sequence(const Grammar& g, const BenchmarkConfig& c, std::uint64_t seed) {
  SampledSequence s;
  for (std::uint64_t attempt = 0;; ++attempt) {
    s.sentence = sample_sentence(g, derive_seed(seed, attempt), c.sample_max_depth);
    const int n = static_cast<int>(s.sentence.size());
    if ((n >= c.min_sentence_length && n <= c.max_sentence_length) || attempt >= 10000) break;
  }
  s.labels = sentence_labels(g, s.sentence);
  std::mt19937_64 rng(derive_seed(seed, 0xd0d0));
  std::normal_distribution<double> normal;
  for (const auto& l : s.labels) {
    const auto& ln = c.durations.for_label(l);
    s.durations.push_back(std::max(1, static_cast<int>(std::lround(std::exp(ln.mu + ln.sigma * normal(rng))))));
  }
  return s;
}

template <typename Seq>
Segmentation gold_segmentation(const Seq& s) {
  Segmentation seg;
  int t = 0;
  for (std::size_t i = 0; i < s.labels.size(); ++i) {
    seg.segments.push_back({s.labels[i], t, t + s.durations[i] - 1});
    t += s.durations[i];
  }
  return seg;
}

nlohmann::ordered_json metrics_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["micro"] = m.micro_pr;
  j["macro_precision"] = m.macro_precision;
  j["macro_recall"] = m.macro_recall;
  j["macro_f1"] = m.macro_f1;
  auto& pc = j["per_class"] = nlohmann::ordered_json::object();
  for (const auto& [label, s] : m.per_class) {
    pc[label] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
  }
  return j;
}

std::string metrics_row(const std::string& name, const Metrics& m, const std::string& extra) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %8.4f %8.4f %8.4f %8.4f %s\n", name.c_str(), m.micro_pr,
                m.macro_precision, m.macro_recall, m.macro_f1, extra.c_str());
  return buf;
}

}  // namespace

std::vector<std::string> SyntheticSequence::frame_labels() const {
  return gep::frame_labels(gold_segmentation(*this), matrix.num_frames());
}

SyntheticSequence synthesize_sequence(const Grammar& g, const BenchmarkConfig& config, std::uint64_t index) {
  const std::uint64_t seed = derive_seed(config.seed, index);
  SampledSequence s = sample_sequence(g, config, seed);
  ProbMatrix y = synthesize_matrix(s.labels, s.durations, g.terminals(), config.tau, derive_seed(seed, 0x5eed));
  return {std::move(s.sentence), std::move(s.labels), std::move(s.durations), std::move(y)};
}

std::string BenchmarkReport::to_json() const {
  nlohmann::ordered_json j;
  auto& cfg = j["config"];
  cfg["grammar"] = config.grammar_path;
  cfg["task"] = task_name(config.task);
  cfg["sequences"] = config.sequences;
  cfg["tau"] = config.tau;
  cfg["seed"] = config.seed;
  cfg["horizon"] = config.horizon;
  cfg["samples"] = config.samples;
  cfg["stride"] = config.stride;
  cfg["min_sentence_length"] = config.min_sentence_length;
  cfg["max_sentence_length"] = config.max_sentence_length;
  cfg["training_sentences"] = config.training_sentences;
  cfg["durations"] = nlohmann::ordered_json::parse(config.durations.to_json());
  j["frames"] = frames;
  auto& det = j["detection"];
  det["argmax"] = metrics_json(argmax.metrics);
  det["argmax"]["grammaticality"] = argmax.grammaticality;
  det["parser"] = metrics_json(parser.metrics);
  det["parser"]["grammaticality"] = parser.grammaticality;
  if (has_prediction) {
    auto& pred = j["prediction"];
    pred["points"] = prediction_points;
    pred["baseline"] = metrics_json(baseline_prediction);
    pred["parser"] = metrics_json(parser_prediction);
  }
  return j.dump(2);
}

std::string BenchmarkReport::to_table() const {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "task %s, %d sequences, %zu frames, tau %.3g, seed %llu\n",
                task_name(config.task), config.sequences, frames, config.tau,
                static_cast<unsigned long long>(config.seed));
  out += buf;
  std::snprintf(buf, sizeof buf, "%-22s %8s %8s %8s %8s %s\n", "detection", "micro", "macro-P",
                "macro-R", "macro-F1", "grammatical");
  out += buf;
  auto pct = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%11.4f", v);
    return std::string(b);
  };
  out += metrics_row("argmax", argmax.metrics, pct(argmax.grammaticality));
  out += metrics_row("generalized-earley", parser.metrics, pct(parser.grammaticality));
  if (has_prediction) {
    std::snprintf(buf, sizeof buf, "%-22s %8s %8s %8s %8s (%zu points)\n", task_name(config.task),
                  "micro", "macro-P", "macro-R", "macro-F1", prediction_points);
    out += buf;
    out += metrics_row(config.task == BenchmarkTask::kSegmentPrediction ? "bigram" : "persistence",
                       baseline_prediction, "");
    out += metrics_row("generalized-earley", parser_prediction, "");
  }
  return out;
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  const Grammar g = load_grammar_file(config.grammar_path);
  return run_benchmark(config, g);
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config, const Grammar& g) {
  BenchmarkReport report;
  report.config = config;
  const std::vector<std::string>& labels = g.terminals();
  const bool segment_task = config.task == BenchmarkTask::kSegmentPrediction;
  const bool horizon_task = config.task == BenchmarkTask::kFrameHorizonPrediction;
  report.has_prediction = segment_task || horizon_task;

  // Training material for the prediction baselines and duration model.
  std::map<std::string, std::map<std::string, int>> successors;
  std::vector<Segmentation> training_segs;
  if (report.has_prediction) {
    for (int i = 0; i < config.training_sentences; ++i) {
      const auto s = sample_sequence(g, config, derive_seed(config.seed ^ 0x7261696eULL, static_cast<std::uint64_t>(i)));
      for (std::size_t k = 0; k + 1 < s.labels.size(); ++k) ++successors[s.labels[k]][s.labels[k + 1]];
      training_segs.push_back(gold_segmentation(s));
    }
  }
  const DurationModel fitted = training_segs.empty() ? config.durations : fit_duration_model(training_segs);
  auto bigram_next = [&](const std::string& label) -> std::string {
    auto it = successors.find(label);
    if (it == successors.end()) return kEndOfSentence;
    std::string best = kEndOfSentence;
    int count = -1;
    for (const auto& [next, n] : it->second) {
      if (n > count) {
        best = next;
        count = n;
      }
    }
    return best;
  };

  PrefixScoreCache cache;
  PredictionOptions popts;
  popts.cache = &cache;

  std::vector<std::string> gold_all, argmax_all, parser_all;
  std::vector<std::string> pred_gold, pred_base, pred_parser;
  std::size_t argmax_ok = 0, parser_ok = 0;

  for (int i = 0; i < config.sequences; ++i) {
    const std::uint64_t seq_seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
    const SyntheticSequence s = synthesize_sequence(g, config, static_cast<std::uint64_t>(i));
    const ProbMatrix& y = s.matrix;
    const Segmentation gold_seg = gold_segmentation(s);
    const auto gold = s.frame_labels();

    const auto argmax = y.argmax_labels();
    if (recognize(g, to_sentence(g, merge_runs(argmax))).accepted) ++argmax_ok;

    const ParseOutcome outcome = parse(g, y);
    if (recognize(g, outcome.best_sentence).accepted) ++parser_ok;
    const auto parsed = frame_labels(best_segmentation(y, outcome.best_labels), y.num_frames());

    gold_all.insert(gold_all.end(), gold.begin(), gold.end());
    argmax_all.insert(argmax_all.end(), argmax.begin(), argmax.end());
    parser_all.insert(parser_all.end(), parsed.begin(), parsed.end());

    if (!report.has_prediction) continue;
    std::vector<int> segment_of;
    for (std::size_t k = 0; k < gold_seg.segments.size(); ++k)
      segment_of.insert(segment_of.end(), static_cast<std::size_t>(gold_seg.segments[k].length()), static_cast<int>(k));

    for (std::size_t t = 0; t < y.num_frames(); t += static_cast<std::size_t>(config.stride)) {
      const ProbMatrix seen = y.head(t + 1);
      if (segment_task) {
        const auto k = static_cast<std::size_t>(segment_of[t]);
        if (k + 1 >= s.labels.size()) continue;
        const ParseOutcome partial = parse(g, seen, {.allow_prefix = true});
        const PredictionSet ps = predict_next_symbols(partial, g, popts);
        pred_gold.push_back(s.labels[k + 1]);
        pred_parser.push_back(ps.best() ? ps.best()->symbol : std::string(kEndOfSentence));
        pred_base.push_back(bigram_next(argmax[t]));
        continue;
      }
      if (t + 1 >= y.num_frames() || config.horizon == 0) continue;
      const ParseOutcome partial = parse(g, seen, {.allow_prefix = true});
      const Segmentation seg = best_segmentation(seen, partial.best_labels);
      ForecastOptions fopts;
      fopts.observed_duration = seg.segments.back().length();
      fopts.prediction = popts;
      const auto dist = predict_future_frames(partial, g, fitted, labels, config.horizon, config.samples,
                                              derive_seed(seq_seed, t), fopts);
      for (int h = 1; h <= config.horizon && t + static_cast<std::size_t>(h) < y.num_frames(); ++h) {
        const auto& row = dist[static_cast<std::size_t>(h - 1)];
        const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        pred_gold.push_back(gold[t + static_cast<std::size_t>(h)]);
        pred_parser.push_back(labels[best]);
        pred_base.push_back(argmax[t]);
      }
    }
  }

  report.frames = gold_all.size();
  report.argmax.metrics = compute_metrics(argmax_all, gold_all, labels);
  report.argmax.grammaticality = static_cast<double>(argmax_ok) / config.sequences;
  report.parser.metrics = compute_metrics(parser_all, gold_all, labels);
  report.parser.grammaticality = static_cast<double>(parser_ok) / config.sequences;
  report.prediction_points = pred_gold.size();
  if (report.has_prediction && !pred_gold.empty()) {
    report.baseline_prediction = compute_metrics(pred_base, pred_gold, labels);
    report.parser_prediction = compute_metrics(pred_parser, pred_gold, labels);
  }
  return report;
}

}  // namespace gep
