#include "gep/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "gep/earley.hpp"
#include "gep/error.hpp"
#include "gep/random.hpp"

namespace gep {

double PrefixScoreCache::get(const Grammar& g, const Sentence& prefix,
                             const PrefixLikelihoodOptions& options) {
  auto it = scores_.find(prefix);
  if (it != scores_.end()) return it->second;
  const double p = grammar_prefix_likelihood(g, prefix, options);
  scores_.emplace(prefix, p);
  return p;
}

namespace {

PredictionSet score_candidates(const Grammar& g, const Sentence& prefix,
                               const std::vector<int>& next_terminals, bool complete,
                               const PredictionOptions& options) {
  PredictionSet out;
  for (int z : next_terminals) {
    Sentence extended = prefix;
    extended.push_back(z);
    const double score = options.cache ? options.cache->get(g, extended, options.likelihood)
                                       : grammar_prefix_likelihood(g, extended, options.likelihood);
    out.candidates.push_back({g.terminals()[static_cast<std::size_t>(z)], score, false});
  }
  if (complete) {
    out.candidates.push_back({kEndOfSentence, viterbi_likelihood(g, prefix).probability, true});
  }
  std::sort(out.candidates.begin(), out.candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.symbol < b.symbol;
  });
  return out;
}

void add_terminal_after_dot(const Grammar& g, int rule, int dot, std::vector<int>& out) {
  const auto& rhs = g.rule(rule).rhs;
  if (static_cast<std::size_t>(dot) >= rhs.size()) return;
  const SymbolRef s = rhs[static_cast<std::size_t>(dot)];
  if (s.terminal() && std::find(out.begin(), out.end(), s.index) == out.end()) out.push_back(s.index);
}

}  // namespace

PredictionSet predict_next_symbols(const ParseOutcome& outcome, const Grammar& g,
                                   const PredictionOptions& options) {
  std::vector<int> next;
  for (const auto& s : outcome.final_states) add_terminal_after_dot(g, s.rule, s.dot, next);
  const bool complete = recognize(g, outcome.best_sentence).accepted;
  return score_candidates(g, outcome.best_sentence, next, complete, options);
}

PredictionSet predict_next_symbols(const Sentence& prefix, const Grammar& g,
                                   const PredictionOptions& options) {
  const auto rec = recognize(g, prefix);
  std::vector<int> next;
  for (const auto& e : rec.chart.sets.back()) add_terminal_after_dot(g, e.item.rule, e.item.dot, next);
  return score_candidates(g, prefix, next, rec.accepted, options);
}

// ---------------------------------------------------------------------------

std::string DurationModel::to_json() const {
  nlohmann::ordered_json j;
  j["fallback"] = {{"mu", fallback.mu}, {"sigma", fallback.sigma}};
  auto& labels = j["labels"] = nlohmann::ordered_json::object();
  for (const auto& [name, ln] : per_label) labels[name] = {{"mu", ln.mu}, {"sigma", ln.sigma}};
  return j.dump();
}

DurationModel DurationModel::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    auto read = [](const nlohmann::json& e) {
      LogNormal ln{e.at("mu").get<double>(), e.at("sigma").get<double>()};
      if (!(ln.sigma >= 0.0) || !std::isfinite(ln.mu)) throw InputError("invalid duration parameters");
      return ln;
    };
    DurationModel d;
    d.fallback = read(j.at("fallback"));
    if (j.contains("labels")) {
      for (const auto& [name, e] : j.at("labels").items()) d.per_label[name] = read(e);
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("duration model json: ") + e.what());
  }
}

namespace {

DurationModel::LogNormal fit_log_normal(const std::vector<double>& log_durations) {
  double mean = 0.0;
  for (double v : log_durations) mean += v;
  mean /= static_cast<double>(log_durations.size());
  double var = 0.0;
  for (double v : log_durations) var += (v - mean) * (v - mean);
  var /= static_cast<double>(log_durations.size());
  return {mean, std::sqrt(var)};
}

}  // namespace

DurationModel fit_duration_model(std::span<const Segmentation> segmentations) {
  std::map<std::string, std::vector<double>> by_label;
  std::vector<double> all;
  for (const auto& seg : segmentations) {
    for (const auto& s : seg.segments) {
      const double ld = std::log(static_cast<double>(s.length()));
      by_label[s.label].push_back(ld);
      all.push_back(ld);
    }
  }
  if (all.empty()) throw InputError("fit_duration_model: no segments");
  DurationModel d;
  d.fallback = fit_log_normal(all);
  for (const auto& [label, lds] : by_label) {
    if (lds.size() >= 2) d.per_label[label] = fit_log_normal(lds);
  }
  return d;
}

// ---------------------------------------------------------------------------

namespace {

class Rollout {
 public:
  Rollout(const Grammar& g, const DurationModel& d, std::span<const std::string> labels,
          const ForecastOptions& options)
      : g_(g), d_(d), labels_(labels), options_(options) {
    for (const auto& t : g.terminals()) {
      if (std::find(labels.begin(), labels.end(), t) == labels.end())
        throw InputError("grammar terminal '" + t + "' is missing from the label set");
    }
    if (options.null_label) {
      auto it = std::find(labels.begin(), labels.end(), *options.null_label);
      if (it != labels.end()) null_column_ = static_cast<std::size_t>(it - labels.begin());
    }
  }

  void run(const Sentence& prefix, int horizon, std::uint64_t seed,
           std::vector<std::vector<double>>& counts) {
    std::mt19937_64 rng(seed);
    normal_.reset();
    Sentence l = prefix;
    int pos = 0;
    auto fill = [&](std::size_t column, int frames) {
      for (int k = 0; k < frames && pos < horizon; ++k, ++pos) counts[static_cast<std::size_t>(pos)][column] += 1.0;
    };

    const std::string& current = g_.terminals()[static_cast<std::size_t>(l.back())];
    int remaining = 1;
    if (options_.observed_duration > 0) {
      for (int attempt = 0; attempt < 100; ++attempt) {
        const int total = draw_duration(current, rng);
        if (total > options_.observed_duration) {
          remaining = total - options_.observed_duration;
          break;
        }
      }
    } else {
      remaining = draw_duration(current, rng);
    }
    fill(column_of(l.back()), remaining);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (pos < horizon) {
      const PredictionSet& ps = predictions(l);
      const auto& cands = ps.candidates;
      if (cands.empty()) {
        fill(column_of(l.back()), horizon);
        break;
      }
      double total = 0.0;
      for (const auto& c : cands) total += c.score;
      std::size_t pick = cands.size() - 1;
      if (total > 0.0) {
        double u = unit(rng) * total;
        for (std::size_t i = 0; i < cands.size(); ++i) {
          if (cands[i].score <= 0.0) continue;
          pick = i;
          if (u < cands[i].score) break;
          u -= cands[i].score;
        }
      } else {
        pick = std::min(cands.size() - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(cands.size())));
      }
      const Candidate& c = cands[pick];
      if (c.end_of_sentence) {
        fill(null_column_.value_or(column_of(l.back())), horizon);
        break;
      }
      const int z = *g_.terminal_index(c.symbol);
      l.push_back(z);
      fill(column_of(z), draw_duration(c.symbol, rng));
    }
  }

 private:
  int draw_duration(const std::string& label, std::mt19937_64& rng) {
    const auto& ln = d_.for_label(label);
    const double z = normal_(rng);
    const double frames = std::exp(ln.mu + ln.sigma * z);
    return std::max(1, static_cast<int>(std::lround(std::min(frames, 1e9))));
  }

  std::size_t column_of(int terminal) const {
    const auto& name = g_.terminals()[static_cast<std::size_t>(terminal)];
    return static_cast<std::size_t>(std::find(labels_.begin(), labels_.end(), name) - labels_.begin());
  }

  const PredictionSet& predictions(const Sentence& l) {
    auto it = memo_.find(l);
    if (it == memo_.end()) it = memo_.emplace(l, predict_next_symbols(l, g_, options_.prediction)).first;
    return it->second;
  }

  const Grammar& g_;
  const DurationModel& d_;
  std::span<const std::string> labels_;
  const ForecastOptions& options_;
  std::optional<std::size_t> null_column_;
  std::map<Sentence, PredictionSet> memo_;
  std::normal_distribution<double> normal_;
};

}  // namespace

std::vector<std::vector<double>> predict_future_frames(const Sentence& prefix, const Grammar& g,
                                                       const DurationModel& durations,
                                                       std::span<const std::string> labels,
                                                       int horizon, int samples, std::uint64_t seed,
                                                       const ForecastOptions& options) {
  if (horizon < 0) throw InputError("horizon must be non-negative");
  if (samples < 1) throw InputError("samples must be at least 1");
  if (prefix.empty()) throw InputError("frame forecast needs a non-empty prefix");
  std::vector<std::vector<double>> counts(static_cast<std::size_t>(horizon),
                                          std::vector<double>(labels.size(), 0.0));
  if (horizon == 0) return counts;
  Rollout rollout(g, durations, labels, options);
  for (int i = 0; i < samples; ++i) {
    rollout.run(prefix, horizon, derive_seed(seed, static_cast<std::uint64_t>(i)), counts);
  }
  for (auto& row : counts) {
    for (double& v : row) v /= static_cast<double>(samples);
  }
  return counts;
}

std::vector<std::vector<double>> predict_future_frames(const ParseOutcome& outcome, const Grammar& g,
                                                       const DurationModel& durations,
                                                       std::span<const std::string> labels,
                                                       int horizon, int samples, std::uint64_t seed,
                                                       const ForecastOptions& options) {
  return predict_future_frames(outcome.best_sentence, g, durations, labels, horizon, samples, seed,
                               options);
}

std::string prediction_json(std::span<const std::string> prefix, const PredictionSet& set,
                            const std::vector<std::vector<double>>& frame_dist) {
  nlohmann::ordered_json j;
  j["prefix"] = std::vector<std::string>(prefix.begin(), prefix.end());
  auto& cands = j["candidates"] = nlohmann::ordered_json::array();
  for (const auto& c : set.candidates) cands.push_back({{"symbol", c.symbol}, {"score", c.score}});
  j["frame_dist"] = frame_dist;
  return j.dump();
}

}  // namespace gep
