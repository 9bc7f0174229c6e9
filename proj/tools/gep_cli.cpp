#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gep/earley.hpp"
#include "gep/error.hpp"
#include "gep/grammar.hpp"
#include "gep/harness.hpp"
#include "gep/matrix.hpp"
#include "gep/parser.hpp"
#include "gep/prediction.hpp"
#include "gep/random.hpp"
#include "gep/segmentation.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw gep::InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

gep::Grammar load(const std::string& path) {
  gep::Grammar g = gep::load_grammar_file(path);
  for (const auto& n : g.notices()) std::cerr << "notice: " << n << "\n";
  return g;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + v[i];
  return out;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gep::InputError("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized Earley parser: grammar-constrained decoding of label-probability matrices"};
  app.require_subcommand(1);

  std::string grammar_path, matrix_path, corpus_path, config_path, durations_path, out_dir, json_out;
  std::vector<std::string> words;
  bool dump = false, renormalize = false, as_json = false;
  int horizon = 0, samples = 100, count = 1;
  std::uint64_t seed = 0;
  double smoothing = 0.0, tau = 0.6;

  auto* earley = app.add_subcommand("earley", "Recognize a sentence with the symbolic Earley parser");
  earley->add_option("grammar", grammar_path)->required();
  earley->add_option("sentence", words, "terminals of the sentence")->required();
  earley->add_flag("--dump-chart", dump, "print every state set");

  auto* parse = app.add_subcommand("parse", "Best grammatical sentence for a probability matrix");
  parse->add_option("grammar", grammar_path)->required();
  parse->add_option("matrix", matrix_path, "CSV or JSON matrix")->required();
  parse->add_flag("--renormalize", renormalize, "rescale rows that do not sum to 1");
  parse->add_flag("--json", as_json);

  auto* segment = app.add_subcommand("segment", "Parse, then segment frames");
  segment->add_option("grammar", grammar_path)->required();
  segment->add_option("matrix", matrix_path)->required();
  segment->add_flag("--renormalize", renormalize);

  auto* predict = app.add_subcommand("predict", "Next-label candidates and frame forecast for an observed prefix");
  predict->add_option("grammar", grammar_path)->required();
  predict->add_option("matrix", matrix_path)->required();
  predict->add_option("--horizon", horizon, "future frames to forecast")->check(CLI::NonNegativeNumber);
  predict->add_option("--samples", samples, "Monte Carlo rollouts")->check(CLI::PositiveNumber);
  predict->add_option("--seed", seed);
  predict->add_option("--durations", durations_path, "duration model JSON");
  predict->add_flag("--renormalize", renormalize);

  auto* sample = app.add_subcommand("sample", "Sample sentences from the grammar");
  sample->add_option("grammar", grammar_path)->required();
  sample->add_option("-n", count)->required()->check(CLI::NonNegativeNumber);
  sample->add_option("--seed", seed);

  auto* fit = app.add_subcommand("fit", "Refit rule probabilities on a sentence corpus");
  fit->add_option("grammar", grammar_path)->required();
  fit->add_option("corpus", corpus_path, "one sentence per line")->required();
  fit->add_option("--smoothing", smoothing)->check(CLI::NonNegativeNumber);

  auto* synth = app.add_subcommand("synth", "Write synthetic matrices and gold labels");
  synth->add_option("grammar", grammar_path)->required();
  synth->add_option("-n", count)->required()->check(CLI::PositiveNumber);
  synth->add_option("--tau", tau)->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", seed);
  synth->add_option("-o", out_dir)->required();

  auto* evaluate = app.add_subcommand("evaluate", "Run a benchmark config");
  evaluate->add_option("config", config_path)->required();
  evaluate->add_option("--json-out", json_out, "also write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (earley->parsed()) {
      const gep::Grammar g = load(grammar_path);
      std::string text;
      for (const auto& w : words) text += w + " ";
      const gep::Sentence s = gep::parse_sentence(g, text);
      const auto rec = gep::recognize(g, s);
      if (dump) std::cout << gep::dump_chart(rec.chart, g);
      std::cout << (rec.accepted ? "accepted" : "rejected") << "\n";
      if (rec.accepted) std::cout << gep::extract_parse_tree(rec.chart, g).to_string(g) << "\n";
      return 0;
    }

    if (parse->parsed() || segment->parsed() || predict->parsed()) {
      const gep::Grammar g = load(grammar_path);
      const gep::ProbMatrix y = gep::load_matrix_file(matrix_path, renormalize);

      if (parse->parsed()) {
        const auto out = gep::parse(g, y);
        const std::string tree = out.parse_tree ? out.parse_tree->to_string(g) : "";
        if (as_json) {
          nlohmann::ordered_json j;
          j["sentence"] = out.best_labels;
          j["probability"] = std::exp(out.log_sentence_prob);
          j["log_prob"] = out.log_sentence_prob;
          j["prefix_probability"] = std::exp(out.log_prefix_prob);
          j["tree"] = tree;
          j["final_set"] = {out.final_set.level, out.final_set.ordinal};
          j["expanded_nodes"] = out.expanded_nodes;
          std::cout << j.dump(2) << "\n";
        } else {
          std::cout << "sentence: " << join(out.best_labels) << "\n"
                    << "probability: " << num(std::exp(out.log_sentence_prob)) << "\n"
                    << "prefix probability: " << num(std::exp(out.log_prefix_prob)) << "\n"
                    << "tree: " << tree << "\n"
                    << "final set: S(" << out.final_set.level << "," << out.final_set.ordinal << ")\n"
                    << "expanded nodes: " << out.expanded_nodes << "\n";
        }
        return 0;
      }

      if (segment->parsed()) {
        const auto out = gep::parse(g, y);
        std::cout << gep::best_segmentation(y, out.best_labels).to_json() << "\n";
        return 0;
      }

      // predict: the matrix is an observed prefix of a longer activity.
      const auto out = gep::parse(g, y, {.allow_prefix = true});
      gep::PrefixScoreCache cache;
      gep::PredictionOptions popts;
      popts.cache = &cache;
      popts.likelihood.max_len = std::max<int>(64, static_cast<int>(out.best_sentence.size()) + 1);
      const auto set = gep::predict_next_symbols(out, g, popts);
      std::vector<std::vector<double>> dist;
      if (horizon > 0) {
        const auto seg = gep::best_segmentation(y, out.best_labels);
        const gep::DurationModel d = durations_path.empty()
                                         ? gep::fit_duration_model(std::span<const gep::Segmentation>(&seg, 1))
                                         : gep::DurationModel::from_json(read_file(durations_path));
        gep::ForecastOptions fopts;
        fopts.observed_duration = seg.segments.back().length();
        fopts.prediction = popts;
        dist = gep::predict_future_frames(out, g, d, y.labels(), horizon, samples, seed, fopts);
      }
      std::cout << gep::prediction_json(out.best_labels, set, dist) << "\n";
      return 0;
    }

    if (sample->parsed()) {
      const gep::Grammar g = load(grammar_path);
      for (int i = 0; i < count; ++i) {
        const auto s = gep::sample_sentence(g, gep::derive_seed(seed, static_cast<std::uint64_t>(i)));
        std::cout << gep::format_sentence(g, s) << "\n";
      }
      return 0;
    }

    if (fit->parsed()) {
      const gep::Grammar g = load(grammar_path);
      std::istringstream in(read_file(corpus_path));
      gep::SentenceCorpus corpus;
      for (std::string line; std::getline(in, line);) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        corpus.push_back(gep::parse_sentence(g, line));
      }
      const gep::Grammar fitted = gep::fit_rule_probabilities(g, corpus, smoothing);
      for (const auto& n : fitted.notices()) std::cerr << "notice: " << n << "\n";
      std::cout << fitted.to_text();
      return 0;
    }

    if (synth->parsed()) {
      const gep::Grammar g = load(grammar_path);
      gep::BenchmarkConfig config;
      config.tau = tau;
      config.seed = seed;
      std::filesystem::create_directories(out_dir);
      for (int i = 0; i < count; ++i) {
        const auto s = gep::synthesize_sequence(g, config, static_cast<std::uint64_t>(i));
        char stem[32];
        std::snprintf(stem, sizeof stem, "seq_%04d", i);
        const std::filesystem::path base = std::filesystem::path(out_dir) / stem;
        write_file(base.string() + ".csv", s.matrix.to_csv());
        write_file(base.string() + ".gold", join(s.labels) + "\n" + join(s.frame_labels()) + "\n");
      }
      return 0;
    }

    if (evaluate->parsed()) {
      const auto dir = std::filesystem::path(config_path).parent_path().string();
      const auto config = gep::BenchmarkConfig::from_json(read_file(config_path), dir);
      const auto report = gep::run_benchmark(config);
      std::cout << report.to_table() << "\n" << report.to_json() << "\n";
      if (!json_out.empty()) write_file(json_out, report.to_json() + "\n");
      return 0;
    }
  } catch (const gep::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
