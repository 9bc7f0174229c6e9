#include "gep/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gep/error.hpp"

namespace gep {

ProbMatrix::ProbMatrix(std::vector<std::string> labels, std::vector<double> values,
                       bool renormalize)
    : labels_(std::move(labels)), values_(std::move(values)) {
  const std::size_t k = labels_.size();
  if (k == 0) throw InputError("matrix has no labels");
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (l.empty()) throw InputError("empty label name");
    if (!seen.insert(l).second) throw InputError("duplicate label '" + l + "'");
  }
  if (values_.empty() || values_.size() % k != 0)
    throw InputError("matrix needs at least one frame of " + std::to_string(k) + " values");
  frames_ = values_.size() / k;
  for (std::size_t t = 0; t < frames_; ++t) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double v = values_[t * k + j];
      if (!std::isfinite(v) || v < 0.0)
        throw InputError("frame " + std::to_string(t) + ": invalid probability");
      sum += v;
    }
    if (std::abs(sum - 1.0) <= kRowTolerance) continue;
    if (!renormalize || sum <= 0.0) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.9g", sum);
      throw InputError("frame " + std::to_string(t) + ": row sums to " + buf +
                       (renormalize ? "" : " (use renormalization to accept)"));
    }
    for (std::size_t j = 0; j < k; ++j) values_[t * k + j] /= sum;
  }
}

ProbMatrix ProbMatrix::from_rows(std::vector<std::string> labels,
                                 const std::vector<std::vector<double>>& rows, bool renormalize) {
  std::vector<double> flat;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != labels.size())
      throw InputError("frame " + std::to_string(t) + " has " + std::to_string(rows[t].size()) +
                       " values, expected " + std::to_string(labels.size()));
    flat.insert(flat.end(), rows[t].begin(), rows[t].end());
  }
  return ProbMatrix(std::move(labels), std::move(flat), renormalize);
}

std::optional<std::size_t> ProbMatrix::column(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

ProbMatrix ProbMatrix::head(std::size_t frames) const {
  if (frames == 0 || frames > frames_) throw InputError("head: frame count out of range");
  return ProbMatrix(labels_,
                    std::vector<double>(values_.begin(),
                                        values_.begin() + static_cast<std::ptrdiff_t>(frames * labels_.size())));
}

std::vector<std::string> ProbMatrix::argmax_labels() const {
  std::vector<std::string> out;
  out.reserve(frames_);
  for (std::size_t t = 0; t < frames_; ++t) {
    const auto r = row(t);
    out.push_back(labels_[static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin())]);
  }
  return out;
}

std::string ProbMatrix::to_csv() const {
  std::ostringstream out;
  for (std::size_t j = 0; j < labels_.size(); ++j) out << (j ? "," : "") << labels_[j];
  out << "\n";
  char buf[64];
  for (std::size_t t = 0; t < frames_; ++t) {
    for (std::size_t j = 0; j < labels_.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", at(t, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
  return out.str();
}

std::string ProbMatrix::to_json() const {
  nlohmann::json j;
  j["labels"] = labels_;
  auto& probs = j["probs"] = nlohmann::json::array();
  for (std::size_t t = 0; t < frames_; ++t) {
    const auto r = row(t);
    probs.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return j.dump();
}

namespace {

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string cell(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

ProbMatrix parse_matrix_csv(std::string_view text, bool renormalize) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<std::string> labels;
  std::vector<double> values;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv(line);
    if (labels.empty()) {
      labels = std::move(cells);
      continue;
    }
    if (cells.size() != labels.size())
      throw InputError("csv line " + std::to_string(line_no) + ": expected " +
                       std::to_string(labels.size()) + " values");
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != c.size())
        throw InputError("csv line " + std::to_string(line_no) + ": invalid number '" + c + "'");
      values.push_back(v);
    }
  }
  if (labels.empty()) throw InputError("csv matrix has no header row");
  return ProbMatrix(std::move(labels), std::move(values), renormalize);
}

ProbMatrix parse_matrix_json(std::string_view text, bool renormalize) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    return ProbMatrix::from_rows(j.at("labels").get<std::vector<std::string>>(),
                                 j.at("probs").get<std::vector<std::vector<double>>>(), renormalize);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("json matrix: ") + e.what());
  }
}

ProbMatrix parse_matrix(std::string_view text, bool renormalize) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') return parse_matrix_json(text, renormalize);
  return parse_matrix_csv(text, renormalize);
}

ProbMatrix load_matrix_file(const std::string& path, bool renormalize) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open matrix file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_matrix(buf.str(), renormalize);
}

}  // namespace gep
