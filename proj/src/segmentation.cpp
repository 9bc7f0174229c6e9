#include "gep/segmentation.hpp"

#include <json.hpp>

#include "gep/error.hpp"
#include "gep/logspace.hpp"

namespace gep {

std::vector<std::string> Segmentation::sentence() const {
  std::vector<std::string> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(s.label);
  return out;
}

std::string Segmentation::to_json() const {
  nlohmann::ordered_json j;
  j["sentence"] = sentence();
  auto& segs = j["segments"] = nlohmann::ordered_json::array();
  for (const auto& s : segments) {
    nlohmann::ordered_json e;
    e["label"] = s.label;
    e["start"] = s.start;
    e["end"] = s.end;
    segs.push_back(std::move(e));
  }
  j["log_prob"] = log_prob;
  return j.dump();
}

Segmentation best_segmentation(const ProbMatrix& y, std::span<const std::string> sentence) {
  const std::size_t n = sentence.size();
  const std::size_t frames = y.num_frames();
  if (n == 0) throw InputError("cannot segment an empty sentence");
  if (n > frames)
    throw InputError("more segments than frames (" + std::to_string(n) + " > " +
                     std::to_string(frames) + ")");
  std::vector<std::size_t> cols(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = y.column(sentence[i]);
    if (!c) throw InputError("label '" + sentence[i] + "' is not a column of the matrix");
    cols[i] = *c;
  }

  // best[i][e]: labels 0..i tile frames 0..e with label i ending at e.
  // start[i][e]: first frame of label i on that best tiling.
  std::vector<std::vector<double>> best(n, std::vector<double>(frames, kLogZero));
  std::vector<std::vector<int>> start(n, std::vector<int>(frames, -1));
  {
    double run = 0.0;
    for (std::size_t e = 0; e < frames; ++e) {
      run += safe_log(y.at(e, cols[0]));
      best[0][e] = run;
      start[0][e] = 0;
    }
  }
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t e = i; e < frames; ++e) {
      // Walk b downward so the segment sum accumulates; keep the smallest
      // b among ties.
      double seg = 0.0;
      double top = kLogZero;
      int arg = -1;
      for (std::size_t b = e + 1; b-- > i;) {
        seg += safe_log(y.at(b, cols[i]));
        const double cand = best[i - 1][b - 1] + seg;
        if (cand == kLogZero) continue;
        if (arg < 0 || cand > top || log_equal(cand, top)) {
          if (arg < 0 || cand > top) top = cand;
          arg = static_cast<int>(b);
        }
      }
      best[i][e] = top;
      start[i][e] = arg;
    }
  }

  const double total = best[n - 1][frames - 1];
  if (total == kLogZero) {
    std::string zeros;
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        if (y.at(t, cols[i]) == 0.0) {
          zeros += (zeros.empty() ? "" : ", ") + std::string("(") + std::to_string(t) + ", '" +
                   sentence[i] + "')";
        }
      }
    }
    throw InputError("every segmentation has probability 0; zero entries (frame, label): " + zeros);
  }

  Segmentation out;
  out.segments.resize(n);
  int e = static_cast<int>(frames) - 1;
  for (std::size_t i = n; i-- > 0;) {
    const int b = start[i][static_cast<std::size_t>(e)];
    out.segments[i] = {sentence[i], b, e};
    e = b - 1;
  }
  // Recompute in frame order so log_prob is the plain per-frame sum.
  double lp = 0.0;
  for (const auto& s : out.segments) {
    const std::size_t c = *y.column(s.label);
    for (int t = s.start; t <= s.end; ++t) lp += safe_log(y.at(static_cast<std::size_t>(t), c));
  }
  out.log_prob = lp;
  return out;
}

std::vector<std::string> frame_labels(const Segmentation& seg, std::size_t frames) {
  std::vector<std::string> out;
  out.reserve(frames);
  int expect = 0;
  for (const auto& s : seg.segments) {
    if (s.start != expect || s.end < s.start)
      throw InputError("segmentation does not tile the frames at frame " + std::to_string(expect));
    for (int t = s.start; t <= s.end; ++t) out.push_back(s.label);
    expect = s.end + 1;
  }
  if (static_cast<std::size_t>(expect) != frames)
    throw InputError("segmentation covers " + std::to_string(expect) + " frames, expected " +
                     std::to_string(frames));
  return out;
}

std::vector<std::string> merge_runs(std::span<const std::string> frames) {
  std::vector<std::string> out;
  for (const auto& f : frames) {
    if (out.empty() || out.back() != f) out.push_back(f);
  }
  return out;
}

}  // namespace gep
