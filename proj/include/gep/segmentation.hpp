#ifndef GEP_SEGMENTATION_HPP
#define GEP_SEGMENTATION_HPP

#include <span>
#include <string>
#include <vector>

#include "gep/matrix.hpp"

namespace gep {

/// Inclusive frame range [start, end] labelled `label`.
struct Segment {
  std::string label;
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Segmentation {
  std::vector<Segment> segments;
  double log_prob = 0.0;

  std::vector<std::string> sentence() const;
  std::string to_json() const;
};

/// Max-product tiling of the frames into |sentence| contiguous segments,
/// one per label in order. Ties go to the earliest boundary. O(|l| T^2).
/// Throws InputError when |sentence| > T, on unknown labels, or when
/// every tiling has probability 0 (the message lists the zero entries).
Segmentation best_segmentation(const ProbMatrix& y, std::span<const std::string> sentence);

/// Per-frame labels of a tiling of [0, frames). Throws InputError if seg
/// does not tile exactly.
std::vector<std::string> frame_labels(const Segmentation& seg, std::size_t frames);

/// Collapses runs of equal labels.
std::vector<std::string> merge_runs(std::span<const std::string> frames);

}  // namespace gep

#endif  // GEP_SEGMENTATION_HPP
