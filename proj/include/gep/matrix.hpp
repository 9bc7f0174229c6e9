#ifndef GEP_MATRIX_HPP
#define GEP_MATRIX_HPP

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gep {

/// T x K per-frame label probabilities, row-major. Every row is
/// non-negative and sums to 1 within 1e-6; labels are distinct.
class ProbMatrix {
 public:
  static constexpr double kRowTolerance = 1e-6;

  /// Throws InputError on shape, sign or row-sum violations. Rows are
  /// rescaled to sum to 1 instead of rejected when renormalize is set.
  ProbMatrix(std::vector<std::string> labels, std::vector<double> values,
             bool renormalize = false);
  static ProbMatrix from_rows(std::vector<std::string> labels,
                              const std::vector<std::vector<double>>& rows,
                              bool renormalize = false);

  std::size_t num_frames() const { return frames_; }
  std::size_t num_labels() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<std::size_t> column(std::string_view label) const;

  double at(std::size_t frame, std::size_t label) const { return values_[frame * labels_.size() + label]; }
  std::span<const double> row(std::size_t frame) const {
    return {values_.data() + frame * labels_.size(), labels_.size()};
  }
  const std::vector<double>& values() const { return values_; }

  /// The first `frames` rows.
  ProbMatrix head(std::size_t frames) const;

  /// Per-frame argmax label (first maximum wins).
  std::vector<std::string> argmax_labels() const;

  std::string to_csv() const;
  std::string to_json() const;

 private:
  std::vector<std::string> labels_;
  std::vector<double> values_;
  std::size_t frames_ = 0;
};

/// Header row of labels, then one row of probabilities per frame.
ProbMatrix parse_matrix_csv(std::string_view text, bool renormalize = false);
/// {"labels": [...], "probs": [[...], ...]}
ProbMatrix parse_matrix_json(std::string_view text, bool renormalize = false);
/// Detects JSON by a leading '{', CSV otherwise.
ProbMatrix parse_matrix(std::string_view text, bool renormalize = false);
ProbMatrix load_matrix_file(const std::string& path, bool renormalize = false);

}  // namespace gep

#endif  // GEP_MATRIX_HPP
