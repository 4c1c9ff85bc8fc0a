#pragma once

// Segment-level scoring: IoU, the threshold match, corrected segmentation
// rate (CSR), mean Jaccard index (MJI) and recognition rate.

#include "conseg/segment.hpp"

#include <optional>
#include <string>
#include <vector>

namespace conseg {

/// Temporal IoU of two frame intervals. Both are converted to half-open
/// spans [start, end + 1) so the ratio equals the frame-set Jaccard index.
double iou(const Segment& a, const Segment& b);

/// True iff iou(a, b) >= threshold. Throws ValidationError unless
/// 0 < threshold <= 1.
bool segment_match(const Segment& a, const Segment& b, double threshold);

struct MatchCount {
  long matched_pairs = 0;
  long denom = 1;

  double rate() const { return static_cast<double>(matched_pairs) / static_cast<double>(denom); }
};

/// Counts every (pred, gt) pair that matches at `threshold`, normalized by
/// max(|pred|, |gt|). No one-to-one assignment is made, so with overlapping
/// predictions or a threshold below 0.5 the rate can exceed 1.
MatchCount csr_video(const std::vector<Segment>& pred, const std::vector<Segment>& gt,
                     double threshold);

enum class Aggregation { micro, macro };

std::string to_string(Aggregation aggregation);
Aggregation parse_aggregation(const std::string& text);

struct VideoPair {
  std::string video_id;
  std::vector<Segment> pred;
  std::vector<Segment> gt;
};

struct ThresholdCsr {
  double threshold = 0.0;
  double csr = 0.0;

  friend bool operator==(const ThresholdCsr&, const ThresholdCsr&) = default;
};

struct CsrReport {
  std::vector<ThresholdCsr> csr;
  std::optional<double> mji;
  std::optional<double> recognition_rate;
  long video_count = 0;
  Aggregation aggregation = Aggregation::micro;
  /// Thresholds whose corpus CSR came out above 1 (possible only for
  /// thresholds below 0.5 or overlapping inputs); reported, never clamped.
  std::vector<double> csr_above_one;

  std::optional<double> csr_at(double threshold) const;
};

/// The IoU sweep 0.5, 0.6, 0.7, 0.8, 0.9.
std::vector<double> default_thresholds();

/// Corpus CSR per threshold. Micro: sum of matches over sum of denominators.
/// Macro: unweighted mean of per-video rates. Summation order is fixed by
/// the order of `videos`. Errors name the offending video.
CsrReport csr_corpus(const std::vector<VideoPair>& videos, const std::vector<double>& thresholds,
                     Aggregation aggregation = Aggregation::micro);

/// Per-label frame-set Jaccard averaged over the labels present in either
/// list. Unlabeled segments are rejected. Returns 1 when both lists are
/// empty.
double mji_video(const std::vector<LabeledSegment>& pred, const std::vector<LabeledSegment>& gt,
                 int frame_count);

struct LabeledVideo {
  std::string video_id;
  std::vector<LabeledSegment> pred;
  std::vector<LabeledSegment> gt;
  int frame_count = 0;
};

/// Arithmetic mean of mji_video over the corpus.
double mji_corpus(const std::vector<LabeledVideo>& videos);

/// Fraction of positions where the labels agree.
double recognition_rate(const std::vector<int>& pred_labels, const std::vector<int>& gt_labels);

/// For each ground-truth segment, the label of the prediction with the
/// highest IoU (earliest on ties), or 0 when nothing overlaps. Feeds
/// recognition_rate for continuous streams.
std::vector<int> aligned_prediction_labels(const std::vector<LabeledSegment>& pred,
                                           const std::vector<LabeledSegment>& gt);

/// Stand-in for the isolated-gesture classifier: copies onto each prediction
/// the label of the reference segment it overlaps most (0 overlap keeps
/// `fallback_label`). Only meant for exercising MJI end to end.
std::vector<LabeledSegment> assign_labels(const std::vector<Segment>& pred,
                                          const std::vector<LabeledSegment>& reference,
                                          int fallback_label);

}  // namespace conseg
