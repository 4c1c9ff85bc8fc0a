#include "conseg/metrics.hpp"

#include "conseg/error.hpp"
#include "conseg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace conseg {

namespace {

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ValidationError("IoU threshold must lie in (0, 1], got " + std::to_string(threshold));
  }
}

long overlap_frames(const Segment& a, const Segment& b) {
  return std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start) + 1);
}

// Sorted, merged spans of one label.
using SpanSet = std::vector<Segment>;

SpanSet merged(SpanSet spans) {
  std::sort(spans.begin(), spans.end(),
            [](const Segment& x, const Segment& y) { return x.start < y.start; });
  SpanSet out;
  for (const auto& s : spans) {
    if (!out.empty() && s.start <= out.back().end + 1) {
      out.back().end = std::max(out.back().end, s.end);
    } else {
      out.push_back(s);
    }
  }
  return out;
}

long total_frames(const SpanSet& spans) {
  long n = 0;
  for (const auto& s : spans) n += s.length();
  return n;
}

long intersection_frames(const SpanSet& a, const SpanSet& b) {
  long n = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    n += overlap_frames(a[i], b[j]);
    if (a[i].end < b[j].end) {
      ++i;
    } else {
      ++j;
    }
  }
  return n;
}

}  // namespace

double iou(const Segment& a, const Segment& b) {
  const long a_start = a.start;
  const long a_stop = static_cast<long>(a.end) + 1;
  const long b_start = b.start;
  const long b_stop = static_cast<long>(b.end) + 1;
  const long inter = std::max(0L, std::min(a_stop, b_stop) - std::max(a_start, b_start));
  if (inter == 0) return 0.0;
  const long span = std::max(a_stop, b_stop) - std::min(a_start, b_start);
  return static_cast<double>(inter) / static_cast<double>(span);
}

bool segment_match(const Segment& a, const Segment& b, double threshold) {
  check_threshold(threshold);
  return iou(a, b) >= threshold;
}

MatchCount csr_video(const std::vector<Segment>& pred, const std::vector<Segment>& gt,
                     double threshold) {
  check_threshold(threshold);
  if (gt.empty()) throw ValidationError("ground truth has no segments");
  for (const auto& s : pred) validate(s);
  for (const auto& s : gt) validate(s);

  MatchCount count;
  for (const auto& p : pred) {
    for (const auto& g : gt) {
      if (iou(p, g) >= threshold) ++count.matched_pairs;
    }
  }
  count.denom = static_cast<long>(std::max(pred.size(), gt.size()));
  return count;
}

std::string to_string(Aggregation aggregation) {
  return aggregation == Aggregation::micro ? "micro" : "macro";
}

Aggregation parse_aggregation(const std::string& text) {
  if (text == "micro") return Aggregation::micro;
  if (text == "macro") return Aggregation::macro;
  throw ValidationError("aggregation must be 'micro' or 'macro', got '" + text + "'");
}

std::optional<double> CsrReport::csr_at(double threshold) const {
  for (const auto& entry : csr) {
    if (std::abs(entry.threshold - threshold) < 1e-12) return entry.csr;
  }
  return std::nullopt;
}

std::vector<double> default_thresholds() { return {0.5, 0.6, 0.7, 0.8, 0.9}; }

CsrReport csr_corpus(const std::vector<VideoPair>& videos, const std::vector<double>& thresholds,
                     Aggregation aggregation) {
  if (videos.empty()) throw ValidationError("corpus has no videos");
  if (thresholds.empty()) throw ValidationError("no IoU thresholds given");
  for (double r : thresholds) check_threshold(r);
  for (std::size_t j = 1; j < thresholds.size(); ++j) {
    if (std::find(thresholds.begin(), thresholds.begin() + j, thresholds[j]) !=
        thresholds.begin() + j) {
      throw ValidationError("duplicate IoU threshold " + std::to_string(thresholds[j]));
    }
  }

  // counts[v * k + j] holds video v at threshold j.
  const std::size_t k = thresholds.size();
  std::vector<MatchCount> counts(videos.size() * k);
  parallel_for(videos.size(), [&](std::size_t v) {
    const auto& video = videos[v];
    try {
      for (std::size_t j = 0; j < k; ++j) counts[v * k + j] = csr_video(video.pred, video.gt, thresholds[j]);
    } catch (const ValidationError& e) {
      throw ValidationError("video '" + video.video_id + "': " + e.what());
    }
  });

  CsrReport report;
  report.aggregation = aggregation;
  report.video_count = static_cast<long>(videos.size());
  for (std::size_t j = 0; j < k; ++j) {
    long matched = 0;
    long denom = 0;
    double rate_sum = 0.0;
    for (std::size_t v = 0; v < videos.size(); ++v) {
      const MatchCount& count = counts[v * k + j];
      matched += count.matched_pairs;
      denom += count.denom;
      rate_sum += count.rate();
    }
    const double value = aggregation == Aggregation::micro
                             ? static_cast<double>(matched) / static_cast<double>(denom)
                             : rate_sum / static_cast<double>(videos.size());
    report.csr.push_back({thresholds[j], value});
    if (value > 1.0) report.csr_above_one.push_back(thresholds[j]);
  }
  return report;
}

double mji_video(const std::vector<LabeledSegment>& pred, const std::vector<LabeledSegment>& gt,
                 int frame_count) {
  if (frame_count < 1) throw ValidationError("frame_count must be positive");
  std::map<int, SpanSet> gt_by_label;
  std::map<int, SpanSet> pred_by_label;
  const auto collect = [&](const std::vector<LabeledSegment>& list, std::map<int, SpanSet>& out,
                           const char* which) {
    for (const auto& s : list) {
      validate(s.segment);
      if (s.segment.end > frame_count) {
        throw ValidationError(std::string(which) + " segment " + std::to_string(s.segment.start) +
                              "," + std::to_string(s.segment.end) + " exceeds frame_count " +
                              std::to_string(frame_count));
      }
      if (!s.label) throw ValidationError(std::string(which) + " segment has no label");
      out[*s.label].push_back(s.segment);
    }
  };
  collect(gt, gt_by_label, "ground-truth");
  collect(pred, pred_by_label, "predicted");

  std::map<int, double> jaccard;
  for (auto& [label, spans] : gt_by_label) spans = merged(std::move(spans));
  for (auto& [label, spans] : pred_by_label) spans = merged(std::move(spans));
  for (const auto& [label, spans] : gt_by_label) jaccard[label] = 0.0;
  for (const auto& [label, spans] : pred_by_label) jaccard[label] = 0.0;
  if (jaccard.empty()) return 1.0;

  static const SpanSet kNone;
  double sum = 0.0;
  for (const auto& [label, unused] : jaccard) {
    const auto a = gt_by_label.find(label);
    const auto b = pred_by_label.find(label);
    const SpanSet& gt_spans = a == gt_by_label.end() ? kNone : a->second;
    const SpanSet& pred_spans = b == pred_by_label.end() ? kNone : b->second;
    const long inter = intersection_frames(gt_spans, pred_spans);
    const long uni = total_frames(gt_spans) + total_frames(pred_spans) - inter;
    sum += static_cast<double>(inter) / static_cast<double>(uni);
  }
  return sum / static_cast<double>(jaccard.size());
}

double mji_corpus(const std::vector<LabeledVideo>& videos) {
  if (videos.empty()) throw ValidationError("corpus has no videos");
  double sum = 0.0;
  for (const auto& video : videos) {
    try {
      sum += mji_video(video.pred, video.gt, video.frame_count);
    } catch (const ValidationError& e) {
      throw ValidationError("video '" + video.video_id + "': " + e.what());
    }
  }
  return sum / static_cast<double>(videos.size());
}

double recognition_rate(const std::vector<int>& pred_labels, const std::vector<int>& gt_labels) {
  if (pred_labels.size() != gt_labels.size()) {
    throw ValidationError("label lists differ in length (" + std::to_string(pred_labels.size()) +
                          " vs " + std::to_string(gt_labels.size()) + ")");
  }
  if (gt_labels.empty()) throw ValidationError("label lists are empty");
  long agree = 0;
  for (std::size_t i = 0; i < gt_labels.size(); ++i) {
    if (pred_labels[i] == gt_labels[i]) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(gt_labels.size());
}

std::vector<int> aligned_prediction_labels(const std::vector<LabeledSegment>& pred,
                                           const std::vector<LabeledSegment>& gt) {
  std::vector<int> out;
  out.reserve(gt.size());
  for (const auto& g : gt) {
    double best = 0.0;
    int label = 0;
    for (const auto& p : pred) {
      const double value = iou(p.segment, g.segment);
      if (value > best) {
        best = value;
        label = p.label.value_or(0);
      }
    }
    out.push_back(label);
  }
  return out;
}

std::vector<LabeledSegment> assign_labels(const std::vector<Segment>& pred,
                                          const std::vector<LabeledSegment>& reference,
                                          int fallback_label) {
  std::vector<LabeledSegment> out;
  out.reserve(pred.size());
  for (const auto& p : pred) {
    long best = 0;
    int label = fallback_label;
    for (const auto& r : reference) {
      const long overlap = overlap_frames(p, r.segment);
      if (overlap > best && r.label) {
        best = overlap;
        label = *r.label;
      }
    }
    out.push_back({p, label});
  }
  return out;
}

}  // namespace conseg
