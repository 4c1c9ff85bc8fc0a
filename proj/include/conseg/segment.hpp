#pragma once

#include <optional>
#include <string>
#include <vector>

namespace conseg {

/// Frame interval, 1-based and inclusive on both ends.
struct Segment {
  int start = 1;
  int end = 1;

  int length() const noexcept { return end - start + 1; }
  bool valid() const noexcept { return start >= 1 && start <= end; }
  bool contains(int frame) const noexcept { return frame >= start && frame <= end; }

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Gesture class ids run from 1 to kNumGestureClasses when a vocabulary is
/// declared.
inline constexpr int kNumGestureClasses = 249;

struct LabeledSegment {
  Segment segment;
  std::optional<int> label;

  friend bool operator==(const LabeledSegment&, const LabeledSegment&) = default;
};

struct VideoAnnotation {
  std::string video_id;
  int frame_count = 0;
  std::vector<LabeledSegment> segments;

  /// True when every segment carries a label.
  bool fully_labeled() const;
  std::vector<Segment> spans() const;

  friend bool operator==(const VideoAnnotation&, const VideoAnnotation&) = default;
};

/// Throws ValidationError unless the segment satisfies 1 <= start <= end.
void validate(const Segment& segment);

/// Throws ValidationError naming the video unless segments are valid, sorted
/// by start, pairwise non-overlapping and inside [1, frame_count]. When
/// `vocabulary` is set, labels must also fall in [1, kNumGestureClasses];
/// otherwise any positive label is accepted.
void validate(const VideoAnnotation& annotation, bool vocabulary = false);

/// True when the spans are sorted and pairwise disjoint.
bool sorted_disjoint(const std::vector<Segment>& segments);

}  // namespace conseg
