#include "conseg/segment.hpp"

#include "conseg/error.hpp"

#include <algorithm>

namespace conseg {

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& message)
    : ValidationError("line " + std::to_string(line) +
                      (column > 0 ? ", column " + std::to_string(column) : std::string()) + ": " +
                      message),
      line_(line),
      column_(column),
      message_(message) {}

bool VideoAnnotation::fully_labeled() const {
  return std::all_of(segments.begin(), segments.end(),
                     [](const LabeledSegment& s) { return s.label.has_value(); });
}

std::vector<Segment> VideoAnnotation::spans() const {
  std::vector<Segment> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(s.segment);
  return out;
}

void validate(const Segment& segment) {
  if (segment.start < 1) {
    throw ValidationError("segment start " + std::to_string(segment.start) + " < 1");
  }
  if (segment.start > segment.end) {
    throw ValidationError("start > end (" + std::to_string(segment.start) + " > " +
                          std::to_string(segment.end) + ")");
  }
}

void validate(const VideoAnnotation& annotation, bool vocabulary) {
  const auto fail = [&](const std::string& what) {
    throw ValidationError("video '" + annotation.video_id + "': " + what);
  };
  if (annotation.frame_count < 1) fail("frame_count must be positive");
  int previous_end = 0;
  for (const auto& labeled : annotation.segments) {
    const Segment& s = labeled.segment;
    if (s.start > s.end) {
      fail("start > end in segment " + std::to_string(s.start) + "," + std::to_string(s.end));
    }
    if (s.start < 1 || s.end > annotation.frame_count) {
      fail("segment " + std::to_string(s.start) + "," + std::to_string(s.end) +
           " outside [1, " + std::to_string(annotation.frame_count) + "]");
    }
    if (s.start <= previous_end) {
      fail("segment " + std::to_string(s.start) + "," + std::to_string(s.end) +
           " overlaps or precedes the previous segment");
    }
    if (labeled.label) {
      if (*labeled.label < 1) fail("label must be positive");
      if (vocabulary && *labeled.label > kNumGestureClasses) {
        fail("label " + std::to_string(*labeled.label) + " outside [1, " +
             std::to_string(kNumGestureClasses) + "]");
      }
    }
    previous_end = s.end;
  }
}

bool sorted_disjoint(const std::vector<Segment>& segments) {
  for (std::size_t i = 1; i < segments.size(); ++i) {
    if (segments[i].start <= segments[i - 1].end) return false;
  }
  return true;
}

}  // namespace conseg
