#include "conseg/features.hpp"

#include "conseg/error.hpp"

#include <algorithm>

namespace conseg {

std::size_t KeypointFrame::detected_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(keypoints.begin(), keypoints.end(), [](const Keypoint& k) { return k.detected(); }));
}

FeatureVector featurize_frame(const KeypointFrame& frame) {
  double sum_x = 0.0;
  double sum_y = 0.0;
  std::size_t n = 0;
  for (const auto& k : frame.keypoints) {
    if (!k.detected()) continue;
    sum_x += k.x;
    sum_y += k.y;
    ++n;
  }
  if (n == 0) throw ValidationError("frame has no detected keypoints");
  const double cx = sum_x / static_cast<double>(n);
  const double cy = sum_y / static_cast<double>(n);

  FeatureVector v{};
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    const auto& k = frame.keypoints[i];
    if (!k.detected()) continue;
    v[2 * i] = k.x - cx;
    v[2 * i + 1] = k.y - cy;
  }
  return v;
}

GapPolicy parse_gap_policy(const std::string& text) {
  if (text == "hold") return GapPolicy::hold;
  if (text == "drop") return GapPolicy::drop;
  throw ValidationError("gap policy must be 'hold' or 'drop', got '" + text + "'");
}

FeatureSequence featurize_sequence(const std::vector<KeypointFrame>& frames, GapPolicy policy) {
  if (frames.empty()) throw ValidationError("keypoint sequence is empty");
  FeatureSequence out;
  out.vectors.reserve(frames.size());
  out.source_frames.reserve(frames.size());
  FeatureVector previous{};
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].detected_count() == 0) {
      if (policy == GapPolicy::drop) continue;
      out.vectors.push_back(previous);
    } else {
      previous = featurize_frame(frames[t]);
      out.vectors.push_back(previous);
    }
    out.source_frames.push_back(t);
  }
  if (out.vectors.empty()) throw ValidationError("no frame has a detected keypoint");
  return out;
}

std::vector<std::uint8_t> boundary_labels(const VideoAnnotation& annotation, int dilation,
                                          LabelMode mode) {
  if (dilation < 0) throw ValidationError("dilation must be non-negative");
  const int n = annotation.frame_count;
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(std::max(n, 0)), 0);
  const auto mark = [&](int from, int to) {
    for (int f = std::max(from, 1); f <= std::min(to, n); ++f) labels[f - 1] = 1;
  };
  for (const auto& s : annotation.segments) {
    if (mode == LabelMode::in_segment) {
      mark(s.segment.start, s.segment.end);
    } else {
      mark(s.segment.start - dilation, s.segment.start + dilation);
      mark(s.segment.end - dilation, s.segment.end + dilation);
    }
  }
  return labels;
}

}  // namespace conseg
