#pragma once

#include "conseg/segment.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace conseg {

inline constexpr std::size_t kBodyKeypoints = 18;
inline constexpr std::size_t kHandKeypoints = 21;
/// 18 body + 21 left hand + 21 right hand.
inline constexpr std::size_t kNumKeypoints = kBodyKeypoints + 2 * kHandKeypoints;
inline constexpr std::size_t kFeatureDim = 2 * kNumKeypoints;
inline constexpr std::size_t kLeftHandOffset = kBodyKeypoints;
inline constexpr std::size_t kRightHandOffset = kBodyKeypoints + kHandKeypoints;

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;

  bool detected() const noexcept { return confidence > 0.0; }

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct KeypointFrame {
  std::array<Keypoint, kNumKeypoints> keypoints{};

  std::size_t detected_count() const noexcept;

  friend bool operator==(const KeypointFrame&, const KeypointFrame&) = default;
};

/// (x'_1, y'_1, ..., x'_60, y'_60): keypoints relative to the centroid of
/// the detected keypoints.
using FeatureVector = std::array<double, kFeatureDim>;

/// Centers detected keypoints on their centroid; undetected keypoints emit
/// (0, 0). Throws ValidationError when no keypoint is detected.
FeatureVector featurize_frame(const KeypointFrame& frame);

enum class GapPolicy {
  hold,  ///< repeat the previous vector (zeros before the first valid frame)
  drop,  ///< remove the frame
};

GapPolicy parse_gap_policy(const std::string& text);

struct FeatureSequence {
  std::vector<FeatureVector> vectors;
  /// 0-based source frame index of each vector.
  std::vector<std::size_t> source_frames;
};

/// Featurizes every frame. Frames without detections follow `policy`.
/// Throws ValidationError on an empty input, or under `drop` when no frame
/// has a detection.
FeatureSequence featurize_sequence(const std::vector<KeypointFrame>& frames, GapPolicy policy);

enum class LabelMode {
  boundary,    ///< positives at segment start and end frames
  in_segment,  ///< positives on every frame inside a segment
};

/// Per-frame binary targets, index t holds frame t + 1. In boundary mode a
/// frame is positive when it lies within `dilation` frames of a segment's
/// start or end frame (clipped to the video).
std::vector<std::uint8_t> boundary_labels(const VideoAnnotation& annotation, int dilation = 1,
                                          LabelMode mode = LabelMode::boundary);

}  // namespace conseg
