#pragma once

#include "conseg/features.hpp"
#include "conseg/segment.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace conseg {

struct IntRange {
  int min = 0;
  int max = 0;

  friend bool operator==(const IntRange&, const IntRange&) = default;
};

/// Synthetic keypoint streams: a person at rest with hands down, raising the
/// hands to perform each gesture. Coordinates are pixels in a 320x240 frame.
struct SynthConfig {
  int num_videos = 200;
  IntRange gestures_per_video{2, 6};
  IntRange gesture_length{50, 100};
  IntRange gap_length{50, 80};
  double noise_sigma = 1.5;        // per-coordinate Gaussian jitter, pixels
  double motion_amplitude = 60.0;  // hand raise height, pixels
  double dropout = 0.02;           // per-keypoint miss probability
  std::uint64_t seed = 1;
  std::string id_prefix = "synth";

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

/// Throws ValidationError on empty ranges, a minimum layout shorter than one
/// gesture plus one gap, negative noise or a probability outside [0, 1].
void validate(const SynthConfig& config);

struct SynthVideo {
  std::vector<KeypointFrame> frames;
  VideoAnnotation annotation;
};

/// Videos alternate rest and gesture phases, starting and ending at rest.
/// Video i depends only on (seed, i).
std::vector<SynthVideo> generate_corpus(const SynthConfig& config);

SynthVideo generate_video(const SynthConfig& config, int index);

/// Hands-down pose with the person centered in the frame.
KeypointFrame rest_pose();

}  // namespace conseg
