#include "conseg/synth.hpp"

#include "conseg/error.hpp"
#include "conseg/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace conseg {

namespace {

// COCO-18 body layout: nose, neck, r-shoulder, r-elbow, r-wrist, l-shoulder,
// l-elbow, l-wrist, r-hip, r-knee, r-ankle, l-hip, l-knee, l-ankle, r-eye,
// l-eye, r-ear, l-ear.
constexpr std::array<std::array<double, 2>, kBodyKeypoints> kBody = {{
    {160, 48}, {160, 73}, {135, 76}, {128, 108}, {125, 138}, {185, 76},
    {192, 108}, {195, 138}, {145, 143}, {143, 183}, {142, 220}, {175, 143},
    {177, 183}, {178, 220}, {155, 43}, {165, 43}, {150, 46}, {170, 46},
}};

// Hand keypoint offset from the wrist: wrist, then four joints for each of
// five fingers, pointing down.
std::array<double, 2> hand_offset(std::size_t k, bool left) {
  if (k == 0) return {0.0, 0.0};
  const std::size_t finger = (k - 1) / 4;
  const std::size_t joint = (k - 1) % 4 + 1;
  const double spread = -6.0 + 3.0 * static_cast<double>(finger);
  return {left ? -spread : spread, 2.0 + 4.0 * static_cast<double>(joint)};
}

double quantize(double value, double step) { return std::round(value / step) * step; }

std::uint64_t video_seed(std::uint64_t seed, int index) {
  // splitmix64 of (seed, index)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int draw(std::mt19937_64& rng, IntRange range) {
  return std::uniform_int_distribution<int>(range.min, range.max)(rng);
}

// Raise envelope over a gesture of `length` frames: a short sine ramp at each
// end and a plateau of 1. The first and last gesture frames are already
// off the rest pose.
double envelope(int k, int length) {
  const int ramp = std::clamp(length / 8, 3, 8);
  const double quarter = std::numbers::pi / 2.0;
  if (k < ramp) return std::sin(quarter * (k + 1) / (ramp + 1));
  if (k >= length - ramp) return std::sin(quarter * (length - k) / (ramp + 1));
  return 1.0;
}

struct GestureStyle {
  int wave_cycles;
  double wave_amplitude;
  double wave_phase;
  int bob_cycles;
};

}  // namespace

void validate(const SynthConfig& config) {
  const auto fail = [](const std::string& what) { throw ValidationError("synth config: " + what); };
  const auto check_range = [&](IntRange r, const char* name) {
    if (r.min > r.max) fail(std::string(name) + " range is empty");
  };
  if (config.num_videos < 1) fail("num_videos must be positive");
  check_range(config.gestures_per_video, "gestures_per_video");
  check_range(config.gesture_length, "gesture_length");
  check_range(config.gap_length, "gap_length");
  if (config.gestures_per_video.min < 1 || config.gesture_length.min < 1 ||
      config.gap_length.min < 1) {
    fail("minimum video must hold at least one gesture and one gap");
  }
  if (!(config.noise_sigma >= 0.0) || !std::isfinite(config.noise_sigma)) {
    fail("noise_sigma must be non-negative");
  }
  if (!(config.motion_amplitude > 0.0) || !std::isfinite(config.motion_amplitude)) {
    fail("motion_amplitude must be positive");
  }
  if (!(config.dropout >= 0.0 && config.dropout <= 1.0)) fail("dropout must lie in [0, 1]");
}

KeypointFrame rest_pose() {
  KeypointFrame frame;
  for (std::size_t i = 0; i < kBodyKeypoints; ++i) {
    frame.keypoints[i] = {kBody[i][0], kBody[i][1], 1.0};
  }
  for (std::size_t k = 0; k < kHandKeypoints; ++k) {
    const auto r = hand_offset(k, false);
    const auto l = hand_offset(k, true);
    frame.keypoints[kRightHandOffset + k] = {kBody[4][0] + r[0], kBody[4][1] + 2.0 + r[1], 1.0};
    frame.keypoints[kLeftHandOffset + k] = {kBody[7][0] + l[0], kBody[7][1] + 2.0 + l[1], 1.0};
  }
  return frame;
}

SynthVideo generate_video(const SynthConfig& config, int index) {
  std::mt19937_64 rng(video_seed(config.seed, index));
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SynthVideo video;
  char id[64];
  std::snprintf(id, sizeof id, "%s_%04d", config.id_prefix.c_str(), index + 1);
  video.annotation.video_id = id;

  // Layout: gap, gesture, gap, ..., gesture, gap.
  const int gestures = draw(rng, config.gestures_per_video);
  std::vector<GestureStyle> styles;
  int frame = 0;
  frame += draw(rng, config.gap_length);
  for (int g = 0; g < gestures; ++g) {
    const int length = draw(rng, config.gesture_length);
    const int label = std::uniform_int_distribution<int>(1, kNumGestureClasses)(rng);
    video.annotation.segments.push_back({{frame + 1, frame + length}, label});
    styles.push_back({1 + label % 3, 5.0 + 15.0 * unit(rng), 2.0 * std::numbers::pi * unit(rng),
                      1 + label % 2});
    frame += length;
    frame += draw(rng, config.gap_length);
  }
  video.annotation.frame_count = frame;

  const double dx = -30.0 + 60.0 * unit(rng);
  const double dy = -10.0 + 20.0 * unit(rng);
  const KeypointFrame rest = rest_pose();
  const double amplitude = config.motion_amplitude;

  video.frames.resize(static_cast<std::size_t>(frame));
  std::size_t next_segment = 0;
  for (int t = 1; t <= frame; ++t) {
    while (next_segment < video.annotation.segments.size() &&
           video.annotation.segments[next_segment].segment.end < t) {
      ++next_segment;
    }
    double raise = 0.0;
    double wave = 0.0;
    if (next_segment < video.annotation.segments.size()) {
      const Segment& s = video.annotation.segments[next_segment].segment;
      if (s.contains(t)) {
        const GestureStyle& style = styles[next_segment];
        const int k = t - s.start;
        const double env = envelope(k, s.length());
        const double phase = 2.0 * std::numbers::pi * k / s.length();
        raise = amplitude * env *
                (1.0 + 0.125 * (1.0 - std::cos(style.bob_cycles * phase)));
        wave = style.wave_amplitude * env * std::sin(style.wave_cycles * phase + style.wave_phase);
      }
    }

    KeypointFrame& out = video.frames[static_cast<std::size_t>(t - 1)];
    for (std::size_t i = 0; i < kNumKeypoints; ++i) {
      double x = rest.keypoints[i].x + dx + config.noise_sigma * jitter(rng);
      double y = rest.keypoints[i].y + dy + config.noise_sigma * jitter(rng);
      if (i >= kLeftHandOffset) {
        const bool left = i < kRightHandOffset;
        y -= raise;
        x += left ? -wave : wave;
      }
      const double confidence = 0.4 + 0.6 * unit(rng);
      if (unit(rng) < config.dropout) {
        out.keypoints[i] = {0.0, 0.0, 0.0};
      } else {
        out.keypoints[i] = {quantize(x, 0.01), quantize(y, 0.01),
                            std::max(0.001, quantize(confidence, 0.001))};
      }
    }
  }
  return video;
}

std::vector<SynthVideo> generate_corpus(const SynthConfig& config) {
  validate(config);
  std::vector<SynthVideo> corpus(static_cast<std::size_t>(config.num_videos));
  parallel_for(corpus.size(), [&](std::size_t i) {
    corpus[i] = generate_video(config, static_cast<int>(i));
  });
  return corpus;
}

}  // namespace conseg
