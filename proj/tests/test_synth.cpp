#include "conseg/error.hpp"
#include "conseg/synth.hpp"

#include <doctest.h>

using namespace conseg;

namespace {

double mean_hand_y(const KeypointFrame& frame, std::size_t& count) {
  double sum = 0.0;
  count = 0;
  for (std::size_t i = kLeftHandOffset; i < kNumKeypoints; ++i) {
    if (frame.keypoints[i].detected()) {
      sum += frame.keypoints[i].y;
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("same seed gives identical corpora") {
    SynthConfig config;
    config.num_videos = 3;
    config.seed = 7;
    const auto a = generate_corpus(config);
    const auto b = generate_corpus(config);
    REQUIRE(a.size() == 3);
    for (std::size_t v = 0; v < a.size(); ++v) {
      CHECK(a[v].annotation == b[v].annotation);
      CHECK(a[v].frames == b[v].frames);
    }
    config.seed = 8;
    CHECK(generate_corpus(config)[0].frames != a[0].frames);
  }

  TEST_CASE("videos depend only on seed and index") {
    SynthConfig config;
    config.num_videos = 4;
    const auto corpus = generate_corpus(config);
    const auto third = generate_video(config, 2);
    CHECK(third.annotation == corpus[2].annotation);
    CHECK(third.frames == corpus[2].frames);
    CHECK(corpus[0].annotation.video_id == "synth_0001");
  }

  TEST_CASE("fixed gesture count and valid annotations") {
    SynthConfig config;
    config.num_videos = 20;
    config.gestures_per_video = {2, 2};
    for (const auto& video : generate_corpus(config)) {
      CHECK(video.annotation.segments.size() == 2);
      CHECK_NOTHROW(validate(video.annotation, true));
      CHECK(video.frames.size() == static_cast<std::size_t>(video.annotation.frame_count));
      CHECK(video.annotation.fully_labeled());
      CHECK(video.annotation.segments.front().segment.start > 1);
      CHECK(video.annotation.segments.back().segment.end < video.annotation.frame_count);
    }
  }

  TEST_CASE("dropout") {
    SynthConfig config;
    config.num_videos = 3;
    config.dropout = 0.0;
    for (const auto& video : generate_corpus(config)) {
      for (const auto& frame : video.frames) CHECK(frame.detected_count() == kNumKeypoints);
    }
    config.dropout = 0.25;
    std::size_t missing = 0;
    std::size_t total = 0;
    for (const auto& video : generate_corpus(config)) {
      for (const auto& frame : video.frames) {
        missing += kNumKeypoints - frame.detected_count();
        total += kNumKeypoints;
      }
    }
    const double rate = static_cast<double>(missing) / static_cast<double>(total);
    CHECK(rate > 0.23);
    CHECK(rate < 0.27);
  }

  TEST_CASE("default corpus boundary ratio lies between 1:80 and 1:20") {
    const auto corpus = generate_corpus(SynthConfig{});
    CHECK(corpus.size() == 200);
    std::size_t pos = 0;
    std::size_t neg = 0;
    for (const auto& video : corpus) {
      for (auto y : boundary_labels(video.annotation, 1)) (y ? pos : neg) += 1;
    }
    const double ratio = static_cast<double>(neg) / static_cast<double>(pos);
    INFO("1:" << ratio);
    CHECK(ratio >= 20.0);
    CHECK(ratio <= 80.0);
  }

  TEST_CASE("hand displacement during gestures exceeds amplitude minus 3 sigma") {
    SynthConfig config;
    config.num_videos = 30;
    for (double amplitude : {30.0, 60.0}) {
      config.motion_amplitude = amplitude;
      for (const auto& video : generate_corpus(config)) {
        double rest_sum = 0.0;
        double gesture_sum = 0.0;
        std::size_t rest_n = 0;
        std::size_t gesture_n = 0;
        for (int t = 1; t <= video.annotation.frame_count; ++t) {
          std::size_t count = 0;
          const double y = mean_hand_y(video.frames[t - 1], count);
          if (count == 0) continue;
          bool inside = false;
          for (const auto& s : video.annotation.segments) inside = inside || s.segment.contains(t);
          if (inside) {
            gesture_sum += y;
            ++gesture_n;
          } else {
            rest_sum += y;
            ++rest_n;
          }
        }
        const double lift = rest_sum / rest_n - gesture_sum / gesture_n;
        INFO(video.annotation.video_id << " lift " << lift);
        CHECK(lift >= amplitude - 3.0 * config.noise_sigma);
      }
    }
  }

  TEST_CASE("coordinates stay in a 320x240 frame") {
    SynthConfig config;
    config.num_videos = 10;
    for (const auto& video : generate_corpus(config)) {
      for (const auto& frame : video.frames) {
        for (const auto& k : frame.keypoints) {
          if (!k.detected()) continue;
          CHECK(k.x >= 0.0);
          CHECK(k.x <= 320.0);
          CHECK(k.y >= 0.0);
          CHECK(k.y <= 240.0);
          CHECK(k.confidence <= 1.0);
        }
      }
    }
  }

  TEST_CASE("config validation") {
    SynthConfig config;
    config.gap_length = {0, 10};
    CHECK_THROWS_AS(validate(config), ValidationError);
    config = {};
    config.gesture_length = {10, 5};
    CHECK_THROWS_AS(validate(config), ValidationError);
    config = {};
    config.gestures_per_video = {0, 0};
    CHECK_THROWS_AS(validate(config), ValidationError);
    config = {};
    config.dropout = 1.5;
    CHECK_THROWS_AS(validate(config), ValidationError);
    config = {};
    config.noise_sigma = -1.0;
    CHECK_THROWS_AS(validate(config), ValidationError);
    config = {};
    config.num_videos = 0;
    CHECK_THROWS_AS(generate_corpus(config), ValidationError);
  }
}
