#include "conseg/error.hpp"
#include "conseg/metrics.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace conseg;

namespace {

std::vector<Segment> random_disjoint(std::mt19937_64& rng, int frames, int max_segments) {
  std::vector<Segment> out;
  int cursor = 1;
  std::uniform_int_distribution<int> count(0, max_segments);
  const int n = count(rng);
  for (int k = 0; k < n && cursor <= frames; ++k) {
    std::uniform_int_distribution<int> gap(0, 10);
    std::uniform_int_distribution<int> len(1, 30);
    const int start = cursor + gap(rng);
    const int end = start + len(rng) - 1;
    if (end > frames) break;
    out.push_back({start, end});
    cursor = end + 1;
  }
  return out;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("iou examples") {
    CHECK(iou({1, 10}, {1, 10}) == 1.0);
    CHECK(iou({1, 10}, {20, 30}) == 0.0);
    CHECK(iou({1, 45}, {1, 50}) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(iou({5, 5}, {5, 5}) == 1.0);
    CHECK(iou({1, 10}, {11, 20}) == 0.0);
  }

  TEST_CASE("iou against frame sets, symmetric and shift invariant") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> frame(1, 200);
    for (int k = 0; k < 2000; ++k) {
      int a0 = frame(rng), a1 = frame(rng), b0 = frame(rng), b1 = frame(rng);
      const Segment a{std::min(a0, a1), std::max(a0, a1)};
      const Segment b{std::min(b0, b1), std::max(b0, b1)};
      const double v = iou(a, b);
      CHECK(std::abs(v - oracle::frame_jaccard(a, b)) <= 1e-12);
      CHECK(v == iou(b, a));
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      CHECK(v == iou({a.start + 37, a.end + 37}, {b.start + 37, b.end + 37}));
    }
  }

  TEST_CASE("segment_match uses >= and rejects bad thresholds") {
    CHECK(segment_match({1, 45}, {1, 50}, 0.7));
    CHECK(segment_match({1, 45}, {1, 50}, 0.9));
    CHECK_FALSE(segment_match({1, 10}, {20, 30}, 0.5));
    CHECK_THROWS_AS(segment_match({1, 2}, {1, 2}, 0.0), ValidationError);
    CHECK_THROWS_AS(segment_match({1, 2}, {1, 2}, 1.5), ValidationError);
    CHECK(segment_match({1, 2}, {1, 2}, 1.0));
  }

  TEST_CASE("csr_video examples") {
    const std::vector<Segment> gt{{1, 50}, {60, 100}};
    auto c = csr_video(gt, gt, 0.7);
    CHECK(c.matched_pairs == 2);
    CHECK(c.denom == 2);
    CHECK(c.rate() == 1.0);

    c = csr_video({{1, 45}}, gt, 0.7);
    CHECK(c.matched_pairs == 1);
    CHECK(c.denom == 2);
    CHECK(c.rate() == 0.5);

    c = csr_video({}, {{1, 50}}, 0.3);
    CHECK(c.matched_pairs == 0);
    CHECK(c.denom == 1);

    CHECK_THROWS_AS(csr_video({{1, 2}}, {}, 0.5), ValidationError);
    CHECK_THROWS_AS(csr_video({{3, 2}}, {{1, 2}}, 0.5), ValidationError);
  }

  TEST_CASE("csr_video counts every matching pair without clamping") {
    // Overlapping predictions each match the same ground truth.
    const auto c = csr_video({{1, 10}, {1, 10}, {2, 10}}, {{1, 10}}, 0.5);
    CHECK(c.matched_pairs == 3);
    CHECK(c.denom == 3);
    CHECK(c.rate() == 1.0);
    const auto low = csr_video({{1, 10}, {1, 9}}, {{1, 10}, {1, 9}}, 0.3);
    CHECK(low.matched_pairs == 4);
    CHECK(low.rate() == 2.0);
  }

  TEST_CASE("csr can exceed one at r = 0.5 with disjoint lists") {
    // Each of two half-segments has IoU exactly 0.5 with the whole.
    const std::vector<Segment> pred{{1, 10}, {11, 15}, {16, 20}};
    const std::vector<Segment> gt{{1, 5}, {6, 10}, {11, 20}};
    CHECK(sorted_disjoint(pred));
    CHECK(sorted_disjoint(gt));
    const auto c = csr_video(pred, gt, 0.5);
    CHECK(c.matched_pairs == 4);
    CHECK(c.denom == 3);
    CHECK(csr_video(pred, gt, 0.51).matched_pairs == 0);

    const auto report = csr_corpus({{"v", pred, gt}}, {0.5, 0.6});
    REQUIRE(report.csr_above_one.size() == 1);
    CHECK(report.csr_above_one.front() == 0.5);
  }

  TEST_CASE("csr_corpus aggregation") {
    const std::vector<VideoPair> videos{
        {"a", {{1, 45}}, {{1, 50}, {60, 100}}},
        {"b", {{1, 50}, {60, 100}}, {{1, 50}, {60, 100}}},
    };
    const auto micro = csr_corpus(videos, {0.7}, Aggregation::micro);
    const auto macro = csr_corpus(videos, {0.7}, Aggregation::macro);
    CHECK(micro.csr.front().csr == 0.75);
    CHECK(macro.csr.front().csr == 0.75);
    CHECK(micro.video_count == 2);

    // Unequal denominators separate the modes: (1/1 + 0/3) vs 1/4.
    const std::vector<VideoPair> uneven{
        {"a", {{1, 10}}, {{1, 10}}},
        {"b", {}, {{1, 10}, {20, 30}, {40, 50}}},
    };
    CHECK(csr_corpus(uneven, {0.5}, Aggregation::micro).csr.front().csr == 0.25);
    CHECK(csr_corpus(uneven, {0.5}, Aggregation::macro).csr.front().csr == 0.5);
  }

  TEST_CASE("csr_corpus errors name the video") {
    const std::vector<VideoPair> videos{{"good", {{1, 2}}, {{1, 2}}}, {"bad", {{1, 2}}, {}}};
    try {
      csr_corpus(videos, default_thresholds());
      FAIL("expected an error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("'bad'") != std::string::npos);
    }
    CHECK_THROWS_AS(csr_corpus({}, default_thresholds()), ValidationError);
    CHECK_THROWS_AS(csr_corpus(videos, {}), ValidationError);
  }

  TEST_CASE("csr properties on random disjoint lists") {
    std::mt19937_64 rng(11);
    std::vector<VideoPair> videos;
    for (int v = 0; v < 200; ++v) {
      auto gt = random_disjoint(rng, 300, 6);
      if (gt.empty()) gt.push_back({1, 10});
      videos.push_back({"v" + std::to_string(v), random_disjoint(rng, 300, 6), gt});
    }
    const std::vector<double> thresholds{0.55, 0.6, 0.7, 0.8, 0.9, 1.0};
    for (const auto& v : videos) {
      long previous = -1;
      for (double r : thresholds) {
        const auto c = csr_video(v.pred, v.gt, r);
        const auto [hits, denom] = oracle::brute_csr(v.pred, v.gt, r);
        CHECK(c.matched_pairs == hits);
        CHECK(c.denom == denom);
        CHECK(c.matched_pairs <= static_cast<long>(std::min(v.pred.size(), v.gt.size())));
        if (previous >= 0) CHECK(c.matched_pairs <= previous);
        previous = c.matched_pairs;
      }
    }
    const auto report = csr_corpus(videos, thresholds);
    for (std::size_t j = 1; j < report.csr.size(); ++j) {
      CHECK(report.csr[j].csr <= report.csr[j - 1].csr);
    }
    CHECK(report.csr_above_one.empty());
  }

  TEST_CASE("aggregation names") {
    CHECK(parse_aggregation("micro") == Aggregation::micro);
    CHECK(parse_aggregation("macro") == Aggregation::macro);
    CHECK(to_string(Aggregation::macro) == "macro");
    CHECK_THROWS_AS(parse_aggregation("mean"), ValidationError);
    CHECK(default_thresholds() == std::vector<double>{0.5, 0.6, 0.7, 0.8, 0.9});
  }

  TEST_CASE("mji examples") {
    const std::vector<LabeledSegment> gt{{{1, 10}, 5}};
    CHECK(mji_video(gt, gt, 20) == 1.0);
    CHECK(mji_video({{{6, 15}, 5}}, gt, 20) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(mji_video({{{6, 15}, 5}}, gt, 20) ==
          doctest::Approx(oracle::brute_mji({{{6, 15}, 5}}, gt)).epsilon(1e-12));
    CHECK(mji_video({{{1, 10}, 7}}, gt, 20) == 0.0);
    CHECK(mji_video({}, {}, 20) == 1.0);
    CHECK(mji_video({}, gt, 20) == 0.0);
  }

  TEST_CASE("mji errors") {
    CHECK_THROWS_AS(mji_video({{{1, 25}, 5}}, {{{1, 10}, 5}}, 20), ValidationError);
    CHECK_THROWS_AS(mji_video({{{1, 5}, std::nullopt}}, {{{1, 10}, 5}}, 20), ValidationError);
    CHECK_THROWS_AS(mji_corpus({}), ValidationError);
  }

  TEST_CASE("mji against frame-set oracle") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> label(1, 4);
    for (int k = 0; k < 300; ++k) {
      std::vector<LabeledSegment> pred;
      std::vector<LabeledSegment> gt;
      for (const auto& s : random_disjoint(rng, 150, 5)) pred.push_back({s, label(rng)});
      for (const auto& s : random_disjoint(rng, 150, 5)) gt.push_back({s, label(rng)});
      const double v = mji_video(pred, gt, 150);
      CHECK(v == doctest::Approx(oracle::brute_mji(pred, gt)).epsilon(1e-12));
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      CHECK(mji_video(gt, gt, 150) == 1.0);
    }
  }

  TEST_CASE("mji_corpus mean") {
    const std::vector<LabeledSegment> gt{{{1, 10}, 5}};
    const std::vector<LabeledVideo> videos{{"a", {{{6, 15}, 5}}, gt, 20}, {"b", gt, gt, 20}};
    CHECK(mji_corpus(videos) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }

  TEST_CASE("recognition rate") {
    CHECK(recognition_rate({1, 2, 3}, {1, 2, 3}) == 1.0);
    CHECK(recognition_rate({1, 2, 3}, {4, 5, 6}) == 0.0);
    CHECK(recognition_rate({1, 2, 3, 4}, {1, 2, 9, 9}) == 0.5);
    CHECK_THROWS_AS(recognition_rate({1}, {1, 2}), ValidationError);
    CHECK_THROWS_AS(recognition_rate({}, {}), ValidationError);
  }

  TEST_CASE("aligned prediction labels and stub label assigner") {
    const std::vector<LabeledSegment> gt{{{1, 10}, 3}, {{20, 30}, 4}, {{50, 60}, 5}};
    const std::vector<LabeledSegment> pred{{{1, 8}, 3}, {{9, 12}, 8}, {{21, 30}, 9}};
    CHECK(aligned_prediction_labels(pred, gt) == std::vector<int>{3, 9, 0});

    const auto labeled = assign_labels({{2, 9}, {22, 29}, {70, 80}}, gt, 1);
    REQUIRE(labeled.size() == 3);
    CHECK(*labeled[0].label == 3);
    CHECK(*labeled[1].label == 4);
    CHECK(*labeled[2].label == 1);
  }
}
