#include "conseg/error.hpp"
#include "conseg/io_formats.hpp"
#include "generators.hpp"

#include <doctest.h>

#include <filesystem>

using namespace conseg;

namespace {

ParseError parse_error_of(std::string_view text) {
  try {
    parse_segments_file(text);
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("expected ParseError for: " << text);
  return ParseError(0, 0, "");
}

std::string csv_row(int frame, double confidence) {
  std::string row = std::to_string(frame);
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    row += ",1.5,2.5," + format_double(confidence);
  }
  return row + "\n";
}

}  // namespace

TEST_SUITE("io_formats") {
  TEST_CASE("segments grammar") {
    auto file = parse_segments_file("v001 120 1,48:17 49,104:82\n");
    REQUIRE(file.videos.size() == 1);
    const auto& v = file.videos[0];
    CHECK(v.video_id == "v001");
    CHECK(v.frame_count == 120);
    REQUIRE(v.segments.size() == 2);
    CHECK(v.segments[0] == LabeledSegment{{1, 48}, 17});
    CHECK(v.segments[1] == LabeledSegment{{49, 104}, 82});

    file = parse_segments_file("v001 120 1,48 49,104");
    CHECK_FALSE(file.videos[0].segments[0].label.has_value());
    CHECK_FALSE(file.videos[0].fully_labeled());

    file = parse_segments_file("# header\n\n  \nv1 10\r\nv2 20 3,3:1\r\n");
    REQUIRE(file.videos.size() == 2);
    CHECK(file.videos[0].segments.empty());
    CHECK(file.find("v2")->segments[0].segment == Segment{3, 3});
    CHECK(file.find("v3") == nullptr);
  }

  TEST_CASE("segments errors carry positions") {
    auto e = parse_error_of("v001 120 48,1:17");
    CHECK(e.line() == 1);
    CHECK(e.column() == 10);
    CHECK(std::string(e.what()).find("start > end") != std::string::npos);

    e = parse_error_of("v1 10 1,5\nv2 10 1,5 4,8\n");
    CHECK(e.line() == 2);
    CHECK(e.column() == 11);
    CHECK(std::string(e.what()).find("'v2'") != std::string::npos);

    e = parse_error_of("v1 10 1,11");
    CHECK(std::string(e.what()).find("exceeds frame count") != std::string::npos);

    e = parse_error_of("v1 10\nv1 12\n");
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);

    CHECK(parse_error_of("v1 x").column() == 4);
    CHECK(parse_error_of("v1 0").line() == 1);
    CHECK(parse_error_of("v1").line() == 1);
    CHECK(parse_error_of("v1 10 1-4").line() == 1);
    CHECK(parse_error_of("v1 10 1,4:0").line() == 1);
    CHECK(parse_error_of("v1 10 1,4:x").line() == 1);
    CHECK(parse_error_of("v1 10 0,4").line() == 1);
    CHECK(parse_error_of("v1 10 1,4:").line() == 1);
    CHECK(parse_error_of("v1 99999999999999 1,4").line() == 1);
    CHECK(std::string(parse_error_of("\n\nv1 10 5,2").what()).rfind("line 3, column 7", 0) == 0);
  }

  TEST_CASE("segments canonical writer") {
    const std::string line = "v001 120 1,48:17 49,104:82\n";
    CHECK(write_segments_file(parse_segments_file(line)) == line);
    CHECK(write_segments_file(parse_segments_file("  v001\t120   1,48:17\t49,104:82  \n")) ==
          line);
    CHECK(write_segments_file(parse_segments_file("v001 120")) == "v001 120\n");
    AnnotationFile bad;
    bad.videos.push_back({"has space", 10, {}});
    CHECK_THROWS_AS(write_segments_file(bad), ValidationError);
    bad.videos[0].video_id = "#x";
    CHECK_THROWS_AS(write_segments_file(bad), ValidationError);
  }

  TEST_CASE("segments round trip") {
    std::mt19937_64 rng(1);
    for (int k = 0; k < 200; ++k) {
      const auto file = gen::annotation_file(rng);
      const std::string text = write_segments_file(file);
      CHECK(parse_segments_file(text) == file);
      CHECK(write_segments_file(parse_segments_file(text)) == text);
    }
  }

  TEST_CASE("keypoint csv") {
    const std::string header = keypoints_csv_header();
    CHECK(header.rfind("frame,k00x,k00y,k00c,k01x", 0) == 0);
    CHECK(header.find("k59x,k59y,k59c") != std::string::npos);
    CHECK(std::count(header.begin(), header.end(), ',') == 180);

    const std::string text = header + "\n" + csv_row(1, 1.0) + csv_row(2, 1.0);
    const auto frames = parse_keypoints_csv(text);
    REQUIRE(frames.size() == 2);
    CHECK(frames[0].detected_count() == 60);
    CHECK(frames[1].keypoints[59] == Keypoint{1.5, 2.5, 1.0});

    std::string row = csv_row(1, 1.0);
    // k05c is the 18th cell of the row.
    std::size_t pos = 0;
    for (int i = 0; i < 18; ++i) pos = row.find(',', pos) + 1;
    row.replace(pos, 1, "0");
    const auto one = parse_keypoints_csv(header + "\n" + row);
    CHECK_FALSE(one[0].keypoints[5].detected());
    CHECK(one[0].detected_count() == 59);
  }

  TEST_CASE("keypoint csv errors") {
    const std::string header = keypoints_csv_header();
    std::string missing = header;
    missing.erase(missing.find(",k03y"), 5);
    try {
      parse_keypoints_csv(missing + "\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 1);
      CHECK(std::string(e.what()).find("k03") != std::string::npos);
    }

    const auto fails_at = [&](const std::string& body, std::size_t line) {
      try {
        parse_keypoints_csv(header + "\n" + body);
      } catch (const ParseError& e) {
        CHECK(e.line() == line);
        return;
      }
      FAIL("expected ParseError for row body");
    };
    fails_at(csv_row(2, 1.0), 2);
    fails_at(csv_row(1, 1.0) + csv_row(3, 1.0), 3);
    fails_at(csv_row(1, 1.5), 2);
    fails_at(csv_row(1, -0.1), 2);
    std::string short_row = csv_row(1, 1.0);
    short_row.erase(short_row.rfind(','));
    fails_at(short_row + "\n", 2);
    std::string word = csv_row(1, 1.0);
    word.replace(word.find("1.5"), 3, "abc");
    fails_at(word, 2);
    std::string nan = csv_row(1, 1.0);
    nan.replace(nan.find("1.5"), 3, "nan");
    fails_at(nan, 2);
    CHECK_THROWS_AS(parse_keypoints_csv(""), ParseError);
  }

  TEST_CASE("keypoint csv round trip") {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 100; ++k) {
      const auto frames = gen::keypoint_frames(rng);
      const std::string text = write_keypoints_csv(frames);
      CHECK(parse_keypoints_csv(text) == frames);
      CHECK(write_keypoints_csv(parse_keypoints_csv(text)) == text);
    }
  }

  TEST_CASE("report json") {
    CsrReport r;
    for (double t : default_thresholds()) r.csr.push_back({t, 1.0});
    r.video_count = 3;
    const std::string text = write_report_json(r);
    CHECK(text ==
          "{\"csr\": {\"0.5\": 1.0000, \"0.6\": 1.0000, \"0.7\": 1.0000, \"0.8\": 1.0000, "
          "\"0.9\": 1.0000}, \"mji\": null, \"recognition_rate\": null, \"videos\": 3, "
          "\"aggregation\": \"micro\", \"csr_above_one\": [], \"version\": \"conseg 0.1.0\"}\n");
    const auto back = parse_report_json(text);
    CHECK(back.csr == r.csr);
    CHECK_FALSE(back.mji.has_value());
    CHECK(back.video_count == 3);
    CHECK(r.csr_at(0.7) == 1.0);
    CHECK_FALSE(r.csr_at(0.75).has_value());

    r.mji = 0.123456;
    r.recognition_rate = 0.5;
    r.aggregation = Aggregation::macro;
    const auto again = parse_report_json(write_report_json(r));
    CHECK(*again.mji == 0.1235);
    CHECK(again.aggregation == Aggregation::macro);
  }

  TEST_CASE("report json round trip and errors") {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 200; ++k) {
      const auto r = gen::report(rng);
      const std::string text = write_report_json(r);
      const auto back = parse_report_json(text);
      CHECK(write_report_json(back) == text);
      REQUIRE(back.csr.size() == r.csr.size());
      for (std::size_t i = 0; i < r.csr.size(); ++i) {
        CHECK(back.csr[i].threshold == r.csr[i].threshold);
        CHECK(std::abs(back.csr[i].csr - r.csr[i].csr) <= 5e-5);
      }
      CHECK(back.csr_above_one == r.csr_above_one);
    }
    try {
      parse_report_json("{\"csr\": {\n\"0.5\": 1.0,,}}");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(e.column() > 0);
    }
    CHECK_THROWS_AS(parse_report_json("{\"csr\": {}}"), ParseError);
    CHECK_THROWS_AS(parse_report_json("[1]"), ParseError);
    CHECK_THROWS_AS(parse_report_json("{\"csr\": {\"2\": 1}, \"mji\": null, "
                                      "\"recognition_rate\": null, \"videos\": 1, "
                                      "\"aggregation\": \"micro\"}"),
                    ParseError);
    CHECK_THROWS_AS(parse_report_json("{\"csr\": {\"0.5\": 1}, \"mji\": null, "
                                      "\"recognition_rate\": null, \"videos\": 1, "
                                      "\"aggregation\": \"median\"}"),
                    ParseError);
  }

  TEST_CASE("fuzzed inputs are rejected with positions or parse to valid data") {
    std::mt19937_64 rng(4);
    for (int k = 0; k < 300; ++k) {
      std::string text = write_segments_file(gen::annotation_file(rng, 3));
      for (int m = 0; m < 1 + k % 3; ++m) text = gen::mutate(rng, text);
      try {
        const auto file = parse_segments_file(text);
        for (const auto& v : file.videos) CHECK_NOTHROW(validate(v));
      } catch (const ParseError& e) {
        CHECK(e.line() >= 1);
      }
    }
    for (int k = 0; k < 100; ++k) {
      std::string text = write_keypoints_csv(gen::keypoint_frames(rng, 2));
      text = gen::mutate(rng, text);
      try {
        for (const auto& frame : parse_keypoints_csv(text)) {
          for (const auto& p : frame.keypoints) {
            CHECK(std::isfinite(p.x));
            CHECK(p.confidence >= 0.0);
            CHECK(p.confidence <= 1.0);
          }
        }
      } catch (const ParseError& e) {
        CHECK(e.line() >= 1);
      }
    }
    for (int k = 0; k < 200; ++k) {
      const std::string text = gen::mutate(rng, write_report_json(gen::report(rng)));
      try {
        parse_report_json(text);
      } catch (const ParseError& e) {
        CHECK(e.line() >= 1);
      }
    }
  }

  TEST_CASE("features csv") {
    FeatureSequence seq;
    seq.vectors.resize(2);
    seq.vectors[1][119] = -0.25;
    seq.source_frames = {0, 2};
    const std::string text = write_features_csv(seq);
    CHECK(text.rfind("frame,v000,v001", 0) == 0);
    CHECK(text.find("v119\n1,0,") != std::string::npos);
    CHECK(text.find("\n3,0,") != std::string::npos);
    CHECK(text.substr(text.size() - 7) == ",-0.25\n");
  }

  TEST_CASE("file helpers") {
    const auto dir = std::filesystem::temp_directory_path() / "conseg_io_test";
    std::filesystem::create_directories(dir);
    write_text_file(dir / "a.txt", "hello\n");
    CHECK(read_text_file(dir / "a.txt") == "hello\n");
    CHECK_THROWS_AS(read_text_file(dir / "missing.txt"), IoError);
    CHECK_THROWS_AS(write_text_file(dir / "no" / "such" / "dir.txt", "x"), IoError);
    std::filesystem::remove_all(dir);
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5e-9) == "-2.5e-09");
  }
}
