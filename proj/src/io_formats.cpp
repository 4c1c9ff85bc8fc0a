#include "conseg/io_formats.hpp"

#include "conseg/error.hpp"
#include "conseg/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace conseg {

namespace {

struct Line {
  std::size_t number;
  std::string_view text;
};

// Splits on '\n', dropping a trailing '\r'. A final newline does not start
// a new line.
std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t number = 1;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back({number++, line});
    pos = end + 1;
  }
  return lines;
}

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t") == std::string_view::npos;
}

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> split_whitespace(std::string_view line) {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    pos = line.find_first_not_of(" \t", pos);
    if (pos == std::string_view::npos) break;
    std::size_t end = line.find_first_of(" \t", pos);
    if (end == std::string_view::npos) end = line.size();
    tokens.push_back({line.substr(pos, end - pos), pos + 1});
    pos = end;
  }
  return tokens;
}

int parse_int(std::string_view text, std::size_t line, std::size_t column, const char* what) {
  int value = 0;
  if (text.empty()) throw ParseError(line, column, std::string("missing ") + what);
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec == std::errc::result_out_of_range) {
    throw ParseError(line, column, std::string(what) + " out of range: '" + std::string(text) + "'");
  }
  if (ec != std::errc() || ptr != last) {
    throw ParseError(line, column + static_cast<std::size_t>(ptr - first),
                     std::string("invalid ") + what + ": '" + std::string(text) + "'");
  }
  return value;
}

double parse_real(std::string_view text, std::size_t line, std::size_t column, const char* what) {
  if (text.empty()) throw ParseError(line, column, std::string("empty ") + what);
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ParseError(line, column, std::string("invalid ") + what + ": '" + std::string(text) + "'");
  }
  return value;
}

LabeledSegment parse_segment_token(const Token& token, std::size_t line) {
  const std::string_view t = token.text;
  const std::size_t comma = t.find(',');
  if (comma == std::string_view::npos) {
    throw ParseError(line, token.column, "segment '" + std::string(t) + "' lacks ',' (want start,end[:label])");
  }
  const std::size_t colon = t.find(':', comma);
  const std::string_view start_text = t.substr(0, comma);
  const std::string_view end_text =
      t.substr(comma + 1, colon == std::string_view::npos ? std::string_view::npos : colon - comma - 1);

  LabeledSegment seg;
  seg.segment.start = parse_int(start_text, line, token.column, "segment start");
  seg.segment.end = parse_int(end_text, line, token.column + comma + 1, "segment end");
  if (colon != std::string_view::npos) {
    const std::size_t col = token.column + colon + 1;
    const int label = parse_int(t.substr(colon + 1), line, col, "label");
    if (label < 1) throw ParseError(line, col, "label must be positive");
    seg.label = label;
  }
  if (seg.segment.start < 1) throw ParseError(line, token.column, "segment start < 1");
  if (seg.segment.start > seg.segment.end) {
    throw ParseError(line, token.column,
                     "start > end in segment '" + std::string(t) + "'");
  }
  return seg;
}

void append_double(std::string& out, double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  out.append(buf, ptr);
}

std::string fixed4(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  return buf;
}

std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

// Byte offset to 1-based (line, column).
std::pair<std::size_t, std::size_t> position_of(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

const VideoAnnotation* AnnotationFile::find(std::string_view video_id) const {
  for (const auto& v : videos) {
    if (v.video_id == video_id) return &v;
  }
  return nullptr;
}

AnnotationFile parse_segments_file(std::string_view text) {
  AnnotationFile file;
  std::set<std::string, std::less<>> seen;
  for (const Line& line : split_lines(text)) {
    if (is_blank(line.text)) continue;
    const auto tokens = split_whitespace(line.text);
    if (tokens.front().text.front() == '#') continue;
    if (tokens.size() < 2) {
      throw ParseError(line.number, tokens.front().column + tokens.front().text.size(),
                       "missing frame count after video id");
    }
    VideoAnnotation video;
    video.video_id = std::string(tokens[0].text);
    if (seen.count(video.video_id) != 0) {
      throw ParseError(line.number, tokens[0].column, "duplicate video id '" + video.video_id + "'");
    }
    video.frame_count = parse_int(tokens[1].text, line.number, tokens[1].column, "frame count");
    if (video.frame_count < 1) {
      throw ParseError(line.number, tokens[1].column, "frame count must be positive");
    }
    int previous_end = 0;
    for (std::size_t k = 2; k < tokens.size(); ++k) {
      LabeledSegment seg = parse_segment_token(tokens[k], line.number);
      if (seg.segment.end > video.frame_count) {
        throw ParseError(line.number, tokens[k].column,
                         "segment '" + std::string(tokens[k].text) + "' exceeds frame count " +
                             std::to_string(video.frame_count) + " of video '" + video.video_id + "'");
      }
      if (seg.segment.start <= previous_end) {
        throw ParseError(line.number, tokens[k].column,
                         "segment '" + std::string(tokens[k].text) +
                             "' overlaps or precedes the previous segment of video '" +
                             video.video_id + "'");
      }
      previous_end = seg.segment.end;
      video.segments.push_back(seg);
    }
    seen.insert(video.video_id);
    file.videos.push_back(std::move(video));
  }
  return file;
}

std::string write_segments_file(const AnnotationFile& file) {
  std::string out;
  for (const auto& video : file.videos) {
    const bool bad_id = video.video_id.empty() || video.video_id.front() == '#' ||
                        std::any_of(video.video_id.begin(), video.video_id.end(), [](char c) {
                          return std::isspace(static_cast<unsigned char>(c)) != 0;
                        });
    if (bad_id) throw ValidationError("video id '" + video.video_id + "' cannot be written");
    out += video.video_id;
    out += ' ';
    out += std::to_string(video.frame_count);
    for (const auto& s : video.segments) {
      out += ' ';
      out += std::to_string(s.segment.start);
      out += ',';
      out += std::to_string(s.segment.end);
      if (s.label) {
        out += ':';
        out += std::to_string(*s.label);
      }
    }
    out += '\n';
  }
  return out;
}

std::string keypoints_csv_header() {
  std::string header = "frame";
  char buf[16];
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    for (const char axis : {'x', 'y', 'c'}) {
      std::snprintf(buf, sizeof buf, ",k%02zu%c", i, axis);
      header += buf;
    }
  }
  return header;
}

std::vector<KeypointFrame> parse_keypoints_csv(std::string_view text) {
  static const std::string header = keypoints_csv_header();
  static const std::size_t columns = 1 + 3 * kNumKeypoints;
  const auto lines = split_lines(text);
  if (lines.empty() || is_blank(lines.front().text)) {
    throw ParseError(1, 0, "missing keypoint CSV header");
  }

  const auto split_cells = [](std::string_view row) {
    std::vector<Token> cells;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = row.find(',', pos);
      const std::size_t end = comma == std::string_view::npos ? row.size() : comma;
      cells.push_back({row.substr(pos, end - pos), pos + 1});
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    return cells;
  };

  const Line& head = lines.front();
  if (head.text != header) {
    const auto cells = split_cells(head.text);
    const auto expected = split_cells(header);
    for (std::size_t i = 0; i < std::min(cells.size(), expected.size()); ++i) {
      if (cells[i].text != expected[i].text) {
        throw ParseError(1, cells[i].column,
                         "header mismatch: column " + std::to_string(i + 1) + " is '" +
                             std::string(cells[i].text) + "', expected '" +
                             std::string(expected[i].text) + "'");
      }
    }
    throw ParseError(1, 0,
                     "header mismatch: " + std::to_string(cells.size()) + " columns, expected " +
                         std::to_string(columns));
  }

  std::vector<KeypointFrame> frames;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const Line& line = lines[li];
    if (is_blank(line.text)) continue;
    const auto cells = split_cells(line.text);
    if (cells.size() != columns) {
      throw ParseError(line.number, 0,
                       "row has " + std::to_string(cells.size()) + " columns, expected " +
                           std::to_string(columns));
    }
    const int frame = parse_int(cells[0].text, line.number, cells[0].column, "frame index");
    const int expected_frame = static_cast<int>(frames.size()) + 1;
    if (frame != expected_frame) {
      throw ParseError(line.number, cells[0].column,
                       "frame index " + std::to_string(frame) + " out of sequence, expected " +
                           std::to_string(expected_frame));
    }
    KeypointFrame kf;
    for (std::size_t i = 0; i < kNumKeypoints; ++i) {
      const Token& x = cells[1 + 3 * i];
      const Token& y = cells[2 + 3 * i];
      const Token& c = cells[3 + 3 * i];
      Keypoint& k = kf.keypoints[i];
      k.x = parse_real(x.text, line.number, x.column, "x coordinate");
      k.y = parse_real(y.text, line.number, y.column, "y coordinate");
      k.confidence = parse_real(c.text, line.number, c.column, "confidence");
      if (k.confidence < 0.0 || k.confidence > 1.0) {
        throw ParseError(line.number, c.column, "confidence outside [0, 1]");
      }
    }
    frames.push_back(kf);
  }
  return frames;
}

std::string write_keypoints_csv(const std::vector<KeypointFrame>& frames) {
  std::string out = keypoints_csv_header();
  out += '\n';
  for (std::size_t t = 0; t < frames.size(); ++t) {
    out += std::to_string(t + 1);
    for (const auto& k : frames[t].keypoints) {
      out += ',';
      append_double(out, k.x);
      out += ',';
      append_double(out, k.y);
      out += ',';
      append_double(out, k.confidence);
    }
    out += '\n';
  }
  return out;
}

std::string write_report_json(const CsrReport& report) {
  std::string out = "{\"csr\": {";
  for (std::size_t i = 0; i < report.csr.size(); ++i) {
    if (i > 0) out += ", ";
    out += '"' + format_double(report.csr[i].threshold) + "\": " + fixed4(report.csr[i].csr);
  }
  out += "}, \"mji\": ";
  out += report.mji ? fixed4(*report.mji) : "null";
  out += ", \"recognition_rate\": ";
  out += report.recognition_rate ? fixed4(*report.recognition_rate) : "null";
  out += ", \"videos\": " + std::to_string(report.video_count);
  out += ", \"aggregation\": " + json_string(to_string(report.aggregation));
  out += ", \"csr_above_one\": [";
  for (std::size_t i = 0; i < report.csr_above_one.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_double(report.csr_above_one[i]);
  }
  out += "], \"version\": " + json_string(std::string(kToolName) + " " + kToolVersion);
  out += "}\n";
  return out;
}

CsrReport parse_report_json(std::string_view text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, column] = position_of(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(line, column, "invalid report JSON");
  }
  const auto fail = [](const std::string& what) { throw ParseError(1, 0, "report: " + what); };
  if (!doc.is_object()) fail("top level is not an object");
  for (const char* key : {"csr", "mji", "recognition_rate", "videos", "aggregation"}) {
    if (!doc.contains(key)) fail(std::string("missing key '") + key + "'");
  }

  CsrReport report;
  if (!doc["csr"].is_object()) fail("'csr' is not an object");
  for (const auto& [key, value] : doc["csr"].items()) {
    if (!value.is_number()) fail("csr value for '" + key + "' is not a number");
    double threshold = 0.0;
    const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), threshold);
    if (ec != std::errc() || ptr != key.data() + key.size() || !(threshold > 0.0 && threshold <= 1.0)) {
      fail("invalid threshold key '" + key + "'");
    }
    report.csr.push_back({threshold, value.get<double>()});
  }
  for (const char* key : {"mji", "recognition_rate"}) {
    const auto& v = doc[key];
    if (v.is_null()) continue;
    if (!v.is_number()) fail(std::string("'") + key + "' is not a number");
    (std::string(key) == "mji" ? report.mji : report.recognition_rate) = v.get<double>();
  }
  if (!doc["videos"].is_number_integer() || doc["videos"].get<long>() < 0) {
    fail("'videos' is not a non-negative integer");
  }
  report.video_count = doc["videos"].get<long>();
  if (!doc["aggregation"].is_string()) fail("'aggregation' is not a string");
  try {
    report.aggregation = parse_aggregation(doc["aggregation"].get<std::string>());
  } catch (const ValidationError& e) {
    fail(e.what());
  }
  if (doc.contains("csr_above_one")) {
    const auto& flagged = doc["csr_above_one"];
    if (!flagged.is_array()) fail("'csr_above_one' is not an array");
    for (const auto& v : flagged) {
      if (!v.is_number()) fail("'csr_above_one' holds a non-number");
      report.csr_above_one.push_back(v.get<double>());
    }
  }
  return report;
}

std::string write_features_csv(const FeatureSequence& features) {
  std::string out = "frame";
  char buf[16];
  for (std::size_t i = 0; i < kFeatureDim; ++i) {
    std::snprintf(buf, sizeof buf, ",v%03zu", i);
    out += buf;
  }
  out += '\n';
  for (std::size_t t = 0; t < features.vectors.size(); ++t) {
    out += std::to_string(features.source_frames[t] + 1);
    for (double v : features.vectors[t]) {
      out += ',';
      append_double(out, v);
    }
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

std::string format_double(double value) {
  std::string out;
  append_double(out, value);
  return out;
}

}  // namespace conseg
