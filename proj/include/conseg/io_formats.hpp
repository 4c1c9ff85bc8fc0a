#pragma once

// Text formats:
//
//   segments file   one video per line: `<video_id> <frame_count> <seg>*`,
//                   seg = `<start>,<end>[:<label>]`, frames 1-based inclusive.
//                   Blank lines and lines starting with '#' are ignored.
//   keypoints CSV   header `frame,k00x,k00y,k00c,...,k59x,k59y,k59c`, then one
//                   row per frame numbered 1, 2, ...; confidence 0 marks an
//                   undetected keypoint.
//   report JSON     `{"csr": {"0.5": x, ...}, "mji": y|null,
//                   "recognition_rate": z|null, "videos": n,
//                   "aggregation": "micro"|"macro", "csr_above_one": [...],
//                   "version": "..."}` on one line, values with 4 decimals.

#include "conseg/features.hpp"
#include "conseg/metrics.hpp"
#include "conseg/segment.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace conseg {

struct AnnotationFile {
  std::vector<VideoAnnotation> videos;

  const VideoAnnotation* find(std::string_view video_id) const;

  friend bool operator==(const AnnotationFile&, const AnnotationFile&) = default;
};

/// Throws ParseError with line and column on malformed fields, overlapping
/// or out-of-range segments, and duplicate video ids.
AnnotationFile parse_segments_file(std::string_view text);
/// Canonical form. Throws ValidationError on a video id that is empty,
/// holds whitespace or starts with '#'.
std::string write_segments_file(const AnnotationFile& file);

std::string keypoints_csv_header();
std::vector<KeypointFrame> parse_keypoints_csv(std::string_view text);
std::string write_keypoints_csv(const std::vector<KeypointFrame>& frames);

std::string write_report_json(const CsrReport& report);
CsrReport parse_report_json(std::string_view text);

/// `frame,v000,...,v119`; frame is the 1-based source frame of each vector.
std::string write_features_csv(const FeatureSequence& features);

/// Throws IoError when the file cannot be read or written.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace conseg
