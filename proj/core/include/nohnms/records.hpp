#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "nohnms/crowd_oracle.hpp"
#include "nohnms/suppression.hpp"

// Line-delimited record formats. Every record is one JSON object on one line;
// boxes are [x, y, w, h] with (x, y) the top-left corner.
//
//   scene:      {"image_id": "...", "width": W, "height": H,
//                "gt": [[x,y,w,h], ...], "ignore": [[x,y,w,h], ...]}
//   detections: {"image_id": "...", "detections": [
//                  {"bbox": [x,y,w,h], "score": s, "density": d, "mu": [dx,dy,dw,dh]}, ...]}
//
// "density" and "mu" are optional; "mu" is only legal next to "density".
// Numbers are written as the shortest decimal that round-trips.

namespace nohnms {

struct DetectionRecord {
  std::string image_id;
  /// source_index of each detection is its position in this list.
  std::vector<Detection> detections;
};

/// Shortest round-trip decimal form of a finite double.
std::string format_number(double value);

std::string format_scene_line(const GroundTruthScene& scene);
std::string format_detection_line(const DetectionRecord& record);

/// Both parsers throw ContractError naming the line number and the field.
GroundTruthScene parse_scene_line(std::string_view line, std::size_t line_number);
DetectionRecord parse_detection_line(std::string_view line, std::size_t line_number);

/// Streams non-empty lines from a file, tracking 1-based line numbers.
class LineReader {
 public:
  /// Throws IoError if the file cannot be opened.
  explicit LineReader(const std::filesystem::path& path);

  /// False at end of file. Blank lines are skipped.
  bool next(std::string& line);
  std::size_t line_number() const noexcept { return line_number_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_number_ = 0;
};

/// Appends LF-terminated lines; throws IoError on failure.
class LineWriter {
 public:
  explicit LineWriter(const std::filesystem::path& path);
  void write(std::string_view line);
  /// Flushes and checks the stream state.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::vector<GroundTruthScene> read_scene_file(const std::filesystem::path& path);
std::vector<DetectionRecord> read_detection_file(const std::filesystem::path& path);

}  // namespace nohnms
