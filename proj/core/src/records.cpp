#include "nohnms/records.hpp"

#include <charconv>
#include <cmath>
#include <nlohmann/json.hpp>
#include <system_error>

#include "nohnms/errors.hpp"

namespace nohnms {

using nlohmann::json;

std::string format_number(double value) {
  if (!std::isfinite(value)) throw ContractError("cannot serialize a non-finite number");
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw ContractError("number formatting failed");
  return std::string(buf, end);
}

namespace {

void append_box(std::string& out, const BBox& b) {
  out += '[';
  out += format_number(b.x());
  out += ',';
  out += format_number(b.y());
  out += ',';
  out += format_number(b.w());
  out += ',';
  out += format_number(b.h());
  out += ']';
}

void append_boxes(std::string& out, const std::vector<BBox>& boxes) {
  out += '[';
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (i) out += ',';
    append_box(out, boxes[i]);
  }
  out += ']';
}

void append_string(std::string& out, const std::string& s) { out += json(s).dump(); }

[[noreturn]] void fail(std::size_t line, std::string_view field, std::string_view what) {
  std::string msg = "line " + std::to_string(line);
  if (!field.empty()) {
    msg += ": field '";
    msg += field;
    msg += '\'';
  }
  msg += ": ";
  msg += what;
  throw ContractError(msg);
}

double number_at(const json& j, std::size_t line, std::string_view field) {
  if (!j.is_number()) fail(line, field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(line, field, "expected a finite number");
  return v;
}

std::array<double, 4> quad_at(const json& j, std::size_t line, std::string_view field) {
  if (!j.is_array() || j.size() != 4) fail(line, field, "expected an array of 4 numbers");
  std::array<double, 4> q{};
  for (std::size_t i = 0; i < 4; ++i) q[i] = number_at(j[i], line, field);
  return q;
}

BBox box_at(const json& j, std::size_t line, std::string_view field) {
  const auto q = quad_at(j, line, field);
  try {
    return BBox(q[0], q[1], q[2], q[3]);
  } catch (const ContractError& e) {
    fail(line, field, e.what());
  }
}

std::vector<BBox> boxes_at(const json& obj, std::string_view key, std::size_t line, bool required) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) {
    if (required) fail(line, key, "missing");
    return {};
  }
  if (!it->is_array()) fail(line, key, "expected an array of boxes");
  std::vector<BBox> out;
  out.reserve(it->size());
  for (const json& b : *it) out.push_back(box_at(b, line, key));
  return out;
}

json parse_object(std::string_view line, std::size_t line_number) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    fail(line_number, "", std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) fail(line_number, "", "expected a JSON object");
  return obj;
}

std::string image_id_at(const json& obj, std::size_t line) {
  const auto it = obj.find("image_id");
  if (it == obj.end()) fail(line, "image_id", "missing");
  if (!it->is_string()) fail(line, "image_id", "expected a string");
  return it->get<std::string>();
}

}  // namespace

std::string format_scene_line(const GroundTruthScene& scene) {
  std::string out = "{\"image_id\":";
  append_string(out, scene.image_id);
  out += ",\"width\":";
  out += format_number(scene.width);
  out += ",\"height\":";
  out += format_number(scene.height);
  out += ",\"gt\":";
  append_boxes(out, scene.gt_boxes);
  out += ",\"ignore\":";
  append_boxes(out, scene.ignore_boxes);
  out += '}';
  return out;
}

std::string format_detection_line(const DetectionRecord& record) {
  std::string out = "{\"image_id\":";
  append_string(out, record.image_id);
  out += ",\"detections\":[";
  for (std::size_t i = 0; i < record.detections.size(); ++i) {
    const Detection& d = record.detections[i];
    if (i) out += ',';
    out += "{\"bbox\":";
    append_box(out, d.box);
    out += ",\"score\":";
    out += format_number(d.score);
    if (d.density) {
      out += ",\"density\":";
      out += format_number(*d.density);
      if (d.noh_mean) {
        out += ",\"mu\":[";
        const auto m = d.noh_mean->as_array();
        for (std::size_t k = 0; k < 4; ++k) {
          if (k) out += ',';
          out += format_number(m[k]);
        }
        out += ']';
      }
    }
    out += '}';
  }
  out += "]}";
  return out;
}

GroundTruthScene parse_scene_line(std::string_view line, std::size_t line_number) {
  const json obj = parse_object(line, line_number);
  GroundTruthScene scene;
  scene.image_id = image_id_at(obj, line_number);
  for (const char* key : {"width", "height"}) {
    const auto it = obj.find(key);
    if (it == obj.end()) fail(line_number, key, "missing");
    const double v = number_at(*it, line_number, key);
    if (!(v > 0.0)) fail(line_number, key, "must be positive");
    (std::string_view(key) == "width" ? scene.width : scene.height) = v;
  }
  scene.gt_boxes = boxes_at(obj, "gt", line_number, true);
  scene.ignore_boxes = boxes_at(obj, "ignore", line_number, false);
  return scene;
}

DetectionRecord parse_detection_line(std::string_view line, std::size_t line_number) {
  const json obj = parse_object(line, line_number);
  DetectionRecord record;
  record.image_id = image_id_at(obj, line_number);
  const auto it = obj.find("detections");
  if (it == obj.end()) fail(line_number, "detections", "missing");
  if (!it->is_array()) fail(line_number, "detections", "expected an array");
  record.detections.reserve(it->size());
  for (const json& d : *it) {
    if (!d.is_object()) fail(line_number, "detections", "expected an array of objects");
    const auto bbox = d.find("bbox");
    if (bbox == d.end()) fail(line_number, "bbox", "missing");
    const auto score = d.find("score");
    if (score == d.end()) fail(line_number, "score", "missing");
    Detection det{box_at(*bbox, line_number, "bbox"), number_at(*score, line_number, "score"),
                  std::nullopt, std::nullopt, record.detections.size()};
    if (!(det.score >= 0.0 && det.score <= 1.0)) fail(line_number, "score", "must lie in [0, 1]");
    if (const auto density = d.find("density"); density != d.end()) {
      det.density = number_at(*density, line_number, "density");
      if (!(*det.density >= 0.0 && *det.density <= 1.0)) fail(line_number, "density", "must lie in [0, 1]");
    }
    if (const auto mu = d.find("mu"); mu != d.end()) {
      if (!det.density) fail(line_number, "mu", "only allowed alongside density");
      const auto q = quad_at(*mu, line_number, "mu");
      det.noh_mean = RelCoeffs{q[0], q[1], q[2], q[3]};
    }
    record.detections.push_back(std::move(det));
  }
  return record;
}

LineReader::LineReader(const std::filesystem::path& path) : path_(path), in_(path) {
  if (!in_) throw IoError("cannot open " + path.string() + " for reading");
}

bool LineReader::next(std::string& line) {
  while (std::getline(in_, line)) {
    ++line_number_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) return true;
  }
  if (in_.bad()) throw IoError("read error in " + path_.string());
  return false;
}

LineWriter::LineWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
}

void LineWriter::write(std::string_view line) {
  out_ << line << '\n';
  if (!out_) throw IoError("write error in " + path_.string());
}

void LineWriter::close() {
  out_.flush();
  if (!out_) throw IoError("write error in " + path_.string());
  out_.close();
}

std::vector<GroundTruthScene> read_scene_file(const std::filesystem::path& path) {
  LineReader reader(path);
  std::vector<GroundTruthScene> out;
  std::string line;
  while (reader.next(line)) out.push_back(parse_scene_line(line, reader.line_number()));
  return out;
}

std::vector<DetectionRecord> read_detection_file(const std::filesystem::path& path) {
  LineReader reader(path);
  std::vector<DetectionRecord> out;
  std::string line;
  while (reader.next(line)) out.push_back(parse_detection_line(line, reader.line_number()));
  return out;
}

}  // namespace nohnms
