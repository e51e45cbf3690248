#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>

#include "nohnms/errors.hpp"
#include "nohnms/records.hpp"
#include "random_instances.hpp"

namespace nohnms {
namespace {

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const ContractError& e) {
    return e.what();
  }
  return "";
}

void expect_same(const DetectionRecord& a, const DetectionRecord& b) {
  ASSERT_EQ(a.image_id, b.image_id);
  ASSERT_EQ(a.detections.size(), b.detections.size());
  for (std::size_t i = 0; i < a.detections.size(); ++i) {
    const auto& x = a.detections[i];
    const auto& y = b.detections[i];
    EXPECT_EQ(x.box.as_array(), y.box.as_array());
    EXPECT_EQ(x.score, y.score);
    EXPECT_EQ(x.density, y.density);
    ASSERT_EQ(x.noh_mean.has_value(), y.noh_mean.has_value());
    if (x.noh_mean) {
      EXPECT_EQ(x.noh_mean->dx, y.noh_mean->dx);
      EXPECT_EQ(x.noh_mean->dy, y.noh_mean->dy);
      EXPECT_EQ(x.noh_mean->dw, y.noh_mean->dw);
      EXPECT_EQ(x.noh_mean->dh, y.noh_mean->dh);
    }
    EXPECT_EQ(y.source_index, i);
  }
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(-2.25), "-2.25");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double v = u(rng);
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_THROW(format_number(std::nan("")), ContractError);
}

TEST(SceneLine, Format) {
  GroundTruthScene s;
  s.image_id = "img \"1\"";
  s.width = 640;
  s.height = 480;
  s.gt_boxes = {BBox(1, 2, 3, 4)};
  s.ignore_boxes = {BBox(0.5, 0.25, 10, 20)};
  EXPECT_EQ(format_scene_line(s),
            R"({"image_id":"img \"1\"","width":640,"height":480,"gt":[[1,2,3,4]],"ignore":[[0.5,0.25,10,20]]})");
}

TEST(SceneLine, RoundTrip) {
  GroundTruthScene s;
  s.image_id = "scene_000001";
  s.width = 1920;
  s.height = 1080;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) s.gt_boxes.emplace_back(1000 * u(rng), 500 * u(rng), 1 + 99 * u(rng), 1 + 99 * u(rng));
  s.ignore_boxes.emplace_back(3.125, 4, 5, 6);
  const auto back = parse_scene_line(format_scene_line(s), 1);
  EXPECT_EQ(back.image_id, s.image_id);
  EXPECT_EQ(back.width, s.width);
  EXPECT_EQ(back.height, s.height);
  ASSERT_EQ(back.gt_boxes.size(), s.gt_boxes.size());
  for (std::size_t i = 0; i < s.gt_boxes.size(); ++i) EXPECT_EQ(back.gt_boxes[i], s.gt_boxes[i]);
  ASSERT_EQ(back.ignore_boxes.size(), 1u);
  EXPECT_EQ(back.ignore_boxes[0], s.ignore_boxes[0]);
}

TEST(SceneLine, IgnoreIsOptional) {
  const auto s = parse_scene_line(R"({"image_id":"a","width":10,"height":10,"gt":[]})", 1);
  EXPECT_TRUE(s.gt_boxes.empty());
  EXPECT_TRUE(s.ignore_boxes.empty());
}

TEST(DetectionLine, RoundTripRandomRecords) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    testing::InstanceOptions opt;
    opt.max_boxes = 30;
    opt.quantize_scores = seed % 2 == 0;
    DetectionRecord rec{"img_" + std::to_string(seed), testing::random_instance(seed, opt)};
    // Drop side-channels on some detections to cover the optional keys.
    for (std::size_t i = 0; i < rec.detections.size(); ++i) {
      if (i % 3 == 1) rec.detections[i].noh_mean.reset();
      if (i % 3 == 2) {
        rec.detections[i].noh_mean.reset();
        rec.detections[i].density.reset();
      }
    }
    const std::string line = format_detection_line(rec);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    expect_same(rec, parse_detection_line(line, 1));
    EXPECT_EQ(format_detection_line(parse_detection_line(line, 1)), line);
  }
}

TEST(DetectionLine, Format) {
  DetectionRecord rec{"x", {Detection{BBox(0, 0, 10, 10), 0.9, 0.5, RelCoeffs{0.25, 0, 0, -0.5}, 0},
                            Detection{BBox(1, 1, 2, 2), 0.1, std::nullopt, std::nullopt, 1}}};
  EXPECT_EQ(format_detection_line(rec),
            R"({"image_id":"x","detections":[{"bbox":[0,0,10,10],"score":0.9,"density":0.5,"mu":[0.25,0,0,-0.5]},)"
            R"({"bbox":[1,1,2,2],"score":0.1}]})");
  EXPECT_EQ(format_detection_line(DetectionRecord{"e", {}}), R"({"image_id":"e","detections":[]})");
}

TEST(DetectionLine, ErrorsNameLineAndField) {
  auto msg = error_of([] { parse_detection_line(R"({"image_id":"a","detections":[{"bbox":[0,0,1,1]}]})", 7); });
  EXPECT_NE(msg.find("line 7"), std::string::npos);
  EXPECT_NE(msg.find("'score'"), std::string::npos);

  msg = error_of([] { parse_detection_line(R"({"image_id":"a","detections":[{"bbox":[0,0,1],"score":0.5}]})", 3); });
  EXPECT_NE(msg.find("line 3"), std::string::npos);
  EXPECT_NE(msg.find("'bbox'"), std::string::npos);

  msg = error_of([] { parse_detection_line(R"({"image_id":"a","detections":[{"bbox":[0,0,0,1],"score":0.5}]})", 2); });
  EXPECT_NE(msg.find("'bbox'"), std::string::npos);

  msg = error_of([] { parse_detection_line(R"({"image_id":"a","detections":[{"bbox":[0,0,1,1],"score":1.5}]})", 2); });
  EXPECT_NE(msg.find("'score'"), std::string::npos);

  msg = error_of([] { parse_detection_line(R"({"detections":[]})", 4); });
  EXPECT_NE(msg.find("line 4"), std::string::npos);
  EXPECT_NE(msg.find("'image_id'"), std::string::npos);

  msg = error_of([] { parse_detection_line("{not json", 9); });
  EXPECT_NE(msg.find("line 9"), std::string::npos);
}

TEST(DetectionLine, MuRequiresDensity) {
  const auto msg = error_of([] {
    parse_detection_line(R"({"image_id":"a","detections":[{"bbox":[0,0,1,1],"score":0.5,"mu":[0,0,0,0]}]})", 1);
  });
  EXPECT_NE(msg.find("'mu'"), std::string::npos);
  EXPECT_NO_THROW(parse_detection_line(
      R"({"image_id":"a","detections":[{"bbox":[0,0,1,1],"score":0.5,"density":0.2,"mu":[0,0,0,0]}]})", 1));
}

TEST(SceneLine, ErrorsNameLineAndField) {
  auto msg = error_of([] { parse_scene_line(R"({"image_id":"a","width":0,"height":10,"gt":[]})", 5); });
  EXPECT_NE(msg.find("line 5"), std::string::npos);
  EXPECT_NE(msg.find("'width'"), std::string::npos);
  msg = error_of([] { parse_scene_line(R"({"image_id":"a","width":10,"height":10})", 6); });
  EXPECT_NE(msg.find("'gt'"), std::string::npos);
}

class FileTest : public ::testing::Test {
 protected:
  std::filesystem::path dir_ =
      std::filesystem::temp_directory_path() / ("nohnms_records_" + std::to_string(::getpid()));
  void SetUp() override { std::filesystem::create_directories(dir_); }
  void TearDown() override { std::filesystem::remove_all(dir_); }
};

TEST_F(FileTest, ReaderSkipsBlankLinesAndCarriageReturns) {
  const auto path = dir_ / "d.jsonl";
  {
    std::ofstream out(path, std::ios::binary);
    out << R"({"image_id":"a","detections":[]})" << "\r\n\n"
        << R"({"image_id":"b","detections":[{"bbox":[0,0,1,1],"score":0.5}]})" << "\n";
  }
  const auto recs = read_detection_file(path);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[1].image_id, "b");
  EXPECT_EQ(recs[1].detections.size(), 1u);
}

TEST_F(FileTest, ReaderReportsPhysicalLineNumber) {
  const auto path = dir_ / "d.jsonl";
  {
    std::ofstream out(path, std::ios::binary);
    out << R"({"image_id":"a","detections":[]})" << "\n\n" << R"({"image_id":"b"})" << "\n";
  }
  const auto msg = error_of([&] { read_detection_file(path); });
  EXPECT_NE(msg.find("line 3"), std::string::npos);
}

TEST_F(FileTest, WriterThenReader) {
  const auto path = dir_ / "s.jsonl";
  GroundTruthScene s{"only", 100, 50, {BBox(1, 1, 5, 5)}, {}};
  {
    LineWriter w(path);
    w.write(format_scene_line(s));
    w.close();
  }
  const auto back = read_scene_file(path);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].gt_boxes[0], s.gt_boxes[0]);
}

TEST_F(FileTest, MissingFileIsIoError) {
  EXPECT_THROW(read_scene_file(dir_ / "absent.jsonl"), IoError);
  EXPECT_THROW(LineWriter(dir_ / "no_such_dir" / "x.jsonl"), IoError);
}

}  // namespace
}  // namespace nohnms
