#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "nohnms/geometry.hpp"

namespace nohnms {

enum class MatchFlag { TruePositive, FalsePositive, Ignored };

struct ScoredBox {
  BBox box;
  double score = 0.0;
};

struct MatchOutcome {
  /// One flag per detection, in the order the detections were given.
  std::vector<MatchFlag> flags;
  std::vector<bool> gt_matched;
};

/// Greedy matching of score-sorted detections against one image.
///
/// Each detection claims the unmatched GT with the highest IoU (lowest index
/// on ties) if that IoU reaches `iou_threshold`. Otherwise it is Ignored when
/// its intersection-over-own-area with some ignore region reaches the same
/// threshold, and a false positive if not.
MatchOutcome match_image(std::span<const ScoredBox> detections_sorted, std::span<const BBox> gt_boxes,
                         std::span<const BBox> ignore_boxes, double iou_threshold = 0.5);

struct CurvePoint {
  double recall = 0.0;
  double precision = 0.0;
  double score = 0.0;
  double fppi = 0.0;
};

/// Precision/recall/FPPI after each successive non-ignored detection in the
/// dataset-wide ranking.
struct PRCurve {
  std::vector<CurvePoint> points;
  std::size_t total_gt = 0;
  std::size_t images = 0;
};

/// One image's detections (any order), ground truth and ignore regions.
struct EvalImage {
  std::vector<ScoredBox> detections;
  std::vector<BBox> gt_boxes;
  std::vector<BBox> ignore_boxes;
};

struct EvalOptions {
  double iou_threshold = 0.5;
  /// Per-image cap applied before matching; nullopt keeps everything.
  std::optional<std::size_t> k = 100;
};

/// Matched detections of one image, ready to be merged into a dataset curve.
struct ImageTally {
  struct Entry {
    double score;
    bool true_positive;
  };
  /// Non-ignored detections in per-image rank order.
  std::vector<Entry> ranked;
  std::size_t gt = 0;
  std::size_t detections = 0;
  std::size_t ignored = 0;
};

/// Sorts by score (descending, stable on input order), keeps the top k and
/// matches them.
ImageTally tally_image(const EvalImage& image, const EvalOptions& options);

/// Merges per-image tallies. Ties in score are broken by image position, then
/// by rank within the image, so the merge is deterministic.
PRCurve build_curve(std::span<const ImageTally> tallies);

/// All-points interpolated AP: sum over recall increments of the increment
/// times the best precision at that recall or beyond. 0 without GT.
double average_precision(const PRCurve& curve);

/// Final recall of the curve; 1.0 when the dataset has no GT.
double curve_recall(const PRCurve& curve);

/// Fraction of GT matched when each image keeps only its top-k detections.
double recall_at_k(std::span<const EvalImage> images, std::size_t k, double iou_threshold = 0.5);

/// FPPI reference points 10^(-2 + i/4), i = 0..8.
std::vector<double> mr_reference_points();

/// Log-average miss rate over FPPI in [1e-2, 1]. At each reference point the
/// miss rate is taken from the last curve point whose FPPI does not exceed
/// it (1.0 if there is none); miss rates are floored at 1e-10 before the
/// geometric mean. An empty curve scores 1.0.
double log_average_miss_rate(const PRCurve& curve);

struct MetricCounts {
  std::size_t images = 0;
  std::size_t gt = 0;
  std::size_t detections = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t ignored = 0;
};

struct MetricReport {
  double ap = 0.0;
  double recall = 0.0;
  std::optional<std::size_t> k;
  double mr2 = 1.0;
  PRCurve curve;
  MetricCounts counts;
  /// Set when the dataset has no GT; ap/recall/mr2 are then sentinels.
  bool no_ground_truth = false;
};

MetricReport evaluate(std::span<const EvalImage> images, const EvalOptions& options = {});

/// Same as evaluate(), starting from already matched images.
MetricReport summarize(std::span<const ImageTally> tallies, std::optional<std::size_t> k);

}  // namespace nohnms
