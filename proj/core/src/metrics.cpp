#include "nohnms/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nohnms/errors.hpp"

namespace nohnms {

MatchOutcome match_image(std::span<const ScoredBox> detections_sorted, std::span<const BBox> gt_boxes,
                         std::span<const BBox> ignore_boxes, double iou_threshold) {
  MatchOutcome out;
  out.flags.reserve(detections_sorted.size());
  out.gt_matched.assign(gt_boxes.size(), false);

  for (const ScoredBox& det : detections_sorted) {
    std::size_t best = gt_boxes.size();
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gt_boxes.size(); ++g) {
      if (out.gt_matched[g]) continue;
      const double v = iou(det.box, gt_boxes[g]);
      if (v > best_iou) {
        best_iou = v;
        best = g;
      }
    }
    if (best < gt_boxes.size() && best_iou >= iou_threshold) {
      out.gt_matched[best] = true;
      out.flags.push_back(MatchFlag::TruePositive);
      continue;
    }
    const bool in_ignore = std::any_of(ignore_boxes.begin(), ignore_boxes.end(), [&](const BBox& region) {
      return iof(det.box, region) >= iou_threshold;
    });
    out.flags.push_back(in_ignore ? MatchFlag::Ignored : MatchFlag::FalsePositive);
  }
  return out;
}

ImageTally tally_image(const EvalImage& image, const EvalOptions& options) {
  std::vector<std::size_t> order(image.detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return image.detections[a].score > image.detections[b].score;
  });
  if (options.k && order.size() > *options.k) order.resize(*options.k);

  std::vector<ScoredBox> sorted;
  sorted.reserve(order.size());
  for (std::size_t i : order) sorted.push_back(image.detections[i]);

  const MatchOutcome match = match_image(sorted, image.gt_boxes, image.ignore_boxes, options.iou_threshold);

  ImageTally tally;
  tally.gt = image.gt_boxes.size();
  tally.detections = sorted.size();
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (match.flags[i] == MatchFlag::Ignored) {
      ++tally.ignored;
      continue;
    }
    tally.ranked.push_back({sorted[i].score, match.flags[i] == MatchFlag::TruePositive});
  }
  return tally;
}

PRCurve build_curve(std::span<const ImageTally> tallies) {
  struct Ref {
    double score;
    std::size_t image;
    std::size_t rank;
    bool tp;
  };
  std::vector<Ref> all;
  PRCurve curve;
  curve.images = tallies.size();
  for (std::size_t i = 0; i < tallies.size(); ++i) {
    curve.total_gt += tallies[i].gt;
    for (std::size_t r = 0; r < tallies[i].ranked.size(); ++r) {
      all.push_back({tallies[i].ranked[r].score, i, r, tallies[i].ranked[r].true_positive});
    }
  }
  std::sort(all.begin(), all.end(), [](const Ref& a, const Ref& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.image != b.image) return a.image < b.image;
    return a.rank < b.rank;
  });

  const double gt = static_cast<double>(curve.total_gt);
  const double images = static_cast<double>(std::max<std::size_t>(curve.images, 1));
  std::size_t tp = 0;
  std::size_t fp = 0;
  curve.points.reserve(all.size());
  for (const Ref& r : all) {
    (r.tp ? tp : fp) += 1;
    CurvePoint p;
    p.recall = curve.total_gt == 0 ? 0.0 : static_cast<double>(tp) / gt;
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    p.score = r.score;
    p.fppi = static_cast<double>(fp) / images;
    curve.points.push_back(p);
  }
  return curve;
}

double average_precision(const PRCurve& curve) {
  if (curve.total_gt == 0 || curve.points.empty()) return 0.0;
  const auto& pts = curve.points;
  // Precision envelope: best precision at this rank or any later one.
  std::vector<double> envelope(pts.size());
  double running = 0.0;
  for (std::size_t i = pts.size(); i-- > 0;) {
    running = std::max(running, pts[i].precision);
    envelope[i] = running;
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].recall > prev_recall) {
      ap += (pts[i].recall - prev_recall) * envelope[i];
      prev_recall = pts[i].recall;
    }
  }
  return std::clamp(ap, 0.0, 1.0);
}

double curve_recall(const PRCurve& curve) {
  if (curve.total_gt == 0) return 1.0;
  return curve.points.empty() ? 0.0 : curve.points.back().recall;
}

double recall_at_k(std::span<const EvalImage> images, std::size_t k, double iou_threshold) {
  std::size_t gt = 0;
  std::size_t matched = 0;
  for (const EvalImage& image : images) {
    const ImageTally t = tally_image(image, EvalOptions{iou_threshold, k});
    gt += t.gt;
    matched += static_cast<std::size_t>(
        std::count_if(t.ranked.begin(), t.ranked.end(), [](const auto& e) { return e.true_positive; }));
  }
  if (gt == 0) return 1.0;
  return static_cast<double>(matched) / static_cast<double>(gt);
}

std::vector<double> mr_reference_points() {
  std::vector<double> refs;
  for (int i = 0; i <= 8; ++i) refs.push_back(std::pow(10.0, -2.0 + 0.25 * i));
  return refs;
}

double log_average_miss_rate(const PRCurve& curve) {
  if (curve.points.empty()) return 1.0;
  constexpr double kFloor = 1e-10;
  double log_sum = 0.0;
  const auto refs = mr_reference_points();
  for (double ref : refs) {
    // Relative slack so that e.g. 1 FP over 100 images counts as FPPI 1e-2.
    const double limit = ref * (1.0 + 1e-12);
    double miss = 1.0;
    for (const CurvePoint& p : curve.points) {
      if (p.fppi > limit) break;
      miss = 1.0 - p.recall;
    }
    log_sum += std::log(std::max(miss, kFloor));
  }
  return std::exp(log_sum / static_cast<double>(refs.size()));
}

MetricReport summarize(std::span<const ImageTally> tallies, std::optional<std::size_t> k) {
  MetricReport report;
  report.k = k;
  report.curve = build_curve(tallies);
  report.counts.images = tallies.size();
  for (const ImageTally& t : tallies) {
    report.counts.gt += t.gt;
    report.counts.detections += t.detections;
    report.counts.ignored += t.ignored;
    for (const auto& e : t.ranked) (e.true_positive ? report.counts.tp : report.counts.fp) += 1;
  }
  report.no_ground_truth = report.counts.gt == 0;
  report.ap = average_precision(report.curve);
  report.recall = curve_recall(report.curve);
  report.mr2 = log_average_miss_rate(report.curve);
  return report;
}

MetricReport evaluate(std::span<const EvalImage> images, const EvalOptions& options) {
  if (!(options.iou_threshold > 0.0 && options.iou_threshold <= 1.0)) {
    throw ContractError("evaluation IoU threshold must lie in (0, 1]");
  }
  if (options.k && *options.k == 0) throw ContractError("k must be positive");
  std::vector<ImageTally> tallies;
  tallies.reserve(images.size());
  for (const EvalImage& image : images) tallies.push_back(tally_image(image, options));
  return summarize(tallies, options.k);
}

}  // namespace nohnms
