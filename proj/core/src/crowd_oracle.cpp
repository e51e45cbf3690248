#include "nohnms/crowd_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "nohnms/errors.hpp"

namespace nohnms {

namespace {

constexpr int kSceneAttempts = 64;
constexpr int kBoxAttempts = 400;
constexpr int kPartnerAttempts = 40;

enum class Stream : std::uint32_t { Scene = 1, Proposals = 2, Oracle = 3 };

std::mt19937_64 make_rng(std::uint64_t seed, std::size_t index, Stream stream) {
  const auto idx = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Standard normal scaled by `stddev`; a zero stddev yields exactly 0.
double gaussian(std::mt19937_64& rng, double stddev) {
  return std::normal_distribution<double>(0.0, 1.0)(rng) * stddev;
}

bool inside(const BBox& b, double width, double height) {
  return b.x() >= 0.0 && b.y() >= 0.0 && b.right() <= width && b.bottom() <= height;
}

bool clear_of(const BBox& candidate, std::span<const BBox> placed, std::size_t skip = SIZE_MAX) {
  for (std::size_t i = 0; i < placed.size(); ++i) {
    if (i != skip && iou(candidate, placed[i]) >= kMaxUnpairedIou) return false;
  }
  return true;
}

BBox sample_box(std::mt19937_64& rng, const GeneratorConfig& cfg) {
  const double h = uniform(rng, cfg.box_height.min, cfg.box_height.max);
  const double w = h / cfg.aspect_ratio;
  return BBox(uniform(rng, 0.0, cfg.image_width - w), uniform(rng, 0.0, cfg.image_height - h), w, h);
}

// Box of size (w, h) whose center sits at distance `r` along `dir` (in units
// of the mean box size) from the anchor's center.
BBox offset_box(const BBox& anchor, double w, double h, double r, double cos_t, double sin_t) {
  const double cx = anchor.cx() + r * cos_t * (anchor.w() + w) / 2.0;
  const double cy = anchor.cy() + r * sin_t * (anchor.h() + h) / 2.0;
  return BBox(cx - w / 2.0, cy - h / 2.0, w, h);
}

// IoU is non-increasing along a ray leaving the concentric position, so the
// offset achieving `target` is found by bisection.
std::optional<BBox> place_partner(std::mt19937_64& rng, const BBox& anchor, double target,
                                  const GeneratorConfig& cfg) {
  const double scale = uniform(rng, 1.0 - cfg.pair_scale_jitter, 1.0 + cfg.pair_scale_jitter);
  const double w = anchor.w() * scale;
  const double h = anchor.h() * scale;
  double theta = uniform(rng, -std::numbers::pi / 6.0, std::numbers::pi / 6.0);
  if (uniform(rng, 0.0, 1.0) < 0.5) theta += std::numbers::pi;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);

  double lo = 0.0;
  double hi = 2.5;
  if (iou(anchor, offset_box(anchor, w, h, lo, cos_t, sin_t)) < target) return std::nullopt;
  for (int it = 0; it < 80; ++it) {
    const double mid = (lo + hi) / 2.0;
    if (iou(anchor, offset_box(anchor, w, h, mid, cos_t, sin_t)) >= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  BBox partner = offset_box(anchor, w, h, lo, cos_t, sin_t);
  if (std::abs(iou(anchor, partner) - target) > kPairIouTolerance) return std::nullopt;
  return partner;
}

std::optional<std::vector<BBox>> try_layout(std::mt19937_64& rng, const GeneratorConfig& cfg,
                                            std::size_t count) {
  const std::size_t pairs = pair_count(cfg, count);
  std::vector<BBox> boxes;
  boxes.reserve(count);

  for (std::size_t k = 0; k < pairs; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kBoxAttempts && !placed; ++attempt) {
      const BBox anchor = sample_box(rng, cfg);
      if (!clear_of(anchor, boxes)) continue;
      for (int p = 0; p < kPartnerAttempts; ++p) {
        const double target = uniform(rng, cfg.pair_iou_range.min, cfg.pair_iou_range.max);
        const auto partner = place_partner(rng, anchor, target, cfg);
        if (!partner || !inside(*partner, cfg.image_width, cfg.image_height)) continue;
        if (!clear_of(*partner, boxes)) continue;
        boxes.push_back(anchor);
        boxes.push_back(*partner);
        placed = true;
        break;
      }
    }
    if (!placed) return std::nullopt;
  }

  while (boxes.size() < count) {
    bool placed = false;
    for (int attempt = 0; attempt < kBoxAttempts; ++attempt) {
      const BBox b = sample_box(rng, cfg);
      if (clear_of(b, boxes)) {
        boxes.push_back(b);
        placed = true;
        break;
      }
    }
    if (!placed) return std::nullopt;
  }
  return boxes;
}

std::string scene_id(std::size_t scene_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%06zu", scene_index);
  return buf;
}

}  // namespace

void GeneratorConfig::validate() const {
  auto fail = [](const char* what) { throw ContractError(std::string("invalid generator config: ") + what); };
  if (scenes == 0) fail("scenes must be positive");
  if (gt_per_scene.min == 0 || gt_per_scene.min > gt_per_scene.max) fail("gt_per_scene must be a positive, ordered range");
  if (!(overlap_pair_fraction >= 0.0 && overlap_pair_fraction <= 1.0)) fail("overlap_pair_fraction must lie in [0, 1]");
  if (!(pair_iou_range.min > 0.0 && pair_iou_range.min <= pair_iou_range.max && pair_iou_range.max < 1.0)) {
    fail("pair_iou_range must be an ordered sub-interval of (0, 1)");
  }
  if (proposals_per_gt == 0) fail("proposals_per_gt must be positive");
  if (!(jitter_center_std >= 0.0) || !(jitter_logsize_std >= 0.0) || !(score_noise_std >= 0.0)) {
    fail("standard deviations must be >= 0");
  }
  if (!(image_width > 0.0) || !(image_height > 0.0)) fail("image size must be positive");
  if (!(box_height.min > 0.0 && box_height.min <= box_height.max)) fail("box_height must be a positive, ordered range");
  if (!(aspect_ratio > 0.0)) fail("aspect_ratio must be positive");
  if (box_height.max > image_height || box_height.max / aspect_ratio > image_width) fail("boxes must fit in the image");
  if (!(pair_scale_jitter >= 0.0 && pair_scale_jitter < 0.2)) fail("pair_scale_jitter must lie in [0, 0.2)");
  if (ignore_per_scene.min > ignore_per_scene.max) fail("ignore_per_scene must be ordered");
}

void OracleConfig::validate() const {
  if (!(mean_noise_std >= 0.0) || !(density_noise_std >= 0.0)) {
    throw ContractError("invalid oracle config: standard deviations must be >= 0");
  }
}

std::size_t pair_count(const GeneratorConfig& config, std::size_t gt_count) noexcept {
  const auto pairs = static_cast<std::size_t>(
      std::lround(config.overlap_pair_fraction * static_cast<double>(gt_count) / 2.0));
  return std::min(pairs, gt_count / 2);
}

GroundTruthScene generate_scene(const GeneratorConfig& config, std::size_t scene_index) {
  config.validate();
  auto rng = make_rng(config.seed, scene_index, Stream::Scene);

  GroundTruthScene scene;
  scene.image_id = scene_id(scene_index);
  scene.width = config.image_width;
  scene.height = config.image_height;

  for (int attempt = 0; attempt < kSceneAttempts; ++attempt) {
    const std::size_t count = std::uniform_int_distribution<std::size_t>(
        config.gt_per_scene.min, config.gt_per_scene.max)(rng);
    if (auto boxes = try_layout(rng, config, count)) {
      scene.gt_boxes = std::move(*boxes);
      break;
    }
  }
  if (scene.gt_boxes.empty()) {
    throw GeneratorError("could not place ground truth for " + scene.image_id +
                         " within the attempt budget; loosen the generator config");
  }

  // Ignore regions stay clear of every GT box; a region that cannot be placed
  // is simply skipped.
  const std::size_t ignores = std::uniform_int_distribution<std::size_t>(
      config.ignore_per_scene.min, config.ignore_per_scene.max)(rng);
  for (std::size_t k = 0; k < ignores; ++k) {
    for (int attempt = 0; attempt < kBoxAttempts; ++attempt) {
      const BBox b = sample_box(rng, config);
      const bool clear = std::none_of(scene.gt_boxes.begin(), scene.gt_boxes.end(),
                                      [&](const BBox& g) { return intersection_area(b, g) > 0.0; });
      if (clear) {
        scene.ignore_boxes.push_back(b);
        break;
      }
    }
  }
  return scene;
}

std::vector<Proposal> generate_proposals(const GroundTruthScene& scene, const GeneratorConfig& config,
                                         std::size_t scene_index) {
  auto rng = make_rng(config.seed, scene_index, Stream::Proposals);
  std::vector<Proposal> out;
  out.reserve(scene.gt_boxes.size() * config.proposals_per_gt);

  for (std::size_t g = 0; g < scene.gt_boxes.size(); ++g) {
    const BBox& gt = scene.gt_boxes[g];
    for (std::size_t p = 0; p < config.proposals_per_gt; ++p) {
      const double off_x = gaussian(rng, config.jitter_center_std);
      const double off_y = gaussian(rng, config.jitter_center_std);
      const double w = gt.w() * std::exp(gaussian(rng, config.jitter_logsize_std));
      const double h = gt.h() * std::exp(gaussian(rng, config.jitter_logsize_std));
      // Written relative to the corner so zero jitter reproduces the GT exactly.
      const BBox box(gt.x() + (gt.w() - w) / 2.0 + off_x * gt.w(),
                     gt.y() + (gt.h() - h) / 2.0 + off_y * gt.h(), w, h);
      const double score =
          std::clamp(iou(box, gt) + gaussian(rng, config.score_noise_std), 0.01, 1.0);

      Proposal proposal{Detection{box, score, std::nullopt, std::nullopt, out.size()}, g};
      out.push_back(std::move(proposal));
    }
  }
  return out;
}

std::vector<Detection> annotate_oracle(std::span<const Proposal> proposals, const GroundTruthScene& scene,
                                       const OracleConfig& oracle, std::uint64_t seed,
                                       std::size_t scene_index) {
  oracle.validate();
  const double density_std = oracle.perfect ? 0.0 : oracle.density_noise_std;
  const double mean_std = oracle.perfect ? 0.0 : oracle.mean_noise_std;
  auto rng = make_rng(seed, scene_index, Stream::Oracle);

  const std::size_t n = scene.gt_boxes.size();
  std::vector<std::size_t> nearest(n, SIZE_MAX);
  std::vector<double> nearest_iou(n, 0.0);
  for (std::size_t g = 0; g < n; ++g) {
    for (std::size_t o = 0; o < n; ++o) {
      if (o == g) continue;
      const double v = iou(scene.gt_boxes[g], scene.gt_boxes[o]);
      if (nearest[g] == SIZE_MAX || v > nearest_iou[g]) {
        nearest[g] = o;
        nearest_iou[g] = v;
      }
    }
  }

  std::vector<Detection> out;
  out.reserve(proposals.size());
  for (const Proposal& p : proposals) {
    if (p.gt_index >= n) throw ContractError("proposal refers to a GT box outside the scene");
    Detection d = p.detection;
    d.density = 0.0;
    d.noh_mean.reset();
    const std::size_t target = nearest[p.gt_index];
    if (target != SIZE_MAX) {
      d.density = std::clamp(nearest_iou[p.gt_index] + gaussian(rng, density_std), 0.0, 1.0);
      RelCoeffs mean = encode_relative(scene.gt_boxes[target], d.box);
      mean.dx += gaussian(rng, mean_std);
      mean.dy += gaussian(rng, mean_std);
      mean.dw += gaussian(rng, mean_std);
      mean.dh += gaussian(rng, mean_std);
      if (*d.density > 0.0) d.noh_mean = mean;
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace nohnms
