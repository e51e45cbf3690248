#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nohnms/geometry.hpp"
#include "nohnms/suppression.hpp"

namespace nohnms {

/// Per-image annotations: ground-truth boxes plus ignore regions.
struct GroundTruthScene {
  std::string image_id;
  double width = 0.0;
  double height = 0.0;
  std::vector<BBox> gt_boxes;
  std::vector<BBox> ignore_boxes;
};

template <typename T>
struct Range {
  T min;
  T max;
};

struct GeneratorConfig {
  std::size_t scenes = 500;
  Range<std::size_t> gt_per_scene{10, 30};
  /// Fraction of GT boxes placed as one half of a heavily overlapping pair.
  double overlap_pair_fraction = 0.5;
  Range<double> pair_iou_range{0.5, 0.7};
  std::size_t proposals_per_gt = 8;
  /// Std of the proposal center offset, as a fraction of the GT size.
  double jitter_center_std = 0.08;
  /// Std of the proposal log width/height perturbation.
  double jitter_logsize_std = 0.08;
  double score_noise_std = 0.05;
  std::uint64_t seed = 42;

  double image_width = 1920.0;
  double image_height = 1080.0;
  Range<double> box_height{60.0, 240.0};
  /// Height over width of a pedestrian box.
  double aspect_ratio = 2.44;
  /// Relative size difference allowed between the two boxes of a pair.
  double pair_scale_jitter = 0.1;
  Range<std::size_t> ignore_per_scene{0, 2};

  void validate() const;
};

struct OracleConfig {
  double mean_noise_std = 0.05;
  double density_noise_std = 0.05;
  /// Forces both noise levels to zero.
  bool perfect = false;

  void validate() const;
};

/// A detection paired with the GT box that spawned it. The GT index is for
/// the oracle and diagnostics; evaluation never looks at it.
struct Proposal {
  Detection detection;
  std::size_t gt_index = 0;
};

/// IoU required between any two GT boxes that are not a designated pair.
inline constexpr double kMaxUnpairedIou = 0.3;
/// Allowed gap between a pair's sampled target IoU and the IoU it achieves.
inline constexpr double kPairIouTolerance = 0.02;

/// Thrown when the rejection sampler cannot satisfy the configuration.
class GeneratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic in (config.seed, scene_index). Boxes [2k, 2k+1] for
/// k < pair_count(scene) are the designated overlapping pairs; all other box
/// pairs have IoU below kMaxUnpairedIou.
GroundTruthScene generate_scene(const GeneratorConfig& config, std::size_t scene_index);

/// Number of designated overlapping pairs a scene with `gt_count` boxes gets.
std::size_t pair_count(const GeneratorConfig& config, std::size_t gt_count) noexcept;

/// proposals_per_gt jittered copies of every GT box, scored by their IoU with
/// the spawning box plus noise, clamped to [0.01, 1]. source_index is the
/// position in the returned list.
std::vector<Proposal> generate_proposals(const GroundTruthScene& scene, const GeneratorConfig& config,
                                         std::size_t scene_index);

/// Fills density and noh_mean from the ground truth, standing in for a
/// learned nearby-object head. For a proposal spawned by GT g, the target is
/// the other GT g* with the highest IoU against g (lowest index on ties);
/// density = iou(g, g*) and noh_mean = encode_relative(g*, proposal box), both
/// with optional Gaussian noise. noh_mean is left empty when density is 0.
std::vector<Detection> annotate_oracle(std::span<const Proposal> proposals, const GroundTruthScene& scene,
                                       const OracleConfig& oracle, std::uint64_t seed,
                                       std::size_t scene_index);

}  // namespace nohnms
