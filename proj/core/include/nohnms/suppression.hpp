#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "nohnms/geometry.hpp"

namespace nohnms {

enum class Method { Greedy, SoftLinear, SoftGaussian, Adaptive, Noh };

/// Probability density used by the NOH suppressor once the density gate
/// opens. `Step` replaces the Gaussian with the Adaptive-NMS step function;
/// it exists so the two algorithms can be compared rule for rule.
enum class NohKernel { Gaussian, Step };

std::string_view to_string(Method method) noexcept;
/// Accepts the CLI spellings: greedy, soft-linear, soft-gaussian, adaptive, noh.
std::optional<Method> parse_method(std::string_view name) noexcept;

/// A scored box plus the optional nearby-object side-channel.
struct Detection {
  BBox box;
  double score = 0.0;
  std::optional<double> density;
  std::optional<RelCoeffs> noh_mean;
  std::size_t source_index = 0;
};

struct SuppressionConfig {
  Method method = Method::Greedy;
  double nms_threshold = 0.5;
  double soft_sigma = 0.5;
  double noh_sigma = 0.2;
  double density_threshold = 0.3;
  Method fallback = Method::Greedy;
  NohKernel noh_kernel = NohKernel::Gaussian;
  /// Detections whose final score is <= score_floor are dropped.
  double score_floor = 0.0;
  /// nullopt means unlimited.
  std::optional<std::size_t> max_detections = 100;

  /// Throws ContractError when a field is out of range.
  void validate() const;
};

struct KeptDetection {
  std::size_t source_index = 0;
  double score = 0.0;

  friend bool operator==(const KeptDetection&, const KeptDetection&) = default;
};

/// Kept detections ordered by final score descending, ties by source_index.
struct SuppressionResult {
  std::vector<KeptDetection> kept;

  friend bool operator==(const SuppressionResult&, const SuppressionResult&) = default;
};

/// Checks that `d` carries what `config.method` needs (density for Adaptive
/// and NOH, a mean for NOH whenever the density opens the gate).
void validate_detection(const Detection& d, const SuppressionConfig& config);

/// Replacement score for `other` after `best` has been selected, assuming
/// their IoU has already reached the NMS threshold.
double rescore(const Detection& best, const Detection& other, const SuppressionConfig& config);

/// Same rule applied to a box whose current (possibly already decayed) score
/// is `score`, with the IoU against `best` supplied by the caller.
double rescore_at(const Detection& best, const BBox& other_box, double score, double overlap,
                  const SuppressionConfig& config);

/// Greedy selection loop with pluggable re-scoring.
///
/// Each round picks the remaining detection with the highest current score
/// (lowest source_index on ties), keeps it at that score, and re-scores every
/// remaining detection whose IoU with it reaches the threshold. Greedy removes
/// those detections outright; every other method only decays their scores.
/// Afterwards entries at or below score_floor are dropped and the list is
/// truncated to max_detections.
SuppressionResult suppress(std::span<const Detection> detections, const SuppressionConfig& config);

/// Literal O(N^2) transcription of the same loop without any shortcuts. Kept
/// as a test oracle for suppress().
SuppressionResult suppress_reference(std::span<const Detection> detections,
                                     const SuppressionConfig& config);

}  // namespace nohnms
