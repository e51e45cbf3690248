#include "nohnms/suppression.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "nohnms/errors.hpp"

namespace nohnms {

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::Greedy: return "greedy";
    case Method::SoftLinear: return "soft-linear";
    case Method::SoftGaussian: return "soft-gaussian";
    case Method::Adaptive: return "adaptive";
    case Method::Noh: return "noh";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) noexcept {
  for (Method m : {Method::Greedy, Method::SoftLinear, Method::SoftGaussian, Method::Adaptive,
                   Method::Noh}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

void SuppressionConfig::validate() const {
  auto fail = [](const std::string& what) { throw ContractError("invalid suppression config: " + what); };
  if (!(nms_threshold > 0.0 && nms_threshold < 1.0)) fail("nms_threshold must lie in (0, 1)");
  if (!(soft_sigma > 0.0) || !std::isfinite(soft_sigma)) fail("soft_sigma must be > 0");
  if (!(noh_sigma > 0.0) || !std::isfinite(noh_sigma)) fail("noh_sigma must be > 0");
  if (!(density_threshold >= 0.0 && density_threshold <= 1.0)) fail("density_threshold must lie in [0, 1]");
  if (!(score_floor >= 0.0 && score_floor < 1.0)) fail("score_floor must lie in [0, 1)");
  if (max_detections && *max_detections == 0) fail("max_detections must be positive");
  if (fallback != Method::Greedy && fallback != Method::SoftLinear && fallback != Method::SoftGaussian) {
    fail("fallback must be greedy, soft-linear or soft-gaussian");
  }
}

void validate_detection(const Detection& d, const SuppressionConfig& config) {
  auto fail = [&](const char* what) {
    std::ostringstream msg;
    msg << "detection " << d.source_index << ": " << what;
    throw ContractError(msg.str());
  };
  if (!(d.score >= 0.0 && d.score <= 1.0)) fail("score must lie in [0, 1]");
  if (d.density && !(*d.density >= 0.0 && *d.density <= 1.0)) fail("density must lie in [0, 1]");
  if (d.noh_mean) {
    for (double v : d.noh_mean->as_array()) {
      if (!std::isfinite(v)) fail("noh_mean must be finite");
    }
  }
  if (config.method == Method::Adaptive || config.method == Method::Noh) {
    if (!d.density) fail("density is required by this method");
  }
  if (config.method == Method::Noh && *d.density >= config.density_threshold && !d.noh_mean) {
    fail("noh_mean is required when density reaches the density threshold");
  }
}

namespace {

double soft_rule(Method rule, double score, double overlap, const SuppressionConfig& config) {
  switch (rule) {
    case Method::SoftLinear: return score * (1.0 - overlap);
    case Method::SoftGaussian: return score * std::exp(-(overlap * overlap) / config.soft_sigma);
    default: return 0.0;
  }
}

}  // namespace

double rescore_at(const Detection& best, const BBox& other_box, double score, double overlap,
                  const SuppressionConfig& config) {
  switch (config.method) {
    case Method::Greedy:
      return 0.0;
    case Method::SoftLinear:
    case Method::SoftGaussian:
      return soft_rule(config.method, score, overlap, config);
    case Method::Adaptive:
      if (!best.density) throw ContractError("adaptive re-scoring requires a density");
      return overlap < *best.density ? score : 0.0;
    case Method::Noh: {
      if (!best.density) throw ContractError("NOH re-scoring requires a density");
      const double density = *best.density;
      if (density < config.density_threshold) return soft_rule(config.fallback, score, overlap, config);
      if (config.noh_kernel == NohKernel::Step) return overlap < density ? score : 0.0;
      if (!best.noh_mean) throw ContractError("NOH re-scoring requires a nearby-object mean");
      return score * gaussian_likelihood(encode_relative(other_box, best.box), *best.noh_mean,
                                         config.noh_sigma);
    }
  }
  return 0.0;
}

double rescore(const Detection& best, const Detection& other, const SuppressionConfig& config) {
  config.validate();
  return rescore_at(best, other.box, other.score, iou(best.box, other.box), config);
}

namespace {

struct Slot {
  BBox box;
  double score;
  std::size_t source_index;
  const Detection* det;
};

// Ranking order shared by selection and output: score desc, source_index asc.
inline bool ranks_before(const Slot& a, const Slot& b) noexcept {
  return a.score > b.score || (a.score == b.score && a.source_index < b.source_index);
}

void check_inputs(std::span<const Detection> detections, const SuppressionConfig& config) {
  config.validate();
  std::vector<std::size_t> indices;
  indices.reserve(detections.size());
  for (const Detection& d : detections) {
    validate_detection(d, config);
    indices.push_back(d.source_index);
  }
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
    throw ContractError("detection source_index values must be unique");
  }
}

}  // namespace

// Two shortcuts relative to the literal loop, neither of which changes the
// output:
//  * a detection whose score drops to or below score_floor is discarded at
//    once. It can never be emitted, and when selected it could only decay
//    detections that already sit at or below its own score.
//  * selection order coincides with output order, so the loop stops as soon
//    as max_detections have been kept.
SuppressionResult suppress(std::span<const Detection> detections, const SuppressionConfig& config) {
  check_inputs(detections, config);

  std::vector<Slot> remaining;
  remaining.reserve(detections.size());
  for (const Detection& d : detections) {
    if (d.score > config.score_floor) remaining.push_back({d.box, d.score, d.source_index, &d});
  }

  SuppressionResult result;
  const std::size_t limit = config.max_detections.value_or(remaining.size());
  result.kept.reserve(std::min(limit, remaining.size()));
  if (remaining.empty()) return result;

  std::size_t best = 0;
  for (std::size_t i = 1; i < remaining.size(); ++i) {
    if (ranks_before(remaining[i], remaining[best])) best = i;
  }

  const double threshold = config.nms_threshold;
  const bool eliminate = config.method == Method::Greedy;

  while (!remaining.empty()) {
    const Slot selected = remaining[best];
    result.kept.push_back({selected.source_index, selected.score});
    if (result.kept.size() >= limit) break;

    remaining[best] = remaining.back();
    remaining.pop_back();

    // Re-score and compact in one pass while tracking the next maximum.
    std::size_t write = 0;
    std::size_t next = 0;
    for (std::size_t read = 0; read < remaining.size(); ++read) {
      Slot slot = remaining[read];
      const double overlap = iou(selected.box, slot.box);
      if (overlap >= threshold) {
        if (eliminate) continue;
        slot.score = rescore_at(*selected.det, slot.box, slot.score, overlap, config);
        if (slot.score <= config.score_floor) continue;
      }
      if (write == 0 || ranks_before(slot, remaining[next])) next = write;
      remaining[write++] = slot;
    }
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(write), remaining.end());
    best = next;
  }
  return result;
}

}  // namespace nohnms
