#include <algorithm>
#include <cmath>

#include "nohnms/errors.hpp"
#include "nohnms/suppression.hpp"

namespace nohnms {

namespace {

// Written out per method without sharing code with rescore_at().
double naive_decay(const Detection& m, const Detection& b, double s, double u,
                   const SuppressionConfig& cfg) {
  if (cfg.method == Method::Greedy) return 0.0;
  if (cfg.method == Method::SoftLinear) return s * (1.0 - u);
  if (cfg.method == Method::SoftGaussian) return s * std::exp(-(u * u) / cfg.soft_sigma);
  if (cfg.method == Method::Adaptive) {
    if (u < m.density.value()) return s;
    return 0.0;
  }
  // NOH
  const double d = m.density.value();
  if (d < cfg.density_threshold) {
    if (cfg.fallback == Method::SoftLinear) return s * (1.0 - u);
    if (cfg.fallback == Method::SoftGaussian) return s * std::exp(-(u * u) / cfg.soft_sigma);
    return 0.0;
  }
  if (cfg.noh_kernel == NohKernel::Step) {
    if (u < d) return s;
    return 0.0;
  }
  return s * gaussian_likelihood(encode_relative(b.box, m.box), m.noh_mean.value(), cfg.noh_sigma);
}

}  // namespace

SuppressionResult suppress_reference(std::span<const Detection> detections,
                                     const SuppressionConfig& config) {
  config.validate();
  for (const Detection& d : detections) validate_detection(d, config);
  for (std::size_t i = 0; i < detections.size(); ++i) {
    for (std::size_t j = i + 1; j < detections.size(); ++j) {
      if (detections[i].source_index == detections[j].source_index) {
        throw ContractError("detection source_index values must be unique");
      }
    }
  }

  const std::size_t n = detections.size();
  std::vector<bool> in_b(n, true);
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = detections[i].score;

  std::vector<KeptDetection> f;
  while (std::find(in_b.begin(), in_b.end(), true) != in_b.end()) {
    std::size_t m = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_b[i]) continue;
      if (m == n || s[i] > s[m] ||
          (s[i] == s[m] && detections[i].source_index < detections[m].source_index)) {
        m = i;
      }
    }
    f.push_back({detections[m].source_index, s[m]});
    in_b[m] = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_b[i]) continue;
      const double u = iou(detections[m].box, detections[i].box);
      if (u >= config.nms_threshold) {
        if (config.method == Method::Greedy) {
          in_b[i] = false;
        } else {
          s[i] = naive_decay(detections[m], detections[i], s[i], u, config);
        }
      }
    }
  }

  std::erase_if(f, [&](const KeptDetection& k) { return k.score <= config.score_floor; });
  std::sort(f.begin(), f.end(), [](const KeptDetection& a, const KeptDetection& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.source_index < b.source_index;
  });
  if (config.max_detections && f.size() > *config.max_detections) f.resize(*config.max_detections);
  return SuppressionResult{std::move(f)};
}

}  // namespace nohnms
