#pragma once

#include <algorithm>
#include <array>

namespace nohnms {

/// Axis-aligned rectangle in pixel units, stored as top-left corner plus size.
///
/// Construction rejects non-finite fields and non-positive sizes, so every
/// formula built on top (IoU, log size ratios) is total. Negative coordinates
/// are legal; clipping to an image is left to whoever produces the boxes.
class BBox {
 public:
  /// Throws ContractError unless all fields are finite and w, h > 0.
  BBox(double x, double y, double w, double h);

  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }
  double w() const noexcept { return w_; }
  double h() const noexcept { return h_; }
  double right() const noexcept { return x_ + w_; }
  double bottom() const noexcept { return y_ + h_; }
  double cx() const noexcept { return x_ + w_ / 2.0; }
  double cy() const noexcept { return y_ + h_ / 2.0; }

  std::array<double, 4> as_array() const noexcept { return {x_, y_, w_, h_}; }

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  double x_;
  double y_;
  double w_;
  double h_;
};

/// Position and shape of one box relative to a reference box: center offsets
/// scaled by the reference size, and log width/height ratios.
struct RelCoeffs {
  double dx = 0.0;
  double dy = 0.0;
  double dw = 0.0;
  double dh = 0.0;

  std::array<double, 4> as_array() const noexcept { return {dx, dy, dw, dh}; }
  friend bool operator==(const RelCoeffs&, const RelCoeffs&) = default;
};

/// Throws ContractError if any coefficient is not finite.
void validate(const RelCoeffs& coeffs);

inline double area(const BBox& b) noexcept { return b.w() * b.h(); }

namespace detail {
// Area measured from the corner coordinates, so an intersection of a box with
// itself (or a box containing it) reproduces this value bit-for-bit.
inline double extent_area(const BBox& b) noexcept { return (b.right() - b.x()) * (b.bottom() - b.y()); }
}  // namespace detail

inline double intersection_area(const BBox& a, const BBox& b) noexcept {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x(), b.x());
  if (iw <= 0.0) return 0.0;
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y(), b.y());
  if (ih <= 0.0) return 0.0;
  return iw * ih;
}

/// Intersection over union. Symmetric, in [0, 1].
inline double iou(const BBox& a, const BBox& b) noexcept {
  const double inter = intersection_area(a, b);
  if (inter == 0.0) return 0.0;
  return std::min(1.0, inter / (detail::extent_area(a) + detail::extent_area(b) - inter));
}

/// Intersection over the area of `a` (the "foreground" box). Not symmetric.
inline double iof(const BBox& a, const BBox& b) noexcept {
  return std::min(1.0, intersection_area(a, b) / detail::extent_area(a));
}

/// Coefficients of `target` relative to `reference`:
/// ((cx_t - cx_r) / w_r, (cy_t - cy_r) / h_r, log(w_t / w_r), log(h_t / h_r)).
RelCoeffs encode_relative(const BBox& target, const BBox& reference);

/// Inverse of encode_relative.
BBox decode_relative(const RelCoeffs& coeffs, const BBox& reference);

/// Squared Euclidean distance in the 4-d coefficient space.
double squared_distance(const RelCoeffs& a, const RelCoeffs& b) noexcept;

/// Isotropic Gaussian nearby-object likelihood exp(-|rel - mean|^2 / (2 sigma^2)).
/// Equals 1 exactly at rel == mean. Throws ContractError for sigma <= 0.
double gaussian_likelihood(const RelCoeffs& rel, const RelCoeffs& mean, double sigma);

}  // namespace nohnms
