#include "nohnms/geometry.hpp"

#include <cmath>
#include <sstream>

#include "nohnms/errors.hpp"

namespace nohnms {

BBox::BBox(double x, double y, double w, double h) : x_(x), y_(y), w_(w), h_(h) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h)) {
    throw ContractError("BBox fields must be finite");
  }
  if (!(w > 0.0) || !(h > 0.0)) {
    std::ostringstream msg;
    msg << "BBox must have positive size, got w=" << w << " h=" << h;
    throw ContractError(msg.str());
  }
}

void validate(const RelCoeffs& coeffs) {
  for (double v : coeffs.as_array()) {
    if (!std::isfinite(v)) throw ContractError("relative coefficients must be finite");
  }
}

RelCoeffs encode_relative(const BBox& target, const BBox& reference) {
  return RelCoeffs{
      (target.cx() - reference.cx()) / reference.w(),
      (target.cy() - reference.cy()) / reference.h(),
      std::log(target.w() / reference.w()),
      std::log(target.h() / reference.h()),
  };
}

BBox decode_relative(const RelCoeffs& coeffs, const BBox& reference) {
  validate(coeffs);
  const double w = reference.w() * std::exp(coeffs.dw);
  const double h = reference.h() * std::exp(coeffs.dh);
  const double cx = reference.cx() + coeffs.dx * reference.w();
  const double cy = reference.cy() + coeffs.dy * reference.h();
  return BBox(cx - w / 2.0, cy - h / 2.0, w, h);
}

double squared_distance(const RelCoeffs& a, const RelCoeffs& b) noexcept {
  const double ddx = a.dx - b.dx;
  const double ddy = a.dy - b.dy;
  const double ddw = a.dw - b.dw;
  const double ddh = a.dh - b.dh;
  return ddx * ddx + ddy * ddy + ddw * ddw + ddh * ddh;
}

double gaussian_likelihood(const RelCoeffs& rel, const RelCoeffs& mean, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ContractError("gaussian_likelihood requires sigma > 0");
  }
  return std::exp(-squared_distance(rel, mean) / (2.0 * sigma * sigma));
}

}  // namespace nohnms
