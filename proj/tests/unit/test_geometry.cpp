#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nohnms/errors.hpp"
#include "nohnms/geometry.hpp"

namespace nohnms {
namespace {

// Counts cells of a `cells_per_unit` lattice covered by each box. Exact for
// boxes whose edges lie on the lattice.
struct RasterOverlap {
  double inter;
  double area_a;
  double area_b;
};

RasterOverlap rasterize(const BBox& a, const BBox& b, int cells_per_unit) {
  const double step = 1.0 / cells_per_unit;
  const double x0 = std::min(a.x(), b.x());
  const double y0 = std::min(a.y(), b.y());
  const double x1 = std::max(a.right(), b.right());
  const double y1 = std::max(a.bottom(), b.bottom());
  auto covers = [](const BBox& box, double px, double py) {
    return px > box.x() && px < box.right() && py > box.y() && py < box.bottom();
  };
  long in_a = 0, in_b = 0, both = 0;
  for (double y = y0 + step / 2; y < y1; y += step) {
    for (double x = x0 + step / 2; x < x1; x += step) {
      const bool ia = covers(a, x, y);
      const bool ib = covers(b, x, y);
      in_a += ia;
      in_b += ib;
      both += ia && ib;
    }
  }
  const double cell = step * step;
  return {both * cell, in_a * cell, in_b * cell};
}

TEST(BBox, RejectsDegenerateAndNonFinite) {
  EXPECT_THROW(BBox(0, 0, 0, 1), ContractError);
  EXPECT_THROW(BBox(0, 0, 1, -1), ContractError);
  EXPECT_THROW(BBox(NAN, 0, 1, 1), ContractError);
  EXPECT_THROW(BBox(0, INFINITY, 1, 1), ContractError);
  EXPECT_NO_THROW(BBox(-5, -5, 1, 1));
}

TEST(Area, Examples) {
  EXPECT_DOUBLE_EQ(area(BBox(0, 0, 1, 1)), 1.0);
  EXPECT_DOUBLE_EQ(area(BBox(0, 0, 2, 2)), 4.0);
  EXPECT_DOUBLE_EQ(area(BBox(3.5, -1, 2, 0.5)), 1.0);
}

TEST(Iou, Examples) {
  EXPECT_EQ(iou(BBox(0, 0, 4, 4), BBox(0, 0, 4, 4)), 1.0);
  EXPECT_EQ(iou(BBox(0, 0, 1, 1), BBox(5, 5, 1, 1)), 0.0);
  const BBox a(0, 0, 2, 2), b(1, 0, 2, 2);
  const auto r = rasterize(a, b, 16);
  const double oracle = r.inter / (r.area_a + r.area_b - r.inter);
  EXPECT_NEAR(oracle, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(iou(a, b), oracle, 1e-12);
}

TEST(Iof, Examples) {
  EXPECT_EQ(iof(BBox(1, 1, 2, 2), BBox(0, 0, 10, 10)), 1.0);
  EXPECT_EQ(iof(BBox(0, 0, 1, 1), BBox(5, 5, 1, 1)), 0.0);
  EXPECT_DOUBLE_EQ(iof(BBox(0, 0, 2, 2), BBox(1, 0, 2, 2)), 0.5);
  EXPECT_DOUBLE_EQ(iof(BBox(1, 0, 2, 2), BBox(0, 0, 2, 2)), 0.5);
  EXPECT_DOUBLE_EQ(iof(BBox(0, 0, 10, 10), BBox(1, 1, 2, 2)), 0.04);
}

TEST(Iou, IdenticalBoxesAreExactlyOneEvenWithRoundOff) {
  const BBox b(0.1, 0.7, 0.2, 0.30000000000000004);
  EXPECT_EQ(iou(b, b), 1.0);
  EXPECT_EQ(iof(b, b), 1.0);
}

// Lattice boxes: compare against the rasterized count, and check the
// algebraic properties on the same draws.
TEST(Iou, PropertiesAgainstRasterOracle) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> coord(-16, 16);
  std::uniform_int_distribution<int> size(1, 16);
  for (int trial = 0; trial < 400; ++trial) {
    const BBox a(coord(rng) / 4.0, coord(rng) / 4.0, size(rng) / 4.0, size(rng) / 4.0);
    const BBox b(coord(rng) / 4.0, coord(rng) / 4.0, size(rng) / 4.0, size(rng) / 4.0);
    const auto r = rasterize(a, b, 4);
    const double v = iou(a, b);
    EXPECT_NEAR(v, r.inter / (r.area_a + r.area_b - r.inter), 1e-12);
    EXPECT_NEAR(iof(a, b), r.inter / r.area_a, 1e-12);
    EXPECT_EQ(v, iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_EQ(v == 1.0, a == b);
    EXPECT_LE(v, std::min(iof(a, b), iof(b, a)) + 1e-15);
  }
}

TEST(EncodeRelative, Examples) {
  const BBox ref(0, 0, 10, 10);
  EXPECT_EQ(encode_relative(ref, ref), (RelCoeffs{0, 0, 0, 0}));

  const RelCoeffs shifted = encode_relative(BBox(2, 0, 10, 10), ref);
  EXPECT_NEAR(shifted.dx, 0.2, 1e-15);
  EXPECT_EQ(shifted.dy, 0.0);
  EXPECT_EQ(shifted.dw, 0.0);
  EXPECT_EQ(shifted.dh, 0.0);

  const RelCoeffs wider = encode_relative(BBox(-5, 0, 20, 10), ref);
  EXPECT_EQ(wider.dx, 0.0);
  EXPECT_NEAR(wider.dw, 0.6931471805599453, 1e-15);
}

TEST(DecodeRelative, Examples) {
  const BBox ref(3, -2, 10, 7);
  EXPECT_EQ(decode_relative(RelCoeffs{}, ref), ref);

  const BBox target(2, 0, 10, 10);
  const BBox round = decode_relative(encode_relative(target, BBox(0, 0, 10, 10)), BBox(0, 0, 10, 10));
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(round.as_array()[k], target.as_array()[k], 1e-9);

  const BBox doubled = decode_relative(RelCoeffs{0, 0, std::log(2.0), 0}, BBox(0, 0, 10, 10));
  EXPECT_NEAR(doubled.w(), 20.0, 1e-12);
  EXPECT_NEAR(doubled.cx(), 5.0, 1e-12);
  EXPECT_NEAR(doubled.h(), 10.0, 1e-12);
}

TEST(DecodeRelative, RoundTripProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-500, 500), size(1, 300);
  for (int trial = 0; trial < 1000; ++trial) {
    const BBox t(pos(rng), pos(rng), size(rng), size(rng));
    const BBox r(pos(rng), pos(rng), size(rng), size(rng));
    const BBox back = decode_relative(encode_relative(t, r), r);
    for (int k = 0; k < 4; ++k) ASSERT_NEAR(back.as_array()[k], t.as_array()[k], 1e-9);
  }
}

TEST(GaussianLikelihood, Examples) {
  const RelCoeffs mean{0.3, -0.1, 0.05, 0.0};
  EXPECT_EQ(gaussian_likelihood(mean, mean, 0.2), 1.0);

  // |rel - mean|^2 = 2 sigma^2
  const double sigma = 0.25;
  const RelCoeffs at_one{mean.dx + sigma, mean.dy + sigma, mean.dw, mean.dh};
  EXPECT_NEAR(gaussian_likelihood(at_one, mean, sigma), 0.36787944117144233, 1e-15);

  EXPECT_NEAR(gaussian_likelihood(RelCoeffs{0.2, 0, 0, 0}, RelCoeffs{}, 0.2), 0.6065306597126334, 1e-15);
}

TEST(GaussianLikelihood, RejectsNonPositiveSigma) {
  EXPECT_THROW(gaussian_likelihood({}, {}, 0.0), ContractError);
  EXPECT_THROW(gaussian_likelihood({}, {}, -1.0), ContractError);
}

TEST(GaussianLikelihood, UniqueMaximumAndRadialMonotonicity) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const RelCoeffs mean{n(rng), n(rng), n(rng), n(rng)};
    const RelCoeffs dir{n(rng), n(rng), n(rng), n(rng)};
    double prev = gaussian_likelihood(mean, mean, 0.3);
    EXPECT_EQ(prev, 1.0);
    for (int step = 1; step <= 20; ++step) {
      const double t = 0.02 * step;
      const RelCoeffs p{mean.dx + t * dir.dx, mean.dy + t * dir.dy, mean.dw + t * dir.dw, mean.dh + t * dir.dh};
      const double v = gaussian_likelihood(p, mean, 0.3);
      EXPECT_LT(v, prev);
      prev = v;
    }
  }
}

}  // namespace
}  // namespace nohnms
