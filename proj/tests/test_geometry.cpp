#include "hulldiff/geometry.hpp"

#include <gtest/gtest.h>

using namespace hulldiff;

namespace {

HullParams midpoint_hull() {
  HullParams p;
  p.loa = 100.0;
  for (std::size_t i = 0; i < kShapeArity; ++i)
    p.shape[i] = 0.5 * (kShapeBounds[i].lo + kShapeBounds[i].hi);
  p[Shape::bulb_length] = 0.0;
  p[Shape::bulb_radius] = 0.0;
  p[Shape::bulb_height] = 0.0;
  return p;
}

HullParams reference_hull() {
  HullParams p;
  p.loa = 120.0;
  p.shape = {0.14, 0.09, 0.3, 0.35, 1.8, 1.4, 2.5, 0.12, 0.08, 0.05, 0.0, 0.0, 0.0};
  return p;
}

HullParams bulbous_hull() {
  auto p = reference_hull();
  p[Shape::bulb_length] = 0.04;
  p[Shape::bulb_radius] = 0.025;
  p[Shape::bulb_height] = 0.035;
  return p;
}

} // namespace

TEST(Validate, MidpointFeasible) {
  const auto rep = validate(midpoint_hull());
  EXPECT_TRUE(rep.feasible);
  EXPECT_TRUE(rep.violations.empty());
}

TEST(Validate, EntrancePlusRun) {
  auto p = midpoint_hull();
  p[Shape::entrance] = 0.6;
  p[Shape::run] = 0.6;
  const auto rep = validate(p);
  ASSERT_FALSE(rep.feasible);
  ASSERT_EQ(rep.violations.size(), 1u);
  EXPECT_EQ(rep.violations[0].constraint, "entrance_plus_run");
  EXPECT_NEAR(rep.violations[0].residual, 0.25, 1e-12);
}

TEST(Validate, BulbBelowDeck) {
  auto p = midpoint_hull();
  p[Shape::bulb_radius] = 0.1;
  p[Shape::bulb_height] = 0.05;
  p[Shape::bulb_length] = 0.04;
  p[Shape::depth] = 0.08;
  const auto rep = validate(p);
  ASSERT_FALSE(rep.feasible);
  bool found = false;
  for (const auto& v : rep.violations)
    if (v.constraint == "bulb_below_deck") {
      found = true;
      EXPECT_NEAR(v.residual, 0.07, 1e-12);
    }
  EXPECT_TRUE(found);
}

TEST(Validate, BulbTieRequiresBoth) {
  auto p = midpoint_hull();
  p[Shape::bulb_length] = 0.04;
  EXPECT_FALSE(validate(p).feasible);
  p[Shape::bulb_radius] = 0.03;
  p[Shape::bulb_height] = 0.04;
  EXPECT_TRUE(validate(p).feasible);
}

TEST(Validate, ResidualsContinuous) {
  const auto base = bulbous_hull();
  const auto r0 = constraint_residuals(base.shape);
  for (std::size_t i = 0; i < kShapeArity; ++i) {
    auto s = base.shape;
    s[i] += 1e-7;
    const auto r1 = constraint_residuals(s);
    for (std::size_t k = 0; k < r0.size(); ++k)
      EXPECT_LT(std::abs(r1[k].residual - r0[k].residual), 1e-5) << r0[k].constraint;
  }
}

TEST(Validate, ArityChecked) {
  const std::vector<double> twelve(12, 0.1);
  EXPECT_THROW(HullParams::from_values(10.0, twelve), RepresentationError);
}

TEST(HalfBreadth, BoxLimitIsHalfBeam) {
  const auto box = HullSurface::box(0.1, 0.05);
  for (double x : {0.0, 0.1, 0.5, 0.99, 1.0})
    for (double z : {0.01, 0.5, 1.0})
      EXPECT_DOUBLE_EQ(box.half_breadth(x, z), 0.05);
}

TEST(HalfBreadth, ZeroAtProfileEnds) {
  const auto p = reference_hull();
  const HullSurface h(p);
  for (double z : {0.1, 0.5, 0.9}) {
    EXPECT_NEAR(half_breadth(p, h.x_aft(z), z), 0.0, 1e-15);
    EXPECT_NEAR(half_breadth(p, h.x_fwd(z), z), 0.0, 1e-15);
  }
}

TEST(HalfBreadth, ReferencePointMatchesFormula) {
  const auto p = reference_hull();
  // x = 0.5, z = 0.5: u = (0.5 - 0.025) / (0.96 - 0.025) lies in the midbody
  // and z is above the deadrise height, so y = b / 2.
  const double xa = 0.05 * 0.5, xf = 1.0 - 0.08 * 0.5;
  const double u = (0.5 - xa) / (xf - xa);
  ASSERT_GT(u, 0.3);
  ASSERT_LT(u, 0.65);
  EXPECT_NEAR(half_breadth(p, 0.5, 0.5), 0.07, 1e-15);
  // In the entrance at z = 0.06 (below k_b): both factors active.
  const double z = 0.06;
  const double xa2 = 0.05 * (1 - z), xf2 = 1.0 - 0.08 * (1 - z);
  const double x = xa2 + 0.85 * (xf2 - xa2);
  const double w = std::pow((1.0 - 0.85) / 0.35, 1.0 / 1.4);
  const double s = std::pow(z / 0.12, 1.0 / 2.5);
  EXPECT_NEAR(half_breadth(p, x, z), 0.07 * w * s, 1e-14);
}

TEST(HalfBreadth, InfeasibleThrows) {
  auto p = midpoint_hull();
  p[Shape::beam] = 0.9;
  EXPECT_THROW(half_breadth(p, 0.5, 0.5), FeasibilityError);
}

TEST(MeasureCurves, BoxHullClosedForms) {
  const double b = 0.1, d = 0.05;
  const auto c = measure_surface_curves(HullSurface::box(b, d));
  for (std::size_t k = 0; k < kDraftMarks; ++k) {
    const double t = draft_mark(k);
    EXPECT_NEAR(c.vol[k], b * d * t, 1e-6 * b * d * t);
    const double sa = b + 2.0 * d * t + 2.0 * b * d * t;
    EXPECT_NEAR(c.area[k], sa, 1e-6 * sa);
    EXPECT_NEAR(c.wl[k], 1.0, 1e-12);
  }
  EXPECT_NEAR(c.area[49], 0.155, 1e-9);
}

TEST(MeasureCurves, MonotoneAndBounded) {
  for (const auto& p : {reference_hull(), bulbous_hull()}) {
    const auto c = measure_curves(p);
    const double b = p[Shape::beam], d = p[Shape::depth];
    for (std::size_t k = 0; k < kDraftMarks; ++k) {
      EXPECT_GE(c.vol[k], 0.0);
      EXPECT_GE(c.wl[k], 0.0);
      EXPECT_LE(c.wl[k], 1.0);
      if (p[Shape::bulb_length] == 0.0) {
        EXPECT_LE(c.vol[k], b * d * draft_mark(k));
      }
      if (k > 0) {
        EXPECT_GE(c.vol[k], c.vol[k - 1]);
        EXPECT_GE(c.area[k], c.area[k - 1]);
      }
    }
  }
}

TEST(MeasureCurves, IndependentOfLoa) {
  auto p = bulbous_hull();
  const auto a = measure_curves(p);
  p.loa = 7.0;
  const auto b = measure_curves(p);
  EXPECT_EQ(a.vol, b.vol);
  EXPECT_EQ(a.area, b.area);
  EXPECT_EQ(a.wl, b.wl);
}

TEST(MeasureCurves, BeamLinearityOfVolume) {
  auto p = reference_hull();
  const auto a = measure_curves(p);
  p[Shape::beam] *= 1.5;
  const auto b = measure_curves(p);
  for (std::size_t k = 0; k < kDraftMarks; ++k)
    EXPECT_NEAR(b.vol[k], 1.5 * a.vol[k], 1e-12 * b.vol[k]);
}

TEST(MeasureCurves, VolumeMatchesFineQuadrature) {
  // Brute-force midpoint rule over the half-breadth field.
  const auto p = bulbous_hull();
  const HullSurface h(p);
  const auto c = measure_curves(p);
  const double t = 0.6, d = p[Shape::depth];
  const int nx = 4000, nz = 600;
  double acc = 0.0;
  for (int j = 0; j < nz; ++j) {
    const double z = (j + 0.5) / nz * t;
    for (int i = 0; i < nx; ++i)
      acc += 2.0 * h.half_breadth((i + 0.5) / nx * 1.1, z);
  }
  const double vol = acc * (1.1 / nx) * (t * d / nz);
  EXPECT_NEAR(c.vol[59], vol, 2e-3 * vol);
}

TEST(MeasureCurves, AreaExceedsProjectedSides) {
  const auto p = reference_hull();
  const HullSurface h(p);
  const auto c = measure_curves(p);
  // Sides at least twice the lateral projection of the submerged profile.
  const double t = 1.0, d = p[Shape::depth];
  const double lateral = 0.5 * (h.length(0.0) + h.length(t)) * t * d;
  EXPECT_GT(c.area[99], 2.0 * lateral);
}

TEST(InterpolateCurves, ExactAndMidpoint) {
  const auto c = measure_curves(reference_hull());
  const auto at = interpolate_curves(c, draft_mark(49));
  EXPECT_EQ(at.vol, c.vol[49]);
  EXPECT_EQ(at.area, c.area[49]);
  EXPECT_EQ(at.wl, c.wl[49]);
  const auto mid = interpolate_curves(c, 0.5 * (draft_mark(20) + draft_mark(21)));
  EXPECT_NEAR(mid.vol, 0.5 * (c.vol[20] + c.vol[21]), 1e-15);
  EXPECT_NEAR(mid.area, 0.5 * (c.area[20] + c.area[21]), 1e-15);
}

TEST(InterpolateCurves, BoxHullAnalytic) {
  const auto c = measure_surface_curves(HullSurface::box(0.1, 0.05));
  EXPECT_NEAR(interpolate_curves(c, 0.37).vol, 0.1 * 0.05 * 0.37, 1e-12);
  EXPECT_NEAR(interpolate_curves(c, 0.005).vol, 0.1 * 0.05 * 0.005, 1e-12);
}

TEST(InterpolateCurves, OutOfRange) {
  const auto c = measure_curves(reference_hull());
  EXPECT_THROW(interpolate_curves(c, 0.0), DomainError);
  EXPECT_THROW(interpolate_curves(c, 1.01), DomainError);
}

TEST(Slopes, BoxInteriorZero) {
  const auto f = centerplane_slopes(HullSurface::box(0.1, 0.05), 0.5, 32, 8, 1.0);
  for (std::size_t i = 0; i < f.nx; ++i)
    for (std::size_t j = 0; j < f.nz; ++j)
      EXPECT_EQ(f.at(i, j), 0.0);
}

TEST(Slopes, WedgeBowConstant) {
  ShapeVector s{};
  s[idx(Shape::beam)] = 0.1;
  s[idx(Shape::depth)] = 0.06;
  s[idx(Shape::run)] = 0.2;
  s[idx(Shape::entrance)] = 0.25;
  s[idx(Shape::run_exp)] = 1.0;
  s[idx(Shape::entrance_exp)] = 1.0;
  s[idx(Shape::section_exp)] = 1.0;
  const auto f = centerplane_slopes(HullSurface(s), 0.5, 80, 8, 1.0);
  const double expected = -(0.1 / 2.0) / 0.25;
  for (std::size_t i = 0; i < f.nx; ++i) {
    const double x = f.x_center(i);
    if (x <= 0.76 || x >= 0.99)
      continue;
    for (std::size_t j = 0; j < f.nz; ++j)
      EXPECT_NEAR(f.at(i, j), expected, 1e-12);
  }
}

TEST(Slopes, GridRefinement) {
  const auto p = reference_hull();
  const auto coarse = centerplane_slopes(p, 0.5, 64, 32);
  const auto fine = centerplane_slopes(p, 0.5, 256, 128);
  double diff = 0.0;
  for (std::size_t i = 0; i < coarse.nx; ++i)
    for (std::size_t j = 0; j < coarse.nz; ++j) {
      // Compare cell averages of the fine grid against the coarse cell.
      double avg = 0.0;
      for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b)
          avg += fine.at(4 * i + a, 4 * j + b);
      diff = std::max(diff, std::abs(avg / 16.0 - coarse.at(i, j)));
    }
  EXPECT_LT(diff, 0.02 * fine.max_abs());
}

TEST(Slopes, SmallGridRejected) {
  EXPECT_THROW(centerplane_slopes(reference_hull(), 0.5, 4, 32), DomainError);
}

TEST(HullCsv, RoundTrip) {
  const auto p = bulbous_hull();
  const auto fields = split(hull_csv_row(p), ',');
  EXPECT_EQ(parse_hull_fields(fields), p);
  EXPECT_EQ(split(hull_csv_header(), ',').size(), kShapeArity + 1);
}

TEST(MeasureCurves, VolumeOnlyMatchesFullMeasure) {
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    ShapeVector s;
    for (std::size_t k = 0; k < kShapeArity; ++k)
      s[k] = std::uniform_real_distribution<double>(kShapeBounds[k].lo, kShapeBounds[k].hi)(rng);
    const HullSurface h(s);
    for (double t : {0.013, 0.25, 0.5, 0.91, 1.0})
      EXPECT_NEAR(measure_volume(h, t) / measure_at(h, t).vol, 1.0, 1e-12);
  }
}
