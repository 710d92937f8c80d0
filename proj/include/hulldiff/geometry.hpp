#pragma once

// Parametric hull representation, feasibility constraints, and
// draft-indexed geometric measures.
//
// Coordinates are LOA-normalized: x runs aft (0) to forward (1) along the
// deck-level length, heights are either a fraction zeta of the depth d or an
// absolute height zL = zeta * d in LOA units. The hull surface is
//
//   y(x, zeta) = (b / 2) * W(u) * S(zeta),   u = (x - X_aft(zeta)) / L(zeta)
//
// with a raked profile X_fwd = 1 - r_b (1 - zeta), X_aft = r_s (1 - zeta),
// a waterplane factor W that rises as u^(1/p_r) over the run, is 1 over the
// parallel midbody and falls as (1-u)^(1/p_e) over the entrance, and a
// section factor S = min(1, (zeta / k_b)^(1/p_s)). An optional ellipsoidal
// bow bulb centred on the stem at height z_u is merged by taking the larger
// half-breadth.

#include "hulldiff/core.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <string>
#include <vector>

namespace hulldiff {

inline constexpr std::size_t kShapeArity = 13;
inline constexpr std::size_t kDraftMarks = 100;
inline constexpr double kLoaMin = 3.0;
inline constexpr double kLoaMax = 450.0;

/// Minimum bulb size, as a fraction of each bulb parameter's upper bound,
/// for a bulb to count as present.
inline constexpr double kBulbTieFraction = 0.05;

enum class Shape : std::size_t {
  beam = 0,
  depth,
  run,
  entrance,
  run_exp,
  entrance_exp,
  section_exp,
  deadrise,
  bow_rake,
  stern_rake,
  bulb_length,
  bulb_radius,
  bulb_height,
};

constexpr std::size_t idx(Shape s) noexcept { return static_cast<std::size_t>(s); }

struct ParamBounds {
  double lo;
  double hi;
};

inline constexpr std::array<const char*, kShapeArity> kShapeNames = {
    "b", "d", "x_r", "x_e", "p_r", "p_e", "p_s", "k_b", "r_b", "r_s", "l_u", "rho_u", "z_u"};

inline constexpr std::array<ParamBounds, kShapeArity> kShapeBounds = {{
    {0.02, 0.5},  // b
    {0.02, 0.3},  // d
    {0.05, 0.6},  // x_r
    {0.05, 0.6},  // x_e
    {0.5, 4.0},   // p_r
    {0.5, 4.0},   // p_e
    {0.5, 6.0},   // p_s
    {0.0, 0.5},   // k_b
    {0.0, 0.3},   // r_b
    {0.0, 0.3},   // r_s
    {0.0, 0.08},  // l_u
    {0.0, 0.15},  // rho_u
    {0.0, 0.15},  // z_u
}};

inline constexpr double kMaxEntrancePlusRun = 0.95;
inline constexpr double kMaxBowPlusSternRake = 0.9;

using ShapeVector = std::array<double, kShapeArity>;

struct HullParams {
  double loa = 1.0;
  ShapeVector shape{};

  double operator[](Shape s) const { return shape[idx(s)]; }
  double& operator[](Shape s) { return shape[idx(s)]; }

  static HullParams from_values(double loa, std::span<const double> shape) {
    if (shape.size() != kShapeArity)
      throw RepresentationError("hull shape vector has arity " + std::to_string(shape.size()) + ", expected " +
                                std::to_string(kShapeArity));
    HullParams p;
    p.loa = loa;
    std::copy(shape.begin(), shape.end(), p.shape.begin());
    return p;
  }

  bool operator==(const HullParams&) const = default;
};

inline void require_loa(double loa) {
  if (!(loa >= kLoaMin && loa <= kLoaMax))
    throw DomainError("LOA " + format_short(loa) + " m outside [3, 450] m");
}

struct Violation {
  std::string constraint;
  double residual; // > 0 means violated
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<Violation> violations;
};

/// Every constraint residual, violated or not; positive means violated.
inline std::vector<Violation> constraint_residuals(const ShapeVector& s) {
  std::vector<Violation> out;
  out.reserve(kShapeArity + 4);
  for (std::size_t i = 0; i < kShapeArity; ++i) {
    const auto [lo, hi] = kShapeBounds[i];
    out.push_back({std::string("box:") + kShapeNames[i], std::max(lo - s[i], s[i] - hi)});
  }
  const auto at = [&](Shape k) { return s[idx(k)]; };
  out.push_back({"entrance_plus_run", at(Shape::entrance) + at(Shape::run) - kMaxEntrancePlusRun});
  out.push_back({"bow_plus_stern_rake", at(Shape::bow_rake) + at(Shape::stern_rake) - kMaxBowPlusSternRake});
  out.push_back({"bulb_below_deck", at(Shape::bulb_height) + at(Shape::bulb_radius) - at(Shape::depth)});
  // Bulb absent (both zero) or both sizes at least the tie fraction of
  // their bound. Continuous in both arguments.
  const double a = std::max(0.0, at(Shape::bulb_length)) / kShapeBounds[idx(Shape::bulb_length)].hi;
  const double r = std::max(0.0, at(Shape::bulb_radius)) / kShapeBounds[idx(Shape::bulb_radius)].hi;
  out.push_back({"bulb_size_tie", std::min(std::max(a, r), kBulbTieFraction - std::min(a, r))});
  return out;
}

inline FeasibilityReport validate(const HullParams& params) {
  FeasibilityReport rep;
  for (auto& v : constraint_residuals(params.shape))
    if (v.residual > 0.0)
      rep.violations.push_back(std::move(v));
  rep.feasible = rep.violations.empty();
  return rep;
}

inline std::string describe(const FeasibilityReport& rep) {
  std::string s;
  for (const auto& v : rep.violations) {
    if (!s.empty())
      s += ", ";
    s += v.constraint + "=" + format_short(v.residual);
  }
  return s;
}

inline void require_feasible(const HullParams& params) {
  const auto rep = validate(params);
  if (!rep.feasible)
    throw FeasibilityError("infeasible hull: " + describe(rep));
}

/// Surface evaluator. Performs no validation, so degenerate shapes such as
/// the box limit (no entrance or run) can be evaluated.
class HullSurface {
public:
  explicit HullSurface(const ShapeVector& s)
      : b_(s[idx(Shape::beam)]), d_(s[idx(Shape::depth)]), x_r_(s[idx(Shape::run)]), x_e_(s[idx(Shape::entrance)]),
        p_r_(s[idx(Shape::run_exp)]), p_e_(s[idx(Shape::entrance_exp)]), p_s_(s[idx(Shape::section_exp)]),
        k_b_(s[idx(Shape::deadrise)]), r_b_(s[idx(Shape::bow_rake)]), r_s_(s[idx(Shape::stern_rake)]),
        l_u_(s[idx(Shape::bulb_length)]), rho_u_(s[idx(Shape::bulb_radius)]), z_u_(s[idx(Shape::bulb_height)]) {
    fullness_ = (x_r_ > 0.0 ? x_r_ * p_r_ / (p_r_ + 1.0) : 0.0) + (1.0 - x_e_ - x_r_) +
                (x_e_ > 0.0 ? x_e_ * p_e_ / (p_e_ + 1.0) : 0.0);
  }

  explicit HullSurface(const HullParams& p) : HullSurface(p.shape) {}

  /// Rectangular prism of breadth b and depth d with transom ends.
  static HullSurface box(double b, double d) {
    ShapeVector s{};
    s[idx(Shape::beam)] = b;
    s[idx(Shape::depth)] = d;
    s[idx(Shape::run_exp)] = 1.0;
    s[idx(Shape::entrance_exp)] = 1.0;
    s[idx(Shape::section_exp)] = 1.0;
    return HullSurface(s);
  }

  double beam() const { return b_; }
  double depth() const { return d_; }
  double bulb_length() const { return l_u_; }
  double bulb_radius() const { return rho_u_; }
  double bulb_height() const { return z_u_; }
  bool has_bulb() const { return l_u_ > 0.0 && rho_u_ > 0.0; }

  double x_aft(double zeta) const { return r_s_ * (1.0 - zeta); }
  double x_fwd(double zeta) const { return 1.0 - r_b_ * (1.0 - zeta); }
  double length(double zeta) const { return x_fwd(zeta) - x_aft(zeta); }

  /// Integral of W over u in [0, 1].
  double fullness() const { return fullness_; }

  double waterplane_factor(double u) const {
    if (u < 0.0 || u > 1.0)
      return 0.0;
    if (x_r_ > 0.0 && u < x_r_)
      return std::pow(u / x_r_, 1.0 / p_r_);
    if (x_e_ > 0.0 && u > 1.0 - x_e_)
      return std::pow((1.0 - u) / x_e_, 1.0 / p_e_);
    return 1.0;
  }

  double section_factor(double zeta) const {
    if (k_b_ <= 0.0)
      return 1.0;
    if (zeta <= 0.0)
      return 0.0;
    if (zeta >= k_b_)
      return 1.0;
    return std::pow(zeta / k_b_, 1.0 / p_s_);
  }

  double hull_half_breadth(double x, double zeta) const {
    const double len = length(zeta);
    if (len <= 0.0)
      return 0.0;
    return 0.5 * b_ * waterplane_factor((x - x_aft(zeta)) / len) * section_factor(zeta);
  }

  double bulb_center_x() const { return x_fwd(d_ > 0.0 ? z_u_ / d_ : 0.0); }

  double bulb_half_breadth(double x, double zeta) const {
    if (!has_bulb())
      return 0.0;
    const double ax = (x - bulb_center_x()) / l_u_;
    const double az = (zeta * d_ - z_u_) / rho_u_;
    const double q = ax * ax + az * az;
    return q >= 1.0 ? 0.0 : rho_u_ * std::sqrt(1.0 - q);
  }

  double half_breadth(double x, double zeta) const {
    return std::max(hull_half_breadth(x, zeta), bulb_half_breadth(x, zeta));
  }

  /// Longitudinal half-extent of the bulb section at height zeta (0 if none).
  double bulb_half_length(double zeta) const {
    if (!has_bulb())
      return 0.0;
    const double az = (zeta * d_ - z_u_) / rho_u_;
    return az * az >= 1.0 ? 0.0 : l_u_ * std::sqrt(1.0 - az * az);
  }

  /// Forward-most point with non-zero breadth at height zeta.
  double fore_extent(double zeta) const {
    const double bl = bulb_half_length(zeta);
    return bl > 0.0 ? std::max(x_fwd(zeta), bulb_center_x() + bl) : x_fwd(zeta);
  }

  /// Waterline length of the hull profile at draft ratio t (stem to stern).
  double waterline_length(double t) const { return length(t); }

  double hull_waterplane_area(double zeta) const { return b_ * section_factor(zeta) * length(zeta) * fullness_; }

  /// Waterplane area the bulb adds outside the hull at height zeta.
  double bulb_excess_area(double zeta) const {
    const double half = bulb_half_length(zeta);
    if (half <= 0.0)
      return 0.0;
    constexpr int n = 64;
    const double x0 = bulb_center_x() - half;
    const double h = 2.0 * half / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = x0 + i * h;
      const double f = 2.0 * std::max(0.0, bulb_half_breadth(x, zeta) - hull_half_breadth(x, zeta));
      acc += f * ((i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    return acc * h / 3.0;
  }

  double waterplane_area(double zeta) const { return hull_waterplane_area(zeta) + bulb_excess_area(zeta); }

  /// Transom area density: breadth of any end wall at height zeta.
  double end_cap_breadth(double zeta) const {
    return b_ * section_factor(zeta) * (waterplane_factor(0.0) + waterplane_factor(1.0));
  }

private:
  double b_, d_, x_r_, x_e_, p_r_, p_e_, p_s_, k_b_, r_b_, r_s_, l_u_, rho_u_, z_u_;
  double fullness_ = 1.0;
};

/// Half-breadth as a fraction of LOA at longitudinal fraction x and height
/// fraction z of the depth.
inline double half_breadth(const HullParams& params, double x, double z) {
  require_feasible(params);
  return HullSurface(params).half_breadth(x, z);
}

struct CurvePoint {
  double vol = 0.0;
  double area = 0.0;
  double wl = 0.0;
};

struct GeoCurves {
  std::array<double, kDraftMarks> draft_marks{};
  std::array<double, kDraftMarks> vol{};
  std::array<double, kDraftMarks> area{};
  std::array<double, kDraftMarks> wl{};

  CurvePoint at(std::size_t k) const { return {vol[k], area[k], wl[k]}; }
};

inline constexpr double draft_mark(std::size_t k) { return static_cast<double>(k + 1) / kDraftMarks; }

namespace detail {

inline constexpr double kIntervalsPerUnitDraft = 400.0;
inline constexpr int kMeshStations = 160;
inline constexpr int kBulbMesh = 48;

inline double tri_area(const std::array<double, 3>& a, const std::array<double, 3>& b, const std::array<double, 3>& c) {
  const double ux = b[0] - a[0], uy = b[1] - a[1], uz = b[2] - a[2];
  const double vx = c[0] - a[0], vy = c[1] - a[1], vz = c[2] - a[2];
  const double cx = uy * vz - uz * vy, cy = uz * vx - ux * vz, cz = ux * vy - uy * vx;
  return 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
}

} // namespace detail

/// Normalized volume, wetted area and waterline length at ascending draft
/// ratios in (0, 1]. Volume integrates waterplane areas by the composite
/// trapezoid rule; wetted area sums a triangulated surface mesh plus any
/// flat bottom and transom end caps.
inline std::vector<CurvePoint> measure_surface(const HullSurface& hull, std::span<const double> marks) {
  std::vector<CurvePoint> out(marks.size());
  if (marks.empty())
    return out;

  // Height nodes: each gap between marks is split into equal intervals.
  std::vector<double> zeta{0.0};
  std::vector<std::size_t> mark_node(marks.size());
  double prev = 0.0;
  for (std::size_t k = 0; k < marks.size(); ++k) {
    const double t = marks[k];
    if (!(t > prev || (k > 0 && t == prev)) || t > 1.0)
      throw DomainError("draft marks must be ascending in (0, 1]");
    const double gap = t - prev;
    const int m = gap > 0.0 ? std::max(4, static_cast<int>(std::lround(detail::kIntervalsPerUnitDraft * gap))) : 0;
    for (int i = 1; i <= m; ++i)
      zeta.push_back(i == m ? t : prev + gap * i / m);
    mark_node[k] = zeta.size() - 1;
    prev = t;
  }
  const std::size_t nodes = zeta.size();
  const double d = hull.depth();

  std::vector<double> strip(nodes - 1, 0.0);

  // Hull sides on a boundary-fitted (u, zeta) mesh, cosine-clustered at the
  // ends where the waterplane factor is steep.
  const int nu = detail::kMeshStations;
  std::vector<double> us(nu + 1);
  for (int i = 0; i <= nu; ++i)
    us[i] = 0.5 * (1.0 - std::cos(std::numbers::pi * i / nu));
  using P3 = std::array<double, 3>;
  std::vector<P3> lower(nu + 1), upper(nu + 1);
  const auto fill_row = [&](double z, std::vector<P3>& row) {
    const double xa = hull.x_aft(z), len = hull.length(z);
    for (int i = 0; i <= nu; ++i) {
      const double x = xa + us[i] * len;
      row[i] = {x, hull.hull_half_breadth(x, z), z * d};
    }
  };
  const bool bulb = hull.has_bulb();
  const auto hidden_by_bulb = [&](const P3& a, const P3& b, const P3& c) {
    if (!bulb)
      return false;
    const double cx = (a[0] + b[0] + c[0]) / 3.0;
    const double cz = (a[2] + b[2] + c[2]) / 3.0 / d;
    return hull.bulb_half_breadth(cx, cz) > hull.hull_half_breadth(cx, cz);
  };
  fill_row(zeta[0], lower);
  for (std::size_t n = 0; n + 1 < nodes; ++n) {
    fill_row(zeta[n + 1], upper);
    double acc = 0.0;
    for (int i = 0; i < nu; ++i) {
      const P3 &p00 = lower[i], &p10 = lower[i + 1], &p01 = upper[i], &p11 = upper[i + 1];
      if (!hidden_by_bulb(p00, p10, p11))
        acc += detail::tri_area(p00, p10, p11);
      if (!hidden_by_bulb(p00, p11, p01))
        acc += detail::tri_area(p00, p11, p01);
    }
    strip[n] += 2.0 * acc;
    std::swap(lower, upper);
  }

  // Exposed part of the bulb, binned into height strips by triangle centroid.
  if (bulb) {
    const int m = detail::kBulbMesh;
    const double xc = hull.bulb_center_x();
    std::vector<P3> pts((m + 1) * (m + 1));
    for (int i = 0; i <= m; ++i) {
      const double phi = std::numbers::pi * i / m;
      for (int j = 0; j <= m; ++j) {
        const double psi = -0.5 * std::numbers::pi + std::numbers::pi * j / m;
        pts[i * (m + 1) + j] = {xc + hull.bulb_length() * std::cos(phi),
                                hull.bulb_radius() * std::sin(phi) * std::cos(psi),
                                hull.bulb_height() + hull.bulb_radius() * std::sin(phi) * std::sin(psi)};
      }
    }
    const double top = zeta.back() * d;
    const auto add = [&](const P3& a, const P3& b, const P3& c) {
      const double cx = (a[0] + b[0] + c[0]) / 3.0;
      const double cy = (a[1] + b[1] + c[1]) / 3.0;
      const double cz = (a[2] + b[2] + c[2]) / 3.0;
      if (cz < 0.0 || cz >= top || cy <= hull.hull_half_breadth(cx, cz / d))
        return;
      const auto it = std::upper_bound(zeta.begin(), zeta.end(), cz / d);
      const auto n = static_cast<std::size_t>(std::distance(zeta.begin(), it)) - 1;
      if (n < strip.size())
        strip[n] += 2.0 * detail::tri_area(a, b, c);
    };
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const P3& p00 = pts[i * (m + 1) + j];
        const P3& p10 = pts[(i + 1) * (m + 1) + j];
        const P3& p01 = pts[i * (m + 1) + j + 1];
        const P3& p11 = pts[(i + 1) * (m + 1) + j + 1];
        add(p00, p10, p11);
        add(p00, p11, p01);
      }
  }

  // Cumulative sums.
  const double bottom = hull.hull_waterplane_area(0.0);
  double vol = 0.0, area = bottom, cap = 0.0;
  std::vector<double> vol_at(nodes), area_at(nodes);
  vol_at[0] = 0.0;
  area_at[0] = bottom;
  double wp_prev = hull.waterplane_area(zeta[0]);
  double cap_prev = hull.end_cap_breadth(zeta[0]);
  for (std::size_t n = 0; n + 1 < nodes; ++n) {
    const double dz = (zeta[n + 1] - zeta[n]) * d;
    const double wp = hull.waterplane_area(zeta[n + 1]);
    const double cb = hull.end_cap_breadth(zeta[n + 1]);
    vol += 0.5 * (wp_prev + wp) * dz;
    cap += 0.5 * (cap_prev + cb) * dz;
    area += strip[n];
    vol_at[n + 1] = vol;
    area_at[n + 1] = area + cap;
    wp_prev = wp;
    cap_prev = cb;
  }
  for (std::size_t k = 0; k < marks.size(); ++k) {
    out[k].vol = vol_at[mark_node[k]];
    out[k].area = area_at[mark_node[k]];
    out[k].wl = hull.waterline_length(marks[k]);
  }
  return out;
}

inline CurvePoint measure_at(const HullSurface& hull, double t_star) {
  if (!(t_star > 0.0 && t_star <= 1.0))
    throw DomainError("draft ratio " + format_short(t_star) + " outside (0, 1]");
  const double marks[1] = {t_star};
  return measure_surface(hull, marks)[0];
}

/// Volume alone at one draft ratio; same nodes and rule as measure_at.
inline double measure_volume(const HullSurface& hull, double t_star) {
  if (!(t_star > 0.0 && t_star <= 1.0))
    throw DomainError("draft ratio " + format_short(t_star) + " outside (0, 1]");
  const int m = std::max(4, static_cast<int>(std::lround(detail::kIntervalsPerUnitDraft * t_star)));
  double vol = 0.0, prev = hull.waterplane_area(0.0), z0 = 0.0;
  for (int i = 1; i <= m; ++i) {
    const double z = i == m ? t_star : t_star * i / m;
    const double dz = (z - z0) * hull.depth();
    const double wp = hull.waterplane_area(z);
    vol += 0.5 * (prev + wp) * dz;
    prev = wp;
    z0 = z;
  }
  return vol;
}

inline GeoCurves measure_surface_curves(const HullSurface& hull) {
  GeoCurves c;
  for (std::size_t k = 0; k < kDraftMarks; ++k)
    c.draft_marks[k] = draft_mark(k);
  const auto pts = measure_surface(hull, c.draft_marks);
  for (std::size_t k = 0; k < kDraftMarks; ++k) {
    c.vol[k] = pts[k].vol;
    c.area[k] = pts[k].area;
    c.wl[k] = pts[k].wl;
  }
  return c;
}

/// V, SA and WL normalized by LOA^3, LOA^2 and LOA at the 100 draft marks.
inline GeoCurves measure_curves(const HullParams& params) {
  require_feasible(params);
  return measure_surface_curves(HullSurface(params));
}

/// Piecewise-linear interpolation over the draft marks. Below the first
/// mark volume falls linearly to zero while area and waterline hold.
inline CurvePoint interpolate_curves(const GeoCurves& c, double t_star) {
  if (!(t_star > 0.0 && t_star <= 1.0))
    throw DomainError("draft ratio " + format_short(t_star) + " outside (0, 1]");
  const double first = c.draft_marks[0];
  if (t_star <= first)
    return {c.vol[0] * t_star / first, c.area[0], c.wl[0]};
  const double pos = t_star * kDraftMarks - 1.0;
  auto k = static_cast<std::size_t>(std::floor(pos));
  if (k >= kDraftMarks - 1)
    return c.at(kDraftMarks - 1);
  const double w = pos - static_cast<double>(k);
  if (w == 0.0)
    return c.at(k);
  return {c.vol[k] + w * (c.vol[k + 1] - c.vol[k]), c.area[k] + w * (c.area[k + 1] - c.area[k]),
          c.wl[k] + w * (c.wl[k + 1] - c.wl[k])};
}

/// Longitudinal slope dy/dx of the submerged centerplane, one value per
/// cell of a uniform nx-by-nz grid. Coordinates are in meters with z <= 0
/// measured up to the free surface.
struct SlopeField {
  std::size_t nx = 0;
  std::size_t nz = 0;
  double x0 = 0.0; // aft edge
  double dx = 0.0;
  double z0 = 0.0; // keel edge (-draft)
  double dz = 0.0;
  std::vector<double> slope; // slope[i * nz + j], i along x, j along z

  double at(std::size_t i, std::size_t j) const { return slope[i * nz + j]; }
  double x_center(std::size_t i) const { return x0 + (static_cast<double>(i) + 0.5) * dx; }
  double z_center(std::size_t j) const { return z0 + (static_cast<double>(j) + 0.5) * dz; }
  double max_abs() const {
    double m = 0.0;
    for (double v : slope)
      m = std::max(m, std::abs(v));
    return m;
  }
};

/// Longitudinal span [x_lo, x_hi] of the submerged centerplane at draft t*.
/// The profile is longest at the waterline; the bulb may reach further.
inline std::pair<double, double> centerplane_extent(const HullSurface& hull, double t_star) {
  const double draft = t_star * hull.depth();
  double x_hi = hull.x_fwd(t_star);
  if (hull.has_bulb() && hull.bulb_height() - hull.bulb_radius() < draft) {
    const double zc = std::clamp(hull.bulb_height(), 0.0, draft);
    x_hi = std::max(x_hi, hull.fore_extent(zc / hull.depth()));
  }
  return {hull.x_aft(t_star), x_hi};
}

inline SlopeField centerplane_slopes(const HullSurface& hull, double t_star, std::size_t nx, std::size_t nz,
                                     double loa) {
  if (nx < 8 || nz < 8)
    throw DomainError("slope grid needs at least 8 cells per direction");
  if (!(t_star > 0.0 && t_star <= 1.0))
    throw DomainError("draft ratio " + format_short(t_star) + " outside (0, 1]");
  const double draft = t_star * hull.depth();
  const auto [x_lo, x_hi] = centerplane_extent(hull, t_star);
  SlopeField f;
  f.nx = nx;
  f.nz = nz;
  const double dxn = (x_hi - x_lo) / static_cast<double>(nx);
  const double dzn = draft / static_cast<double>(nz);
  f.x0 = x_lo * loa;
  f.dx = dxn * loa;
  f.z0 = -draft * loa;
  f.dz = dzn * loa;
  f.slope.assign(nx * nz, 0.0);
  std::vector<double> column(nx + 1);
  for (std::size_t j = 0; j < nz; ++j) {
    const double zeta = (static_cast<double>(j) + 0.5) * dzn / hull.depth();
    for (std::size_t i = 0; i <= nx; ++i)
      column[i] = hull.half_breadth(x_lo + static_cast<double>(i) * dxn, zeta);
    for (std::size_t i = 0; i < nx; ++i)
      f.slope[i * nz + j] = (column[i + 1] - column[i]) / dxn;
  }
  return f;
}

inline SlopeField centerplane_slopes(const HullParams& params, double t_star, std::size_t nx, std::size_t nz) {
  require_feasible(params);
  return centerplane_slopes(HullSurface(params), t_star, nx, nz, params.loa);
}

inline std::string hull_csv_header() {
  std::string h = "loa";
  for (const char* n : kShapeNames)
    h += std::string(",") + n;
  return h;
}

inline std::string hull_csv_row(const HullParams& p) {
  std::string r = format_double(p.loa);
  for (double v : p.shape)
    r += "," + format_double(v);
  return r;
}

/// Parses loa plus the shape parameters from the leading fields of a row.
inline HullParams parse_hull_fields(std::span<const std::string> fields) {
  if (fields.size() < kShapeArity + 1)
    throw RepresentationError("hull row has " + std::to_string(fields.size()) + " fields, expected at least " +
                              std::to_string(kShapeArity + 1));
  HullParams p;
  p.loa = parse_double(fields[0], "loa");
  for (std::size_t i = 0; i < kShapeArity; ++i)
    p.shape[i] = parse_double(fields[i + 1], kShapeNames[i]);
  return p;
}

} // namespace hulldiff
