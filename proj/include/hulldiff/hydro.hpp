#pragma once

// Thin-ship wave resistance (Michell's integral), ITTC-1957 skin friction,
// and the log-scaled total resistance coefficient.

#include "hulldiff/core.hpp"
#include "hulldiff/geometry.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace hulldiff {

struct WaterConstants {
  double rho = 1025.0;
  double g = 9.81;
  double nu = 1.19e-6;
};

struct FlowCondition {
  double speed = 0.0; // m/s
  double loa = 1.0;   // m
  double t_star = 0.5;
  WaterConstants water{};
};

inline double froude_number(double speed, double wl, double loa, double g = 9.81) {
  if (!(wl * loa > 0.0))
    throw DomainError("froude number needs a positive waterline length");
  return speed / std::sqrt(g * wl * loa);
}

inline double speed_from_froude(double fn, double wl, double loa, double g = 9.81) {
  if (!(wl * loa > 0.0))
    throw DomainError("froude number needs a positive waterline length");
  return fn * std::sqrt(g * wl * loa);
}

inline double friction_coefficient(double re) {
  if (!(re > 100.0))
    throw DomainError("ITTC-1957 line undefined for Re = " + format_short(re));
  const double l = std::log10(re) - 2.0;
  return 0.075 / (l * l);
}

inline double reynolds_number(const FlowCondition& c, double wl) { return c.speed * wl * c.loa / c.water.nu; }

/// Skin friction in newtons from normalized wetted area and waterline.
inline double friction_resistance(const FlowCondition& c, double sa, double wl) {
  if (sa < 0.0 || wl < 0.0)
    throw DomainError("negative wetted area or waterline");
  if (sa == 0.0)
    return 0.0;
  const double cf = friction_coefficient(reynolds_number(c, wl));
  return 0.5 * cf * c.water.rho * c.speed * c.speed * sa * c.loa * c.loa;
}

inline double dynamic_pressure_area(const FlowCondition& c) {
  return 0.5 * c.water.rho * c.speed * c.speed * c.loa * c.loa;
}

/// log10 of total resistance over (rho U^2 LOA^2 / 2).
inline double total_resistance_coefficient(double rw, double rf, const FlowCondition& c) {
  const double total = rw + rf;
  if (!(total > 0.0))
    throw DomainError("total resistance must be positive, got " + format_short(total));
  return std::log10(total / dynamic_pressure_area(c));
}

inline double total_resistance_from_coefficient(double ct, const FlowCondition& c) {
  return std::pow(10.0, ct) * dynamic_pressure_area(c);
}

struct MichellOptions {
  double panel_width = 0.125;     // theta panel width
  double phase_per_interval = std::numbers::pi / 4.0;
  int min_nodes = 192;
  double tail_tolerance = 1e-6;
  double resolution = 1.0;        // multiplies every interval count
  double max_theta = 12.0;
};

struct MichellResult {
  double rw = 0.0;
  int nodes = 0;
  double theta_max = 0.0;
  double refinement_change = 0.0; // relative Simpson-vs-coarse disagreement
  bool accurate = true;
};

namespace detail {

/// |I + iJ|^2 at lambda for a slope field with coordinates in meters.
struct MichellKernel {
  const SlopeField& f;
  double k0;
  std::vector<double> row_sum;

  MichellKernel(const SlopeField& field, double k0_) : f(field), k0(k0_), row_sum(field.nx) {}

  double operator()(double lambda) {
    const double k = k0 * lambda;
    const double kappa = k0 * lambda * lambda;
    // Depth factors: exact integral of exp(kappa z) across each row. Rows
    // whose top lies deeper than 40 / kappa contribute below round-off.
    const std::size_t nz = f.nz;
    std::size_t j0 = 0;
    const double cutoff = 40.0 / kappa;
    while (j0 < nz && -(f.z0 + static_cast<double>(j0 + 1) * f.dz) > cutoff)
      ++j0;
    if (j0 == nz)
      return 0.0;
    double zf[512];
    std::vector<double> zf_heap;
    double* zrow = zf;
    if (nz > 512) {
      zf_heap.resize(nz);
      zrow = zf_heap.data();
    }
    const double shrink = -std::expm1(-kappa * f.dz) / kappa;
    for (std::size_t j = j0; j < nz; ++j) {
      const double top = f.z0 + static_cast<double>(j + 1) * f.dz;
      zrow[j] = std::exp(kappa * top) * shrink;
    }
    const std::size_t active = nz - j0;
    for (std::size_t i = 0; i < f.nx; ++i) {
      const double* s = f.slope.data() + i * nz + j0;
      const double* z = zrow + j0;
      double acc = 0.0;
      for (std::size_t j = 0; j < active; ++j)
        acc += s[j] * z[j];
      row_sum[i] = acc;
    }
    // Longitudinal factors: exact integral of exp(i k x) across each cell.
    const double half = 0.5 * k * f.dx;
    const double w = f.dx * (half == 0.0 ? 1.0 : std::sin(half) / half);
    double c = std::cos(k * (f.x0 + 0.5 * f.dx)), s = std::sin(k * (f.x0 + 0.5 * f.dx));
    const double cs = std::cos(k * f.dx), ss = std::sin(k * f.dx);
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < f.nx; ++i) {
      re += row_sum[i] * c;
      im += row_sum[i] * s;
      const double cn = c * cs - s * ss;
      s = s * cs + c * ss;
      c = cn;
    }
    return w * w * (re * re + im * im);
  }
};

inline double row_total_variation(const SlopeField& f) {
  double tv = 0.0;
  for (std::size_t j = 0; j < f.nz; ++j) {
    double v = std::abs(f.at(0, j)) + std::abs(f.at(f.nx - 1, j));
    for (std::size_t i = 1; i < f.nx; ++i)
      v += std::abs(f.at(i, j) - f.at(i - 1, j));
    tv = std::max(tv, v);
  }
  return tv;
}

} // namespace detail

/// R_w = 4 rho g^2 / (pi U^2) * int_1^inf (I^2 + J^2) lambda^2 / sqrt(lambda^2 - 1) dlambda
/// evaluated with lambda = cosh(theta) by panelwise Simpson quadrature.
/// Truncation uses the bound |I + iJ| <= TV / (k0^2 lambda^3), with TV the
/// largest total variation of a slope row.
inline MichellResult michell_wave_resistance(const SlopeField& f, const FlowCondition& c,
                                             const MichellOptions& opt = {}) {
  if (!(c.speed > 0.0))
    throw DomainError("speed must be positive for wave resistance");
  MichellResult out;
  const double tv = detail::row_total_variation(f);
  if (tv == 0.0)
    return out;
  const double g = c.water.g;
  const double k0 = g / (c.speed * c.speed);
  const double lx = f.dx * static_cast<double>(f.nx);
  detail::MichellKernel kernel(f, k0);
  const auto integrand = [&](double theta) {
    const double ch = std::cosh(theta);
    return kernel(ch) * ch * ch;
  };

  // Panels up to the truncation point, sized by phase resolution.
  const double tv2 = tv * tv / std::pow(k0, 4);
  double total = 0.0, coarse_total = 0.0;
  double a = 0.0;
  double fa = integrand(0.0);
  int nodes = 1;
  std::vector<double> fv;
  const int min_per_panel =
      std::max(4, static_cast<int>(std::ceil(opt.resolution * opt.min_nodes * opt.panel_width / 3.0)));
  while (a < opt.max_theta) {
    const double b = a + opt.panel_width;
    const double phase = k0 * lx * (std::cosh(b) - std::cosh(a));
    int m = static_cast<int>(std::ceil(opt.resolution * phase / opt.phase_per_interval));
    m = std::max(m, min_per_panel);
    m = (m + 3) / 4 * 4;
    const double h = (b - a) / m;
    fv.assign(m + 1, 0.0);
    fv[0] = fa;
    for (int i = 1; i <= m; ++i)
      fv[i] = integrand(a + i * h);
    nodes += m;
    double fine = fv[0] + fv[m], coarse = fv[0] + fv[m];
    for (int i = 1; i < m; ++i)
      fine += fv[i] * (i % 2 ? 4.0 : 2.0);
    for (int i = 2; i < m; i += 2)
      coarse += fv[i] * ((i / 2) % 2 ? 4.0 : 2.0);
    total += fine * h / 3.0;
    coarse_total += coarse * 2.0 * h / 3.0;
    fa = fv[m];
    a = b;
    const double lam = std::cosh(a);
    const double tail = tv2 / (4.0 * std::pow(lam, 4)) * lam / std::sqrt(lam * lam - 1.0);
    if (tail <= opt.tail_tolerance * total)
      break;
  }
  out.nodes = nodes;
  out.theta_max = a;
  const double pre = 4.0 * c.water.rho * g * g / (std::numbers::pi * c.speed * c.speed);
  out.rw = pre * std::max(0.0, total);
  out.refinement_change = total > 0.0 ? std::abs(total - coarse_total) / total : 0.0;
  out.accurate = out.refinement_change <= 0.01 && a < opt.max_theta;
  return out;
}

inline constexpr std::array<double, 4> kGridDrafts = {0.25, 0.33, 0.50, 0.67};
inline constexpr std::array<double, 8> kGridFroude = {0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45};
inline constexpr std::size_t kSlopeNx = 96;
inline constexpr std::size_t kSlopeNz = 48;

/// Wave resistance in newtons at LOA = 1 m over drafts x Froude numbers.
struct ResistanceGrid {
  std::array<std::array<double, 8>, 4> rw{};
  int inaccurate = 0; // nodes whose quadrature raised an accuracy warning

  static std::string column_name(std::size_t i, std::size_t j) {
    return "rw_" + format_fixed(kGridDrafts[i], 2) + "_" + format_fixed(kGridFroude[j], 2);
  }
};

struct GridOptions {
  std::size_t nx = kSlopeNx;
  std::size_t nz = kSlopeNz;
  // Longitudinal cells per transverse Kelvin wavelength 2 pi / k0; raises
  // nx above its default at low Froude numbers.
  double cells_per_wavelength = 32.0;
  double resolution = 1.0; // multiplies every grid and quadrature count
  MichellOptions michell{};
  WaterConstants water{};
};

/// Longitudinal cell count for a centerplane of length lx (m) at speed U.
inline std::size_t michell_cells(double lx, double speed, const GridOptions& opt) {
  const double k0 = opt.water.g / (speed * speed);
  const double wave = std::ceil(opt.cells_per_wavelength * k0 * lx / (2.0 * std::numbers::pi));
  return static_cast<std::size_t>(std::ceil(opt.resolution * std::max(static_cast<double>(opt.nx), wave)));
}

/// Michell wave resistance of a hull at its actual length, with the slope
/// grid sized for the flow condition.
inline MichellResult wave_resistance(const HullSurface& hull, const FlowCondition& c, const GridOptions& opt = {}) {
  const auto [x_lo, x_hi] = centerplane_extent(hull, c.t_star);
  const std::size_t nx = michell_cells((x_hi - x_lo) * c.loa, c.speed, opt);
  const auto nz = static_cast<std::size_t>(std::ceil(opt.resolution * static_cast<double>(opt.nz)));
  auto mo = opt.michell;
  mo.resolution *= opt.resolution;
  return michell_wave_resistance(centerplane_slopes(hull, c.t_star, nx, nz, c.loa), c, mo);
}

inline ResistanceGrid resistance_grid(const HullSurface& hull, const GridOptions& opt = {}) {
  ResistanceGrid grid;
  for (std::size_t i = 0; i < kGridDrafts.size(); ++i) {
    const double t = kGridDrafts[i];
    const double wl = hull.waterline_length(t);
    for (std::size_t j = 0; j < kGridFroude.size(); ++j) {
      FlowCondition c;
      c.loa = 1.0;
      c.t_star = t;
      c.water = opt.water;
      c.speed = speed_from_froude(kGridFroude[j], wl, 1.0, opt.water.g);
      const auto r = wave_resistance(hull, c, opt);
      grid.rw[i][j] = r.rw;
      if (!r.accurate)
        ++grid.inaccurate;
    }
  }
  return grid;
}

inline ResistanceGrid resistance_grid(const HullParams& params, const GridOptions& opt = {}) {
  require_feasible(params);
  return resistance_grid(HullSurface(params), opt);
}

namespace detail {

inline std::size_t bracket(double v, std::span<const double> axis) {
  std::size_t k = 0;
  while (k + 2 < axis.size() && v > axis[k + 1])
    ++k;
  return k;
}

} // namespace detail

/// Bilinear interpolation at LOA = 1 m; queries must lie on the grid.
inline double interpolate_rw(const ResistanceGrid& grid, double t_star, double fn) {
  constexpr double eps = 1e-12;
  if (t_star < kGridDrafts.front() - eps || t_star > kGridDrafts.back() + eps)
    throw DomainError("draft ratio " + format_short(t_star) + " outside the resistance grid");
  if (fn < kGridFroude.front() - eps || fn > kGridFroude.back() + eps)
    throw DomainError("Froude number " + format_short(fn) + " outside the resistance grid");
  const std::size_t i = detail::bracket(t_star, kGridDrafts);
  const std::size_t j = detail::bracket(fn, kGridFroude);
  const double wt = std::clamp((t_star - kGridDrafts[i]) / (kGridDrafts[i + 1] - kGridDrafts[i]), 0.0, 1.0);
  const double wf = std::clamp((fn - kGridFroude[j]) / (kGridFroude[j + 1] - kGridFroude[j]), 0.0, 1.0);
  const auto& r = grid.rw;
  const double lo = r[i][j] + wf * (r[i][j + 1] - r[i][j]);
  const double hi = r[i + 1][j] + wf * (r[i + 1][j + 1] - r[i + 1][j]);
  return lo + wt * (hi - lo);
}

struct WaveQuery {
  double rw = 0.0;    // newtons at the requested LOA
  bool clamped = false;
};

/// Wave resistance at any LOA by Froude similitude (R_w ~ LOA^3). Below the
/// lowest grid Froude number the wave coefficient is held at its edge
/// value, so R_w falls as fn^2.
inline WaveQuery wave_resistance_at(const ResistanceGrid& grid, double t_star, double fn, double loa) {
  WaveQuery q;
  const double scale = loa * loa * loa;
  const double f0 = kGridFroude.front();
  if (fn < f0) {
    if (fn < 0.0)
      throw DomainError("negative Froude number");
    q.clamped = true;
    q.rw = interpolate_rw(grid, t_star, f0) * (fn / f0) * (fn / f0) * scale;
    return q;
  }
  q.rw = interpolate_rw(grid, t_star, fn) * scale;
  return q;
}

struct Resistance {
  double rw = 0.0;
  double rf = 0.0;
  double rt = 0.0;
  double fn = 0.0;
  double sa = 0.0;
  double wl = 0.0;
  bool accurate = true;
};

/// Direct simulation at the actual draft, speed and length.
inline Resistance simulate_resistance(const HullSurface& hull, const FlowCondition& c, const GridOptions& opt = {}) {
  Resistance r;
  const auto m = measure_at(hull, c.t_star);
  r.sa = m.area;
  r.wl = m.wl;
  r.fn = froude_number(c.speed, m.wl, c.loa, c.water.g);
  const auto w = wave_resistance(hull, c, opt);
  r.rw = w.rw;
  r.accurate = w.accurate;
  r.rf = friction_resistance(c, m.area, m.wl);
  r.rt = r.rw + r.rf;
  return r;
}

inline Resistance simulate_resistance(const HullParams& params, double t_star, double speed,
                                      const WaterConstants& water = {}, const GridOptions& opt = {}) {
  require_feasible(params);
  FlowCondition c;
  c.speed = speed;
  c.loa = params.loa;
  c.t_star = t_star;
  c.water = water;
  return simulate_resistance(HullSurface(params), c, opt);
}

} // namespace hulldiff
