#pragma once

// Post-sampling analysis: volume-error band statistic, per-hull audits with
// re-simulation, PCA and KDE plot data, and the optimizer comparison.

#include "hulldiff/optimize.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace hulldiff {

/// Expected fraction of all samples that are feasible and whose volume error
/// lies within +-tol, assuming Gaussian errors among feasible samples.
inline double volume_error_fraction(double eta, double mu, double sigma, double tol = 0.05) {
  if (sigma < 0.0)
    throw DomainError("standard deviation must be non-negative");
  if (sigma == 0.0)
    return std::abs(mu) <= tol ? eta : 0.0;
  return eta * (normal_cdf((tol - mu) / sigma) - normal_cdf((-tol - mu) / sigma));
}

struct SampleAudit {
  ShapeVector raw{};
  bool feasible = false; // passes validation and its draft lies below the deck
  std::string note;      // why a hull was not audited
  double t_star = 0.0;
  double vol_error = 0.0, beam_error = 0.0, depth_error = 0.0; // signed, relative to target
  double surrogate_rt = 0.0, simulated_rt = 0.0;
  bool simulated = false;
};

struct AuditOptions {
  GridOptions grid{};
  unsigned workers = worker_count();
};

/// Denormalizes, validates, measures and re-simulates each hull at the
/// case draft and speed. Failures are recorded per hull.
inline std::vector<SampleAudit> audit_samples(const std::vector<ShapeVector>& x, const TestCase& c,
                                              const CaseModels& m, const AuditOptions& opt = {}) {
  check_case(c);
  std::vector<SampleAudit> out(x.size());
  if (x.empty())
    return out;
  Matrix cols(kShapeArity, static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j)
    for (std::size_t k = 0; k < kShapeArity; ++k)
      cols(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = x[j][k];
  std::vector<Objectives> obj;
  if (m.ct && m.wl && m.nz)
    obj = evaluate_batch(cols, c, m);
  parallel_for(
      x.size(),
      [&](std::size_t j) {
        auto& a = out[j];
        a.raw = m.nz ? m.nz->denormalize(x[j]) : x[j];
        HullParams p;
        p.loa = c.loa;
        p.shape = a.raw;
        const auto rep = validate(p);
        if (!rep.feasible) {
          a.note = "infeasible: " + describe(rep);
          return;
        }
        const double d = a.raw[idx(Shape::depth)], b = a.raw[idx(Shape::beam)];
        a.t_star = c.draft / (d * c.loa);
        if (a.t_star > 1.0) {
          a.note = "draft above deck";
          return;
        }
        a.feasible = true;
        const HullSurface hull(p);
        a.vol_error = measure_volume(hull, a.t_star) / c.volume_ratio() - 1.0;
        a.beam_error = b / c.beam_ratio() - 1.0;
        a.depth_error = d / c.depth_ratio() - 1.0;
        if (!obj.empty())
          a.surrogate_rt = obj[j].rt;
        try {
          FlowCondition fc;
          fc.speed = c.speed;
          fc.loa = c.loa;
          fc.t_star = a.t_star;
          fc.water = m.water;
          a.simulated_rt = simulate_resistance(hull, fc, opt.grid).rt;
          a.simulated = std::isfinite(a.simulated_rt);
        } catch (const Error& e) {
          a.note = std::string("simulation failed: ") + e.what();
        }
      },
      opt.workers);
  return out;
}

struct ErrorStats {
  std::size_t n = 0, feasible = 0;
  double feasibility = 0.0;
  double vol_mean = 0.0, vol_std = 0.0;
  double abs_vol_mean = 0.0, abs_beam_mean = 0.0, abs_depth_mean = 0.0;
  double beam_mean = 0.0, depth_mean = 0.0;
  double eta_e = 0.0;       // Gaussian estimate of the in-band fraction
  double in_band_5 = 0.0;   // empirical in-band fraction of all samples
};

inline ErrorStats error_stats(const std::vector<SampleAudit>& audits, double tol = 0.05) {
  ErrorStats s;
  s.n = audits.size();
  double sum = 0, sq = 0;
  std::size_t band = 0;
  for (const auto& a : audits) {
    if (!a.feasible)
      continue;
    ++s.feasible;
    sum += a.vol_error;
    sq += a.vol_error * a.vol_error;
    s.abs_vol_mean += std::abs(a.vol_error);
    s.abs_beam_mean += std::abs(a.beam_error);
    s.abs_depth_mean += std::abs(a.depth_error);
    s.beam_mean += a.beam_error;
    s.depth_mean += a.depth_error;
    band += std::abs(a.vol_error) <= tol ? 1 : 0;
  }
  if (s.n > 0) {
    s.feasibility = static_cast<double>(s.feasible) / static_cast<double>(s.n);
    s.in_band_5 = static_cast<double>(band) / static_cast<double>(s.n);
  }
  if (s.feasible == 0)
    return s;
  const double f = static_cast<double>(s.feasible);
  s.vol_mean = sum / f;
  s.vol_std = std::sqrt(std::max(0.0, sq / f - s.vol_mean * s.vol_mean));
  s.abs_vol_mean /= f;
  s.abs_beam_mean /= f;
  s.abs_depth_mean /= f;
  s.beam_mean /= f;
  s.depth_mean /= f;
  s.eta_e = volume_error_fraction(s.feasibility, s.vol_mean, s.vol_std, tol);
  return s;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : std::numeric_limits<double>::quiet_NaN();
}

/// Surrogate vs simulated R_T over simulated hulls.
struct SurrogateFidelity {
  std::size_t n = 0;
  double correlation = std::numeric_limits<double>::quiet_NaN();
  double mean_ratio = std::numeric_limits<double>::quiet_NaN(); // simulated / surrogate
};

inline SurrogateFidelity surrogate_fidelity(const std::vector<SampleAudit>& audits) {
  std::vector<double> sur, sim;
  double ratio = 0.0;
  for (const auto& a : audits)
    if (a.simulated && a.surrogate_rt > 0) {
      sur.push_back(a.surrogate_rt);
      sim.push_back(a.simulated_rt);
      ratio += a.simulated_rt / a.surrogate_rt;
    }
  SurrogateFidelity f;
  f.n = sur.size();
  if (f.n > 0)
    f.mean_ratio = ratio / static_cast<double>(f.n);
  f.correlation = pearson(sur, sim);
  return f;
}

struct Pca2 {
  Vector mean;
  Matrix axes;                        // 13 x 2, unit columns
  std::array<double, 2> share{};      // explained-variance fractions
  Matrix coords;                      // queries x 2
};

/// Principal directions of the training set; queries projected onto them.
inline Pca2 pca2(const std::vector<ShapeVector>& train, const std::vector<ShapeVector>& query) {
  if (train.size() < 3)
    throw DomainError("PCA needs at least 3 training vectors");
  const auto n = static_cast<Eigen::Index>(train.size());
  Matrix x(n, kShapeArity);
  for (Eigen::Index i = 0; i < n; ++i)
    for (std::size_t k = 0; k < kShapeArity; ++k)
      x(i, static_cast<Eigen::Index>(k)) = train[static_cast<std::size_t>(i)][k];
  Pca2 p;
  p.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - p.mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const Vector ev = es.eigenvalues(); // ascending
  const double total = ev.sum();
  const auto last = ev.size() - 1;
  if (!(total > 0) || !(ev(last - 1) > 1e-12 * total))
    throw DomainError("training set has rank below 2");
  p.axes.resize(kShapeArity, 2);
  p.axes.col(0) = es.eigenvectors().col(last);
  p.axes.col(1) = es.eigenvectors().col(last - 1);
  p.share = {ev(last) / total, ev(last - 1) / total};
  p.coords.resize(static_cast<Eigen::Index>(query.size()), 2);
  for (std::size_t i = 0; i < query.size(); ++i) {
    Vector q(kShapeArity);
    for (std::size_t k = 0; k < kShapeArity; ++k)
      q(static_cast<Eigen::Index>(k)) = query[i][k];
    p.coords.row(static_cast<Eigen::Index>(i)) = ((q - p.mean).transpose() * p.axes);
  }
  return p;
}

struct DensityCurve {
  std::vector<double> x, density;
  double bandwidth = 0.0;
  std::string warning;
};

inline constexpr int kKdePoints = 256;
inline constexpr double kKdeSpan = 4.0; // grid reaches this many bandwidths past the data

/// Gaussian KDE with Silverman's bandwidth 0.9 min(sd, IQR/1.34) n^(-1/5).
inline DensityCurve kde(std::vector<double> values) {
  if (values.size() < 2)
    throw DomainError("density estimate needs at least 2 values");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double mean = 0;
  for (double v : values)
    mean += v / n;
  double var = 0;
  for (double v : values)
    var += (v - mean) * (v - mean) / (n - 1);
  const auto quant = [&](double q) {
    const double pos = q * (n - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(i);
    return i + 1 < values.size() ? (1 - w) * values[i] + w * values[i + 1] : values[i];
  };
  const double iqr = quant(0.75) - quant(0.25);
  const double sd = std::sqrt(var);
  const double spread = iqr > 0 ? std::min(sd, iqr / 1.34) : sd;
  DensityCurve out;
  double h = 0.9 * spread * std::pow(n, -0.2);
  if (!(h > 0)) {
    // All values equal: a narrow spike at the common value.
    h = 1e-3 * std::max(std::abs(values.front()), 1.0);
    out.warning = "zero variance; spike representation";
  }
  out.bandwidth = h;
  const double lo = values.front() - kKdeSpan * h, hi = values.back() + kKdeSpan * h;
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  for (int i = 0; i < kKdePoints; ++i) {
    const double x = lo + (hi - lo) * i / (kKdePoints - 1.0);
    // Only values within the kernel's effective reach contribute.
    const auto b = std::lower_bound(values.begin(), values.end(), x - 9.0 * h);
    const auto e = std::upper_bound(values.begin(), values.end(), x + 9.0 * h);
    double s = 0;
    for (auto it = b; it != e; ++it) {
      const double u = (x - *it) / h;
      s += std::exp(-0.5 * u * u);
    }
    out.x.push_back(x);
    out.density.push_back(norm * s);
  }
  return out;
}

inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return s;
}

inline constexpr std::array<double, 3> kVolumeBands{0.01, 0.05, 0.10};

struct ComparisonReport {
  double nsga_min_rt = std::numeric_limits<double>::quiet_NaN();
  std::array<std::size_t, 3> below{}; // diffusion hulls under the optimizer minimum per band
  std::optional<double> sample_min_rt_5;
  std::optional<double> delta_rt_5; // (sample min - optimizer min) / optimizer min
  double median_rt_5 = std::numeric_limits<double>::quiet_NaN();
};

inline double median(std::vector<double> v) {
  if (v.empty())
    return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0)
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}

/// Optimizer minimum is taken over its simulated hulls; diffusion hulls
/// count when simulated, within the volume band, and strictly below it.
inline ComparisonReport compare(const std::vector<SampleAudit>& diffusion, const std::vector<SampleAudit>& nsga) {
  if (diffusion.empty() || nsga.empty())
    throw DomainError("comparison needs non-empty audit sets");
  ComparisonReport r;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& a : nsga)
    if (a.simulated)
      best = std::min(best, a.simulated_rt);
  if (std::isfinite(best))
    r.nsga_min_rt = best;
  std::vector<double> in5;
  for (const auto& a : diffusion) {
    if (!a.simulated)
      continue;
    for (std::size_t b = 0; b < kVolumeBands.size(); ++b)
      if (std::abs(a.vol_error) <= kVolumeBands[b] && a.simulated_rt < best)
        ++r.below[b];
    if (std::abs(a.vol_error) <= kVolumeBands[1])
      in5.push_back(a.simulated_rt);
  }
  r.median_rt_5 = median(in5);
  if (!in5.empty()) {
    r.sample_min_rt_5 = *std::min_element(in5.begin(), in5.end());
    if (std::isfinite(best))
      r.delta_rt_5 = (*r.sample_min_rt_5 - best) / best;
  }
  return r;
}

// ---- CSV emitters ----------------------------------------------------------

inline std::string audit_csv(const std::vector<SampleAudit>& audits) {
  std::string s = hull_csv_header();
  s = s.substr(s.find(',') + 1); // shape columns only
  s = "index," + s + ",feasible,t_star,vol_error,beam_error,depth_error,surrogate_rt,simulated_rt,note\n";
  for (std::size_t i = 0; i < audits.size(); ++i) {
    const auto& a = audits[i];
    s += std::to_string(i);
    for (double v : a.raw)
      s += "," + format_double(v);
    s += a.feasible ? ",1" : ",0";
    if (a.feasible) {
      for (double v : {a.t_star, a.vol_error, a.beam_error, a.depth_error, a.surrogate_rt})
        s += "," + format_double(v);
      s += a.simulated ? "," + format_double(a.simulated_rt) : ",";
    } else {
      s += ",,,,,,";
    }
    std::string note = a.note;
    std::replace(note.begin(), note.end(), ',', ';');
    s += "," + note + "\n";
  }
  return s;
}

inline std::string scatter_csv(const std::vector<SampleAudit>& audits) {
  std::string s = "index,surrogate_rt,simulated_rt\n";
  for (std::size_t i = 0; i < audits.size(); ++i)
    if (audits[i].simulated)
      s += std::to_string(i) + "," + format_double(audits[i].surrogate_rt) + "," +
           format_double(audits[i].simulated_rt) + "\n";
  return s;
}

inline std::string curve_csv(const DensityCurve& c) {
  std::string s = "x,density\n";
  for (std::size_t i = 0; i < c.x.size(); ++i)
    s += format_double(c.x[i]) + "," + format_double(c.density[i]) + "\n";
  return s;
}

} // namespace hulldiff
