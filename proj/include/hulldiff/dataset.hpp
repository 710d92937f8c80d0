#pragma once

// Random hull generation, the hull dataset (feasible records with curves and
// resistance grids plus near-boundary infeasible vectors), the rank-based
// normalizer, and training-row sampling.

#include "hulldiff/core.hpp"
#include "hulldiff/geometry.hpp"
#include "hulldiff/hydro.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hulldiff {

inline constexpr const char* kSchemeVersion = "desk13-v1";
inline constexpr double kBulbProbability = 0.25;
inline constexpr int kRejectionBudget = 1000;

inline constexpr double kCtDraftLo = 0.25, kCtDraftHi = 0.67;
inline constexpr double kCtFroudeLo = 0.05, kCtFroudeHi = 0.45;
inline constexpr double kLogLoaLo = 0.47, kLogLoaHi = 2.65;
inline constexpr double kCondDraftLo = 0.01, kCondDraftHi = 1.0;

namespace detail {

inline double draw(Rng& rng, Shape s) { return uniform(rng, kShapeBounds[idx(s)].lo, kShapeBounds[idx(s)].hi); }

inline void draw_bulb(Rng& rng, ShapeVector& s) {
  const double lmin = kBulbTieFraction * kShapeBounds[idx(Shape::bulb_length)].hi;
  const double rmin = kBulbTieFraction * kShapeBounds[idx(Shape::bulb_radius)].hi;
  s[idx(Shape::bulb_length)] = uniform(rng, lmin, kShapeBounds[idx(Shape::bulb_length)].hi);
  s[idx(Shape::bulb_radius)] = uniform(rng, rmin, kShapeBounds[idx(Shape::bulb_radius)].hi);
  s[idx(Shape::bulb_height)] = draw(rng, Shape::bulb_height);
}

inline ShapeVector draw_box(Rng& rng, bool bulb) {
  ShapeVector s{};
  for (std::size_t i = 0; i < idx(Shape::bulb_length); ++i)
    s[i] = uniform(rng, kShapeBounds[i].lo, kShapeBounds[i].hi);
  if (bulb)
    draw_bulb(rng, s);
  return s;
}

inline double draw_loa(Rng& rng) { return std::pow(10.0, uniform(rng, std::log10(kLoaMin), std::log10(kLoaMax))); }

} // namespace detail

/// Uniform draw inside the box, resampled until every constraint holds.
/// A bulb is present with probability 0.25; LOA is log-uniform on [3, 450].
inline HullParams sample_random_hull(Rng& rng) {
  HullParams p;
  p.loa = detail::draw_loa(rng);
  const bool bulb = uniform(rng, 0.0, 1.0) < kBulbProbability;
  for (int tries = 0; tries < kRejectionBudget; ++tries) {
    p.shape = detail::draw_box(rng, bulb);
    if (validate(p).feasible)
      return p;
  }
  throw GenerationError("no feasible hull within " + std::to_string(kRejectionBudget) + " draws");
}

inline HullParams sample_random_hull(std::uint64_t seed) {
  Rng rng(seed);
  return sample_random_hull(rng);
}

/// Box-bounded vector violating exactly one composite constraint by a small
/// margin. The rake composite cannot bind inside the box and is skipped.
inline HullParams sample_infeasible_hull(Rng& rng) {
  HullParams p;
  p.loa = detail::draw_loa(rng);
  const int which = static_cast<int>(uniform(rng, 0.0, 3.0));
  for (int tries = 0; tries < kRejectionBudget; ++tries) {
    const bool bulb = which != 0 || uniform(rng, 0.0, 1.0) < kBulbProbability;
    auto s = detail::draw_box(rng, bulb);
    const double margin = uniform(rng, 0.0, 0.1);
    if (which == 0) {
      // x_e + x_r just above its cap.
      const double sum = kMaxEntrancePlusRun + margin;
      s[idx(Shape::entrance)] = uniform(rng, sum - kShapeBounds[idx(Shape::run)].hi, kShapeBounds[idx(Shape::entrance)].hi);
      s[idx(Shape::run)] = sum - s[idx(Shape::entrance)];
    } else if (which == 1) {
      // Bulb reaching above the deck.
      s[idx(Shape::bulb_height)] = s[idx(Shape::depth)] + margin - s[idx(Shape::bulb_radius)];
    } else {
      // One bulb size without the other.
      const Shape zeroed = uniform(rng, 0.0, 1.0) < 0.5 ? Shape::bulb_length : Shape::bulb_radius;
      s[idx(zeroed)] = 0.0;
    }
    p.shape = s;
    const auto rep = validate(p);
    if (rep.violations.size() == 1 && rep.violations[0].constraint.rfind("box:", 0) != 0)
      return p;
  }
  throw GenerationError("no infeasible vector within " + std::to_string(kRejectionBudget) + " draws");
}

struct HullRecord {
  HullParams params;
  bool feasible = false;
  std::optional<GeoCurves> curves;
  std::optional<ResistanceGrid> grid;
};

struct DatasetOptions {
  GridOptions grid{};
  unsigned workers = worker_count();
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct Dataset {
  std::vector<HullRecord> records;
  std::uint64_t seed = 0;
  std::size_t failed = 0;
  std::vector<std::string> failures;
  WaterConstants water{};

  std::vector<const HullRecord*> feasible() const {
    std::vector<const HullRecord*> out;
    for (const auto& r : records)
      if (r.feasible)
        out.push_back(&r);
    return out;
  }
};

/// n feasible records with curves and grids, then n infeasible bare vectors.
/// Record i draws from its own seed stream, so output is schedule-free.
inline Dataset build_dataset(std::size_t n, std::uint64_t seed, const DatasetOptions& opt = {}) {
  if (n < 1)
    throw DomainError("dataset size must be at least 1");
  Dataset ds;
  ds.seed = seed;
  ds.water = opt.grid.water;
  std::vector<HullRecord> feas(n);
  std::vector<std::string> errors(n);
  std::vector<char> ok(n, 0);
  std::atomic<std::size_t> done{0};
  parallel_for(
      n,
      [&](std::size_t i) {
        Rng rng(derive_seed(seed, i));
        auto& rec = feas[i];
        try {
          rec.params = sample_random_hull(rng);
          rec.feasible = true;
          const HullSurface hull(rec.params);
          rec.curves = measure_surface_curves(hull);
          rec.grid = resistance_grid(hull, opt.grid);
          ok[i] = 1;
        } catch (const Error& e) {
          errors[i] = "record " + std::to_string(i) + ": " + e.what();
        }
        const std::size_t d = ++done;
        if (opt.progress)
          opt.progress(d, n);
      },
      opt.workers);
  for (std::size_t i = 0; i < n; ++i) {
    if (ok[i])
      ds.records.push_back(std::move(feas[i]));
    else {
      ++ds.failed;
      ds.failures.push_back(errors[i]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed ^ 0x1f3a5c7e9b2d4f60ULL, i));
    HullRecord rec;
    rec.params = sample_infeasible_hull(rng);
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

/// Per-coordinate empirical CDF scaled to [-1, 1]. Tied values share their
/// mean rank; between stored quantiles the map is linear, outside it clamps.
class Normalizer {
public:
  struct Column {
    std::vector<double> value; // strictly increasing
    std::vector<double> score; // strictly increasing, in [-1, 1]
    bool identity = false;
  };

  Normalizer() = default;

  static Normalizer fit(const std::vector<ShapeVector>& rows) {
    if (rows.size() < 2)
      throw DomainError("normalizer needs at least 2 rows");
    Normalizer nz;
    const double n = static_cast<double>(rows.size());
    std::vector<double> v(rows.size());
    for (std::size_t k = 0; k < kShapeArity; ++k) {
      for (std::size_t r = 0; r < rows.size(); ++r)
        v[r] = rows[r][k];
      std::sort(v.begin(), v.end());
      auto& col = nz.cols_[k];
      if (v.front() == v.back()) {
        col.identity = true;
        nz.warnings_.push_back(std::string("parameter ") + kShapeNames[k] + " has zero variance; identity mapping");
        continue;
      }
      for (std::size_t a = 0; a < v.size();) {
        std::size_t b = a;
        while (b + 1 < v.size() && v[b + 1] == v[a])
          ++b;
        const double rank = 0.5 * static_cast<double>(a + b);
        col.value.push_back(v[a]);
        col.score.push_back(2.0 * rank / (n - 1.0) - 1.0);
        a = b + 1;
      }
    }
    return nz;
  }

  double normalize(std::size_t k, double x) const {
    const auto& c = cols_[k];
    if (c.identity)
      return x;
    return lerp_table(c.value, c.score, x);
  }

  double denormalize(std::size_t k, double u) const {
    const auto& c = cols_[k];
    if (c.identity)
      return u;
    return lerp_table(c.score, c.value, u);
  }

  ShapeVector normalize(const ShapeVector& x) const {
    ShapeVector u;
    for (std::size_t k = 0; k < kShapeArity; ++k)
      u[k] = normalize(k, x[k]);
    return u;
  }

  ShapeVector denormalize(const ShapeVector& u) const {
    ShapeVector x;
    for (std::size_t k = 0; k < kShapeArity; ++k)
      x[k] = denormalize(k, u[k]);
    return x;
  }

  const Column& column(std::size_t k) const { return cols_[k]; }
  const std::vector<std::string>& warnings() const { return warnings_; }

private:
  static double lerp_table(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front())
      return ys.front();
    if (x >= xs.back())
      return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const std::size_t lo = hi - 1;
    const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + w * (ys[hi] - ys[lo]);
  }

  std::array<Column, kShapeArity> cols_{};
  std::vector<std::string> warnings_;
};

inline Normalizer fit_normalizer(const Dataset& ds) {
  std::vector<ShapeVector> rows;
  for (const auto* r : ds.feasible())
    rows.push_back(r->params.shape);
  return Normalizer::fit(rows);
}

/// Inputs for the resistance regressor: [x (13), t*, F_n, log10 LOA].
struct TrainingRow {
  ShapeVector x{};
  double t_star = 0.0;
  double fn = 0.0;
  double log_loa = 0.0;
  double c_t = 0.0;
  bool clamped = false; // F_n below the resistance grid
};

/// Log coefficient of a hull at a flow condition, from its stored curves
/// and resistance grid.
inline double coefficient_from_record(const GeoCurves& curves, const ResistanceGrid& grid, double t_star, double fn,
                                      double loa, const WaterConstants& water, bool* clamped = nullptr) {
  const auto m = interpolate_curves(curves, t_star);
  FlowCondition c;
  c.loa = loa;
  c.t_star = t_star;
  c.water = water;
  c.speed = speed_from_froude(fn, m.wl, loa, water.g);
  const auto w = wave_resistance_at(grid, t_star, fn, loa);
  if (clamped)
    *clamped = w.clamped;
  const double rf = friction_resistance(c, m.area, m.wl);
  return total_resistance_coefficient(w.rw, rf, c);
}

inline TrainingRow sample_training_row(const HullRecord& rec, const Normalizer& nz, Rng& rng,
                                       const WaterConstants& water = {}) {
  if (!rec.feasible || !rec.curves || !rec.grid)
    throw DomainError("training rows need a feasible record with curves and grid");
  TrainingRow row;
  row.x = nz.normalize(rec.params.shape);
  row.t_star = uniform(rng, kCtDraftLo, kCtDraftHi);
  row.fn = uniform(rng, kCtFroudeLo, kCtFroudeHi);
  row.log_loa = uniform(rng, kLogLoaLo, kLogLoaHi);
  row.c_t = coefficient_from_record(*rec.curves, *rec.grid, row.t_star, row.fn, std::pow(10.0, row.log_loa), water,
                                    &row.clamped);
  return row;
}

// ---- Dataset files -------------------------------------------------------

inline std::string dataset_csv_header() {
  std::string h = hull_csv_header() + ",feasible";
  for (const char* tag : {"vol", "area", "wl"})
    for (std::size_t k = 0; k < kDraftMarks; ++k)
      h += std::string(",") + tag + "_" + std::to_string(k + 1);
  for (std::size_t i = 0; i < kGridDrafts.size(); ++i)
    for (std::size_t j = 0; j < kGridFroude.size(); ++j)
      h += "," + ResistanceGrid::column_name(i, j);
  return h;
}

inline std::string dataset_csv(const Dataset& ds) {
  std::string out = dataset_csv_header() + "\n";
  for (const auto& r : ds.records) {
    out += hull_csv_row(r.params);
    out += r.feasible ? ",1" : ",0";
    if (r.curves) {
      for (const auto* arr : {&r.curves->vol, &r.curves->area, &r.curves->wl})
        for (double v : *arr)
          out += "," + format_double(v);
    } else {
      out.append(3 * kDraftMarks, ',');
    }
    if (r.grid) {
      for (const auto& row : r.grid->rw)
        for (double v : row)
          out += "," + format_double(v);
    } else {
      out.append(kGridDrafts.size() * kGridFroude.size(), ',');
    }
    out += "\n";
  }
  return out;
}

inline std::string dataset_meta(const Dataset& ds) {
  std::size_t feasible = 0;
  for (const auto& r : ds.records)
    feasible += r.feasible ? 1 : 0;
  std::string m;
  m += "seed = " + std::to_string(ds.seed) + "\n";
  m += "feasible = " + std::to_string(feasible) + "\n";
  m += "infeasible = " + std::to_string(ds.records.size() - feasible) + "\n";
  m += "failed = " + std::to_string(ds.failed) + "\n";
  m += std::string("scheme = ") + kSchemeVersion + "\n";
  m += "shape_parameters = " + std::to_string(kShapeArity) + "\n";
  m += "rho = " + format_double(ds.water.rho) + "\n";
  m += "g = " + format_double(ds.water.g) + "\n";
  m += "nu = " + format_double(ds.water.nu) + "\n";
  return m;
}

/// key = value lines; blank lines and '#' comments ignored.
inline std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  for (const auto& raw : split(text, '\n')) {
    const auto line = trim(raw);
    if (line.empty() || line[0] == '#')
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw RepresentationError("expected key = value, got '" + line + "'");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline void write_dataset(const Dataset& ds, const std::filesystem::path& csv, const std::filesystem::path& meta) {
  write_file_atomic(csv, dataset_csv(ds));
  write_file_atomic(meta, dataset_meta(ds));
}

inline Dataset read_dataset(const std::filesystem::path& csv, const std::filesystem::path& meta) {
  Dataset ds;
  const auto kv = parse_key_values(read_file(meta));
  const auto get = [&](const std::string& k) {
    const auto it = kv.find(k);
    if (it == kv.end())
      throw RepresentationError("dataset metadata lacks '" + k + "'");
    return it->second;
  };
  if (get("scheme") != kSchemeVersion)
    throw RepresentationError("dataset scheme " + get("scheme") + " does not match " + kSchemeVersion);
  ds.seed = std::stoull(get("seed"));
  ds.failed = std::stoull(get("failed"));
  ds.water.rho = parse_double(get("rho"), "rho");
  ds.water.g = parse_double(get("g"), "g");
  ds.water.nu = parse_double(get("nu"), "nu");

  const auto text = read_file(csv);
  const auto lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]) != dataset_csv_header())
    throw RepresentationError("dataset header mismatch in " + csv.string());
  const std::size_t ncurve = 3 * kDraftMarks, ngrid = kGridDrafts.size() * kGridFroude.size();
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty())
      continue;
    const auto f = split(lines[li], ',');
    if (f.size() != kShapeArity + 2 + ncurve + ngrid)
      throw RepresentationError("dataset row " + std::to_string(li) + " has " + std::to_string(f.size()) + " fields");
    HullRecord r;
    r.params = parse_hull_fields(f);
    r.feasible = f[kShapeArity + 1] == "1";
    std::size_t at = kShapeArity + 2;
    if (r.feasible) {
      GeoCurves c;
      for (std::size_t k = 0; k < kDraftMarks; ++k)
        c.draft_marks[k] = draft_mark(k);
      for (auto* arr : {&c.vol, &c.area, &c.wl})
        for (auto& v : *arr)
          v = parse_double(f[at++], "curve value");
      r.curves = c;
      ResistanceGrid g;
      for (auto& row : g.rw)
        for (auto& v : row)
          v = parse_double(f[at++], "grid value");
      r.grid = g;
    }
    ds.records.push_back(std::move(r));
  }
  return ds;
}

} // namespace hulldiff
