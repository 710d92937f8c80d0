#pragma once

// Design test cases and a constrained NSGA-II baseline over normalized
// shape vectors, minimizing surrogate total resistance and its coefficient.

#include "hulldiff/diffusion.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace hulldiff {

struct TestCase {
  std::string name;
  double loa = 0.0;    // m
  double boa = 0.0;    // m
  double draft = 0.0;  // m
  double depth = 0.0;  // m
  double volume = 0.0; // m^3
  double speed = 0.0;  // m/s

  double beam_ratio() const { return boa / loa; }
  double depth_ratio() const { return depth / loa; }
  double draft_ratio() const { return draft / depth; }
  double volume_ratio() const { return volume / (loa * loa * loa); }

  Conditioning conditioning() const {
    Conditioning c;
    c.t_star = draft_ratio();
    c.log_v = std::log10(volume_ratio());
    c.beam = beam_ratio();
    c.depth = depth_ratio();
    return c;
  }
};

inline void check_case(const TestCase& c) {
  if (!(c.loa > 0 && c.boa > 0 && c.draft > 0 && c.depth > 0 && c.volume > 0 && c.speed > 0))
    throw DomainError("test case " + c.name + ": all dimensions must be positive");
  if (!(c.draft < c.depth))
    throw DomainError("test case " + c.name + ": draft must be below depth");
}

inline const std::array<TestCase, 5>& bundled_cases() {
  static const std::array<TestCase, 5> cases{{
      {"supercarrier", 333.0, 42.1, 11.3, 29.6, 97561.0, 16.0},
      {"kayak", 3.8, 0.787, 0.15, 0.438, 0.166, 1.50},
      {"neopanamax", 366.0, 50.0, 15.2, 40.0, 182114.0, 10.3},
      {"frigate", 127.0, 16.0, 6.90, 11.0, 4488.0, 14.4},
      {"ropax", 72.0, 20.0, 3.2, 4.8, 3917.0, 6.17},
  }};
  return cases;
}

inline const TestCase& find_case(const std::string& name) {
  for (const auto& c : bundled_cases())
    if (c.name == name)
      return c;
  throw ConfigError("case", "unknown test case '" + name + "'");
}

struct Objectives {
  double rt = 0.0; // surrogate total resistance, N
  double ct = 0.0; // surrogate log10 coefficient
  double violation = 0.0;
  double t_star = 0.0;
  double fn = 0.0;
};

struct CaseModels {
  const Normalizer* nz = nullptr;
  const Mlp* ct = nullptr;
  const Mlp* wl = nullptr;
  WaterConstants water{};
};

inline constexpr double kBeamTolerance = 0.02;
inline constexpr double kDepthTolerance = 0.01;
inline constexpr double kVolumeFloor = 0.99;

/// Violation terms: beam and depth excess beyond their tolerance bands in
/// LOA-normalized units, volume shortfall below 99% of target as a fraction
/// of target, draft above deck, and positive feasibility residuals.
inline double case_violation(const ShapeVector& raw, const TestCase& c, double t_star) {
  const double b = raw[idx(Shape::beam)], d = raw[idx(Shape::depth)];
  const double bt = c.beam_ratio(), dt = c.depth_ratio();
  double v = std::max(0.0, std::abs(b - bt) - kBeamTolerance * bt);
  v += std::max(0.0, std::abs(d - dt) - kDepthTolerance * dt);
  v += std::max(0.0, t_star - 1.0);
  const double vol = measure_volume(HullSurface(raw), std::min(t_star, 1.0));
  v += std::max(0.0, kVolumeFloor - vol / c.volume_ratio());
  for (const auto& r : constraint_residuals(raw))
    v += std::max(0.0, r.residual);
  return v;
}

/// Surrogate objectives for a batch of normalized vectors (one per column).
inline std::vector<Objectives> evaluate_batch(const Matrix& x, const TestCase& c, const CaseModels& m) {
  if (!m.nz || !m.ct || !m.wl)
    throw ConfigError("models", "resistance, waterline and normalizer are required");
  const auto n = x.cols();
  std::vector<Objectives> out(static_cast<std::size_t>(n));
  Matrix dx(kDraftInputs, n), cx(kCtInputs, n);
  std::vector<ShapeVector> raw(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    ShapeVector u;
    for (std::size_t k = 0; k < kShapeArity; ++k)
      u[k] = x(static_cast<Eigen::Index>(k), j);
    raw[static_cast<std::size_t>(j)] = m.nz->denormalize(u);
    const double ts = c.draft / (raw[static_cast<std::size_t>(j)][idx(Shape::depth)] * c.loa);
    out[static_cast<std::size_t>(j)].t_star = ts;
    dx.col(j).head(kShapeArity) = x.col(j);
    dx(kShapeArity, j) = ts;
  }
  const Matrix wl = forward_batch(*m.wl, dx);
  FlowCondition fc;
  fc.speed = c.speed;
  fc.loa = c.loa;
  fc.water = m.water;
  for (Eigen::Index j = 0; j < n; ++j) {
    auto& o = out[static_cast<std::size_t>(j)];
    o.fn = froude_number(c.speed, std::max(wl(0, j), kMinPredictedWaterline), c.loa, m.water.g);
    cx.col(j).head(kShapeArity) = x.col(j);
    cx(kShapeArity, j) = o.t_star;
    cx(kShapeArity + 1, j) = o.fn;
    cx(kShapeArity + 2, j) = std::log10(c.loa);
  }
  const Matrix ct = forward_batch(*m.ct, cx);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
    auto& o = out[j];
    o.ct = ct(0, static_cast<Eigen::Index>(j));
    o.rt = total_resistance_from_coefficient(o.ct, fc);
    o.violation = case_violation(raw[j], c, o.t_star);
  });
  return out;
}

inline Objectives evaluate_individual(const ShapeVector& x, const TestCase& c, const CaseModels& m) {
  Matrix col(kShapeArity, 1);
  for (std::size_t k = 0; k < kShapeArity; ++k)
    col(static_cast<Eigen::Index>(k), 0) = x[k];
  return evaluate_batch(col, c, m)[0];
}

// ---- Generic constrained NSGA-II ------------------------------------------

struct Evaluation {
  std::vector<double> f; // minimized objectives
  double violation = 0.0;
};

struct Individual {
  std::vector<double> x;
  Evaluation eval;
  int rank = 0;
  double crowding = 0.0;
};

/// Constrained domination: feasible beats infeasible, lower violation wins
/// among infeasible, Pareto domination among feasible.
inline bool dominates(const Evaluation& a, const Evaluation& b) {
  const bool fa = a.violation <= 0.0, fb = b.violation <= 0.0;
  if (fa != fb)
    return fa;
  if (!fa)
    return a.violation < b.violation;
  bool strictly = false;
  for (std::size_t i = 0; i < a.f.size(); ++i) {
    if (a.f[i] > b.f[i])
      return false;
    strictly = strictly || a.f[i] < b.f[i];
  }
  return strictly;
}

/// Fast non-dominated sort; returns fronts as index lists and sets ranks.
inline std::vector<std::vector<std::size_t>> non_dominated_sort(std::vector<Individual>& pop) {
  const std::size_t n = pop.size();
  std::vector<std::vector<std::size_t>> dominated(n), fronts(1);
  std::vector<int> count(n, 0);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      if (p == q)
        continue;
      if (dominates(pop[p].eval, pop[q].eval))
        dominated[p].push_back(q);
      else if (dominates(pop[q].eval, pop[p].eval))
        ++count[p];
    }
  for (std::size_t p = 0; p < n; ++p)
    if (count[p] == 0) {
      pop[p].rank = 0;
      fronts[0].push_back(p);
    }
  for (std::size_t i = 0; !fronts[i].empty(); ++i) {
    std::vector<std::size_t> next;
    for (std::size_t p : fronts[i])
      for (std::size_t q : dominated[p])
        if (--count[q] == 0) {
          pop[q].rank = static_cast<int>(i + 1);
          next.push_back(q);
        }
    fronts.push_back(std::move(next));
  }
  fronts.pop_back();
  return fronts;
}

inline void crowding_distance(std::vector<Individual>& pop, const std::vector<std::size_t>& front) {
  for (std::size_t i : front)
    pop[i].crowding = 0.0;
  if (front.empty())
    return;
  const std::size_t m = pop[front[0]].eval.f.size();
  auto order = front;
  for (std::size_t k = 0; k < m; ++k) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pop[a].eval.f[k] < pop[b].eval.f[k]; });
    const double lo = pop[order.front()].eval.f[k], hi = pop[order.back()].eval.f[k];
    pop[order.front()].crowding = pop[order.back()].crowding = std::numeric_limits<double>::infinity();
    if (hi <= lo)
      continue;
    for (std::size_t i = 1; i + 1 < order.size(); ++i)
      pop[order[i]].crowding += (pop[order[i + 1]].eval.f[k] - pop[order[i - 1]].eval.f[k]) / (hi - lo);
  }
}

struct GaOptions {
  int population = 100;
  int generations = 200;
  double crossover_prob = 0.9;
  double sbx_eta = 15.0;
  double mutation_eta = 20.0;
  double mutation_prob = -1.0; // negative: 1 / variables
  std::uint64_t seed = 0;
};

struct GenerationStats {
  int generation = 0;
  std::size_t feasible = 0;
  double best_f0 = 0.0, mean_f0 = 0.0, best_f1 = 0.0, mean_f1 = 0.0; // over feasible; NaN if none
  double min_violation = 0.0, mean_violation = 0.0;
};

struct GaResult {
  std::vector<Individual> population;
  std::vector<GenerationStats> history;
};

/// Evaluates a batch of decision vectors.
using EvaluateFn = std::function<std::vector<Evaluation>(const std::vector<std::vector<double>>&)>;

namespace detail {

inline void sbx(std::vector<double>& a, std::vector<double>& b, const std::vector<double>& lo,
                const std::vector<double>& hi, double eta, Rng& rng) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (uniform(rng, 0.0, 1.0) > 0.5 || std::abs(a[i] - b[i]) < 1e-14)
      continue;
    const double y1 = std::min(a[i], b[i]), y2 = std::max(a[i], b[i]);
    const double u = uniform(rng, 0.0, 1.0);
    const auto child = [&](double beta_edge) {
      const double alpha = 2.0 - std::pow(beta_edge, -(eta + 1.0));
      const double bq = u <= 1.0 / alpha ? std::pow(u * alpha, 1.0 / (eta + 1.0))
                                         : std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
      return bq;
    };
    const double bq1 = child(1.0 + 2.0 * (y1 - lo[i]) / (y2 - y1));
    const double c1 = 0.5 * ((y1 + y2) - bq1 * (y2 - y1));
    const double bq2 = child(1.0 + 2.0 * (hi[i] - y2) / (y2 - y1));
    const double c2 = 0.5 * ((y1 + y2) + bq2 * (y2 - y1));
    const bool swap = uniform(rng, 0.0, 1.0) < 0.5;
    a[i] = std::clamp(swap ? c2 : c1, lo[i], hi[i]);
    b[i] = std::clamp(swap ? c1 : c2, lo[i], hi[i]);
  }
}

inline void polynomial_mutation(std::vector<double>& x, const std::vector<double>& lo, const std::vector<double>& hi,
                                double eta, double prob, Rng& rng) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (uniform(rng, 0.0, 1.0) >= prob)
      continue;
    const double range = hi[i] - lo[i];
    const double d1 = (x[i] - lo[i]) / range, d2 = (hi[i] - x[i]) / range;
    const double u = uniform(rng, 0.0, 1.0);
    const double p = 1.0 / (eta + 1.0);
    double dq;
    if (u < 0.5)
      dq = std::pow(2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta + 1.0), p) - 1.0;
    else
      dq = 1.0 - std::pow(2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, eta + 1.0), p);
    x[i] = std::clamp(x[i] + dq * range, lo[i], hi[i]);
  }
}

inline bool crowded_better(const Individual& a, const Individual& b) {
  return a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding);
}

inline GenerationStats stats(const std::vector<Individual>& pop, int gen) {
  GenerationStats s;
  s.generation = gen;
  s.best_f0 = s.best_f1 = std::numeric_limits<double>::infinity();
  double sum0 = 0, sum1 = 0, sumv = 0;
  s.min_violation = std::numeric_limits<double>::infinity();
  for (const auto& ind : pop) {
    sumv += ind.eval.violation;
    s.min_violation = std::min(s.min_violation, ind.eval.violation);
    if (ind.eval.violation > 0.0)
      continue;
    ++s.feasible;
    s.best_f0 = std::min(s.best_f0, ind.eval.f[0]);
    sum0 += ind.eval.f[0];
    if (ind.eval.f.size() > 1) {
      s.best_f1 = std::min(s.best_f1, ind.eval.f[1]);
      sum1 += ind.eval.f[1];
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.mean_violation = sumv / static_cast<double>(pop.size());
  if (s.feasible == 0) {
    s.best_f0 = s.best_f1 = s.mean_f0 = s.mean_f1 = nan;
  } else {
    s.mean_f0 = sum0 / static_cast<double>(s.feasible);
    s.mean_f1 = sum1 / static_cast<double>(s.feasible);
  }
  return s;
}

} // namespace detail

/// Elitist NSGA-II with binary crowded tournaments, SBX crossover and
/// polynomial mutation. `initial` supplies the first population.
inline GaResult nsga2(std::vector<std::vector<double>> initial, const std::vector<double>& lo,
                      const std::vector<double>& hi, const EvaluateFn& evaluate, const GaOptions& opt) {
  const std::size_t n = static_cast<std::size_t>(opt.population);
  if (opt.population < 2 || opt.generations < 1)
    throw DomainError("population must be at least 2 and generations at least 1");
  if (initial.size() != n)
    throw DomainError("initial population has " + std::to_string(initial.size()) + " members, expected " +
                      std::to_string(n));
  const double pm = opt.mutation_prob < 0 ? 1.0 / static_cast<double>(lo.size()) : opt.mutation_prob;
  Rng rng(derive_seed(opt.seed, 0));
  const auto assess = [&](std::vector<std::vector<double>> xs) {
    const auto ev = evaluate(xs);
    std::vector<Individual> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out[i].x = std::move(xs[i]);
      out[i].eval = ev[i];
    }
    return out;
  };
  GaResult res;
  auto pop = assess(std::move(initial));
  for (const auto& f : non_dominated_sort(pop))
    crowding_distance(pop, f);
  res.history.push_back(detail::stats(pop, 0));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const auto tournament = [&]() -> const Individual& {
    const auto& a = pop[pick(rng)];
    const auto& b = pop[pick(rng)];
    return detail::crowded_better(b, a) ? b : a;
  };
  for (int gen = 1; gen <= opt.generations; ++gen) {
    std::vector<std::vector<double>> kids;
    while (kids.size() < n) {
      auto a = tournament().x, b = tournament().x;
      if (uniform(rng, 0.0, 1.0) < opt.crossover_prob)
        detail::sbx(a, b, lo, hi, opt.sbx_eta, rng);
      detail::polynomial_mutation(a, lo, hi, opt.mutation_eta, pm, rng);
      detail::polynomial_mutation(b, lo, hi, opt.mutation_eta, pm, rng);
      kids.push_back(std::move(a));
      if (kids.size() < n)
        kids.push_back(std::move(b));
    }
    auto merged = std::move(pop);
    auto offspring = assess(std::move(kids));
    merged.insert(merged.end(), std::make_move_iterator(offspring.begin()), std::make_move_iterator(offspring.end()));
    const auto fronts = non_dominated_sort(merged);
    pop.clear();
    for (const auto& f : fronts) {
      crowding_distance(merged, f);
      if (pop.size() + f.size() <= n) {
        for (std::size_t i : f)
          pop.push_back(merged[i]);
        continue;
      }
      auto order = f;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return merged[a].crowding > merged[b].crowding; });
      for (std::size_t k = 0; pop.size() < n; ++k)
        pop.push_back(merged[order[k]]);
      break;
    }
    // Ranks and crowding within the survivors drive the next tournament.
    for (const auto& f : non_dominated_sort(pop))
      crowding_distance(pop, f);
    res.history.push_back(detail::stats(pop, gen));
  }
  res.population = std::move(pop);
  return res;
}

/// Two-objective hypervolume (minimization) against a reference point.
inline double hypervolume2(std::vector<std::array<double, 2>> pts, std::array<double, 2> ref) {
  std::sort(pts.begin(), pts.end());
  double hv = 0.0, floor = ref[1];
  for (const auto& p : pts) {
    if (p[0] >= ref[0] || p[1] >= floor)
      continue;
    hv += (ref[0] - p[0]) * (floor - p[1]);
    floor = p[1];
  }
  return hv;
}

// ---- Hull optimization ---------------------------------------------------

struct HullGaResult {
  GaResult ga;
  std::vector<Objectives> objectives; // final population, same order
};

/// Minimizes (R_T, C_T) from surrogates for one test case. The initial
/// population is drawn from the dataset's feasible hulls.
inline HullGaResult optimize_case(const TestCase& c, const CaseModels& m, const Dataset& ds, const GaOptions& opt) {
  check_case(c);
  const auto recs = ds.feasible();
  if (recs.size() < static_cast<std::size_t>(opt.population))
    throw DomainError("dataset has fewer feasible hulls than the population size");
  Rng rng(derive_seed(opt.seed, 1));
  std::vector<std::size_t> idx(recs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::vector<double>> init;
  for (int i = 0; i < opt.population; ++i) {
    const auto u = m.nz->normalize(recs[idx[static_cast<std::size_t>(i)]]->params.shape);
    init.emplace_back(u.begin(), u.end());
  }
  const std::vector<double> lo(kShapeArity, -1.0), hi(kShapeArity, 1.0);
  const EvaluateFn eval = [&](const std::vector<std::vector<double>>& xs) {
    Matrix x(kShapeArity, static_cast<Eigen::Index>(xs.size()));
    for (std::size_t j = 0; j < xs.size(); ++j)
      for (std::size_t k = 0; k < kShapeArity; ++k)
        x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = xs[j][k];
    const auto obj = evaluate_batch(x, c, m);
    std::vector<Evaluation> ev(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j)
      ev[j] = {{obj[j].rt, obj[j].ct}, obj[j].violation};
    return ev;
  };
  HullGaResult out;
  out.ga = nsga2(std::move(init), lo, hi, eval, opt);
  Matrix x(kShapeArity, opt.population);
  for (int j = 0; j < opt.population; ++j)
    for (std::size_t k = 0; k < kShapeArity; ++k)
      x(static_cast<Eigen::Index>(k), j) = out.ga.population[static_cast<std::size_t>(j)].x[k];
  out.objectives = evaluate_batch(x, c, m);
  return out;
}

inline std::string history_csv(const std::vector<GenerationStats>& h) {
  std::string s = "generation,feasible,best_rt,mean_rt,best_ct,mean_ct,min_violation,mean_violation\n";
  for (const auto& g : h)
    s += std::to_string(g.generation) + "," + std::to_string(g.feasible) + "," + format_double(g.best_f0) + "," +
         format_double(g.mean_f0) + "," + format_double(g.best_f1) + "," + format_double(g.mean_f1) + "," +
         format_double(g.min_violation) + "," + format_double(g.mean_violation) + "\n";
  return s;
}

} // namespace hulldiff
