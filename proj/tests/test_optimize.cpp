#include "hulldiff/optimize.hpp"

#include <gtest/gtest.h>

using namespace hulldiff;

namespace {

Individual point(double a, double b, double violation = 0.0) {
  Individual i;
  i.eval.f = {a, b};
  i.eval.violation = violation;
  return i;
}

// Brute-force rank: peel off non-dominated sets by repeated full scans.
std::vector<int> brute_ranks(const std::vector<Individual>& pop) {
  std::vector<int> rank(pop.size(), -1);
  for (int r = 0;; ++r) {
    std::vector<std::size_t> layer;
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (rank[i] >= 0)
        continue;
      bool dominated = false;
      for (std::size_t j = 0; j < pop.size(); ++j)
        dominated = dominated || (rank[j] < 0 && j != i && dominates(pop[j].eval, pop[i].eval));
      if (!dominated)
        layer.push_back(i);
    }
    if (layer.empty())
      return rank;
    for (auto i : layer)
      rank[i] = r;
  }
}

struct Fixture {
  Normalizer nz;
  Mlp ct, wl;
  HullParams hull;
};

// A feasible hull plus linear surrogates; the normalizer's fitted sample
// includes the hull so its round trip is exact.
Fixture fixture() {
  Fixture f;
  Rng rng(3);
  std::vector<ShapeVector> rows;
  for (int i = 0; i < 200; ++i)
    rows.push_back(sample_random_hull(rng).shape);
  f.hull = sample_random_hull(rng);
  f.hull.shape[idx(Shape::bulb_length)] = 0.0;
  f.hull.shape[idx(Shape::bulb_radius)] = 0.0;
  f.hull.loa = 80.0;
  rows.push_back(f.hull.shape);
  f.nz = Normalizer::fit(rows);
  f.ct = make_mlp({kCtInputs, 1}, Head::linear, 4);
  f.wl = make_mlp({kDraftInputs, 1}, Head::linear, 5);
  for (int i = 0; i < kCtInputs; ++i)
    f.ct.w[0](0, i) = 0.01 * (i + 1);
  f.ct.b[0](0) = -2.5;
  f.wl.w[0].setConstant(0.02);
  f.wl.b[0](0) = 0.9;
  return f;
}

TestCase case_for(const HullParams& h, double t_star, double beam_scale = 1.0) {
  TestCase c;
  c.name = "probe";
  c.loa = h.loa;
  c.boa = h.shape[idx(Shape::beam)] * h.loa / beam_scale;
  c.depth = h.shape[idx(Shape::depth)] * h.loa;
  c.draft = t_star * c.depth;
  c.volume = measure_at(HullSurface(h), t_star).vol * std::pow(h.loa, 3);
  c.speed = 5.0;
  return c;
}

} // namespace

TEST(TestCases, BundledCasesValid) {
  ASSERT_EQ(bundled_cases().size(), 5u);
  for (const auto& c : bundled_cases()) {
    check_case(c);
    check_conditioning(c.conditioning());
  }
  EXPECT_DOUBLE_EQ(find_case("kayak").loa, 3.8);
  EXPECT_THROW(find_case("yacht"), ConfigError);
}

TEST(NonDominatedSort, HandBuiltRanks) {
  std::vector<Individual> pop{point(1, 4), point(2, 5), point(4, 1), point(6, 6), point(5, 2)};
  non_dominated_sort(pop);
  const std::vector<int> expect{0, 1, 0, 2, 1};
  for (std::size_t i = 0; i < pop.size(); ++i)
    EXPECT_EQ(pop[i].rank, expect[i]);
}

TEST(NonDominatedSort, MatchesBruteForceWithConstraints) {
  Rng rng(1);
  std::vector<Individual> pop;
  for (int i = 0; i < 60; ++i)
    pop.push_back(point(std::round(uniform(rng, 0, 8)), std::round(uniform(rng, 0, 8)),
                        uniform(rng, 0, 1) < 0.3 ? std::round(uniform(rng, 0, 3)) : 0.0));
  const auto expect = brute_ranks(pop);
  non_dominated_sort(pop);
  for (std::size_t i = 0; i < pop.size(); ++i)
    EXPECT_EQ(pop[i].rank, expect[i]);
}

TEST(NonDominatedSort, FeasibleDominatesInfeasible) {
  EXPECT_TRUE(dominates(point(9, 9).eval, point(0, 0, 0.1).eval));
  EXPECT_TRUE(dominates(point(9, 9, 0.1).eval, point(0, 0, 0.2).eval));
  EXPECT_FALSE(dominates(point(1, 1).eval, point(1, 1).eval));
}

TEST(Crowding, BoundaryInfiniteInteriorExact) {
  std::vector<Individual> pop{point(0, 4), point(1, 2), point(2, 1), point(4, 0)};
  crowding_distance(pop, {0, 1, 2, 3});
  EXPECT_TRUE(std::isinf(pop[0].crowding));
  EXPECT_TRUE(std::isinf(pop[3].crowding));
  EXPECT_DOUBLE_EQ(pop[1].crowding, 2.0 / 4.0 + 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(pop[2].crowding, 3.0 / 4.0 + 2.0 / 4.0);
}

TEST(Nsga2, AnalyticOneDimensionalFront) {
  // f1 = x^2, f2 = (x - 2)^2; front x in [0, 2]. With reference (4, 4) the
  // dominated area is the integral of 4 - (sqrt(a) - 2)^2 over a in [0, 4].
  const double exact = 40.0 / 3.0;
  Rng rng(2);
  std::vector<std::vector<double>> init;
  for (int i = 0; i < 100; ++i)
    init.push_back({uniform(rng, -5, 5)});
  const EvaluateFn eval = [](const std::vector<std::vector<double>>& xs) {
    std::vector<Evaluation> ev;
    for (const auto& x : xs)
      ev.push_back({{x[0] * x[0], (x[0] - 2) * (x[0] - 2)}, 0.0});
    return ev;
  };
  GaOptions opt;
  opt.seed = 5;
  const auto res = nsga2(init, {-5.0}, {5.0}, eval, opt);
  std::vector<std::array<double, 2>> pts;
  double lo = 1e9, hi = -1e9;
  for (const auto& ind : res.population) {
    pts.push_back({ind.eval.f[0], ind.eval.f[1]});
    lo = std::min(lo, ind.x[0]);
    hi = std::max(hi, ind.x[0]);
  }
  EXPECT_NEAR(hypervolume2(pts, {4, 4}), exact, 0.02 * exact);
  EXPECT_LT(lo, 0.02);
  EXPECT_GT(hi, 1.98);
  EXPECT_GE(lo, -0.01);
  EXPECT_LE(hi, 2.01);
}

TEST(Nsga2, ElitistAndDeterministic) {
  Rng rng(4);
  std::vector<std::vector<double>> init;
  for (int i = 0; i < 20; ++i)
    init.push_back({uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)});
  // Constraint x0 + x1 >= 0.5 makes most of the start infeasible.
  const EvaluateFn eval = [](const std::vector<std::vector<double>>& xs) {
    std::vector<Evaluation> ev;
    for (const auto& x : xs)
      ev.push_back({{x[0] * x[0] + x[2] * x[2], std::pow(x[1] - 1, 2)}, std::max(0.0, 0.5 - x[0] - x[1])});
    return ev;
  };
  GaOptions opt;
  opt.population = 20;
  opt.generations = 60;
  opt.seed = 6;
  const auto a = nsga2(init, {-1, -1, -1}, {1, 1, 1}, eval, opt);
  const auto b = nsga2(init, {-1, -1, -1}, {1, 1, 1}, eval, opt);
  ASSERT_EQ(a.history.size(), 61u);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& g : a.history)
    if (g.feasible > 0) {
      EXPECT_LE(g.best_f0, best);
      best = g.best_f0;
    }
  EXPECT_TRUE(std::isfinite(best));
  for (std::size_t i = 0; i < a.population.size(); ++i) {
    EXPECT_EQ(a.population[i].x, b.population[i].x);
    for (double v : a.population[i].x) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Hypervolume, RectangleSum) {
  EXPECT_DOUBLE_EQ(hypervolume2({{1, 3}, {2, 2}, {3, 1}}, {4, 4}), 3 * 1 + 2 * 1 + 1 * 1);
  EXPECT_DOUBLE_EQ(hypervolume2({{5, 5}}, {4, 4}), 0.0);
}

TEST(EvaluateIndividual, AtTargetsIsFeasible) {
  const auto f = fixture();
  CaseModels m{&f.nz, &f.ct, &f.wl, {}};
  const auto c = case_for(f.hull, 0.5);
  const auto o = evaluate_individual(f.nz.normalize(f.hull.shape), c, m);
  EXPECT_EQ(o.violation, 0.0);
  EXPECT_NEAR(o.t_star, 0.5, 1e-9);
}

TEST(EvaluateIndividual, BeamExcessTerm) {
  const auto f = fixture();
  CaseModels m{&f.nz, &f.ct, &f.wl, {}};
  const auto c = case_for(f.hull, 0.5, 1.03);
  const auto o = evaluate_individual(f.nz.normalize(f.hull.shape), c, m);
  EXPECT_NEAR(o.violation, 0.01 * c.beam_ratio(), 1e-12);
}

TEST(EvaluateIndividual, HandChainedObjectives) {
  const auto f = fixture();
  CaseModels m{&f.nz, &f.ct, &f.wl, {}};
  const auto c = case_for(f.hull, 0.4);
  const auto x = f.nz.normalize(f.hull.shape);
  const auto o = evaluate_individual(x, c, m);
  const double t = c.draft / (f.nz.denormalize(x)[idx(Shape::depth)] * c.loa);
  double wl = 0.9 + 0.02 * t, ct = -2.5 + 0.01 * (kShapeArity + 1) * t;
  for (std::size_t k = 0; k < kShapeArity; ++k) {
    wl += 0.02 * x[k];
    ct += 0.01 * (k + 1) * x[k];
  }
  const double fn = c.speed / std::sqrt(9.81 * wl * c.loa);
  ct += 0.01 * (kShapeArity + 2) * fn + 0.01 * (kShapeArity + 3) * std::log10(c.loa);
  const double rt = std::pow(10.0, ct) * 0.5 * 1025.0 * c.speed * c.speed * c.loa * c.loa;
  EXPECT_NEAR(o.fn, fn, 1e-12);
  EXPECT_NEAR(o.ct, ct, 1e-12);
  EXPECT_NEAR(o.rt / rt, 1.0, 1e-12);
}

TEST(OptimizeCase, SmallRunKeepsBoundsAndElitism) {
  const auto f = fixture();
  const auto ds = build_dataset(24, 7, [] {
    DatasetOptions o;
    o.grid.resolution = 0.25;
    return o;
  }());
  const auto nz = fit_normalizer(ds);
  CaseModels m{&nz, &f.ct, &f.wl, {}};
  GaOptions opt;
  opt.population = 16;
  opt.generations = 10;
  opt.seed = 8;
  const auto res = optimize_case(find_case("frigate"), m, ds, opt);
  ASSERT_EQ(res.objectives.size(), 16u);
  for (const auto& ind : res.ga.population) {
    ASSERT_EQ(ind.x.size(), kShapeArity);
    for (double v : ind.x) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& g : res.ga.history)
    if (g.feasible > 0) {
      EXPECT_LE(g.best_f0, best);
      best = g.best_f0;
    }
}
