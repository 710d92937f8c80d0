// Acceptance checks. One PASS/FAIL line per criterion; exit status 0 only
// when every criterion passes. Pipeline artifacts are cached under
// --artifacts and reused while their manifests match.

#include "hulldiff/pipeline.hpp"

#include <CLI11.hpp>

#include <complex>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

using namespace hulldiff;

namespace {

// Tolerances and limits.
constexpr double kGeometryRel = 1e-6;
constexpr double kGeometrySeconds = 1.0;
constexpr double kBeamLawRel = 1e-6;
constexpr double kRefinementRel = 0.01;
constexpr double kMichellSeconds = 30.0;
constexpr double kIttcAbs = 1e-7;
constexpr double kGradientRel = 1e-4;
constexpr double kGradientFloor = 1e-3;
constexpr double kGradientStep = 1e-4;
constexpr double kGradientSeconds = 10.0;
constexpr double kMinCtR2 = 0.95;
constexpr double kMinFeasAccuracy = 0.90;
constexpr double kTrainingMinutes = 30.0;
constexpr double kTerminalVarLo = 0.9, kTerminalVarHi = 1.1;
constexpr int kTerminalDraws = 10000;
constexpr double kToyInMode = 0.95;
constexpr int kMinDirectionCases = 4;
constexpr double kMaxAbsVolumeError = 0.10;
constexpr double kMaxAbsDepthError = 0.05;
constexpr double kHypervolumeRel = 0.02;
constexpr double kMinDiffusionCorrelation = 0.9;
constexpr double kSmokeSeconds = 600.0;
constexpr std::size_t kSmokeHulls = 64;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

// ---- 1: geometry -------------------------------------------------------------

Outcome geometry_oracle() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (const auto& [b, d] : {std::pair{0.1, 0.05}, std::pair{0.3, 0.2}, std::pair{0.02, 0.3}}) {
    const auto c = measure_surface_curves(HullSurface::box(b, d));
    for (std::size_t k = 0; k < kDraftMarks; ++k) {
      const double t = draft_mark(k);
      const double vol = b * d * t, sa = b + 2.0 * d * t + 2.0 * b * d * t;
      worst = std::max({worst, std::abs(c.vol[k] / vol - 1.0), std::abs(c.area[k] / sa - 1.0),
                        std::abs(c.wl[k] - 1.0)});
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= kGeometryRel && secs < kGeometrySeconds,
          "box hulls, 100 marks each: max relative error " + fmt(worst) + ", " + fmt(secs, 3) + " s"};
}

// ---- 2: Michell ---------------------------------------------------------------

ShapeVector wedge_shape() {
  ShapeVector s{};
  s[idx(Shape::beam)] = 0.1;
  s[idx(Shape::depth)] = 0.08;
  s[idx(Shape::run)] = 0.3;
  s[idx(Shape::entrance)] = 0.3;
  s[idx(Shape::run_exp)] = 1.0;
  s[idx(Shape::entrance_exp)] = 1.0;
  s[idx(Shape::section_exp)] = 1.0;
  return s;
}

FlowCondition flow_at(const HullSurface& h, double t, double fn) {
  FlowCondition c;
  c.loa = 1.0;
  c.t_star = t;
  c.speed = speed_from_froude(fn, h.waterline_length(t), 1.0);
  return c;
}

Outcome michell_properties() {
  const auto t0 = Clock::now();
  const auto box = HullSurface::box(0.1, 0.05);
  const double zero = michell_wave_resistance(centerplane_slopes(box, 0.5, 96, 48, 1.0), flow_at(box, 0.5, 0.3)).rw;

  auto s = wedge_shape();
  const HullSurface a(s);
  const double scale = 1.7;
  s[idx(Shape::beam)] *= scale;
  const HullSurface wide(s);
  double beam_err = 0.0;
  for (double fn : {0.15, 0.30, 0.45}) {
    const double ra = wave_resistance(a, flow_at(a, 0.5, fn)).rw;
    const double rb = wave_resistance(wide, flow_at(wide, 0.5, fn)).rw;
    beam_err = std::max(beam_err, std::abs(rb / ra / (scale * scale) - 1.0));
  }

  GridOptions twice;
  twice.resolution = 2.0;
  double refine = 0.0;
  for (double fn : {0.15, 0.30, 0.45}) {
    const auto c = flow_at(a, 0.5, fn);
    refine = std::max(refine, std::abs(wave_resistance(a, c, twice).rw / wave_resistance(a, c).rw - 1.0));
  }
  const double secs = seconds_since(t0);
  return {zero == 0.0 && beam_err < kBeamLawRel && refine < kRefinementRel && secs < kMichellSeconds,
          "zero field R_w = " + fmt(zero) + "; c^2 law error " + fmt(beam_err) + "; 2x refinement change " +
              fmt(100 * refine, 3) + "%; " + fmt(secs, 3) + " s"};
}

// ---- 3: ITTC ------------------------------------------------------------------

Outcome ittc_values() {
  const double a = friction_coefficient(1e9), b = friction_coefficient(1e7);
  return {std::abs(a - 1.5306e-3) <= kIttcAbs && std::abs(b - 3.0e-3) <= kIttcAbs,
          "C_f(1e9) = " + fmt(a, 8) + ", C_f(1e7) = " + fmt(b, 8)};
}

// ---- 4: gradients -------------------------------------------------------------

Mlp perturbed_model(std::vector<int> sizes, std::uint64_t seed, Head head) {
  Rng rng(seed);
  auto m = make_mlp(std::move(sizes), head, rng);
  for (auto& b : m.b)
    for (Eigen::Index i = 0; i < b.size(); ++i)
      b(i) = uniform(rng, -0.5, 0.5);
  for (Eigen::Index i = 0; i < m.inputs(); ++i) {
    m.in_mean(i) = uniform(rng, -1.0, 1.0);
    m.in_scale(i) = uniform(rng, 0.5, 2.0);
  }
  m.out_mean.setConstant(0.3);
  m.out_scale.setConstant(1.7);
  return m;
}

double worst_gradient_error(const Mlp& m, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int probe = 0; probe < 5; ++probe) {
    std::vector<double> x(static_cast<std::size_t>(m.inputs()));
    for (auto& v : x)
      v = uniform(rng, -1.0, 1.0);
    const Vector g = input_gradient(m, x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto up = x, dn = x;
      up[i] += kGradientStep;
      dn[i] -= kGradientStep;
      const double fd = (forward(m, up) - forward(m, dn)) / (2 * kGradientStep);
      const double gi = g(static_cast<Eigen::Index>(i));
      worst = std::max(worst, std::abs(fd - gi) / std::max({std::abs(fd), std::abs(gi), kGradientFloor}));
    }
  }
  return worst;
}

Outcome gradient_fidelity(const std::filesystem::path& full) {
  const auto t0 = Clock::now();
  const std::vector<int> h{256, 256, 256, 256};
  std::vector<std::pair<std::string, Mlp>> models{
      {"ct", perturbed_model(layer_sizes(kCtInputs, h, 1), 5, Head::linear)},
      {"vol", perturbed_model(layer_sizes(kDraftInputs, h, 1), 6, Head::linear)},
      {"wl", perturbed_model(layer_sizes(kDraftInputs, h, 1), 7, Head::linear)},
      {"feas", perturbed_model(layer_sizes(kShapeArity, h, 1), 8, Head::logistic)},
  };
  // Trained weights too, when a finished run is at hand.
  for (const auto& [dir, name] : {std::pair{"regressors", "ct"}, std::pair{"regressors", "vol"},
                                  std::pair{"regressors", "wl"}, std::pair{"classifier", "feas"}}) {
    const auto p = full / "models" / dir / (std::string(name) + ".mlp");
    if (read_manifest(p.parent_path()) && std::filesystem::exists(p))
      models.emplace_back(std::string("trained ") + name, load_mlp(p));
  }
  double worst = 0.0;
  std::string names;
  std::uint64_t seed = 50;
  for (const auto& [name, m] : models) {
    worst = std::max(worst, worst_gradient_error(m, seed++));
    names += (names.empty() ? "" : ", ") + name;
  }
  const double secs = seconds_since(t0);
  return {worst < kGradientRel && secs < kGradientSeconds,
          names + ": max relative error " + fmt(worst) + ", " + fmt(secs, 3) + " s"};
}

// ---- pipeline artifacts -------------------------------------------------------

struct FullRun {
  RunContext ctx;
  std::optional<std::string> error;
};

std::map<std::string, std::string> key_values(const std::filesystem::path& p) { return parse_key_values(read_file(p)); }

double number(const std::map<std::string, std::string>& kv, const std::string& k) {
  const auto it = kv.find(k);
  if (it == kv.end())
    throw RepresentationError("missing '" + k + "'");
  return it->second == "nan" ? std::numeric_limits<double>::quiet_NaN() : parse_double(it->second, k);
}

double cell(const CsvTable& t, std::size_t row, const std::string& col) {
  const auto& s = t.rows[row][t.column(col)];
  if (s.empty() || s == "nan")
    return std::numeric_limits<double>::quiet_NaN();
  return parse_double(s, col);
}

std::optional<std::size_t> find_row(const CsvTable& t, const std::string& c, const std::string& key,
                                    const std::string& value) {
  const auto ci = t.column("case"), ki = t.column(key);
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (t.rows[i][ci] == c && t.rows[i][ki] == value)
      return i;
  return std::nullopt;
}

Outcome regressor_quality(const RunContext& ctx) {
  const auto reg = key_values(ctx.models_dir("regressors") / "scores.txt");
  const auto cls = key_values(ctx.models_dir("classifier") / "scores.txt");
  const auto rt = key_values(ctx.models_dir("regressors") / "timing.txt");
  const auto ct = key_values(ctx.models_dir("classifier") / "timing.txt");
  const auto dt = key_values(ctx.models_dir("diffusion") / "timing.txt");
  const double r2 = number(reg, "ct_r2"), acc = number(cls, "feas_accuracy");
  const double minutes =
      (number(rt, "ct_seconds") + number(rt, "vol_seconds") + number(rt, "wl_seconds") + number(ct, "feas_seconds") +
       number(dt, "denoiser_seconds")) /
      60.0;
  const auto meta = key_values(ctx.dataset_dir() / "hulls.meta");
  return {r2 >= kMinCtR2 && acc >= kMinFeasAccuracy && minutes < kTrainingMinutes,
          "n = " + meta.at("feasible") + " feasible hulls; held-out P_CT R^2 " + fmt(r2) + " (P_V " +
              fmt(number(reg, "vol_r2")) + ", P_WL " + fmt(number(reg, "wl_r2")) + "); classifier accuracy " +
              fmt(acc) + "; training (four surrogates and denoiser) " + fmt(minutes, 3) + " min"};
}

// ---- 6: diffusion -------------------------------------------------------------

constexpr double kBlobSigma = 0.25;
constexpr double kBlob[2][2] = {{-1.5, -1.0}, {1.5, 1.0}};

Outcome diffusion_sanity(const RunContext& ctx) {
  const auto d = denoiser_from_text(read_file(ctx.models_dir("diffusion") / "denoiser.txt"));
  const auto ds = read_dataset(ctx.dataset_dir() / "hulls.csv", ctx.dataset_dir() / "hulls.meta");
  const auto nz = fit_normalizer(ds);

  // Terminal marginal from a real training vector.
  const auto x0v = nz.normalize(ds.feasible().front()->params.shape);
  const std::vector<double> x0(x0v.begin(), x0v.end());
  Rng rng(11);
  std::vector<double> sum(x0.size(), 0.0), sq(x0.size(), 0.0), eps(x0.size());
  for (int i = 0; i < kTerminalDraws; ++i) {
    for (auto& e : eps)
      e = standard_normal(rng);
    const auto xt = forward_noise(x0, d.schedule.steps, eps, d.schedule);
    for (std::size_t k = 0; k < x0.size(); ++k) {
      sum[k] += xt[k];
      sq[k] += xt[k] * xt[k];
    }
  }
  double vlo = 1e9, vhi = -1e9;
  for (std::size_t k = 0; k < x0.size(); ++k) {
    const double m = sum[k] / kTerminalDraws, v = sq[k] / kTerminalDraws - m * m;
    vlo = std::min(vlo, v);
    vhi = std::max(vhi, v);
  }
  const bool marginal = vlo >= kTerminalVarLo && vhi <= kTerminalVarHi;

  // Two-blob toy conditional recovery.
  const ExampleFn blobs = [](Rng& r, std::span<double> x, std::span<double> c) {
    const int k = uniform(r, 0.0, 1.0) < 0.5 ? 0 : 1;
    x[0] = kBlob[k][0] + kBlobSigma * standard_normal(r);
    x[1] = kBlob[k][1] + kBlobSigma * standard_normal(r);
    c[0] = k;
  };
  DiffusionConfig cfg;
  cfg.hidden = {64, 64, 64};
  cfg.train.batch = 256;
  cfg.train.steps = 6000;
  cfg.train.seed = 3;
  const auto toy = train_denoiser(2, 1, blobs, cfg);
  double in_mode = 1.0;
  for (int k : {0, 1}) {
    Conditioning c;
    c.t_star = k;
    const Matrix x = sample_conditional(toy, c, 1000, 200 + k);
    int inside = 0;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      inside += std::hypot(x(0, j) - kBlob[k][0], x(1, j) - kBlob[k][1]) < 3 * kBlobSigma ? 1 : 0;
    in_mode = std::min(in_mode, inside / 1000.0);
  }

  // Guidance off versus a plain ancestral loop on the trained hull denoiser.
  const auto tc = ctx.config.test_case(ctx.config.case_names().front());
  const auto cond = tc.conditioning();
  const int n = 8;
  const std::uint64_t seed = 31;
  const Matrix guided = sample_guided(d, cond, FlowTarget{tc.speed, tc.loa, ds.water.g}, n, kUnguided, {}, seed);
  const auto& s = d.schedule;
  const int D = d.data;
  Matrix x(D, n), in(d.input_size(), n), z(D, n);
  std::vector<Rng> rngs;
  for (int j = 0; j < n; ++j) {
    rngs.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(j)));
    for (int i = 0; i < D; ++i)
      x(i, j) = standard_normal(rngs.back());
  }
  const auto cv = cond.values();
  std::vector<double> emb(kTimeEmbedding);
  for (int t = s.steps; t >= 1; --t) {
    time_embedding(t, emb);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < D; ++i)
        in(i, j) = x(i, j);
      for (int i = 0; i < kTimeEmbedding; ++i)
        in(D + i, j) = emb[static_cast<std::size_t>(i)];
      for (std::size_t i = 0; i < cv.size(); ++i)
        in(D + kTimeEmbedding + static_cast<int>(i), j) = cv[i];
      for (int i = 0; i < D; ++i)
        z(i, j) = t > 1 ? standard_normal(rngs[static_cast<std::size_t>(j)]) : 0.0;
    }
    const Matrix e = forward_batch(d.net, in);
    x = (1.0 / std::sqrt(s.alpha[t])) * (x - ((1.0 - s.alpha[t]) / std::sqrt(1.0 - s.alpha_bar[t])) * e) +
        s.sigma[t] * z;
  }
  const bool exact = (x.array() == guided.array()).all();
  return {marginal && in_mode >= kToyInMode && exact,
          "terminal variance in [" + fmt(vlo) + ", " + fmt(vhi) + "]; toy in-mode rate " + fmt(in_mode) +
              "; guidance-off " + (exact ? "bit-exact" : "MISMATCH")};
}

// ---- 7, 8, 10: reports ----------------------------------------------------------

Outcome direction_of_effect(const RunContext& ctx) {
  const auto t = read_csv(ctx.summary_dir() / "comparison.csv");
  int both = 0;
  std::string detail;
  for (const auto& c : ctx.config.case_names()) {
    const auto f = find_row(t, c, "mode", "full"), k = find_row(t, c, "mode", "classifier-only"),
               u = find_row(t, c, "mode", "unguided");
    if (!f || !k || !u) {
      detail += c + ": missing rows; ";
      continue;
    }
    const double bf = cell(t, *f, "below_5"), bk = cell(t, *k, "below_5");
    const double mf = cell(t, *f, "median_rt_5"), mu = cell(t, *u, "median_rt_5");
    const bool count_ok = bf > bk, median_ok = mf < mu;
    both += count_ok && median_ok ? 1 : 0;
    const double delta = cell(t, *f, "delta_rt_5");
    detail += c + " below5 " + fmt(bf) + " vs " + fmt(bk) + ", median " + fmt(mf) + " vs " + fmt(mu) + ", dRT " +
              (std::isnan(delta) ? std::string("n/a") : fmt(100 * delta, 3) + "%") + "; ";
  }
  return {both >= kMinDirectionCases, std::to_string(both) + "/5 cases hold. " + detail};
}

Outcome conditioning_adherence(const RunContext& ctx) {
  const auto t = read_csv(ctx.summary_dir() / "conditioning.csv");
  bool ok = true;
  std::string detail;
  for (const auto& c : ctx.config.case_names()) {
    const auto r = find_row(t, c, "mode", "unguided");
    if (!r) {
      ok = false;
      detail += c + ": missing; ";
      continue;
    }
    const double v = cell(t, *r, "abs_vol_mean"), d = cell(t, *r, "abs_depth_mean");
    ok = ok && v <= kMaxAbsVolumeError && d <= kMaxAbsDepthError;
    detail += c + " |vol| " + fmt(100 * v, 3) + "% |depth| " + fmt(100 * d, 3) + "% eta_E " +
              fmt(100 * cell(t, *r, "eta_e"), 3) + "%; ";
  }
  return {ok, detail};
}

Outcome exploitation_report(const RunContext& ctx) {
  const auto t = read_csv(ctx.summary_dir() / "exploitation.csv");
  bool ok = true;
  std::string detail;
  for (const auto& c : ctx.config.case_names()) {
    const auto best = find_row(t, c, "source", "optimizer-best");
    const auto full = find_row(t, c, "source", "diffusion-full");
    if (!best || !full) {
      ok = false;
      detail += c + ": missing; ";
      continue;
    }
    const double rho = cell(t, *full, "correlation");
    ok = ok && rho >= kMinDiffusionCorrelation;
    detail += c + " optimizer ratio " + fmt(cell(t, *best, "ratio")) + ", diffusion ratio " +
              fmt(cell(t, *full, "ratio")) + " r " + fmt(rho) + " (n " + t.rows[*full][t.column("n")] + "); ";
  }
  return {ok, detail};
}

// ---- 9: NSGA-II ---------------------------------------------------------------

Outcome nsga_correctness(const std::optional<RunContext>& ctx) {
  // f1 = x^2, f2 = (x - 2)^2 on [-5, 5]; the dominated area against (4, 4)
  // is the integral of 4 - (sqrt(a) - 2)^2 over a in [0, 4].
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
  for (const auto& ind : res.population)
    pts.push_back({ind.eval.f[0], ind.eval.f[1]});
  const double hv = hypervolume2(pts, {4, 4});
  const bool hv_ok = std::abs(hv / exact - 1.0) <= kHypervolumeRel;

  const auto pt = [](double a, double b) {
    Individual i;
    i.eval.f = {a, b};
    return i;
  };
  std::vector<Individual> pop{pt(1, 4), pt(2, 5), pt(4, 1), pt(6, 6), pt(5, 2)};
  non_dominated_sort(pop);
  const std::vector<int> expect{0, 1, 0, 2, 1};
  bool ranks_ok = true;
  for (std::size_t i = 0; i < pop.size(); ++i)
    ranks_ok = ranks_ok && pop[i].rank == expect[i];

  std::string elit = "no case runs";
  bool elit_ok = false;
  if (ctx) {
    elit_ok = true;
    elit.clear();
    for (const auto& c : ctx->config.case_names()) {
      const auto h = read_csv(ctx->optimize_dir(c) / "history.csv");
      double best_rt = std::numeric_limits<double>::infinity(), best_ct = best_rt, viol = best_rt;
      bool mono = h.rows.size() == static_cast<std::size_t>(ctx->config.ga().generations) + 1;
      for (std::size_t i = 0; i < h.rows.size(); ++i) {
        const double v = cell(h, i, "min_violation");
        mono = mono && v <= viol;
        viol = v;
        if (cell(h, i, "feasible") > 0) {
          const double r = cell(h, i, "best_rt"), k = cell(h, i, "best_ct");
          mono = mono && r <= best_rt && k <= best_ct;
          best_rt = r;
          best_ct = k;
        }
      }
      elit_ok = elit_ok && mono;
      elit += c + (mono ? " ok" : " BROKEN") + " (" + std::to_string(h.rows.size() - 1) + " gens); ";
    }
  }
  return {hv_ok && ranks_ok && elit_ok, "hypervolume " + fmt(hv, 6) + " vs " + fmt(exact, 6) + "; hand ranks " +
                                            (ranks_ok ? "exact" : "WRONG") + "; elitism: " + elit};
}

// ---- 11: smoke ----------------------------------------------------------------

std::map<std::string, std::string> csv_tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().extension() == ".csv")
      out[std::filesystem::relative(e.path(), root).string()] = read_file(e.path());
  return out;
}

std::size_t expected_manifests(const PipelineConfig& cfg) { return 1 + 3 + cfg.case_names().size() * 5 + 1; }

std::size_t count_manifests(const std::filesystem::path& root) {
  std::size_t n = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    n += e.path().filename() == "manifest.txt" ? 1 : 0;
  return n;
}

Outcome smoke(const std::filesystem::path& config, const std::filesystem::path& artifacts) {
  std::ostringstream sink;
  std::vector<double> secs;
  std::vector<std::size_t> manifests;
  std::vector<std::filesystem::path> roots{artifacts / "smoke-a", artifacts / "smoke-b"};
  PipelineConfig cfg;
  for (const auto& root : roots) {
    std::filesystem::remove_all(root);
    CommandOptions o;
    o.config = config;
    o.out = root;
    auto ctx = make_context(o, sink);
    cfg = ctx.config;
    const auto t0 = Clock::now();
    cmd_run_all(ctx);
    secs.push_back(seconds_since(t0));
    manifests.push_back(count_manifests(root));
  }
  const auto a = csv_tree(roots[0]), b = csv_tree(roots[1]);
  std::size_t differ = 0;
  for (const auto& [k, v] : a)
    differ += b.count(k) && b.at(k) == v ? 0 : 1;
  differ += b.size() > a.size() ? b.size() - a.size() : 0;
  const auto want = expected_manifests(cfg);
  const bool ok = cfg.dataset_size() == kSmokeHulls && secs[0] < kSmokeSeconds && secs[1] < kSmokeSeconds &&
                  manifests[0] == want && manifests[1] == want && differ == 0 && !a.empty();
  return {ok, std::to_string(cfg.dataset_size()) + " hulls; runs " + fmt(secs[0], 3) + " s and " + fmt(secs[1], 3) +
                  " s; manifests " + std::to_string(manifests[0]) + "/" + std::to_string(want) + "; " +
                  std::to_string(a.size()) + " CSVs, " + std::to_string(differ) + " differ"};
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string artifacts = HULLDIFF_BINARY_DIR "/acceptance";
  std::string configs = HULLDIFF_SOURCE_DIR "/configs";
  std::vector<int> only;
  app.add_option("--artifacts", artifacts, "directory for cached pipeline runs");
  app.add_option("--configs", configs, "directory holding default.cfg and smoke.cfg");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> want(only.begin(), only.end());
  const auto enabled = [&](int id) { return want.empty() || want.count(id); };

  int failures = 0;
  const auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    if (!enabled(id))
      return;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("AC%-2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  };

  const std::filesystem::path full_dir = std::filesystem::path(artifacts) / "full";
  report(1, "geometry oracle", geometry_oracle);
  report(2, "Michell properties", michell_properties);
  report(3, "ITTC spot values", ittc_values);
  report(4, "gradient fidelity", [&] { return gradient_fidelity(full_dir); });

  // Criteria 5 to 10 need the full pipeline; it is built once and cached.
  std::optional<RunContext> full;
  std::string full_error;
  if (enabled(5) || enabled(6) || enabled(7) || enabled(8) || enabled(9) || enabled(10)) {
    try {
      CommandOptions o;
      o.config = std::filesystem::path(configs) / "default.cfg";
      o.out = full_dir;
      auto ctx = make_context(o, std::cerr);
      cmd_run_all(ctx);
      full = std::move(ctx);
    } catch (const std::exception& e) {
      full_error = e.what();
    }
  }
  const auto with_full = [&](auto fn) {
    return [&, fn]() -> Outcome {
      if (!full)
        return {false, "pipeline run failed: " + full_error};
      return fn(*full);
    };
  };
  report(5, "regressor quality", with_full(regressor_quality));
  report(6, "diffusion sanity", with_full(diffusion_sanity));
  report(7, "direction of effect", with_full(direction_of_effect));
  report(8, "conditioning adherence", with_full(conditioning_adherence));
  report(9, "NSGA-II correctness", [&] { return nsga_correctness(full); });
  report(10, "surrogate exploitation", with_full(exploitation_report));
  report(11, "end-to-end smoke", [&] { return smoke(std::filesystem::path(configs) / "smoke.cfg", artifacts); });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "NOT ACCEPTED", failures);
  return failures == 0 ? 0 : 1;
}
