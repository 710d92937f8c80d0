#pragma once

// Conditional DDPM over normalized shape vectors: noise schedule, forward
// noising, denoiser training, and guided ancestral sampling.

#include "hulldiff/surrogates.hpp"

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hulldiff {

/// Index t runs 1..T; slot 0 holds the identity (alpha_bar = 1).
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> beta, alpha, alpha_bar, sigma;

  static NoiseSchedule from_betas(const std::vector<double>& betas) {
    if (betas.empty())
      throw DomainError("noise schedule needs at least one step");
    NoiseSchedule s;
    s.steps = static_cast<int>(betas.size());
    s.beta = {0.0};
    s.alpha = {1.0};
    s.alpha_bar = {1.0};
    s.sigma = {0.0};
    for (double b : betas) {
      if (!(b > 0.0 && b < 1.0))
        throw DomainError("beta must lie in (0, 1)");
      s.beta.push_back(b);
      s.alpha.push_back(1.0 - b);
      s.alpha_bar.push_back(s.alpha_bar.back() * (1.0 - b));
      s.sigma.push_back(std::sqrt(b));
    }
    for (int t = 1; t <= s.steps; ++t)
      if (!(s.alpha_bar[t] < s.alpha_bar[t - 1]))
        throw NumericalError("alpha_bar not strictly decreasing at step " + std::to_string(t));
    return s;
  }

  static NoiseSchedule linear(int steps = 1000, double lo = 1e-4, double hi = 0.02) {
    if (steps < 1)
      throw DomainError("noise schedule needs at least one step");
    std::vector<double> b(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
      b[static_cast<std::size_t>(i)] = steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1.0);
    return from_betas(b);
  }

  void check_step(int t) const {
    if (t < 1 || t > steps)
      throw DomainError("diffusion step " + std::to_string(t) + " outside [1, " + std::to_string(steps) + "]");
  }
};

inline std::vector<double> forward_noise(std::span<const double> x0, int t, std::span<const double> eps,
                                         const NoiseSchedule& s) {
  s.check_step(t);
  if (x0.size() != eps.size())
    throw RepresentationError("noise and data arity differ");
  const double a = std::sqrt(s.alpha_bar[t]), c = std::sqrt(1.0 - s.alpha_bar[t]);
  std::vector<double> xt(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i)
    xt[i] = a * x0[i] + c * eps[i];
  return xt;
}

/// Conditioning targets, all LOA-normalized: [t*, log10 V_t*, b, d].
struct Conditioning {
  double t_star = 0.5, log_v = -2.0, beam = 0.1, depth = 0.1;

  std::array<double, 4> values() const { return {t_star, log_v, beam, depth}; }
};

inline void check_conditioning(const Conditioning& c) {
  const auto& b = kShapeBounds;
  if (!(c.t_star >= kCondDraftLo && c.t_star <= kCondDraftHi))
    throw DomainError("conditioning draft ratio outside [0.01, 1]");
  if (!(c.beam >= b[idx(Shape::beam)].lo && c.beam <= b[idx(Shape::beam)].hi))
    throw DomainError("conditioning beam outside the parameter bounds");
  if (!(c.depth >= b[idx(Shape::depth)].lo && c.depth <= b[idx(Shape::depth)].hi))
    throw DomainError("conditioning depth outside the parameter bounds");
  if (!std::isfinite(c.log_v))
    throw DomainError("conditioning volume must be finite");
}

inline constexpr int kTimeEmbedding = 16;

/// Sinusoidal step embedding: sin then cos at geometric frequencies.
inline void time_embedding(int t, std::span<double> out) {
  const std::size_t half = out.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double f = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    out[i] = std::sin(t * f);
    out[half + i] = std::cos(t * f);
  }
}

/// Noise predictor on [x_t (data), step embedding, conditioning]. A linear
/// embedding of the conditioning summed with the step embedding feeds the
/// same first affine layer, so it is absorbed into that layer's weights.
struct Denoiser {
  Mlp net;
  NoiseSchedule schedule;
  int data = static_cast<int>(kShapeArity);
  int cond = 4;

  int input_size() const { return data + kTimeEmbedding + cond; }
};

inline void denoiser_column(const Denoiser& d, std::span<const double> xt, int t, std::span<const double> c,
                            Matrix& in, Eigen::Index j) {
  for (int i = 0; i < d.data; ++i)
    in(i, j) = xt[static_cast<std::size_t>(i)];
  double emb[kTimeEmbedding];
  time_embedding(t, emb);
  for (int i = 0; i < kTimeEmbedding; ++i)
    in(d.data + i, j) = emb[i];
  for (int i = 0; i < d.cond; ++i)
    in(d.data + kTimeEmbedding + i, j) = c[static_cast<std::size_t>(i)];
}

/// Draws one clean example and its conditioning.
using ExampleFn = std::function<void(Rng&, std::span<double> x0, std::span<double> c)>;

struct DiffusionConfig {
  std::vector<int> hidden{256, 256, 256, 256};
  TrainConfig train{};
  int steps = 1000;
  double beta_lo = 1e-4, beta_hi = 0.02;
};

/// Batch columns follow the training loop: example, t ~ U{1..T}, eps ~ N(0, I),
/// x_t by forward noising; the target is eps.
inline BatchFn denoiser_batches(const Denoiser& proto, ExampleFn example) {
  return [proto, example = std::move(example)](Rng& rng, Matrix& x, Matrix& y) {
    std::vector<double> x0(static_cast<std::size_t>(proto.data)), c(static_cast<std::size_t>(proto.cond)),
        eps(x0.size());
    std::uniform_int_distribution<int> pick(1, proto.schedule.steps);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      example(rng, x0, c);
      const int t = pick(rng);
      for (auto& e : eps)
        e = standard_normal(rng);
      const auto xt = forward_noise(x0, t, eps, proto.schedule);
      denoiser_column(proto, xt, t, c, x, j);
      for (int i = 0; i < proto.data; ++i)
        y(i, j) = eps[static_cast<std::size_t>(i)];
    }
  };
}

inline Denoiser train_denoiser(int data, int cond, const ExampleFn& example, const DiffusionConfig& cfg,
                               double* final_loss = nullptr) {
  Denoiser d;
  d.data = data;
  d.cond = cond;
  d.schedule = NoiseSchedule::linear(cfg.steps, cfg.beta_lo, cfg.beta_hi);
  auto net = make_mlp(layer_sizes(d.input_size(), cfg.hidden, data), Head::linear, derive_seed(cfg.train.seed, 1));
  const auto batches = denoiser_batches(d, example);
  {
    Rng rng(derive_seed(cfg.train.seed, 2));
    Matrix x(d.input_size(), 4096), y(data, 4096);
    batches(rng, x, y);
    fit_scaling(net, x);
  }
  TrainConfig tc = cfg.train;
  tc.loss = Loss::mse;
  TrainResult res;
  try {
    res = train_mlp(std::move(net), batches, tc);
  } catch (const NumericalError& e) {
    throw TrainingError(std::string("denoiser ") + e.what());
  }
  if (final_loss)
    *final_loss = res.final_loss;
  d.net = std::move(res.model);
  return d;
}

/// Hull examples: normalized feasible shape, t* ~ U[0.01, 1], conditioning
/// from the measured volume at t* and the raw beam and depth.
inline ExampleFn hull_examples(std::vector<const HullRecord*> recs, const Normalizer& nz) {
  std::vector<ShapeVector> xs;
  for (const auto* r : recs)
    xs.push_back(nz.normalize(r->params.shape));
  return [recs = std::move(recs), xs = std::move(xs)](Rng& rng, std::span<double> x0, std::span<double> c) {
    std::uniform_int_distribution<std::size_t> pick(0, recs.size() - 1);
    const std::size_t i = pick(rng);
    std::copy(xs[i].begin(), xs[i].end(), x0.begin());
    const double t = uniform(rng, kCondDraftLo, kCondDraftHi);
    const auto& s = recs[i]->params.shape;
    c[0] = t;
    c[1] = std::log10(interpolate_curves(*recs[i]->curves, t).vol);
    c[2] = s[idx(Shape::beam)];
    c[3] = s[idx(Shape::depth)];
  };
}

inline Denoiser train_diffusion(const Dataset& ds, const Normalizer& nz, const DiffusionConfig& cfg,
                                double* final_loss = nullptr) {
  const auto recs = ds.feasible();
  if (recs.empty())
    throw DomainError("diffusion training needs at least one feasible record");
  return train_denoiser(static_cast<int>(kShapeArity), 4, hull_examples(recs, nz), cfg, final_loss);
}

/// Mean noise-prediction loss on a fixed batch drawn from `seed`.
inline double denoiser_loss(const Denoiser& d, const ExampleFn& example, int n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(d.input_size(), n), y(d.data, n);
  denoiser_batches(d, example)(rng, x, y);
  return batch_loss(d.net, x, y, Loss::mse);
}

struct Guidance {
  double gamma = 0.0, lambda0 = 0.0, lambda1 = 0.0;
  bool variance_scaled = false; // multiply the guidance terms by sigma_t^2
};

inline constexpr Guidance kFullGuidance{0.2, 0.3, 0.3};
inline constexpr Guidance kClassifierOnly{0.2, 0.0, 0.0};
inline constexpr Guidance kUnguided{0.0, 0.0, 0.0};

/// Guidance models; a null pointer is allowed when its coefficient is zero.
struct GuidanceModels {
  const Mlp* feasibility = nullptr;
  const Mlp* resistance = nullptr;
  const Mlp* volume = nullptr;
  const Mlp* waterline = nullptr;
};

/// Operating point for resistance guidance.
struct FlowTarget {
  double speed = 1.0; // m/s
  double loa = 1.0;   // m
  double g = 9.81;
};

inline constexpr double kMinPredictedWaterline = 0.05;

/// Guided ancestral sampling; returns data x n normalized vectors. Chain j
/// draws all of its noise from its own stream derive_seed(seed, j).
inline Matrix sample_guided(const Denoiser& d, const Conditioning& c, const FlowTarget& flow, int n,
                            const Guidance& gd, const GuidanceModels& models, std::uint64_t seed) {
  if (n < 0)
    throw DomainError("sample count must be non-negative");
  if (gd.gamma < 0 || gd.lambda0 < 0 || gd.lambda1 < 0)
    throw ConfigError("guidance", "coefficients must be non-negative");
  if (gd.gamma > 0 && !models.feasibility)
    throw ConfigError("guidance.gamma", "nonzero but no feasibility classifier loaded");
  if (gd.lambda0 > 0 && (!models.resistance || !models.waterline))
    throw ConfigError("guidance.lambda0", "nonzero but resistance or waterline model missing");
  if (gd.lambda1 > 0 && !models.volume)
    throw ConfigError("guidance.lambda1", "nonzero but no volume model loaded");
  if (d.data == static_cast<int>(kShapeArity) && d.cond == 4)
    check_conditioning(c);
  const auto cv = c.values();
  const auto& s = d.schedule;
  const int D = d.data;
  Matrix x(D, n);
  if (n == 0)
    return x;
  std::vector<Rng> rngs;
  for (int j = 0; j < n; ++j) {
    rngs.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(j)));
    for (int i = 0; i < D; ++i)
      x(i, j) = standard_normal(rngs.back());
  }
  Matrix in(d.input_size(), n), z(D, n);
  const bool any_guidance = gd.gamma > 0 || gd.lambda0 > 0 || gd.lambda1 > 0;
  const double log_loa = std::log10(flow.loa);
  for (int t = s.steps; t >= 1; --t) {
    for (int j = 0; j < n; ++j) {
      const double* col = x.col(j).data();
      denoiser_column(d, std::span<const double>(col, static_cast<std::size_t>(D)), t, cv, in, j);
      for (int i = 0; i < D; ++i)
        z(i, j) = t > 1 ? standard_normal(rngs[static_cast<std::size_t>(j)]) : 0.0;
    }
    const Matrix eps = forward_batch(d.net, in);
    const double coef = (1.0 - s.alpha[t]) / std::sqrt(1.0 - s.alpha_bar[t]);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alpha[t]);
    Matrix next = inv_sqrt_alpha * (x - coef * eps) + (s.sigma[t] * (1.0 - gd.gamma)) * z;
    if (any_guidance) {
      Matrix g = Matrix::Zero(D, n);
      if (gd.gamma > 0) {
        // Gradient of p(feasible) = sigmoid(logit).
        const Matrix logit = forward_batch(*models.feasibility, x);
        Matrix w(1, n);
        for (int j = 0; j < n; ++j) {
          const double p = sigmoid(logit(0, j));
          w(0, j) = p * (1.0 - p);
        }
        g += gd.gamma * input_gradient_batch(*models.feasibility, x, w);
      }
      if (gd.lambda0 > 0 || gd.lambda1 > 0) {
        Matrix dx(kDraftInputs, n);
        dx.topRows(D) = x;
        dx.row(D).setConstant(c.t_star);
        if (gd.lambda0 > 0) {
          // F_n from the predicted waterline at this step, held fixed
          // while differentiating.
          const Matrix wl = forward_batch(*models.waterline, dx);
          Matrix cx(kCtInputs, n);
          cx.topRows(D) = x;
          cx.row(D).setConstant(c.t_star);
          for (int j = 0; j < n; ++j)
            cx(D + 1, j) = flow.speed / std::sqrt(flow.g * std::max(wl(0, j), kMinPredictedWaterline) * flow.loa);
          cx.row(D + 2).setConstant(log_loa);
          const Matrix ones = Matrix::Ones(1, n);
          g -= gd.lambda0 * input_gradient_batch(*models.resistance, cx, ones).topRows(D);
        }
        if (gd.lambda1 > 0) {
          // d/dx (V - P_V)^2 = -2 (V - P_V) dP_V/dx
          const Matrix pv = forward_batch(*models.volume, dx);
          Matrix w(1, n);
          for (int j = 0; j < n; ++j)
            w(0, j) = -2.0 * (c.log_v - pv(0, j));
          g -= gd.lambda1 * input_gradient_batch(*models.volume, dx, w).topRows(D);
        }
      }
      next += (gd.variance_scaled ? s.sigma[t] * s.sigma[t] : 1.0) * g;
    }
    if (!next.allFinite())
      throw NumericalError("sampling produced non-finite values at step " + std::to_string(t));
    x = std::move(next);
  }
  return x;
}

/// Unguided conditional sampling with optional classifier guidance only.
inline Matrix sample_conditional(const Denoiser& d, const Conditioning& c, int n, std::uint64_t seed,
                                 double gamma = 0.0, const Mlp* feasibility = nullptr) {
  GuidanceModels m;
  m.feasibility = feasibility;
  return sample_guided(d, c, FlowTarget{}, n, Guidance{gamma, 0.0, 0.0}, m, seed);
}

inline std::vector<ShapeVector> to_shapes(const Matrix& x) {
  if (x.rows() != static_cast<Eigen::Index>(kShapeArity))
    throw RepresentationError("sample arity " + std::to_string(x.rows()) + " is not the shape arity");
  std::vector<ShapeVector> out(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (std::size_t k = 0; k < kShapeArity; ++k)
      out[static_cast<std::size_t>(j)][k] = x(static_cast<Eigen::Index>(k), j);
  return out;
}

inline std::string denoiser_to_text(const Denoiser& d) {
  std::string s = "hulldiff-denoiser 1\n";
  s += "data " + std::to_string(d.data) + "\ncond " + std::to_string(d.cond) + "\nbetas";
  for (int t = 1; t <= d.schedule.steps; ++t)
    s += ' ' + format_double(d.schedule.beta[static_cast<std::size_t>(t)]);
  return s + "\n" + mlp_to_text(d.net);
}

inline Denoiser denoiser_from_text(const std::string& text) {
  const auto lines = split(text, '\n');
  if (lines.size() < 5 || trim(lines[0]) != "hulldiff-denoiser 1")
    throw RepresentationError("not a denoiser archive");
  const auto field = [&](std::size_t i, const std::string& key) {
    auto f = split(trim(lines[i]), ' ');
    if (f.size() < 2 || f[0] != key)
      throw RepresentationError("denoiser archive missing " + key);
    return f;
  };
  Denoiser d;
  d.data = static_cast<int>(parse_double(field(1, "data")[1], "data"));
  d.cond = static_cast<int>(parse_double(field(2, "cond")[1], "cond"));
  const auto bf = field(3, "betas");
  std::vector<double> betas;
  for (std::size_t i = 1; i < bf.size(); ++i)
    betas.push_back(parse_double(bf[i], "beta"));
  d.schedule = NoiseSchedule::from_betas(betas);
  std::string rest;
  for (std::size_t i = 4; i < lines.size(); ++i)
    rest += lines[i] + "\n";
  d.net = mlp_from_text(rest);
  if (d.net.inputs() != d.input_size() || d.net.outputs() != d.data)
    throw RepresentationError("denoiser network dimensions do not match its header");
  return d;
}

} // namespace hulldiff
