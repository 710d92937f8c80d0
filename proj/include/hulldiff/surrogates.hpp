#pragma once

// The four trained surrogates: total resistance coefficient (P_CT), log
// volume (P_V), waterline length (P_WL) and the feasibility classifier.
// Input layouts put the normalized shape vector first:
//   P_CT  [x (13), t*, F_n, log10 LOA]
//   P_V   [x (13), t*]  -> log10 V_t*
//   P_WL  [x (13), t*]  -> WL_t*
//   f_phi [x (13)]      -> feasibility logit

#include "hulldiff/dataset.hpp"
#include "hulldiff/neural.hpp"

#include <array>
#include <vector>

namespace hulldiff {

inline constexpr int kCtInputs = static_cast<int>(kShapeArity) + 3;
inline constexpr int kDraftInputs = static_cast<int>(kShapeArity) + 1;

struct SurrogateConfig {
  std::vector<int> hidden{256, 256, 256, 256};
  TrainConfig train{};
  int holdout_every = 10; // every k-th feasible record is held out
  WaterConstants water{};
};

struct Surrogates {
  Mlp ct, vol, wl, feas;
};

inline std::array<double, kCtInputs> ct_input(const ShapeVector& x, double t_star, double fn, double log_loa) {
  std::array<double, kCtInputs> in{};
  std::copy(x.begin(), x.end(), in.begin());
  in[kShapeArity] = t_star;
  in[kShapeArity + 1] = fn;
  in[kShapeArity + 2] = log_loa;
  return in;
}

inline std::array<double, kDraftInputs> draft_input(const ShapeVector& x, double t_star) {
  std::array<double, kDraftInputs> in{};
  std::copy(x.begin(), x.end(), in.begin());
  in[kShapeArity] = t_star;
  return in;
}

/// Feasible records split by ordinal: index % every == every - 1 is held out.
struct Split {
  std::vector<const HullRecord*> train, test;
};

inline Split split_records(const Dataset& ds, int every) {
  Split s;
  const auto all = ds.feasible();
  for (std::size_t i = 0; i < all.size(); ++i)
    (every > 1 && static_cast<int>(i % every) == every - 1 ? s.test : s.train).push_back(all[i]);
  if (s.train.empty())
    throw DomainError("no training records after the hold-out split");
  return s;
}

inline void ct_column(const TrainingRow& r, Matrix& x, Matrix& y, Eigen::Index j) {
  const auto in = ct_input(r.x, r.t_star, r.fn, r.log_loa);
  for (int i = 0; i < kCtInputs; ++i)
    x(i, j) = in[i];
  y(0, j) = r.c_t;
}

/// Rows drawn as in the resistance training loop: random hull, then random
/// draft, Froude number and length.
inline BatchFn ct_batches(std::vector<const HullRecord*> recs, const Normalizer& nz, WaterConstants water) {
  return [recs = std::move(recs), &nz, water](Rng& rng, Matrix& x, Matrix& y) {
    std::uniform_int_distribution<std::size_t> pick(0, recs.size() - 1);
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      ct_column(sample_training_row(*recs[pick(rng)], nz, rng, water), x, y, j);
  };
}

/// Draft-conditioned geometry rows: t* ~ U[0.01, 1]; target is log10 V or WL.
inline BatchFn draft_batches(std::vector<const HullRecord*> recs, const Normalizer& nz, bool volume) {
  return [recs = std::move(recs), &nz, volume](Rng& rng, Matrix& x, Matrix& y) {
    std::uniform_int_distribution<std::size_t> pick(0, recs.size() - 1);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const auto& r = *recs[pick(rng)];
      const double t = uniform(rng, kCondDraftLo, kCondDraftHi);
      const auto in = draft_input(nz.normalize(r.params.shape), t);
      for (int i = 0; i < kDraftInputs; ++i)
        x(i, j) = in[i];
      const auto m = interpolate_curves(*r.curves, t);
      y(0, j) = volume ? std::log10(m.vol) : m.wl;
    }
  };
}

/// Normalized shape rows with labels: feasible records 1, infeasible 0.
inline std::pair<Matrix, std::vector<int>> feasibility_table(const std::vector<const HullRecord*>& recs,
                                                            const Normalizer& nz) {
  Matrix x(static_cast<Eigen::Index>(recs.size()), kShapeArity);
  std::vector<int> labels;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto u = nz.normalize(recs[i]->params.shape);
    for (std::size_t k = 0; k < kShapeArity; ++k)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = u[k];
    labels.push_back(recs[i]->feasible ? 1 : 0);
  }
  return {std::move(x), std::move(labels)};
}

/// Infeasible records split the same way as feasible ones.
inline Split split_infeasible(const Dataset& ds, int every) {
  Split s;
  std::size_t i = 0;
  for (const auto& r : ds.records)
    if (!r.feasible) {
      (every > 1 && static_cast<int>(i % every) == every - 1 ? s.test : s.train).push_back(&r);
      ++i;
    }
  return s;
}

inline TrainResult train_ct_model(const Dataset& ds, const Normalizer& nz, const SurrogateConfig& cfg) {
  const auto sp = split_records(ds, cfg.holdout_every);
  return train_regressor_stream(kCtInputs, 1, ct_batches(sp.train, nz, cfg.water), cfg.hidden, cfg.train);
}

inline TrainResult train_volume_model(const Dataset& ds, const Normalizer& nz, const SurrogateConfig& cfg) {
  const auto sp = split_records(ds, cfg.holdout_every);
  return train_regressor_stream(kDraftInputs, 1, draft_batches(sp.train, nz, true), cfg.hidden, cfg.train);
}

inline TrainResult train_waterline_model(const Dataset& ds, const Normalizer& nz, const SurrogateConfig& cfg) {
  const auto sp = split_records(ds, cfg.holdout_every);
  return train_regressor_stream(kDraftInputs, 1, draft_batches(sp.train, nz, false), cfg.hidden, cfg.train);
}

inline TrainResult train_feasibility_model(const Dataset& ds, const Normalizer& nz, const SurrogateConfig& cfg) {
  auto recs = split_records(ds, cfg.holdout_every).train;
  const auto bad = split_infeasible(ds, cfg.holdout_every).train;
  recs.insert(recs.end(), bad.begin(), bad.end());
  const auto [x, labels] = feasibility_table(recs, nz);
  return train_classifier(x, labels, cfg.hidden, cfg.train);
}

/// Held-out R^2 of a regressor on n fresh rows from held-out hulls.
inline double heldout_r2(const Mlp& m, const BatchFn& rows, int n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(m.inputs(), n), y(1, n);
  rows(rng, x, y);
  const Matrix p = forward_batch(m, x);
  return r_squared(y.row(0).transpose(), p.row(0).transpose());
}

struct SurrogateScores {
  double ct_r2 = 0.0, vol_r2 = 0.0, wl_r2 = 0.0, feas_accuracy = 0.0;
};

inline SurrogateScores score_surrogates(const Surrogates& s, const Dataset& ds, const Normalizer& nz,
                                        const SurrogateConfig& cfg, std::uint64_t seed, int rows = 20000) {
  const auto sp = split_records(ds, cfg.holdout_every);
  const auto bad = split_infeasible(ds, cfg.holdout_every);
  if (sp.test.empty() || bad.test.empty())
    throw DomainError("hold-out split is empty; dataset too small");
  SurrogateScores out;
  out.ct_r2 = heldout_r2(s.ct, ct_batches(sp.test, nz, cfg.water), rows, derive_seed(seed, 1));
  out.vol_r2 = heldout_r2(s.vol, draft_batches(sp.test, nz, true), rows, derive_seed(seed, 2));
  out.wl_r2 = heldout_r2(s.wl, draft_batches(sp.test, nz, false), rows, derive_seed(seed, 3));
  auto recs = sp.test;
  recs.insert(recs.end(), bad.test.begin(), bad.test.end());
  const auto [x, labels] = feasibility_table(recs, nz);
  out.feas_accuracy = accuracy(s.feas, x, labels);
  return out;
}

} // namespace hulldiff
