#include "hulldiff/surrogates.hpp"

#include <gtest/gtest.h>

using namespace hulldiff;

namespace {

Mlp random_model(std::vector<int> sizes, std::uint64_t seed, Head head = Head::linear) {
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

// Central differences with h = 1e-4; relative error against the larger of
// the two magnitudes and a small floor.
void expect_gradient_matches(const Mlp& m, std::uint64_t seed) {
  Rng rng(seed);
  for (int probe = 0; probe < 5; ++probe) {
    std::vector<double> x(static_cast<std::size_t>(m.inputs()));
    for (auto& v : x)
      v = uniform(rng, -1.0, 1.0);
    const Vector g = input_gradient(m, x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto up = x, dn = x;
      up[i] += 1e-4;
      dn[i] -= 1e-4;
      const double fd = (forward(m, up) - forward(m, dn)) / 2e-4;
      const double scale = std::max({std::abs(fd), std::abs(g(static_cast<Eigen::Index>(i))), 1e-3});
      EXPECT_LT(std::abs(fd - g(static_cast<Eigen::Index>(i))) / scale, 1e-4) << "coordinate " << i;
    }
  }
}

} // namespace

TEST(Forward, ZeroWeightsGiveFinalBias) {
  auto m = make_mlp({4, 8, 8, 1}, Head::linear, 1);
  for (auto& w : m.w)
    w.setZero();
  for (auto& b : m.b)
    b.setZero();
  m.b.back()(0) = 0.625;
  const std::vector<double> x{1, 2, 3, 4};
  EXPECT_EQ(forward(m, x), 0.625);
}

TEST(Forward, SingleLinearLayer) {
  auto m = make_mlp({2, 1}, Head::linear, 1);
  m.w[0] << 1.0, 2.0;
  m.b[0].setZero();
  const std::vector<double> x{3, 4};
  EXPECT_EQ(forward(m, x), 11.0);
  const Vector g = input_gradient(m, x);
  EXPECT_EQ(g(0), 1.0);
  EXPECT_EQ(g(1), 2.0);
}

TEST(Forward, ReproducibleAndArityChecked) {
  const auto m = random_model({5, 16, 16, 1}, 3);
  const std::vector<double> x{0.1, -0.2, 0.3, 0.4, -0.5};
  const double a = forward(m, x);
  EXPECT_EQ(a, forward(m, x));
  EXPECT_TRUE(std::isfinite(a));
  const std::vector<double> bad{1.0, 2.0};
  EXPECT_THROW(forward(m, bad), RepresentationError);
}

TEST(InputGradient, RandomThreeLayer) { expect_gradient_matches(random_model({6, 20, 20, 20, 1}, 4), 40); }

TEST(InputGradient, SurrogateArchitectures) {
  const std::vector<int> h{256, 256, 256, 256};
  expect_gradient_matches(random_model(layer_sizes(kCtInputs, h, 1), 5), 50);
  expect_gradient_matches(random_model(layer_sizes(kDraftInputs, h, 1), 6), 60);
  expect_gradient_matches(random_model(layer_sizes(kDraftInputs, h, 1), 7), 70);
  expect_gradient_matches(random_model(layer_sizes(kShapeArity, h, 1), 8, Head::logistic), 80);
}

TEST(InputGradient, ConstantOutputIsZero) {
  auto m = random_model({4, 8, 1}, 9);
  m.w.back().setZero();
  const std::vector<double> x{0.3, 0.1, -0.7, 0.2};
  EXPECT_EQ(input_gradient(m, x).norm(), 0.0);
}

TEST(TrainRegressor, LinearSynthetic) {
  Matrix x(100, 1), y(100, 1);
  for (int i = 0; i < 100; ++i) {
    x(i, 0) = -1.0 + 2.0 * i / 99.0;
    y(i, 0) = 2.0 * x(i, 0);
  }
  TrainConfig cfg;
  cfg.batch = 32;
  cfg.steps = 10000;
  cfg.seed = 11;
  const auto res = train_regressor(x, y, {16, 16}, cfg);
  double mse = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double v = -0.99 + 1.98 * (i + 0.5) / 50.0;
    const std::vector<double> in{v};
    mse += std::pow(forward(res.model, in) - 2.0 * v, 2) / 50.0;
  }
  EXPECT_LT(mse, 1e-4);
  EXPECT_LT(res.history.back(), res.history.front());
}

TEST(TrainRegressor, SeededBitReproducible) {
  Matrix x(40, 2), y(40, 1);
  Rng rng(12);
  for (int i = 0; i < 40; ++i) {
    x(i, 0) = uniform(rng, -1, 1);
    x(i, 1) = uniform(rng, -1, 1);
    y(i, 0) = std::sin(3 * x(i, 0)) * x(i, 1);
  }
  TrainConfig cfg;
  cfg.batch = 8;
  cfg.steps = 200;
  cfg.seed = 13;
  const auto a = train_regressor(x, y, {8, 8}, cfg);
  const auto b = train_regressor(x, y, {8, 8}, cfg);
  EXPECT_EQ(mlp_to_text(a.model), mlp_to_text(b.model));
  EXPECT_EQ(a.final_loss, b.final_loss);
}

TEST(TrainRegressor, NonFiniteLossNamesStep) {
  Matrix x(4, 1), y(4, 1);
  x << 0, 1, 2, 3;
  y << 0, 1, std::numeric_limits<double>::quiet_NaN(), 3;
  TrainConfig cfg;
  cfg.batch = 4;
  cfg.steps = 10;
  try {
    train_regressor(x, y, {4}, cfg);
    FAIL() << "expected divergence";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
  }
}

TEST(TrainClassifier, SeparableTwoDimensional) {
  Rng rng(14);
  Matrix x(400, 2);
  std::vector<int> labels;
  for (int i = 0; i < 400; ++i) {
    double a, b;
    do {
      a = uniform(rng, -1, 1);
      b = uniform(rng, -1, 1);
    } while (std::abs(a + 0.5 * b - 0.1) < 0.05);
    x(i, 0) = a;
    x(i, 1) = b;
    labels.push_back(a + 0.5 * b > 0.1 ? 1 : 0);
  }
  TrainConfig cfg;
  cfg.batch = 64;
  cfg.steps = 1500;
  cfg.seed = 15;
  const auto res = train_classifier(x, labels, {16, 16}, cfg);
  EXPECT_GE(accuracy(res.model, x, labels), 0.98);
  for (int i = 0; i < 400; ++i) {
    const std::vector<double> in{x(i, 0) * 50, x(i, 1) * 50};
    const double p = probability(res.model, in);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
  const std::vector<double> mid{0.1, 0.0};
  const double p = probability(res.model, mid);
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);
}

TEST(TrainClassifier, SingleClassRejected) {
  Matrix x(3, 1);
  x << 0, 1, 2;
  EXPECT_THROW(train_classifier(x, {1, 1, 1}, {4}, {}), TrainingError);
}

TEST(Archive, RoundTripIsExact) {
  const auto m = random_model({5, 7, 3, 2}, 16, Head::logistic);
  const auto back = mlp_from_text(mlp_to_text(m));
  EXPECT_EQ(mlp_to_text(back), mlp_to_text(m));
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4, 0.5};
  EXPECT_EQ(forward(back, x), forward(m, x));
}

TEST(Archive, RejectsBadDimensions) {
  auto text = mlp_to_text(random_model({3, 4, 1}, 17));
  const auto pos = text.find("sizes 3 4 1");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 11, "sizes 3 5 1");
  EXPECT_THROW(mlp_from_text(text), RepresentationError);
  EXPECT_THROW(mlp_from_text("hulldiff-mlp 2\n"), RepresentationError);
}

TEST(Surrogates, ResistanceLossDecreases) {
  const auto ds = build_dataset(12, 18);
  const auto nz = fit_normalizer(ds);
  SurrogateConfig cfg;
  cfg.hidden = {32, 32};
  cfg.train.batch = 64;
  cfg.train.steps = 2000;
  cfg.train.seed = 19;
  const auto res = train_ct_model(ds, nz, cfg);
  EXPECT_LT(res.history.back(), res.history.front());
  expect_gradient_matches(res.model, 90);
  const auto cls = train_feasibility_model(ds, nz, cfg);
  EXPECT_LT(cls.history.back(), cls.history.front());
}
