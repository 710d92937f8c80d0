#pragma once

// Dense feed-forward networks: batched forward and backward passes, exact
// input gradients, Adam training, and a plain-text weight archive.

#include "hulldiff/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace hulldiff {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Head { linear, logistic };
enum class Loss { mse, bce };

/// tanh hidden layers; the output layer is affine. A logistic head still
/// emits the logit; probability() applies the sigmoid.
struct Mlp {
  std::vector<int> sizes; // input, hidden..., output
  std::vector<Matrix> w;  // w[l] is sizes[l+1] x sizes[l]
  std::vector<Vector> b;
  Head head = Head::linear;
  // Raw input x enters as (x - in_mean) / in_scale; raw output is
  // out_mean + out_scale * z for a linear head.
  Vector in_mean, in_scale, out_mean, out_scale;

  int inputs() const { return sizes.front(); }
  int outputs() const { return sizes.back(); }
  std::size_t layers() const { return w.size(); }
};

inline double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

/// Xavier-uniform weights, zero biases, identity scaling.
inline Mlp make_mlp(std::vector<int> sizes, Head head, Rng& rng) {
  if (sizes.size() < 2)
    throw DomainError("network needs an input and an output layer");
  for (int s : sizes)
    if (s < 1)
      throw DomainError("layer sizes must be positive");
  Mlp m;
  m.sizes = std::move(sizes);
  m.head = head;
  for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
    const int fan_in = m.sizes[l], fan_out = m.sizes[l + 1];
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        w(i, j) = uniform(rng, -a, a);
    m.w.push_back(std::move(w));
    m.b.push_back(Vector::Zero(fan_out));
  }
  m.in_mean = Vector::Zero(m.inputs());
  m.in_scale = Vector::Ones(m.inputs());
  m.out_mean = Vector::Zero(m.outputs());
  m.out_scale = Vector::Ones(m.outputs());
  return m;
}

inline Mlp make_mlp(std::vector<int> sizes, Head head, std::uint64_t seed) {
  Rng rng(seed);
  return make_mlp(std::move(sizes), head, rng);
}

inline std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

/// Sets input (and, for regressors, output) scaling from sample columns.
inline void fit_scaling(Mlp& m, const Matrix& x, const Matrix* y = nullptr) {
  const auto fit = [](const Matrix& d, Vector& mean, Vector& scale) {
    mean = d.rowwise().mean();
    scale.resize(d.rows());
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      const double var = (d.row(i).array() - mean(i)).square().mean();
      scale(i) = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
  };
  fit(x, m.in_mean, m.in_scale);
  if (y && m.head == Head::linear)
    fit(*y, m.out_mean, m.out_scale);
}

namespace detail {

struct Tape {
  std::vector<Matrix> a; // a[0] standardized input, a[l] layer outputs
};

inline void check_inputs(const Mlp& m, Eigen::Index rows) {
  if (rows != m.inputs())
    throw RepresentationError("network expects " + std::to_string(m.inputs()) + " inputs, got " +
                              std::to_string(rows));
}

/// Output layer pre-activation in standardized units.
inline Matrix forward_tape(const Mlp& m, const Matrix& x, Tape& tape) {
  check_inputs(m, x.rows());
  tape.a.resize(m.layers() + 1);
  tape.a[0] = (x.colwise() - m.in_mean).array().colwise() / m.in_scale.array();
  for (std::size_t l = 0; l < m.layers(); ++l) {
    Matrix z = m.w[l] * tape.a[l];
    z.colwise() += m.b[l];
    if (l + 1 < m.layers())
      z = (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
    tape.a[l + 1] = std::move(z);
  }
  return tape.a.back();
}

struct Grads {
  std::vector<Matrix> w;
  std::vector<Vector> b;
};

/// Back-propagates dL/dz_out; fills parameter gradients when asked and
/// returns dL/d(standardized input).
inline Matrix backward(const Mlp& m, const Tape& tape, Matrix dz, Grads* g) {
  if (g) {
    g->w.resize(m.layers());
    g->b.resize(m.layers());
  }
  for (std::size_t l = m.layers(); l-- > 0;) {
    if (g) {
      g->w[l].noalias() = dz * tape.a[l].transpose();
      g->b[l] = dz.rowwise().sum();
    }
    Matrix da = m.w[l].transpose() * dz;
    if (l > 0)
      dz = da.array() * (1.0 - tape.a[l].array().square());
    else
      return da;
  }
  return {};
}

} // namespace detail

/// Raw outputs, one column per input column. Logistic heads give logits.
inline Matrix forward_batch(const Mlp& m, const Matrix& x) {
  detail::Tape tape;
  Matrix z = detail::forward_tape(m, x, tape);
  if (m.head == Head::linear)
    z = (z.array().colwise() * m.out_scale.array()).colwise() + m.out_mean.array();
  return z;
}

inline double forward(const Mlp& m, std::span<const double> x) {
  const Matrix col = Eigen::Map<const Matrix>(x.data(), static_cast<Eigen::Index>(x.size()), 1);
  return forward_batch(m, col)(0, 0);
}

inline double probability(const Mlp& m, std::span<const double> x) { return sigmoid(forward(m, x)); }

/// Gradient of sum_o weight(o, j) * output(o, j) with respect to each raw
/// input column j.
inline Matrix input_gradient_batch(const Mlp& m, const Matrix& x, const Matrix& weight) {
  detail::Tape tape;
  detail::forward_tape(m, x, tape);
  Matrix dz = weight;
  if (m.head == Head::linear)
    dz = dz.array().colwise() * m.out_scale.array();
  Matrix g = detail::backward(m, tape, std::move(dz), nullptr);
  return g.array().colwise() / m.in_scale.array();
}

/// Exact gradient of output `out` with respect to the raw input.
inline Vector input_gradient(const Mlp& m, std::span<const double> x, int out = 0) {
  const Matrix col = Eigen::Map<const Matrix>(x.data(), static_cast<Eigen::Index>(x.size()), 1);
  Matrix weight = Matrix::Zero(m.outputs(), 1);
  weight(out, 0) = 1.0;
  return input_gradient_batch(m, col, weight).col(0);
}

struct TrainConfig {
  int batch = 256;
  int steps = 20000;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  Loss loss = Loss::mse;
};

struct TrainResult {
  Mlp model;
  double final_loss = 0.0; // mean over the last 100 steps
  std::vector<double> history; // mean loss per block of 100 steps
};

/// Fills x (inputs x batch) and y (outputs x batch) with one minibatch.
using BatchFn = std::function<void(Rng&, Matrix& x, Matrix& y)>;

/// Batch loss in standardized output units (mse) or nats (bce).
inline double batch_loss(const Mlp& m, const Matrix& x, const Matrix& y, Loss loss, Matrix* dz = nullptr,
                         detail::Tape* tape = nullptr) {
  detail::Tape local;
  auto& t = tape ? *tape : local;
  const Matrix z = detail::forward_tape(m, x, t);
  const double n = static_cast<double>(z.size());
  if (loss == Loss::mse) {
    const Matrix target = (y.colwise() - m.out_mean).array().colwise() / m.out_scale.array();
    const Matrix r = z - target;
    if (dz)
      *dz = (2.0 / n) * r;
    return r.squaredNorm() / n;
  }
  double total = 0.0;
  if (dz)
    dz->resize(z.rows(), z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double zi = z(i, j), yi = y(i, j);
      // log(1 + e^z) - y z, computed without overflow.
      total += std::max(zi, 0.0) - zi * yi + std::log1p(std::exp(-std::abs(zi)));
      if (dz)
        (*dz)(i, j) = (sigmoid(zi) - yi) / n;
    }
  return total / n;
}

/// Minibatch Adam on the given model, which must already carry its scaling.
inline TrainResult train_mlp(Mlp model, const BatchFn& next_batch, const TrainConfig& cfg) {
  if (cfg.batch < 1 || cfg.steps < 1)
    throw DomainError("batch and steps must be at least 1");
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Rng rng(derive_seed(cfg.seed, 0));
  detail::Grads g;
  std::vector<Matrix> mw, vw;
  std::vector<Vector> mb, vb;
  for (std::size_t l = 0; l < model.layers(); ++l) {
    mw.push_back(Matrix::Zero(model.w[l].rows(), model.w[l].cols()));
    vw.push_back(mw.back());
    mb.push_back(Vector::Zero(model.b[l].size()));
    vb.push_back(mb.back());
  }
  Matrix x(model.inputs(), cfg.batch), y(model.outputs(), cfg.batch), dz;
  detail::Tape tape;
  TrainResult out;
  double block = 0.0, tail = 0.0;
  int tail_count = 0;
  double p1 = 1.0, p2 = 1.0;
  for (int step = 0; step < cfg.steps; ++step) {
    next_batch(rng, x, y);
    const double loss = batch_loss(model, x, y, cfg.loss, &dz, &tape);
    if (!std::isfinite(loss))
      throw NumericalError("training diverged at step " + std::to_string(step));
    detail::backward(model, tape, dz, &g);
    p1 *= beta1;
    p2 *= beta2;
    const double step_size = cfg.lr * std::sqrt(1.0 - p2) / (1.0 - p1);
    for (std::size_t l = 0; l < model.layers(); ++l) {
      mw[l] = beta1 * mw[l] + (1.0 - beta1) * g.w[l];
      vw[l] = beta2 * vw[l] + (1.0 - beta2) * g.w[l].cwiseAbs2();
      model.w[l].array() -= step_size * mw[l].array() / (vw[l].array().sqrt() + eps);
      mb[l] = beta1 * mb[l] + (1.0 - beta1) * g.b[l];
      vb[l] = beta2 * vb[l] + (1.0 - beta2) * g.b[l].cwiseAbs2();
      model.b[l].array() -= step_size * mb[l].array() / (vb[l].array().sqrt() + eps);
    }
    block += loss;
    if ((step + 1) % 100 == 0 || step + 1 == cfg.steps) {
      out.history.push_back(block / ((step % 100) + 1));
      block = 0.0;
    }
    if (step >= cfg.steps - 100) {
      tail += loss;
      ++tail_count;
    }
  }
  out.final_loss = tail / tail_count;
  out.model = std::move(model);
  return out;
}

/// Regressor on a fixed table (rows are samples); minibatches are drawn
/// with replacement.
inline TrainResult train_regressor(const Matrix& rows, const Matrix& targets, const std::vector<int>& hidden,
                                   TrainConfig cfg) {
  if (rows.rows() < 1 || rows.rows() != targets.rows())
    throw DomainError("regressor needs at least one row and one target per row");
  cfg.loss = Loss::mse;
  auto m = make_mlp(layer_sizes(static_cast<int>(rows.cols()), hidden, static_cast<int>(targets.cols())),
                    Head::linear, derive_seed(cfg.seed, 1));
  const Matrix xt = rows.transpose(), yt = targets.transpose();
  fit_scaling(m, xt, &yt);
  const auto n = rows.rows();
  const BatchFn next = [&](Rng& rng, Matrix& x, Matrix& y) {
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const auto r = pick(rng);
      x.col(j) = xt.col(r);
      y.col(j) = yt.col(r);
    }
  };
  return train_mlp(std::move(m), next, cfg);
}

/// Regressor on an unbounded stream; scaling comes from a pilot draw.
inline TrainResult train_regressor_stream(int inputs, int outputs, const BatchFn& next,
                                          const std::vector<int>& hidden, TrainConfig cfg, int pilot = 4096) {
  cfg.loss = Loss::mse;
  auto m = make_mlp(layer_sizes(inputs, hidden, outputs), Head::linear, derive_seed(cfg.seed, 1));
  Rng rng(derive_seed(cfg.seed, 2));
  Matrix x(inputs, pilot), y(outputs, pilot);
  next(rng, x, y);
  fit_scaling(m, x, &y);
  return train_mlp(std::move(m), next, cfg);
}

/// Logistic classifier; labels are 0 or 1.
inline TrainResult train_classifier(const Matrix& rows, const std::vector<int>& labels, const std::vector<int>& hidden,
                                    TrainConfig cfg) {
  if (rows.rows() != static_cast<Eigen::Index>(labels.size()) || labels.empty())
    throw DomainError("classifier needs one label per row");
  bool pos = false, neg = false;
  for (int l : labels) {
    if (l != 0 && l != 1)
      throw DomainError("labels must be 0 or 1");
    (l ? pos : neg) = true;
  }
  if (!pos || !neg)
    throw TrainingError("classifier training needs both classes");
  cfg.loss = Loss::bce;
  auto m = make_mlp(layer_sizes(static_cast<int>(rows.cols()), hidden, 1), Head::logistic, derive_seed(cfg.seed, 1));
  const Matrix xt = rows.transpose();
  fit_scaling(m, xt);
  const auto n = rows.rows();
  const BatchFn next = [&](Rng& rng, Matrix& x, Matrix& y) {
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const auto r = pick(rng);
      x.col(j) = xt.col(r);
      y(0, j) = labels[static_cast<std::size_t>(r)];
    }
  };
  return train_mlp(std::move(m), next, cfg);
}

inline double r_squared(const Vector& truth, const Vector& pred) {
  const double mean = truth.mean();
  const double ss_tot = (truth.array() - mean).square().sum();
  const double ss_res = (truth - pred).squaredNorm();
  return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity());
}

/// Fraction of rows whose thresholded probability matches the label.
inline double accuracy(const Mlp& m, const Matrix& rows, const std::vector<int>& labels) {
  const Matrix z = forward_batch(m, rows.transpose());
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    hit += ((z(0, static_cast<Eigen::Index>(i)) > 0.0) == (labels[i] == 1)) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

// Archive: a header (magic, activation, head, sizes), the four scaling
// vectors, then each weight matrix row-major and each bias vector.

namespace detail {

inline void put_vector(std::string& s, const char* tag, const Vector& v) {
  s += tag;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    s += ' ' + format_double(v(i));
  s += '\n';
}

inline Vector get_vector(std::istream& in, const std::string& tag, Eigen::Index n) {
  std::string line;
  if (!std::getline(in, line))
    throw RepresentationError("archive truncated before " + tag);
  const auto f = split(trim(line), ' ');
  if (f.empty() || f[0] != tag || static_cast<Eigen::Index>(f.size()) != n + 1)
    throw RepresentationError("archive block " + tag + " malformed or wrong size");
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v(i) = parse_double(f[static_cast<std::size_t>(i) + 1], tag);
  return v;
}

} // namespace detail

inline std::string mlp_to_text(const Mlp& m) {
  std::string s = "hulldiff-mlp 1\nactivation tanh\nhead ";
  s += m.head == Head::linear ? "linear" : "logistic";
  s += "\nsizes";
  for (int v : m.sizes)
    s += ' ' + std::to_string(v);
  s += '\n';
  detail::put_vector(s, "in_mean", m.in_mean);
  detail::put_vector(s, "in_scale", m.in_scale);
  detail::put_vector(s, "out_mean", m.out_mean);
  detail::put_vector(s, "out_scale", m.out_scale);
  for (std::size_t l = 0; l < m.layers(); ++l) {
    for (Eigen::Index r = 0; r < m.w[l].rows(); ++r)
      detail::put_vector(s, ("w" + std::to_string(l)).c_str(), m.w[l].row(r).transpose());
    detail::put_vector(s, ("b" + std::to_string(l)).c_str(), m.b[l]);
  }
  return s;
}

inline Mlp mlp_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  const auto expect = [&](const std::string& key) {
    if (!std::getline(in, line))
      throw RepresentationError("archive truncated before " + key);
    const auto f = split(trim(line), ' ');
    if (f.size() < 2 || f[0] != key)
      throw RepresentationError("archive missing " + key);
    return f;
  };
  const auto magic = expect("hulldiff-mlp");
  if (magic[1] != "1")
    throw RepresentationError("unsupported archive version " + magic[1]);
  if (expect("activation")[1] != "tanh")
    throw RepresentationError("unsupported activation");
  const auto head = expect("head")[1];
  if (head != "linear" && head != "logistic")
    throw RepresentationError("unknown head " + head);
  const auto sz = expect("sizes");
  Mlp m;
  m.head = head == "linear" ? Head::linear : Head::logistic;
  for (std::size_t i = 1; i < sz.size(); ++i) {
    const double v = parse_double(sz[i], "layer size");
    if (v < 1 || v != std::floor(v))
      throw RepresentationError("bad layer size " + sz[i]);
    m.sizes.push_back(static_cast<int>(v));
  }
  if (m.sizes.size() < 2)
    throw RepresentationError("archive needs at least two layer sizes");
  m.in_mean = detail::get_vector(in, "in_mean", m.inputs());
  m.in_scale = detail::get_vector(in, "in_scale", m.inputs());
  m.out_mean = detail::get_vector(in, "out_mean", m.outputs());
  m.out_scale = detail::get_vector(in, "out_scale", m.outputs());
  for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
    Matrix w(m.sizes[l + 1], m.sizes[l]);
    const std::string tag = "w" + std::to_string(l);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      w.row(r) = detail::get_vector(in, tag, w.cols()).transpose();
    m.w.push_back(std::move(w));
    m.b.push_back(detail::get_vector(in, "b" + std::to_string(l), m.sizes[l + 1]));
  }
  return m;
}

inline void save_mlp(const Mlp& m, const std::filesystem::path& p) { write_file_atomic(p, mlp_to_text(m)); }
inline Mlp load_mlp(const std::filesystem::path& p) { return mlp_from_text(read_file(p)); }

} // namespace hulldiff
